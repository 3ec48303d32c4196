#include "streamlens/botmatch.hpp"

#include "streamlens/io.hpp"
#include "streamlens/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <unordered_map>

namespace streamlens::botmatch {

namespace {

double row_norm(const std::vector<DocTermMatrix::Cell>& row) {
    double sum = 0.0;
    for (const auto& [col, v] : row) sum += v * v;
    return std::sqrt(sum);
}

// Similarities are ranked on a 1e-12 grid so that rounding noise from
// rescaled rows cannot reorder accounts that tie up to that precision.
std::int64_t rank_key(double similarity) { return std::llround(similarity * 1e12); }

bool ranks_before(const Match& a, const Match& b) {
    const auto ka = rank_key(a.similarity), kb = rank_key(b.similarity);
    return ka != kb ? ka > kb : a.account_id < b.account_id;
}

}  // namespace

std::optional<std::size_t> DocTermMatrix::find(std::string_view account_id) const {
    auto it = std::lower_bound(accounts.begin(), accounts.end(), account_id);
    if (it == accounts.end() || *it != account_id) return std::nullopt;
    return static_cast<std::size_t>(it - accounts.begin());
}

std::size_t DocTermMatrix::resolve(std::string_view id_or_name) const {
    if (auto i = find(id_or_name)) return *i;
    std::string name = text::ascii_lower(id_or_name);
    if (!name.empty() && name[0] == '@') name.erase(0, 1);
    for (std::size_t i = 0; i < screen_names.size(); ++i) {
        if (text::ascii_lower(screen_names[i]) == name) return i;
    }
    throw NotFoundError("account '" + std::string(id_or_name) + "' is not in the document-term matrix");
}

DocTermMatrix DocTermMatrix::scaled(double factor) const {
    DocTermMatrix out = *this;
    for (std::size_t i = 0; i < out.rows.size(); ++i) {
        for (auto& [col, v] : out.rows[i]) v *= factor;
        out.norms[i] = row_norm(out.rows[i]);
    }
    return out;
}

DocTermMatrix make_dtm(std::vector<std::string> accounts, std::vector<std::string> vocab,
                       std::vector<std::vector<DocTermMatrix::Cell>> rows, std::vector<std::string> screen_names) {
    if (rows.size() != accounts.size()) throw InputError("dtm: row count differs from account count");
    if (screen_names.empty()) screen_names.resize(accounts.size());
    if (screen_names.size() != accounts.size()) throw InputError("dtm: screen name count differs from account count");
    std::vector<std::size_t> order(accounts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return accounts[a] < accounts[b]; });
    DocTermMatrix m;
    m.vocab = std::move(vocab);
    for (auto i : order) {
        if (!m.accounts.empty() && m.accounts.back() == accounts[i]) throw InputError("dtm: duplicate account " + accounts[i]);
        auto row = std::move(rows[i]);
        std::sort(row.begin(), row.end());
        for (const auto& [col, v] : row) {
            if (col >= m.vocab.size()) throw InputError("dtm: column out of range for " + accounts[i]);
            if (!(v >= 0.0) || !std::isfinite(v)) throw InputError("dtm: negative or non-finite value for " + accounts[i]);
        }
        std::erase_if(row, [](const DocTermMatrix::Cell& c) { return c.second == 0.0; });
        m.accounts.push_back(std::move(accounts[i]));
        m.screen_names.push_back(std::move(screen_names[i]));
        m.norms.push_back(row_norm(row));
        m.rows.push_back(std::move(row));
    }
    return m;
}

DocTermMatrix build_dtm(std::span<const ingest::TweetRecord> records, std::size_t vocabulary,
                        const std::optional<std::string>& lang) {
    if (vocabulary == 0) throw InputError("dtm: vocabulary size must be at least 1");
    std::map<std::string, std::unordered_map<std::string, std::uint64_t>> per_account;
    std::map<std::string, std::string> names;
    std::unordered_map<std::string, std::uint64_t> corpus;
    for (const auto& r : records) {
        if (lang && r.lang != *lang) continue;
        auto& counts = per_account[r.author_id];
        if (!r.screen_name.empty()) names[r.author_id] = r.screen_name;
        for (auto& token : text::word_tokens(text::strip_urls(r.text))) {
            ++corpus[token];
            ++counts[std::move(token)];
        }
    }
    std::vector<std::pair<std::string, std::uint64_t>> ranked(corpus.begin(), corpus.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > vocabulary) ranked.resize(vocabulary);
    std::unordered_map<std::string, std::uint32_t> column;
    std::vector<std::string> vocab;
    for (const auto& [token, count] : ranked) {
        column.emplace(token, static_cast<std::uint32_t>(vocab.size()));
        vocab.push_back(token);
    }
    DocTermMatrix m;
    m.vocab = std::move(vocab);
    for (const auto& [account, counts] : per_account) {
        std::vector<DocTermMatrix::Cell> row;
        for (const auto& [token, count] : counts) {
            if (auto it = column.find(token); it != column.end()) row.emplace_back(it->second, static_cast<double>(count));
        }
        std::sort(row.begin(), row.end());
        m.accounts.push_back(account);
        auto name = names.find(account);
        m.screen_names.push_back(name == names.end() ? std::string() : name->second);
        m.norms.push_back(row_norm(row));
        m.rows.push_back(std::move(row));
    }
    return m;
}

Similarity cosine_similarity(const DocTermMatrix& dtm, std::size_t a, std::size_t b) {
    if (a >= dtm.size() || b >= dtm.size()) throw NotFoundError("dtm row out of range");
    if (dtm.zero_row(a) || dtm.zero_row(b)) return {0.0, true};
    const auto& ra = dtm.rows[a];
    const auto& rb = dtm.rows[b];
    double dot = 0.0;
    for (std::size_t i = 0, j = 0; i < ra.size() && j < rb.size();) {
        if (ra[i].first < rb[j].first) {
            ++i;
        } else if (rb[j].first < ra[i].first) {
            ++j;
        } else {
            dot += ra[i++].second * rb[j++].second;
        }
    }
    return {std::clamp(dot / (dtm.norms[a] * dtm.norms[b]), 0.0, 1.0), false};
}

Similarity cosine_similarity(const DocTermMatrix& dtm, std::string_view a, std::string_view b) {
    return cosine_similarity(dtm, dtm.resolve(a), dtm.resolve(b));
}

std::vector<Match> bot_match_query(const DocTermMatrix& dtm, std::string_view seed, std::size_t top_n) {
    const auto s = dtm.resolve(seed);
    std::vector<Match> all;
    all.reserve(dtm.size());
    for (std::size_t i = 0; i < dtm.size(); ++i) {
        if (i == s) continue;
        all.push_back({dtm.accounts[i], cosine_similarity(dtm, s, i).value});
    }
    const auto take = std::min(top_n, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(), ranks_before);
    all.resize(take);
    return all;
}

ExpansionSession::ExpansionSession(const DocTermMatrix& dtm, std::span<const std::string> seeds) {
    if (seeds.empty()) throw InputError("expansion session needs at least one seed account");
    for (const auto& s : seeds) seeds_.insert(dtm.accounts[dtm.resolve(s)]);
}

ExpansionSession ExpansionSession::restore(std::set<std::string> seeds, std::set<std::string> accepted,
                                           std::set<std::string> rejected, std::vector<Match> frontier, int round) {
    ExpansionSession s;
    s.seeds_ = std::move(seeds);
    s.accepted_ = std::move(accepted);
    s.rejected_ = std::move(rejected);
    s.frontier_ = std::move(frontier);
    s.round_ = round;
    return s;
}

void ExpansionSession::step(const DocTermMatrix& dtm, std::size_t top_n) {
    if (dtm_size_ != dtm.size()) {
        best_.assign(dtm.size(), 0.0);
        folded_.clear();
        dtm_size_ = dtm.size();
    }
    auto fold = [&](const std::string& member) {
        if (folded_.contains(member)) return;
        const auto m = dtm.find(member);
        if (!m) throw NotFoundError("session account " + member + " is not in the document-term matrix");
        for (std::size_t j = 0; j < dtm.size(); ++j) best_[j] = std::max(best_[j], cosine_similarity(dtm, *m, j).value);
        folded_.insert(member);
    };
    for (const auto& s : seeds_) fold(s);
    for (const auto& a : accepted_) fold(a);

    std::vector<Match> candidates;
    for (std::size_t j = 0; j < dtm.size(); ++j) {
        const auto& id = dtm.accounts[j];
        if (best_[j] <= 0.0 || seeds_.contains(id) || accepted_.contains(id) || rejected_.contains(id)) continue;
        candidates.push_back({id, best_[j]});
    }
    const auto take = std::min(top_n, candidates.size());
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(take), candidates.end(),
                      ranks_before);
    candidates.resize(take);
    frontier_ = std::move(candidates);
    ++round_;
}

void ExpansionSession::move_from_frontier(std::span<const std::string> ids, std::set<std::string>& into) {
    for (const auto& id : ids) {
        const bool present =
            std::any_of(frontier_.begin(), frontier_.end(), [&](const Match& m) { return m.account_id == id; });
        if (!present) throw InputError("account " + id + " is not in the current frontier");
    }
    const std::set<std::string> moving(ids.begin(), ids.end());
    std::erase_if(frontier_, [&](const Match& m) { return moving.contains(m.account_id); });
    into.insert(moving.begin(), moving.end());
}

void ExpansionSession::accept(std::span<const std::string> ids) { move_from_frontier(ids, accepted_); }
void ExpansionSession::reject(std::span<const std::string> ids) { move_from_frontier(ids, rejected_); }

ExpansionSession expand(ExpansionSession session, const DocTermMatrix& dtm, const ExpansionAction& action) {
    switch (action.kind) {
        case ExpansionAction::Kind::Accept: session.accept(action.ids); break;
        case ExpansionAction::Kind::Reject: session.reject(action.ids); break;
        case ExpansionAction::Kind::Step: session.step(dtm, action.top_n); break;
    }
    return session;
}

void export_dtm(const DocTermMatrix& dtm, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string triplets = "row,col,value\n";
    for (std::size_t i = 0; i < dtm.size(); ++i) {
        for (const auto& [col, v] : dtm.rows[i]) {
            triplets += std::to_string(i) + "," + std::to_string(col) + "," + format_real(v) + "\n";
        }
    }
    io::write_file_atomic(dir / "dtm.csv", triplets);
    std::string accounts = "row,account_id,screen_name\n";
    for (std::size_t i = 0; i < dtm.size(); ++i) {
        accounts += io::join_csv({std::to_string(i), dtm.accounts[i], dtm.screen_names[i]}) + "\n";
    }
    io::write_file_atomic(dir / "accounts.csv", accounts);
    std::string vocab;
    for (const auto& w : dtm.vocab) vocab += w + "\n";
    io::write_file_atomic(dir / "vocab.txt", vocab);
}

namespace {

template <typename T>
T parse_field(const std::string& s) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("dtm: bad number '" + s + "'");
    return v;
}

}  // namespace

DocTermMatrix import_dtm(const std::filesystem::path& dir) {
    const auto accounts_csv = io::read_csv(dir / "accounts.csv");
    const auto acc_col = accounts_csv.column("account_id"), name_col = accounts_csv.column("screen_name");
    std::vector<std::string> accounts, names;
    for (const auto& row : accounts_csv.rows) {
        accounts.push_back(row[acc_col]);
        names.push_back(row[name_col]);
    }
    auto vocab = io::read_lines(dir / "vocab.txt");
    std::vector<std::vector<DocTermMatrix::Cell>> rows(accounts.size());
    io::LineReader reader(dir / "dtm.csv");
    std::string line;
    bool header = true;
    while (reader.next(line)) {
        if (header) {
            header = false;
            continue;
        }
        if (line.empty()) continue;
        const auto f = io::split_csv_line(line);
        if (f.size() != 3) throw InputError("dtm: expected row,col,value in '" + line + "'");
        const auto r = parse_field<std::size_t>(f[0]);
        if (r >= rows.size()) throw InputError("dtm: row index out of range");
        rows[r].emplace_back(parse_field<std::uint32_t>(f[1]), parse_field<double>(f[2]));
    }
    return make_dtm(std::move(accounts), std::move(vocab), std::move(rows), std::move(names));
}

}  // namespace streamlens::botmatch
