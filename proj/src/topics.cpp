#include "streamlens/topics.hpp"

#include "streamlens/io.hpp"
#include "streamlens/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <numeric>
#include <unordered_map>

namespace streamlens::topics {

std::uint64_t HashtagDocument::length() const {
    std::uint64_t n = 0;
    for (const auto& [token, count] : tokens) n += count;
    return n;
}

std::vector<HashtagDocument> build_hashtag_documents(std::span<const ingest::TweetRecord> records,
                                                     const std::optional<std::string>& lang) {
    std::map<std::string, std::map<std::string, std::uint64_t>> by_account;
    for (const auto& r : records) {
        if (lang && r.lang != *lang) continue;
        if (r.hashtags.empty()) continue;
        auto& doc = by_account[r.author_id];
        for (const auto& h : r.hashtags) ++doc[h];
    }
    std::vector<HashtagDocument> out;
    out.reserve(by_account.size());
    for (auto& [account, tokens] : by_account) out.push_back({account, std::move(tokens)});
    return out;
}

std::vector<std::pair<std::string, double>> TopicModel::top_words(std::size_t topic, std::size_t n) const {
    std::vector<std::size_t> order(vocab.size());
    std::iota(order.begin(), order.end(), 0);
    const auto take = std::min(n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          const double pa = phi_at(topic, a), pb = phi_at(topic, b);
                          return pa != pb ? pa > pb : vocab[a] < vocab[b];
                      });
    std::vector<std::pair<std::string, double>> out;
    for (std::size_t i = 0; i < take; ++i) out.emplace_back(vocab[order[i]], phi_at(topic, order[i]));
    return out;
}

std::size_t TopicModel::dominant_topic(std::size_t doc) const {
    std::size_t best = 0;
    for (std::size_t t = 1; t < k; ++t) {
        if (theta_at(doc, t) > theta_at(doc, best)) best = t;
    }
    return best;
}

TopicModel lda_fit(std::span<const HashtagDocument> docs, const LdaOptions& options) {
    if (options.k == 0) throw InputError("lda: k must be at least 1");
    if (docs.empty()) throw InputError("lda: no documents");
    const double alpha = options.alpha.value_or(50.0 / static_cast<double>(options.k));
    if (!(alpha > 0.0) || !(options.beta > 0.0)) throw InputError("lda: alpha and beta must be positive");
    if (options.iterations < 0) throw InputError("lda: iterations must be non-negative");

    TopicModel m;
    m.k = options.k;
    m.alpha = alpha;
    m.beta = options.beta;
    m.iterations = options.iterations;
    m.seed = options.seed;
    {
        std::vector<std::string> vocab;
        for (const auto& d : docs) {
            for (const auto& [token, count] : d.tokens) {
                if (count > 0) vocab.push_back(token);
            }
        }
        std::sort(vocab.begin(), vocab.end());
        vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
        m.vocab = std::move(vocab);
    }
    if (m.vocab.empty()) throw InputError("lda: empty vocabulary");
    if (m.k > m.vocab.size()) {
        m.warnings.push_back("k=" + std::to_string(m.k) + " exceeds vocabulary size " + std::to_string(m.vocab.size()));
    }
    std::unordered_map<std::string, std::uint32_t> index;
    for (std::size_t i = 0; i < m.vocab.size(); ++i) index.emplace(m.vocab[i], static_cast<std::uint32_t>(i));

    const std::size_t K = m.k, V = m.vocab.size(), D = docs.size();
    std::vector<std::uint32_t> words;
    std::vector<std::size_t> doc_start{0};
    for (const auto& d : docs) {
        m.accounts.push_back(d.account_id);
        for (const auto& [token, count] : d.tokens) {
            words.insert(words.end(), count, index.at(token));
        }
        doc_start.push_back(words.size());
    }

    Rng rng(options.seed);
    std::vector<std::uint32_t> z(words.size());
    std::vector<std::uint64_t> n_dk(D * K, 0), n_kw(K * V, 0), n_k(K, 0);
    for (std::size_t d = 0; d < D; ++d) {
        for (std::size_t i = doc_start[d]; i < doc_start[d + 1]; ++i) {
            const auto topic = static_cast<std::uint32_t>(rng.below(K));
            z[i] = topic;
            ++n_dk[d * K + topic];
            ++n_kw[topic * V + words[i]];
            ++n_k[topic];
        }
    }
    const double v_beta = static_cast<double>(V) * m.beta;
    std::vector<double> cumulative(K);
    for (int it = 0; it < options.iterations; ++it) {
        for (std::size_t d = 0; d < D; ++d) {
            for (std::size_t i = doc_start[d]; i < doc_start[d + 1]; ++i) {
                const auto w = words[i];
                const auto old = z[i];
                --n_dk[d * K + old];
                --n_kw[old * V + w];
                --n_k[old];
                double total = 0.0;
                for (std::size_t t = 0; t < K; ++t) {
                    total += (static_cast<double>(n_dk[d * K + t]) + alpha) *
                             (static_cast<double>(n_kw[t * V + w]) + m.beta) /
                             (static_cast<double>(n_k[t]) + v_beta);
                    cumulative[t] = total;
                }
                const double u = rng.uniform() * total;
                std::size_t topic = 0;
                while (topic + 1 < K && cumulative[topic] <= u) ++topic;
                z[i] = static_cast<std::uint32_t>(topic);
                ++n_dk[d * K + topic];
                ++n_kw[topic * V + w];
                ++n_k[topic];
            }
        }
    }

    m.phi.resize(K * V);
    for (std::size_t t = 0; t < K; ++t) {
        const double denom = static_cast<double>(n_k[t]) + v_beta;
        for (std::size_t w = 0; w < V; ++w) m.phi[t * V + w] = (static_cast<double>(n_kw[t * V + w]) + m.beta) / denom;
    }
    m.theta.resize(D * K);
    const double k_alpha = static_cast<double>(K) * alpha;
    for (std::size_t d = 0; d < D; ++d) {
        const double denom = static_cast<double>(doc_start[d + 1] - doc_start[d]) + k_alpha;
        for (std::size_t t = 0; t < K; ++t) m.theta[d * K + t] = (static_cast<double>(n_dk[d * K + t]) + alpha) / denom;
    }
    return m;
}

namespace {

std::string ordinal_word(std::size_t n) {
    static constexpr const char* kWords[] = {"One", "Two",   "Three", "Four", "Five",  "Six",    "Seven",
                                             "Eight", "Nine", "Ten", "Eleven", "Twelve"};
    return n >= 1 && n <= std::size(kWords) ? kWords[n - 1] : std::to_string(n);
}

}  // namespace

std::string TopicRow::caption() const {
    std::string out = "Topic " + ordinal_word(topic + 1);
    if (bot_fraction) {
        char buf[32];
        std::snprintf(buf, sizeof buf, " (%.1f%% bot)", *bot_fraction * 100.0);
        out += buf;
    } else {
        out += " (n/a)";
    }
    return out;
}

std::vector<TopicRow> topic_report(const TopicModel& model, const BotScoreTable* scores, double t,
                                   std::size_t top_words) {
    std::vector<TopicRow> rows(model.k);
    for (std::size_t topic = 0; topic < model.k; ++topic) {
        rows[topic].topic = topic;
        rows[topic].top_words = model.top_words(topic, top_words);
    }
    for (std::size_t d = 0; d < model.doc_count(); ++d) {
        auto& row = rows[model.dominant_topic(d)];
        ++row.accounts;
        if (!scores) continue;
        if (auto s = scores->find(model.accounts[d])) {
            ++row.scored;
            if (*s >= t) ++row.bots;
        }
    }
    for (auto& row : rows) {
        if (row.scored > 0) row.bot_fraction = static_cast<double>(row.bots) / static_cast<double>(row.scored);
    }
    return rows;
}

void export_model(const TopicModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::string vocab;
    for (const auto& w : model.vocab) vocab += w + "\n";
    io::write_file_atomic(dir / "vocab.txt", vocab);

    io::CsvRow header{"topic"};
    header.insert(header.end(), model.vocab.begin(), model.vocab.end());
    std::string phi = io::join_csv(header) + "\n";
    for (std::size_t t = 0; t < model.k; ++t) {
        io::CsvRow row{std::to_string(t)};
        for (std::size_t w = 0; w < model.vocab_size(); ++w) row.push_back(format_real(model.phi_at(t, w)));
        phi += io::join_csv(row) + "\n";
    }
    io::write_file_atomic(dir / "phi.csv", phi);

    io::CsvRow theta_header{"account_id"};
    for (std::size_t t = 0; t < model.k; ++t) theta_header.push_back("topic" + std::to_string(t));
    std::string theta = io::join_csv(theta_header) + "\n";
    for (std::size_t d = 0; d < model.doc_count(); ++d) {
        io::CsvRow row{model.accounts[d]};
        for (std::size_t t = 0; t < model.k; ++t) row.push_back(format_real(model.theta_at(d, t)));
        theta += io::join_csv(row) + "\n";
    }
    io::write_file_atomic(dir / "theta.csv", theta);

    std::string warnings;
    for (const auto& w : model.warnings) warnings += (warnings.empty() ? "" : "; ") + w;
    io::KeyValues meta{{"k", std::to_string(model.k)},
                       {"alpha", format_real(model.alpha)},
                       {"beta", format_real(model.beta)},
                       {"iterations", std::to_string(model.iterations)},
                       {"seed", std::to_string(model.seed)},
                       {"warnings", warnings}};
    io::write_file_atomic(dir / "model.txt", io::format_key_values(meta));
}

namespace {

template <typename T>
T parse_number(const std::string& s, const std::string& what) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw InputError("topic model: bad " + what + " '" + s + "'");
    return v;
}

}  // namespace

TopicModel import_model(const std::filesystem::path& dir) {
    const auto meta = io::parse_key_values(io::read_file(dir / "model.txt"));
    auto get = [&](const std::string& key) {
        auto it = meta.find(key);
        if (it == meta.end()) throw InputError("topic model: model.txt lacks '" + key + "'");
        return it->second;
    };
    TopicModel m;
    m.k = parse_number<std::size_t>(get("k"), "k");
    m.alpha = parse_number<double>(get("alpha"), "alpha");
    m.beta = parse_number<double>(get("beta"), "beta");
    m.iterations = parse_number<int>(get("iterations"), "iterations");
    m.seed = parse_number<std::uint64_t>(get("seed"), "seed");
    if (auto it = meta.find("warnings"); it != meta.end() && !it->second.empty()) {
        std::string_view rest = it->second;
        while (!rest.empty()) {
            const auto sep = rest.find("; ");
            m.warnings.emplace_back(rest.substr(0, sep));
            if (sep == std::string_view::npos) break;
            rest.remove_prefix(sep + 2);
        }
    }
    m.vocab = io::read_lines(dir / "vocab.txt");
    const auto phi = io::read_csv(dir / "phi.csv");
    if (phi.rows.size() != m.k || phi.header.size() != m.vocab.size() + 1) {
        throw InputError("topic model: phi.csv does not match k and vocabulary");
    }
    for (const auto& row : phi.rows) {
        for (std::size_t w = 1; w < row.size(); ++w) m.phi.push_back(parse_number<double>(row[w], "phi"));
    }
    const auto theta = io::read_csv(dir / "theta.csv");
    if (theta.header.size() != m.k + 1) throw InputError("topic model: theta.csv does not match k");
    for (const auto& row : theta.rows) {
        m.accounts.push_back(row[0]);
        for (std::size_t t = 1; t < row.size(); ++t) m.theta.push_back(parse_number<double>(row[t], "theta"));
    }
    return m;
}

}  // namespace streamlens::topics
