#include "streamlens/characterize.hpp"

#include "streamlens/io.hpp"
#include "streamlens/text.hpp"

#include <unicode/locid.h>
#include <unicode/unistr.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <unordered_map>
#include <unordered_set>

namespace streamlens::characterize {

namespace {

RankedCounts rank(const std::unordered_map<std::string, std::uint64_t>& counts) {
    RankedCounts out(counts.begin(), counts.end());
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    return out;
}

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

MarketShare hashtag_marketshare(std::span<const ingest::TweetRecord> records, std::size_t top_k,
                                bool all_hashtag_denominator) {
    if (top_k == 0) throw InputError("marketshare: top_k must be at least 1");
    std::unordered_map<std::string, std::uint64_t> overall;
    for (const auto& r : records) {
        for (const auto& h : r.hashtags) ++overall[h];
    }
    auto ranked = rank(overall);
    if (ranked.size() > top_k) ranked.resize(top_k);

    MarketShare m;
    m.all_hashtag_denominator = all_hashtag_denominator;
    std::unordered_map<std::string, std::size_t> slot;
    for (const auto& [tag, count] : ranked) {
        slot[tag] = m.hashtags.size();
        m.hashtags.push_back(tag);
        m.totals.push_back(count);
    }
    std::map<Day, std::pair<std::vector<std::uint64_t>, std::uint64_t>> per_day;
    for (const auto& r : records) {
        if (r.hashtags.empty()) continue;
        auto& [counts, all] = per_day[day_of(r.created_at)];
        counts.resize(m.hashtags.size());
        for (const auto& h : r.hashtags) {
            ++all;
            if (auto it = slot.find(h); it != slot.end()) ++counts[it->second];
        }
    }
    for (auto& [day, entry] : per_day) {
        auto& [counts, all] = entry;
        std::uint64_t top = 0;
        for (auto c : counts) top += c;
        if (top == 0) continue;
        MarketShare::DayRow row{day, counts, all_hashtag_denominator ? all : top, {}};
        for (auto c : counts) row.shares.push_back(static_cast<double>(c) / static_cast<double>(row.denominator));
        m.days.push_back(std::move(row));
    }
    return m;
}

std::string format_marketshare_csv(const MarketShare& m) {
    std::string out = "date,hashtag,count,share\n";
    for (const auto& row : m.days) {
        for (std::size_t i = 0; i < m.hashtags.size(); ++i) {
            out += format_day(row.day) + "," + io::csv_escape(m.hashtags[i]) + "," + std::to_string(row.counts[i]) +
                   "," + format_real(row.shares[i]) + "\n";
        }
    }
    return out;
}

TallyField parse_tally_field(std::string_view text) {
    if (text == "lang") return TallyField::Lang;
    if (text == "domain") return TallyField::Domain;
    throw ConfigError("field", "expected lang|domain, got '" + std::string(text) + "'");
}

RankedCounts tally(std::span<const ingest::TweetRecord> records, TallyField field) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& r : records) {
        if (field == TallyField::Lang) {
            ++counts[r.lang];
            continue;
        }
        for (const auto& url : r.urls) {
            auto domain = text::normalize_domain(url);
            if (!domain.empty()) ++counts[std::move(domain)];
        }
    }
    return rank(counts);
}

std::string language_name(std::string_view code) {
    const icu::Locale locale(std::string(code).c_str());
    icu::UnicodeString name;
    locale.getDisplayLanguage(icu::Locale::getEnglish(), name);
    std::string out;
    name.toUTF8String(out);
    return out.empty() ? std::string(code) : out;
}

std::string format_tally_table(const RankedCounts& rows, TallyField field, std::size_t limit) {
    std::vector<std::pair<std::string, std::string>> cells;
    std::size_t width = 0;
    for (std::size_t i = 0; i < std::min(limit, rows.size()); ++i) {
        auto label = field == TallyField::Lang ? language_name(rows[i].first) : rows[i].first;
        width = std::max(width, text::decode_utf8(label).size());
        cells.emplace_back(std::move(label), with_thousands(rows[i].second));
    }
    std::string out;
    for (const auto& [label, count] : cells) {
        out += label + std::string(width - text::decode_utf8(label).size() + 2, ' ') + count + "\n";
    }
    return out;
}

void BiasDictionary::add(std::string_view domain, std::string_view bias, std::string_view factual) {
    const auto key = text::normalize_domain(domain);
    if (key.empty()) throw InputError("bias dictionary: no host in '" + std::string(domain) + "'");
    const auto b = text::ascii_lower(text::trim(bias));
    const auto f = text::ascii_lower(text::trim(factual));
    if (std::find(kBiasCategories.begin(), kBiasCategories.end(), b) == kBiasCategories.end()) {
        throw InputError("bias dictionary: unknown bias '" + std::string(bias) + "' for " + key);
    }
    if (std::find(kFactualCategories.begin(), kFactualCategories.end(), f) == kFactualCategories.end()) {
        throw InputError("bias dictionary: unknown factual rating '" + std::string(factual) + "' for " + key);
    }
    if (!entries_.emplace(key, BiasEntry{b, f}).second) {
        throw InputError("bias dictionary: duplicate domain " + key);
    }
}

BiasDictionary BiasDictionary::parse(std::string_view csv) {
    const auto table = io::parse_csv(csv, "bias dictionary");
    const auto d = table.column("domain"), b = table.column("bias"), f = table.column("factual");
    BiasDictionary dict;
    for (const auto& row : table.rows) dict.add(row[d], row[b], row[f]);
    return dict;
}

BiasDictionary BiasDictionary::load(const std::filesystem::path& csv) { return parse(io::read_file(csv)); }

const BiasEntry* BiasDictionary::find(std::string_view domain) const {
    auto it = entries_.find(domain);
    if (it == entries_.end()) it = entries_.find(text::normalize_domain(domain));
    return it == entries_.end() ? nullptr : &it->second;
}

namespace {

struct CategoryAccumulator {
    std::uint64_t count = 0;
    std::unordered_set<std::string> accounts;
};

CategoryStat finish(const CategoryAccumulator& acc, const BotScoreTable* scores, double t) {
    CategoryStat s;
    s.count = acc.count;
    s.accounts = acc.accounts.size();
    if (scores) {
        for (const auto& a : acc.accounts) {
            if (auto v = scores->find(a)) {
                ++s.scored;
                if (*v >= t) ++s.bots;
            }
        }
    }
    s.bot_proportion = ratio(s.bots, s.scored);
    return s;
}

AccountShare account_share(const std::unordered_set<std::string>& accounts, const BotScoreTable* scores, double t) {
    AccountShare s;
    s.accounts = accounts.size();
    if (scores) {
        for (const auto& a : accounts) {
            if (auto v = scores->find(a)) {
                ++s.scored;
                if (*v >= t) ++s.botlike;
            }
        }
    }
    s.share = ratio(s.botlike, s.scored);
    return s;
}

}  // namespace

BiasDistribution bias_distribution(std::span<const ingest::TweetRecord> records, const BiasDictionary& dict,
                                   const BotScoreTable* scores, double t) {
    if (dict.empty()) throw InputError("bias_distribution: dictionary is empty");
    std::map<std::string, CategoryAccumulator> bias, factual;
    for (auto c : kBiasCategories) bias[std::string(c)];
    for (auto c : kFactualCategories) factual[std::string(c)];
    std::unordered_set<std::string> seen, matched;
    BiasDistribution out;
    for (const auto& r : records) {
        for (const auto& url : r.urls) {
            const auto domain = text::normalize_domain(url);
            if (domain.empty()) continue;
            ++out.total_occurrences;
            seen.insert(domain);
            const auto* entry = dict.find(domain);
            if (!entry) continue;
            ++out.matched_occurrences;
            matched.insert(domain);
            auto& b = bias[entry->bias];
            ++b.count;
            b.accounts.insert(r.author_id);
            auto& f = factual[entry->factual];
            ++f.count;
            f.accounts.insert(r.author_id);
        }
    }
    for (const auto& [k, acc] : bias) out.bias[k] = finish(acc, scores, t);
    for (const auto& [k, acc] : factual) out.factual[k] = finish(acc, scores, t);
    out.unique_domains = seen.size();
    out.matched_unique_domains = matched.size();
    out.coverage = ratio(out.matched_occurrences, out.total_occurrences).value_or(0.0);
    out.unique_coverage = ratio(out.matched_unique_domains, out.unique_domains).value_or(0.0);
    return out;
}

void AbusiveLexicon::add(std::string_view term, std::string_view lang) {
    const auto folded = text::fold_case(text::trim(term));
    if (folded.empty()) throw InputError("lexicon: empty term");
    if (folded.find_first_of(" \t\r\n") != std::string::npos) {
        throw InputError("lexicon: term '" + std::string(term) + "' contains whitespace");
    }
    auto& langs = terms_[folded];
    if (!lang.empty()) langs.insert(text::ascii_lower(lang));
}

AbusiveLexicon AbusiveLexicon::parse(std::string_view content) {
    AbusiveLexicon lex;
    std::size_t line_no = 0;
    while (!content.empty()) {
        const auto nl = content.find('\n');
        auto line = text::trim(content.substr(0, nl));
        content = nl == std::string_view::npos ? std::string_view{} : content.substr(nl + 1);
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::string_view term = line, lang;
        if (const auto colon = line.find(':'); colon != std::string::npos && colon > 0 && colon <= 8) {
            const std::string_view prefix = std::string_view(line).substr(0, colon);
            if (std::all_of(prefix.begin(), prefix.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '-'; })) {
                lang = prefix;
                term = std::string_view(line).substr(colon + 1);
            }
        }
        lex.add(term, lang);
    }
    if (lex.empty()) throw InputError("lexicon has no terms");
    return lex;
}

AbusiveLexicon AbusiveLexicon::load(const std::filesystem::path& path) { return parse(io::read_file(path)); }

bool AbusiveLexicon::contains(std::string_view folded_token) const { return terms_.find(folded_token) != terms_.end(); }

bool AbusiveLexicon::is_abusive(std::string_view content) const {
    for (const auto& token : text::word_tokens(content)) {
        if (contains(token)) return true;
    }
    return false;
}

AbusiveSeries abusive_series(std::span<const ingest::TweetRecord> records, const AbusiveLexicon& lex,
                             const BotScoreTable* scores, double t) {
    if (lex.empty()) throw InputError("abusive_series: lexicon is empty");
    AbusiveSeries out;
    for (const auto& [day, count] : ingest::partition_by_day(records)) out.daily[day] = 0;
    std::unordered_set<std::string> abusive, authors;
    for (const auto& r : records) {
        authors.insert(r.author_id);
        if (!lex.is_abusive(r.text)) continue;
        ++out.abusive_tweets;
        ++out.daily[day_of(r.created_at)];
        abusive.insert(r.author_id);
    }
    std::unordered_set<std::string> others;
    for (const auto& a : authors) {
        if (!abusive.contains(a)) others.insert(a);
    }
    out.abusive_accounts = account_share(abusive, scores, t);
    out.other_accounts = account_share(others, scores, t);
    return out;
}

std::vector<std::string> extract_flags(std::string_view description) {
    constexpr char32_t kFirst = 0x1F1E6, kLast = 0x1F1FF;
    auto is_indicator = [](char32_t c) { return c >= kFirst && c <= kLast; };
    const auto cps = text::decode_utf8(description);
    std::vector<std::string> out;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        if (!is_indicator(cps[i])) continue;
        if (i + 1 < cps.size() && is_indicator(cps[i + 1])) {
            out.push_back({static_cast<char>('A' + (cps[i] - kFirst)), static_cast<char>('A' + (cps[i + 1] - kFirst))});
            ++i;
        }
    }
    return out;
}

FlagProfile flag_profile(const ingest::AccountProfile& p) {
    FlagProfile f{p.account_id, extract_flags(p.description), {}};
    f.combination = f.flags;
    std::sort(f.combination.begin(), f.combination.end());
    f.combination.erase(std::unique(f.combination.begin(), f.combination.end()), f.combination.end());
    return f;
}

FlagAnalysis flag_analysis(std::span<const ingest::AccountProfile> profiles, const BotScoreTable* scores, double t) {
    FlagAnalysis out;
    for (const auto& p : profiles) {
        const auto f = flag_profile(p);
        if (f.combination.empty()) continue;
        ++out.profiles_with_flags;
        const auto bucket = std::min(f.combination.size(), FlagAnalysis::kBuckets) - 1;
        std::string key;
        for (const auto& c : f.combination) key += (key.empty() ? "" : ",") + c;
        auto& stat = out.buckets[bucket][key];
        ++stat.frequency;
        ++out.totals[bucket];
        if (scores) {
            if (auto s = scores->find(p.account_id)) {
                ++stat.scored;
                if (*s >= t) ++stat.bots;
            }
        }
    }
    for (auto& bucket : out.buckets) {
        for (auto& [key, stat] : bucket) stat.bot_proportion = ratio(stat.bots, stat.scored);
    }
    return out;
}

void StateMediaDirectory::add(std::string_view screen_name, std::string_view country) {
    auto key = text::ascii_lower(text::trim(screen_name));
    if (!key.empty() && key[0] == '@') key.erase(0, 1);
    if (key.empty()) throw InputError("state media directory: empty screen name");
    auto code = std::string(text::trim(country));
    std::transform(code.begin(), code.end(), code.begin(), [](unsigned char c) { return std::toupper(c); });
    if (!entries_.emplace(key, code).second) {
        throw InputError("state media directory: duplicate screen name " + std::string(screen_name));
    }
}

StateMediaDirectory StateMediaDirectory::parse(std::string_view csv) {
    const auto table = io::parse_csv(csv, "state media directory");
    const auto s = table.column("screen_name"), c = table.column("country");
    StateMediaDirectory dir;
    for (const auto& row : table.rows) dir.add(row[s], row[c]);
    return dir;
}

StateMediaDirectory StateMediaDirectory::load(const std::filesystem::path& csv) { return parse(io::read_file(csv)); }

std::optional<std::string> StateMediaDirectory::country_of(std::string_view screen_name) const {
    auto it = entries_.find(text::ascii_lower(screen_name));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

StateMediaAmplification state_media_amplification(std::span<const ingest::TweetRecord> records,
                                                  const StateMediaDirectory& dir, const BotScoreTable* scores,
                                                  double t) {
    if (dir.empty()) throw InputError("state_media_amplification: directory is empty");
    StateMediaAmplification out;
    std::map<std::string, std::unordered_set<std::string>> amplifiers;
    for (const auto& r : records) {
        const auto own = text::ascii_lower(r.screen_name);
        if (auto c = dir.country_of(own)) {
            ++out.countries[*c].original_count;
            ++out.original_total;
        }
        std::set<std::string> referenced;
        if (r.retweeted_author) referenced.insert(text::ascii_lower(r.retweeted_author->screen_name));
        for (const auto& m : r.mentions) referenced.insert(text::ascii_lower(m.screen_name));
        referenced.erase(own);
        for (const auto& name : referenced) {
            auto c = dir.country_of(name);
            if (!c) continue;
            ++out.countries[*c].amplification_count;
            ++out.amplification_total;
            amplifiers[*c].insert(r.author_id);
        }
    }
    for (auto& [country, row] : out.countries) {
        const auto& who = amplifiers[country];
        row.amplifiers = who.size();
        if (scores) {
            for (const auto& a : who) {
                if (auto s = scores->find(a)) {
                    ++row.scored_amplifiers;
                    if (*s >= t) ++row.bot_amplifiers;
                }
            }
        }
        row.bot_proportion = ratio(row.bot_amplifiers, row.scored_amplifiers);
    }
    return out;
}

std::string format_percent(const std::optional<double>& share) {
    if (!share) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", *share * 100.0);
    return buf;
}

}  // namespace streamlens::characterize
