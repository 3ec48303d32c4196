#pragma once

#include "streamlens/common.hpp"
#include "streamlens/ingest.hpp"
#include "streamlens/scores.hpp"

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streamlens::characterize {

using RankedCounts = std::vector<std::pair<std::string, std::uint64_t>>;

/// Share of each top-k hashtag per day. Days where none of the top-k tags
/// occur are omitted.
struct MarketShare {
    std::vector<std::string> hashtags;  // overall rank order
    std::vector<std::uint64_t> totals;  // overall count per hashtag
    bool all_hashtag_denominator = false;
    struct DayRow {
        Day day;
        std::vector<std::uint64_t> counts;
        std::uint64_t denominator = 0;
        std::vector<double> shares;
    };
    std::vector<DayRow> days;
};

/// Shares are normalised within the top-k set unless `all_hashtag_denominator`,
/// which divides by every hashtag used that day.
MarketShare hashtag_marketshare(std::span<const ingest::TweetRecord> records, std::size_t top_k,
                                bool all_hashtag_denominator = false);
std::string format_marketshare_csv(const MarketShare& m);  // date,hashtag,count,share

enum class TallyField { Lang, Domain };
TallyField parse_tally_field(std::string_view text);

/// Descending counts, ties by key. Domain tallies count every URL occurrence.
RankedCounts tally(std::span<const ingest::TweetRecord> records, TallyField field);

/// English display name of a language code ("en" -> "English"); the code
/// itself when the locale data has no name for it.
std::string language_name(std::string_view code);
/// Rows such as "English    119,706,946".
std::string format_tally_table(const RankedCounts& rows, TallyField field, std::size_t limit = 10);

inline constexpr std::array<std::string_view, 10> kBiasCategories = {
    "far-left", "left", "center-left", "center", "center-right", "right", "far-right", "fake", "satire", "conspiracy"};
inline constexpr std::array<std::string_view, 5> kFactualCategories = {"very-low", "low", "mixed", "high",
                                                                       "very-high"};

struct BiasEntry {
    std::string bias;
    std::string factual;
};

class BiasDictionary {
public:
    /// Keys are normalised like URL hosts; InputError on unknown categories or duplicates.
    void add(std::string_view domain, std::string_view bias, std::string_view factual);
    static BiasDictionary load(const std::filesystem::path& csv);
    static BiasDictionary parse(std::string_view csv);

    const BiasEntry* find(std::string_view domain) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, BiasEntry, std::less<>> entries_;
};

/// Accounts sharing a category, and how many of the scored ones look like bots.
struct CategoryStat {
    std::uint64_t count = 0;  // URL occurrences
    std::uint64_t accounts = 0;
    std::uint64_t scored = 0;
    std::uint64_t bots = 0;  // score >= t
    std::optional<double> bot_proportion;
};

struct BiasDistribution {
    std::map<std::string, CategoryStat> bias;
    std::map<std::string, CategoryStat> factual;
    std::uint64_t total_occurrences = 0;
    std::uint64_t matched_occurrences = 0;
    std::uint64_t unique_domains = 0;
    std::uint64_t matched_unique_domains = 0;
    double coverage = 0.0;         // matched / total occurrences
    double unique_coverage = 0.0;  // matched / total distinct domains
};

BiasDistribution bias_distribution(std::span<const ingest::TweetRecord> records, const BiasDictionary& dict,
                                   const BotScoreTable* scores, double t);

/// Case-folded single-token terms. A `<lang>:` prefix is kept as metadata;
/// matching does not depend on it.
class AbusiveLexicon {
public:
    void add(std::string_view term, std::string_view lang = {});
    static AbusiveLexicon load(const std::filesystem::path& path);
    static AbusiveLexicon parse(std::string_view text);

    bool contains(std::string_view folded_token) const;
    bool is_abusive(std::string_view text) const;
    std::size_t size() const { return terms_.size(); }
    bool empty() const { return terms_.empty(); }
    const std::map<std::string, std::set<std::string>, std::less<>>& terms() const { return terms_; }

private:
    std::map<std::string, std::set<std::string>, std::less<>> terms_;  // term -> language tags
};

struct AccountShare {
    std::uint64_t accounts = 0;
    std::uint64_t scored = 0;
    std::uint64_t botlike = 0;  // score >= t
    std::optional<double> share;
};

struct AbusiveSeries {
    std::map<Day, std::uint64_t> daily;  // every corpus day, zeros included
    std::uint64_t abusive_tweets = 0;
    AccountShare abusive_accounts;
    AccountShare other_accounts;
};

AbusiveSeries abusive_series(std::span<const ingest::TweetRecord> records, const AbusiveLexicon& lex,
                             const BotScoreTable* scores, double t);

/// Country codes from regional-indicator pairs, paired greedily left to
/// right. An indicator without a partner is dropped.
std::vector<std::string> extract_flags(std::string_view description);

struct FlagProfile {
    std::string account_id;
    std::vector<std::string> flags;
    std::vector<std::string> combination;  // sorted distinct
};
FlagProfile flag_profile(const ingest::AccountProfile& p);

struct CombinationStat {
    std::uint64_t frequency = 0;
    std::uint64_t scored = 0;
    std::uint64_t bots = 0;  // score >= t
    std::optional<double> bot_proportion;
};

/// Buckets by number of distinct flags: index 0 holds 1 flag, index 5 holds 6 or more.
struct FlagAnalysis {
    static constexpr std::size_t kBuckets = 6;
    std::array<std::map<std::string, CombinationStat>, kBuckets> buckets;  // key "CA,US"
    std::array<std::uint64_t, kBuckets> totals{};
    std::uint64_t profiles_with_flags = 0;
};

FlagAnalysis flag_analysis(std::span<const ingest::AccountProfile> profiles, const BotScoreTable* scores, double t);

class StateMediaDirectory {
public:
    /// Screen names are matched case-insensitively; duplicates raise InputError.
    void add(std::string_view screen_name, std::string_view country);
    static StateMediaDirectory load(const std::filesystem::path& csv);
    static StateMediaDirectory parse(std::string_view csv);

    std::optional<std::string> country_of(std::string_view screen_name) const;
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, std::string, std::less<>> entries_;
};

struct StateMediaRow {
    std::uint64_t original_count = 0;       // tweets authored by directory accounts
    std::uint64_t amplification_count = 0;  // (tweet, directory account) retweet/mention references by others
    std::uint64_t amplifiers = 0;
    std::uint64_t scored_amplifiers = 0;
    std::uint64_t bot_amplifiers = 0;  // score >= t
    std::optional<double> bot_proportion;
};

struct StateMediaAmplification {
    std::map<std::string, StateMediaRow> countries;
    std::uint64_t original_total = 0;
    std::uint64_t amplification_total = 0;
};

StateMediaAmplification state_media_amplification(std::span<const ingest::TweetRecord> records,
                                                  const StateMediaDirectory& dir, const BotScoreTable* scores,
                                                  double t);

/// "7.1%"-style percentage with one decimal, "n/a" when undefined.
std::string format_percent(const std::optional<double>& share);

}  // namespace streamlens::characterize
