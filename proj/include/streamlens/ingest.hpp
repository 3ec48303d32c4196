#pragma once

#include "streamlens/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streamlens::ingest {

struct AccountRef {
    std::string account_id;
    std::string screen_name;
    bool operator==(const AccountRef&) const = default;
};

struct TweetRecord {
    std::string tweet_id;
    std::string author_id;
    std::string screen_name;
    Timestamp created_at{};
    std::string text;
    std::string lang = "und";
    std::vector<std::string> hashtags;  // lowercased, no '#'
    std::vector<AccountRef> mentions;
    std::vector<std::string> urls;  // expanded
    std::uint32_t media_count = 0;
    std::optional<std::string> retweeted_id;
    std::optional<std::string> quoted_id;
    std::optional<std::string> reply_to_id;
    // Authors of the referenced tweets; needed to place graph edges.
    std::optional<AccountRef> retweeted_author;
    std::optional<AccountRef> quoted_author;
    std::optional<AccountRef> reply_to_author;
    bool verified = false;
};

enum class TweetClass { Original, Retweet, Reply, Quote };
std::string_view to_string(TweetClass c);

struct AccountProfile {
    std::string account_id;
    std::string screen_name;
    Timestamp created_at{};
    std::string description;
    std::uint64_t followers = 0;
    std::uint64_t friends = 0;
    bool verified = false;
    std::optional<std::string> country;  // ISO-3166 alpha-2, external annotation
    // Time of the tweet this profile was observed on; newest observation wins.
    Timestamp observed_at{};
    std::string observed_tweet_id;
};

enum class SkipReason { None, KeepAlive, NonTweet, MalformedJson, MissingField, BadTimestamp };
std::string_view to_string(SkipReason r);
inline bool is_parse_error(SkipReason r) {
    return r == SkipReason::MalformedJson || r == SkipReason::MissingField ||
           r == SkipReason::BadTimestamp;
}

struct ParsedLine {
    std::optional<TweetRecord> record;
    std::optional<AccountProfile> author;
    SkipReason skip = SkipReason::None;
    bool ok() const { return record.has_value(); }
};

/// Parses one stream line. Never throws on bad input: blank keep-alives,
/// platform notices (delete/limit/...) and malformed lines come back as a
/// skip marker with the reason set.
ParsedLine parse_tweet_record(std::string_view raw_line);

/// Retweet > Quote > Reply > Original.
TweetClass classify_tweet(const TweetRecord& r);

/// True iff the case-folded text or any hashtag contains one of the
/// (lowercase) keywords as a substring. Throws InputError for an empty list.
bool keyword_filter(const TweetRecord& r, std::span<const std::string> keywords);

/// One term per line, '#' comment lines and blank lines ignored, case folded.
std::vector<std::string> load_keywords(const std::filesystem::path& path);

/// 50 tweets/second for a full day.
inline constexpr std::uint64_t kDefaultDailyCap = 50ull * 86400ull;

struct StreamStats {
    std::uint64_t total_tweets = 0;
    std::uint64_t unique_users = 0;
    std::uint64_t original_tweets = 0;
    std::uint64_t retweet_tweets = 0;
    std::uint64_t reply_tweets = 0;
    std::uint64_t quote_tweets = 0;
    std::uint64_t hashtag_occurrences = 0;
    std::uint64_t unique_hashtags = 0;
    std::uint64_t images = 0;
    std::uint64_t url_occurrences = 0;
    std::uint64_t unique_domains = 0;
    std::uint64_t verified_tweets = 0;
    std::map<Day, std::uint64_t> daily_counts;
    std::uint64_t daily_cap = kDefaultDailyCap;
    std::vector<Day> days_at_cap;  // days whose count reached daily_cap

    bool operator==(const StreamStats&) const = default;
};

StreamStats stream_summary(std::span<const TweetRecord> records,
                           std::uint64_t daily_cap = kDefaultDailyCap);

/// UTC day buckets; every day between the first and last tweet is present.
std::map<Day, std::uint64_t> partition_by_day(std::span<const TweetRecord> records);

std::string format_stats_report(const StreamStats& s);  // key=value
StreamStats parse_stats_report(std::string_view text);
std::string format_daily_csv(const std::map<Day, std::uint64_t>& daily);  // date,count
struct StatRow {
    std::string key;    // report key, e.g. "total_tweets"
    std::string label;  // display label, e.g. "Total Tweets"
    std::uint64_t value = 0;
};
std::vector<StatRow> stats_rows(const StreamStats& s);

/// Human-readable table with the platform statistics field names.
std::string format_stats_table(const StreamStats& s);

struct IngestCounters {
    std::uint64_t lines = 0;
    std::uint64_t parsed = 0;
    std::uint64_t filtered_out = 0;
    std::uint64_t duplicates = 0;
    std::map<SkipReason, std::uint64_t> skipped;

    std::uint64_t skipped_total() const;
    std::uint64_t parse_errors() const;
    void merge(const IngestCounters& other);
    bool operator==(const IngestCounters&) const = default;
};

struct Corpus {
    std::vector<TweetRecord> records;              // input order, unique tweet ids
    std::map<std::string, AccountProfile> profiles;  // by account_id
    IngestCounters counters;

    std::optional<Timestamp> last_timestamp() const;
};

struct LoadOptions {
    std::vector<std::string> keywords;  // empty: keep every tweet
    unsigned threads = 0;               // 0: hardware concurrency
    std::size_t shard_lines = 1 << 14;
};

Corpus parse_lines(std::span<const std::string> lines, const LoadOptions& options = {});
Corpus load_corpus(std::span<const std::filesystem::path> files, const LoadOptions& options = {});

/// Applies an `account_id,country` annotation CSV; returns the number applied.
std::size_t apply_country_annotations(Corpus& corpus, const std::filesystem::path& csv);

}  // namespace streamlens::ingest
