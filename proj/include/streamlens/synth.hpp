#pragma once

// Synthetic stream generator with known ground truth. Everything a test
// needs as an oracle is kept in the generator's own representation
// (SynthUser / SynthTweet) so checks never route through the parser.

#include "streamlens/common.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace streamlens::synth {

struct SynthConfig {
    std::uint64_t seed = 1;
    std::size_t tweets = 10000;
    std::size_t users = 1000;
    std::size_t groups = 2;
    double within_group = 0.9;
    Day start_day = Day{std::chrono::year{2020} / 3 / 15};
    int days = 10;
    double p_retweet = 0.55;
    double p_quote = 0.2;
    double p_reply = 0.07;
    double p_extra_reference = 0.05;  // reference fields beyond the primary one
    double p_self_interaction = 0.01;
    double corrupt_rate = 0.0;        // exact fraction of tweet lines truncated
    double keyword_rate = 1.0;        // exact fraction of tweets carrying the keyword
    std::size_t notice_lines = 0;     // platform delete/limit notices
    std::size_t keepalive_lines = 0;
    double bot_fraction = 0.3;
    double abusive_rate = 0.05;
    double url_rate = 0.3;
    std::size_t state_media_accounts = 4;
    std::string keyword = "covid19";
};

struct SynthUser {
    std::string account_id;
    std::string screen_name;
    std::size_t group = 0;
    bool bot = false;
    double score = 0.0;  // detector score in [0,1]
    bool verified = false;
    std::string lang = "en";
    Timestamp created_at{};
    std::string description;
    std::vector<std::string> flags;  // country codes in description order
    std::optional<std::string> country;
    std::optional<std::string> state_media_country;
};

struct SynthTweet {
    std::string tweet_id;
    std::size_t author = 0;
    Timestamp created_at{};
    std::string text;
    std::string lang;
    std::vector<std::string> hashtags;  // as emitted (mixed case)
    std::vector<std::size_t> mentions;  // user indices, entity order
    std::vector<std::string> urls;
    std::vector<std::string> url_domains;  // bare domain per url
    std::uint32_t media = 0;
    std::optional<std::size_t> retweet_of;  // referenced author
    std::optional<std::size_t> quote_of;
    std::optional<std::size_t> reply_to;
    bool quote_without_author = false;  // quoted id present, quoted_status absent
    bool keyword = false;
    bool abusive = false;
    bool corrupted = false;  // emitted line is truncated JSON
};

struct GeneratedCorpus {
    SynthConfig config;
    std::vector<SynthUser> users;
    std::vector<SynthTweet> tweets;
    std::vector<std::string> lines;  // stream lines, notices/keep-alives interleaved
    std::vector<std::string> abusive_terms;
    std::vector<std::string> domains;
    std::map<std::string, std::pair<std::string, std::string>> bias_entries;  // domain -> (bias, factual)
};

GeneratedCorpus generate(const SynthConfig& config);

/// Serializes one tweet as a platform JSON line.
std::string tweet_json(const GeneratedCorpus& corpus, const SynthTweet& tweet);

struct BundlePaths {
    std::filesystem::path root;
    std::filesystem::path corpus_dir;
    std::filesystem::path keywords;
    std::filesystem::path scores;
    std::filesystem::path labels;
    std::filesystem::path audit_fixture;
    std::filesystem::path bias_dictionary;
    std::filesystem::path lexicon;
    std::filesystem::path state_media;
    std::filesystem::path countries;
    std::filesystem::path config;
};

struct BundleOptions {
    std::size_t shards = 4;
    std::size_t label_sample = 200;
    double audit_missing = 0.07;
    double audit_suspended = 0.01;
};

/// Writes a gzip corpus plus every side input the pipeline consumes, and a
/// pipeline config that references them.
BundlePaths write_bundle(const GeneratedCorpus& corpus, const std::filesystem::path& dir,
                         const BundleOptions& options = {});

}  // namespace streamlens::synth
