#pragma once

#include "streamlens/common.hpp"
#include "streamlens/network.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace streamlens::service {

struct CorpusConfig {
    std::vector<std::string> inputs;  // files, directories or globs
    std::optional<std::filesystem::path> keywords;
    std::optional<std::filesystem::path> countries;
    std::uint64_t daily_cap = ingest::kDefaultDailyCap;
    unsigned threads = 0;
};

struct NetworkConfig {
    std::vector<InteractionKind> kinds{InteractionKind::Mention, InteractionKind::Retweet};
    std::uint64_t k_core_k = 100;
    network::DegreeMode k_core_degree = network::DegreeMode::Total;
    std::size_t edge_sample_m = 1'000'000;
    std::uint64_t sample_seed = 1;
    double centrality_tolerance = network::kDefaultCentralityTolerance;
    int centrality_max_iterations = network::kDefaultCentralityIterations;
    std::uint64_t louvain_seed = 1;
    std::size_t top_n = 50;
    std::size_t community_cards = 10;
    bool export_full_graph = false;
};

struct DetectorConfig {
    std::string name;
    std::filesystem::path scores;
    double threshold = 0.5;
};

struct BotsConfig {
    std::optional<std::string> primary;  // defaults to the first detector
    std::vector<DetectorConfig> detectors;
    std::optional<std::filesystem::path> labels;
    std::size_t label_sample_size = 200;
    std::uint64_t label_sample_seed = 1;
    std::vector<std::string> policies{"max_f1", "fixed:0.5"};
    std::size_t density_bins = 100;
    std::optional<Day> creation_since;
};

struct AuditConfig {
    std::optional<std::filesystem::path> fixture;
    std::optional<std::string> endpoint;
    std::size_t sample_size = 1'000'000;
    std::uint64_t seed = 1;
    double confidence = 0.95;
    std::string interval = "wald";
    std::size_t batch_size = 100;
    std::size_t parallelism = 1;
};

struct CharacterizeConfig {
    std::optional<std::filesystem::path> bias_dictionary;
    std::optional<std::filesystem::path> lexicon;
    std::optional<std::filesystem::path> state_media;
    std::size_t marketshare_top_k = 12;
    bool all_hashtag_denominator = false;
    std::size_t tally_top = 10;
};

struct TopicsConfig {
    bool enabled = true;
    std::size_t k = 5;
    std::optional<double> alpha;  // 50 / k when unset
    double beta = 0.01;
    int iterations = 1000;
    std::uint64_t seed = 1;
    std::optional<std::string> lang = "en";
    std::size_t top_words = 10;
};

struct BotMatchConfig {
    bool enabled = true;
    std::size_t vocabulary = 4000;
    std::optional<std::string> lang = "en";
};

struct SnapshotConfig {
    std::filesystem::path store = "snapshots";
    std::optional<std::string> filter;  // "state_media": propagators of directory accounts only
    std::optional<Timestamp> as_of;
};

/// Everything a snapshot build depends on. Paths are kept as written;
/// resolve() anchors relative ones at the config file's directory.
struct AnalysisConfig {
    std::filesystem::path base_dir;

    CorpusConfig corpus;
    NetworkConfig network;
    BotsConfig bots;
    AuditConfig audit;
    CharacterizeConfig characterize;
    TopicsConfig topics;
    BotMatchConfig botmatch;
    SnapshotConfig snapshot;

    /// Parses JSON; ConfigError names the offending field as a dotted path.
    static AnalysisConfig parse(std::string_view json_text, const std::filesystem::path& base_dir = {});
    static AnalysisConfig load(const std::filesystem::path& file);

    std::filesystem::path resolve(const std::filesystem::path& p) const;

    /// Canonical JSON with every default filled in and paths as written.
    std::string canonical_json() const;
    /// SHA-256 of canonical_json().
    std::string digest() const;

    const DetectorConfig* primary_detector() const;
};

std::string sha256_hex(std::string_view data);

}  // namespace streamlens::service
