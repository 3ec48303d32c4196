#pragma once

#include "streamlens/common.hpp"
#include "streamlens/ingest.hpp"
#include "streamlens/scores.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace streamlens::topics {

/// All hashtags one account used, as a multiset.
struct HashtagDocument {
    std::string account_id;
    std::map<std::string, std::uint64_t> tokens;
    std::uint64_t length() const;
};

/// Per-account documents sorted by account id. Only tweets whose language
/// equals `lang` count when a filter is given; accounts without hashtags are absent.
std::vector<HashtagDocument> build_hashtag_documents(std::span<const ingest::TweetRecord> records,
                                                     const std::optional<std::string>& lang = std::nullopt);

struct LdaOptions {
    std::size_t k = 5;
    std::optional<double> alpha;  // defaults to 50 / k
    double beta = 0.01;
    int iterations = 1000;
    std::uint64_t seed = 1;
};

struct TopicModel {
    std::size_t k = 0;
    double alpha = 0.0;
    double beta = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> vocab;     // sorted
    std::vector<std::string> accounts;  // document order
    std::vector<double> phi;            // k x V, row-major
    std::vector<double> theta;          // D x k, row-major
    std::vector<std::string> warnings;

    std::size_t vocab_size() const { return vocab.size(); }
    std::size_t doc_count() const { return accounts.size(); }
    double phi_at(std::size_t topic, std::size_t word) const { return phi[topic * vocab.size() + word]; }
    double theta_at(std::size_t doc, std::size_t topic) const { return theta[doc * k + topic]; }
    /// Highest-probability words, ties by word.
    std::vector<std::pair<std::string, double>> top_words(std::size_t topic, std::size_t n) const;
    /// argmax of the document's theta row; ties go to the lowest topic.
    std::size_t dominant_topic(std::size_t doc) const;

    bool operator==(const TopicModel&) const = default;
};

/// Collapsed Gibbs sampling with symmetric priors. phi and theta come from
/// the final sample's counts with prior smoothing. InputError for empty
/// input, k = 0 or non-positive priors; k above the vocabulary size only warns.
TopicModel lda_fit(std::span<const HashtagDocument> docs, const LdaOptions& options);

struct TopicRow {
    std::size_t topic = 0;  // zero based
    std::vector<std::pair<std::string, double>> top_words;
    std::uint64_t accounts = 0;
    std::uint64_t scored = 0;
    std::uint64_t bots = 0;  // score >= t
    std::optional<double> bot_fraction;
    std::string caption() const;  // "Topic One (40.8% bot)"
};

std::vector<TopicRow> topic_report(const TopicModel& model, const BotScoreTable* scores, double t,
                                   std::size_t top_words = 10);

/// Writes phi.csv, theta.csv, vocab.txt and model.txt into `dir`.
void export_model(const TopicModel& model, const std::filesystem::path& dir);
TopicModel import_model(const std::filesystem::path& dir);

}  // namespace streamlens::topics
