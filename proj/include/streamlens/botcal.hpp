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

namespace streamlens::botcal {

enum class Label { Bot, Human };

/// Hand-labelled accounts. Ids are unique.
struct LabeledSample {
    std::vector<std::pair<std::string, Label>> entries;

    /// `account_id,label` with label in {bot,human}.
    static LabeledSample load(const std::filesystem::path& csv);
    static LabeledSample parse(std::string_view csv);
};

/// One labelled account with its detector score. Bot is the positive class.
struct ScoredLabel {
    double score = 0.0;
    bool bot = false;
};

/// Joins labels with scores; InputError when a labelled account has no
/// score or the sample is empty.
std::vector<ScoredLabel> join(const BotScoreTable& scores, const LabeledSample& labels);

struct MetricsRow {
    double threshold = 0.5;
    double f1 = 0.0;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    std::optional<double> roc_auc;  // absent for single-class samples
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    bool precision_undefined = false;  // nothing predicted bot
    bool recall_undefined = false;     // no bots in the sample
};

/// Predicted bot iff score >= t. Undefined precision/recall report as 0
/// with the matching flag set.
MetricsRow evaluate_at_threshold(std::span<const ScoredLabel> sample, double t);
MetricsRow evaluate_at_threshold(const BotScoreTable& scores, const LabeledSample& labels, double t);

struct CurvePoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1() const;
};

/// One point per distinct score, thresholds descending.
std::vector<CurvePoint> precision_recall_curve(std::span<const ScoredLabel> sample);

/// Mann-Whitney probability that a random bot outscores a random human,
/// ties counted one half. InputError unless both classes are present.
double roc_auc(std::span<const ScoredLabel> sample);

struct RocPoint {
    double threshold = 0.0;
    double false_positive_rate = 0.0;
    double true_positive_rate = 0.0;
};
std::vector<RocPoint> roc_curve(std::span<const ScoredLabel> sample);

class PolicyError : public Error {
public:
    PolicyError(const std::string& message, std::optional<double> best_attainable)
        : Error(message), best_(best_attainable) {}
    std::optional<double> best_attainable() const { return best_; }

private:
    std::optional<double> best_;
};

struct ThresholdPolicy {
    enum class Objective { MaxF1, PrecisionFloor, RecallFloor, Fixed };
    Objective objective = Objective::MaxF1;
    double value = 0.0;

    static ThresholdPolicy max_f1() { return {Objective::MaxF1, 0.0}; }
    static ThresholdPolicy precision_floor(double v) { return {Objective::PrecisionFloor, v}; }
    static ThresholdPolicy recall_floor(double v) { return {Objective::RecallFloor, v}; }
    static ThresholdPolicy fixed(double v) { return {Objective::Fixed, v}; }

    /// "max_f1", "precision>=0.9", "recall>=0.8", "fixed:0.5".
    static ThresholdPolicy parse(std::string_view text);
    std::string to_string() const;
};

/// max_f1: argmax F1, ties to the lower threshold. precision_floor(v): lowest
/// threshold reaching precision v. recall_floor(v): highest threshold
/// reaching recall v. fixed(v): v. Floors must lie in (0,1).
double select_threshold(std::span<const CurvePoint> curve, const ThresholdPolicy& policy);

struct ScoreDensity {
    std::size_t bins = 100;
    std::vector<std::uint64_t> counts;
    std::vector<double> density;  // counts normalised to integrate to 1 over [0,1]
    struct Marker {
        double threshold;
        std::size_t bin;
    };
    std::vector<Marker> markers;
};

/// Fixed-width histogram over [0,1]; a score of exactly 1 lands in the last bin.
ScoreDensity score_density(std::span<const double> scores, std::span<const double> thresholds,
                           std::size_t bins = 100);
ScoreDensity score_density(const BotScoreTable& table, std::span<const double> thresholds,
                           std::size_t bins = 100);

struct CreationBin {
    std::uint64_t count = 0;   // every account created that day
    std::uint64_t scored = 0;  // accounts with a score
    std::uint64_t bots = 0;    // scored above the threshold
    std::optional<double> bot_proportion;
};

std::map<Day, CreationBin> creation_date_histogram(std::span<const ingest::AccountProfile> profiles,
                                                   const BotScoreTable& scores, double t);

/// Accounts created on or after `since` with a score above t.
std::uint64_t filter_count(std::span<const ingest::AccountProfile> profiles, const BotScoreTable& scores,
                           Day since, double t);

}  // namespace streamlens::botcal
