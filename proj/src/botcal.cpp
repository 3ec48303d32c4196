#include "streamlens/botcal.hpp"

#include "streamlens/io.hpp"
#include "streamlens/text.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_set>

namespace streamlens {

BotScoreTable load_scores(const std::filesystem::path& csv, std::string detector_name,
                          double default_threshold) {
    const auto table = io::read_csv(csv);
    const auto id = table.column("account_id"), score = table.column("score");
    BotScoreTable out;
    out.detector_name = std::move(detector_name);
    out.default_threshold = default_threshold;
    for (const auto& row : table.rows) {
        double value = 0.0;
        const auto& s = row[score];
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
        if (ec != std::errc{} || ptr != s.data() + s.size() || !(value >= 0.0 && value <= 1.0)) {
            throw InputError(csv.string() + ": score '" + s + "' for " + row[id] + " is not in [0,1]");
        }
        if (!out.scores.emplace(row[id], value).second) {
            throw InputError(csv.string() + ": duplicate account " + row[id]);
        }
    }
    return out;
}

}  // namespace streamlens

namespace streamlens::botcal {

LabeledSample LabeledSample::parse(std::string_view csv) {
    const auto table = io::parse_csv(csv, "labels");
    const auto id = table.column("account_id"), label = table.column("label");
    LabeledSample out;
    std::unordered_set<std::string> seen;
    for (const auto& row : table.rows) {
        const auto value = text::ascii_lower(text::trim(row[label]));
        Label l;
        if (value == "bot") {
            l = Label::Bot;
        } else if (value == "human") {
            l = Label::Human;
        } else {
            throw InputError("labels: '" + row[label] + "' for " + row[id] + " is not bot|human");
        }
        if (!seen.insert(row[id]).second) throw InputError("labels: duplicate account " + row[id]);
        out.entries.emplace_back(row[id], l);
    }
    return out;
}

LabeledSample LabeledSample::load(const std::filesystem::path& csv) { return parse(io::read_file(csv)); }

std::vector<ScoredLabel> join(const BotScoreTable& scores, const LabeledSample& labels) {
    if (labels.entries.empty()) throw InputError("calibration: labelled sample is empty");
    std::vector<ScoredLabel> out;
    out.reserve(labels.entries.size());
    std::vector<std::string> missing;
    for (const auto& [account, label] : labels.entries) {
        auto s = scores.find(account);
        if (!s) {
            missing.push_back(account);
            continue;
        }
        out.push_back({*s, label == Label::Bot});
    }
    if (!missing.empty()) {
        std::string list;
        for (std::size_t i = 0; i < std::min<std::size_t>(missing.size(), 5); ++i) {
            list += (i ? ", " : "") + missing[i];
        }
        throw InputError("calibration: " + std::to_string(missing.size()) + " labelled account(s) have no " +
                         scores.detector_name + " score (" + list + (missing.size() > 5 ? ", ..." : "") + ")");
    }
    return out;
}

namespace {

double safe_ratio(std::uint64_t num, std::uint64_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r > 0 ? 2.0 * p * r / (p + r) : 0.0; }

}  // namespace

MetricsRow evaluate_at_threshold(std::span<const ScoredLabel> sample, double t) {
    if (sample.empty()) throw InputError("calibration: labelled sample is empty");
    MetricsRow row;
    row.threshold = t;
    for (const auto& s : sample) {
        const bool predicted = s.score >= t;
        if (predicted && s.bot) ++row.tp;
        else if (predicted) ++row.fp;
        else if (s.bot) ++row.fn;
        else ++row.tn;
    }
    row.precision_undefined = row.tp + row.fp == 0;
    row.recall_undefined = row.tp + row.fn == 0;
    row.precision = safe_ratio(row.tp, row.tp + row.fp);
    row.recall = safe_ratio(row.tp, row.tp + row.fn);
    row.accuracy = safe_ratio(row.tp + row.tn, sample.size());
    row.f1 = harmonic(row.precision, row.recall);
    if (row.tp + row.fn > 0 && row.tn + row.fp > 0) row.roc_auc = roc_auc(sample);
    return row;
}

MetricsRow evaluate_at_threshold(const BotScoreTable& scores, const LabeledSample& labels, double t) {
    const auto sample = join(scores, labels);
    return evaluate_at_threshold(sample, t);
}

double CurvePoint::f1() const { return harmonic(precision, recall); }

namespace {

std::vector<ScoredLabel> sorted_desc(std::span<const ScoredLabel> sample) {
    std::vector<ScoredLabel> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end(), [](const ScoredLabel& a, const ScoredLabel& b) {
        return a.score > b.score;
    });
    return sorted;
}

}  // namespace

std::vector<CurvePoint> precision_recall_curve(std::span<const ScoredLabel> sample) {
    if (sample.empty()) throw InputError("calibration: labelled sample is empty");
    const auto sorted = sorted_desc(sample);
    std::uint64_t positives = 0;
    for (const auto& s : sorted) positives += s.bot ? 1 : 0;
    std::vector<CurvePoint> curve;
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i].score;
        for (; i < sorted.size() && sorted[i].score == t; ++i) {
            sorted[i].bot ? ++tp : ++fp;
        }
        curve.push_back({t, safe_ratio(tp, tp + fp), safe_ratio(tp, positives)});
    }
    return curve;
}

double roc_auc(std::span<const ScoredLabel> sample) {
    std::uint64_t positives = 0, negatives = 0;
    for (const auto& s : sample) s.bot ? ++positives : ++negatives;
    if (positives == 0 || negatives == 0) {
        throw InputError("roc_auc: sample must contain both bots and humans");
    }
    auto sorted = sorted_desc(sample);
    std::reverse(sorted.begin(), sorted.end());  // ascending
    // Twice the Mann-Whitney U statistic, kept integral so the result is exact.
    std::uint64_t twice_u = 0;
    std::uint64_t humans_below = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double s = sorted[i].score;
        std::uint64_t bots = 0, humans = 0;
        for (; i < sorted.size() && sorted[i].score == s; ++i) sorted[i].bot ? ++bots : ++humans;
        twice_u += 2 * bots * humans_below + bots * humans;
        humans_below += humans;
    }
    return static_cast<double>(twice_u) / (2.0 * static_cast<double>(positives) * static_cast<double>(negatives));
}

std::vector<RocPoint> roc_curve(std::span<const ScoredLabel> sample) {
    std::uint64_t positives = 0, negatives = 0;
    for (const auto& s : sample) s.bot ? ++positives : ++negatives;
    const auto sorted = sorted_desc(sample);
    std::vector<RocPoint> out;
    std::uint64_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < sorted.size();) {
        const double t = sorted[i].score;
        for (; i < sorted.size() && sorted[i].score == t; ++i) sorted[i].bot ? ++tp : ++fp;
        out.push_back({t, safe_ratio(fp, negatives), safe_ratio(tp, positives)});
    }
    return out;
}

ThresholdPolicy ThresholdPolicy::parse(std::string_view text) {
    auto number = [&](std::string_view s) {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc{} || ptr != s.data() + s.size()) {
            throw ConfigError("policy", "bad number in '" + std::string(text) + "'");
        }
        return v;
    };
    if (text == "max_f1") return max_f1();
    if (text.starts_with("precision>=")) return precision_floor(number(text.substr(11)));
    if (text.starts_with("recall>=")) return recall_floor(number(text.substr(8)));
    if (text.starts_with("fixed:")) return fixed(number(text.substr(6)));
    throw ConfigError("policy", "expected max_f1|precision>=v|recall>=v|fixed:v, got '" +
                                    std::string(text) + "'");
}

std::string ThresholdPolicy::to_string() const {
    switch (objective) {
        case Objective::MaxF1: return "max_f1";
        case Objective::PrecisionFloor: return "precision>=" + format_real(value);
        case Objective::RecallFloor: return "recall>=" + format_real(value);
        case Objective::Fixed: return "fixed:" + format_real(value);
    }
    return "unknown";
}

double select_threshold(std::span<const CurvePoint> curve, const ThresholdPolicy& policy) {
    using Objective = ThresholdPolicy::Objective;
    if (policy.objective == Objective::Fixed) {
        if (!(policy.value >= 0.0 && policy.value <= 1.0)) {
            throw PolicyError("fixed threshold " + format_real(policy.value) + " is outside [0,1]", std::nullopt);
        }
        return policy.value;
    }
    if (curve.empty()) throw InputError("select_threshold: empty curve");
    if (policy.objective == Objective::MaxF1) {
        const CurvePoint* best = &curve.front();
        for (const auto& p : curve) {
            const double f = p.f1(), bf = best->f1();
            if (f > bf || (f == bf && p.threshold < best->threshold)) best = &p;
        }
        return best->threshold;
    }
    if (!(policy.value > 0.0 && policy.value < 1.0)) {
        throw PolicyError(policy.to_string() + ": floor must lie in (0,1)", std::nullopt);
    }
    const bool on_precision = policy.objective == Objective::PrecisionFloor;
    std::optional<double> chosen;
    double best_seen = 0.0;
    for (const auto& p : curve) {
        const double metric = on_precision ? p.precision : p.recall;
        best_seen = std::max(best_seen, metric);
        if (metric < policy.value) continue;
        if (on_precision) {
            if (!chosen || p.threshold < *chosen) chosen = p.threshold;
        } else if (!chosen || p.threshold > *chosen) {
            chosen = p.threshold;
        }
    }
    if (!chosen) {
        throw PolicyError(policy.to_string() + " is unattainable; best " +
                              (on_precision ? "precision " : "recall ") + format_real(best_seen),
                          best_seen);
    }
    return *chosen;
}

ScoreDensity score_density(std::span<const double> scores, std::span<const double> thresholds, std::size_t bins) {
    if (bins == 0) throw InputError("score_density: need at least one bin");
    if (scores.empty()) throw InputError("score_density: no scores");
    ScoreDensity out;
    out.bins = bins;
    out.counts.assign(bins, 0);
    auto bin_of = [bins](double s) {
        const double clamped = std::clamp(s, 0.0, 1.0);
        return std::min(bins - 1, static_cast<std::size_t>(clamped * static_cast<double>(bins)));
    };
    for (double s : scores) ++out.counts[bin_of(s)];
    out.density.resize(bins);
    const double scale = static_cast<double>(bins) / static_cast<double>(scores.size());
    for (std::size_t i = 0; i < bins; ++i) out.density[i] = static_cast<double>(out.counts[i]) * scale;
    for (double t : thresholds) out.markers.push_back({t, bin_of(t)});
    return out;
}

ScoreDensity score_density(const BotScoreTable& table, std::span<const double> thresholds, std::size_t bins) {
    std::vector<std::pair<std::string, double>> ordered(table.scores.begin(), table.scores.end());
    std::sort(ordered.begin(), ordered.end());
    std::vector<double> values;
    values.reserve(ordered.size());
    for (const auto& [id, s] : ordered) values.push_back(s);
    return score_density(values, thresholds, bins);
}

std::map<Day, CreationBin> creation_date_histogram(std::span<const ingest::AccountProfile> profiles,
                                                   const BotScoreTable& scores, double t) {
    std::map<Day, CreationBin> bins;
    for (const auto& p : profiles) {
        auto& bin = bins[day_of(p.created_at)];
        ++bin.count;
        if (auto s = scores.find(p.account_id)) {
            ++bin.scored;
            if (*s > t) ++bin.bots;
        }
    }
    for (auto& [day, bin] : bins) {
        if (bin.scored > 0) bin.bot_proportion = static_cast<double>(bin.bots) / static_cast<double>(bin.scored);
    }
    return bins;
}

std::uint64_t filter_count(std::span<const ingest::AccountProfile> profiles, const BotScoreTable& scores,
                           Day since, double t) {
    std::uint64_t n = 0;
    const Timestamp cutoff{since.time_since_epoch()};
    for (const auto& p : profiles) {
        if (p.created_at < cutoff) continue;
        if (auto s = scores.find(p.account_id); s && *s > t) ++n;
    }
    return n;
}

}  // namespace streamlens::botcal
