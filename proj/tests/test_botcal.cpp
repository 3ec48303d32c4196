#include "support.hpp"

#include "streamlens/botcal.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

using namespace streamlens;
using namespace streamlens::botcal;

namespace {

std::vector<ScoredLabel> sample_of(const std::vector<double>& s, const std::vector<bool>& bot) {
    std::vector<ScoredLabel> out;
    for (std::size_t i = 0; i < s.size(); ++i) out.push_back({s[i], bot[i]});
    return out;
}

struct RandomSet {
    std::vector<double> scores;
    std::vector<bool> bot;
};

RandomSet random_set(Rng& rng, std::size_t n, bool coarse) {
    RandomSet r;
    for (std::size_t i = 0; i < n; ++i) {
        const bool b = rng.bernoulli(0.4);
        double s = coarse ? static_cast<double>(rng.below(11)) / 10.0 : rng.uniform();
        if (b && !coarse) s = std::min(1.0, s * 0.5 + 0.4);
        r.scores.push_back(s);
        r.bot.push_back(b);
    }
    // Both classes are required for AUC.
    r.bot[0] = true;
    r.bot[1] = false;
    return r;
}

ingest::AccountProfile profile(std::string id, const char* created) {
    ingest::AccountProfile p;
    p.account_id = std::move(id);
    p.created_at = *parse_timestamp(created);
    return p;
}

}  // namespace

TEST_CASE("toy evaluation by hand enumeration") {
    const auto s = sample_of({0.9, 0.8, 0.4, 0.2}, {true, true, true, false});
    const auto m = evaluate_at_threshold(s, 0.5);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.f1 == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(m.accuracy == doctest::Approx(0.75));
    CHECK(m.tp == 2);
    CHECK(m.fn == 1);
    CHECK(m.tn == 1);
}

TEST_CASE("perfect separation") {
    const auto s = sample_of({0.9, 0.7, 0.2, 0.1}, {true, true, false, false});
    const auto m = evaluate_at_threshold(s, 0.5);
    CHECK(m.precision == 1.0);
    CHECK(m.recall == 1.0);
    CHECK(m.f1 == 1.0);
    CHECK(m.accuracy == 1.0);
    CHECK(*m.roc_auc == 1.0);
}

TEST_CASE("boundary score counts as bot") {
    const auto m = evaluate_at_threshold(sample_of({0.5, 0.49}, {true, false}), 0.5);
    CHECK(m.tp == 1);
    CHECK(m.tn == 1);
}

TEST_CASE("degenerate precision and single class") {
    const auto m = evaluate_at_threshold(sample_of({0.1, 0.2}, {true, false}), 0.9);
    CHECK(m.precision_undefined);
    CHECK(m.precision == 0.0);
    CHECK(m.f1 == 0.0);
    const auto only_humans = evaluate_at_threshold(sample_of({0.1, 0.7}, {false, false}), 0.5);
    CHECK(only_humans.recall_undefined);
    CHECK_FALSE(only_humans.roc_auc);
    CHECK_THROWS_AS(roc_auc(sample_of({0.1, 0.7}, {false, false})), InputError);
    CHECK_THROWS_AS(evaluate_at_threshold(std::vector<ScoredLabel>{}, 0.5), InputError);
}

TEST_CASE("join fails loudly on a missing score") {
    BotScoreTable t;
    t.scores = {{"a", 0.3}};
    const auto labels = LabeledSample::parse("account_id,label\na,bot\nb,human\n");
    CHECK_THROWS_AS(join(t, labels), InputError);
    t.scores["b"] = 0.1;
    CHECK(join(t, labels).size() == 2);
    CHECK_THROWS_AS(LabeledSample::parse("account_id,label\na,robot\n"), InputError);
    CHECK_THROWS_AS(LabeledSample::parse("account_id,label\na,bot\na,human\n"), InputError);
}

TEST_CASE("identical scores give AUC one half") {
    CHECK(roc_auc(sample_of({0.3, 0.3, 0.3}, {true, false, true})) == 0.5);
}

TEST_CASE("metrics and AUC match oracles on 1000 random sets") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const auto r = random_set(rng, 10 + rng.below(190), trial % 2 == 0);
        const auto s = sample_of(r.scores, r.bot);
        const double t = rng.uniform();
        const auto m = evaluate_at_threshold(s, t);
        const auto c = testsupport::confusion_oracle(r.scores, r.bot, t);
        REQUIRE(m.tp == c.tp);
        REQUIRE(m.fp == c.fp);
        REQUIRE(m.tn == c.tn);
        REQUIRE(m.fn == c.fn);
        const double n = static_cast<double>(s.size());
        CHECK(std::abs(m.accuracy - static_cast<double>(c.tp + c.tn) / n) < 1e-12);
        if (c.tp + c.fp > 0) CHECK(std::abs(m.precision - static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp)) < 1e-12);
        if (m.precision + m.recall > 0) {
            CHECK(std::abs(m.f1 - 2 * m.precision * m.recall / (m.precision + m.recall)) < 1e-12);
        }
        CHECK(std::abs(roc_auc(s) - testsupport::auc_oracle(r.scores, r.bot)) < 1e-12);
    }
}

TEST_CASE("accuracy is order independent and AUC invariant under monotone transforms") {
    Rng rng(6);
    const auto r = random_set(rng, 100, false);
    auto s = sample_of(r.scores, r.bot);
    const auto before = evaluate_at_threshold(s, 0.5);
    const double auc = roc_auc(s);
    rng.shuffle(s);
    const auto after = evaluate_at_threshold(s, 0.5);
    CHECK(after.accuracy == before.accuracy);
    CHECK(after.f1 == before.f1);
    for (auto& x : s) x.score = std::pow(x.score, 3) * 0.5;
    CHECK(std::abs(roc_auc(s) - auc) < 1e-12);
}

TEST_CASE("precision-recall curve: hand-enumerated two-point set") {
    const auto curve = precision_recall_curve(sample_of({0.8, 0.3}, {true, false}));
    REQUIRE(curve.size() == 2);
    CHECK(curve[0].threshold == 0.8);
    CHECK(curve[0].precision == 1.0);
    CHECK(curve[0].recall == 1.0);
    CHECK(curve[1].threshold == 0.3);
    CHECK(curve[1].precision == 0.5);
    CHECK(curve[1].recall == 1.0);
}

TEST_CASE("all-bot labels give precision one everywhere") {
    for (const auto& p : precision_recall_curve(sample_of({0.1, 0.5, 0.9, 0.5}, {true, true, true, true}))) {
        CHECK(p.precision == 1.0);
    }
}

TEST_CASE("curve properties on random sets") {
    Rng rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const auto r = random_set(rng, 50, trial % 3 == 0);
        const auto s = sample_of(r.scores, r.bot);
        const auto curve = precision_recall_curve(s);
        const std::set<double> distinct(r.scores.begin(), r.scores.end());
        REQUIRE(curve.size() == distinct.size());
        for (std::size_t i = 0; i < curve.size(); ++i) {
            if (i > 0) {
                CHECK(curve[i].threshold < curve[i - 1].threshold);
                CHECK(curve[i].recall >= curve[i - 1].recall);
            }
            const auto m = evaluate_at_threshold(s, curve[i].threshold);
            CHECK(m.precision == curve[i].precision);
            CHECK(m.recall == curve[i].recall);
        }
        const auto roc = roc_curve(s);
        for (std::size_t i = 1; i < roc.size(); ++i) {
            CHECK(roc[i].false_positive_rate >= roc[i - 1].false_positive_rate);
            CHECK(roc[i].true_positive_rate >= roc[i - 1].true_positive_rate);
        }
    }
}

TEST_CASE("threshold policies") {
    Rng rng(31);
    const auto r = random_set(rng, 80, false);
    const auto curve = precision_recall_curve(sample_of(r.scores, r.bot));
    CHECK(select_threshold(curve, ThresholdPolicy::fixed(0.5)) == 0.5);

    double best_f1 = -1, best_t = 0;
    for (const auto& p : curve) {
        if (p.f1() > best_f1 || (p.f1() == best_f1 && p.threshold < best_t)) {
            best_f1 = p.f1();
            best_t = p.threshold;
        }
    }
    CHECK(select_threshold(curve, ThresholdPolicy::max_f1()) == best_t);

    double lowest = 2;
    for (const auto& p : curve) {
        if (p.precision >= 0.8) lowest = std::min(lowest, p.threshold);
    }
    if (lowest <= 1) {
        CHECK(select_threshold(curve, ThresholdPolicy::precision_floor(0.8)) == lowest);
    }
    double highest = -1;
    for (const auto& p : curve) {
        if (p.recall >= 0.9) highest = std::max(highest, p.threshold);
    }
    CHECK(select_threshold(curve, ThresholdPolicy::recall_floor(0.9)) == highest);

    CHECK_THROWS(select_threshold(curve, ThresholdPolicy::precision_floor(1.1)));
    const auto noisy = precision_recall_curve(sample_of({0.9, 0.8, 0.1}, {false, true, true}));
    try {
        select_threshold(noisy, ThresholdPolicy::precision_floor(0.99));
        FAIL("expected a policy error");
    } catch (const PolicyError& e) {
        REQUIRE(e.best_attainable());
        CHECK(*e.best_attainable() == doctest::Approx(2.0 / 3.0));
    }
    CHECK_THROWS(select_threshold(std::vector<CurvePoint>{}, ThresholdPolicy::max_f1()));
}

TEST_CASE("policy text round-trips") {
    for (const char* text : {"max_f1", "precision>=0.9", "recall>=0.8", "fixed:0.5"}) {
        CHECK(ThresholdPolicy::parse(text).to_string() == text);
    }
    CHECK_THROWS(ThresholdPolicy::parse("best"));
}

TEST_CASE("score density") {
    const std::vector<double> half(50, 0.5);
    const std::vector<double> markers{0.5, 0.65};
    const auto d = score_density(half, markers);
    std::size_t nonzero = 0;
    for (auto c : d.counts) nonzero += c > 0;
    CHECK(nonzero == 1);
    CHECK(d.markers.size() == 2);
    CHECK(d.markers[0].bin == 50);
    CHECK(d.markers[1].bin == 65);
    const std::vector<double> edge{1.0, 0.0};
    const auto e = score_density(edge, {}, 10);
    CHECK(e.counts.back() == 1);
    CHECK(e.counts.front() == 1);
}

TEST_CASE("uniform scores pass a chi-square goodness-of-fit test") {
    Rng rng(77);
    std::vector<double> scores(100000);
    for (auto& s : scores) s = rng.uniform();
    const auto d = score_density(scores, {}, 100);
    std::uint64_t total = 0;
    double chi2 = 0, integral = 0;
    const double expected = static_cast<double>(scores.size()) / 100.0;
    for (std::size_t i = 0; i < d.counts.size(); ++i) {
        total += d.counts[i];
        chi2 += std::pow(static_cast<double>(d.counts[i]) - expected, 2) / expected;
        integral += d.density[i] / 100.0;
    }
    CHECK(total == scores.size());
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-12));
    const boost::math::chi_squared dist(99);
    CHECK(chi2 < boost::math::quantile(dist, 1 - 0.001));
}

TEST_CASE("creation histogram hand tally") {
    BotScoreTable t;
    t.scores = {{"a", 0.9}, {"b", 0.2}};
    const std::vector<ingest::AccountProfile> ps{profile("a", "2020-02-03T10:00:00Z"),
                                                 profile("b", "2020-02-03T11:00:00Z"),
                                                 profile("c", "2020-02-03T12:00:00Z"),
                                                 profile("d", "2020-02-04T12:00:00Z")};
    const auto h = creation_date_histogram(ps, t, 0.5);
    REQUIRE(h.size() == 2);
    const auto& first = h.begin()->second;
    CHECK(first.count == 3);
    CHECK(first.scored == 2);
    CHECK(*first.bot_proportion == 0.5);
    CHECK_FALSE(std::next(h.begin())->second.bot_proportion);
}

TEST_CASE("filter count equals a set comprehension") {
    CHECK(filter_count({}, BotScoreTable{}, *parse_day("2020-02-01"), 0.5) == 0);
    Rng rng(3);
    BotScoreTable t;
    std::vector<ingest::AccountProfile> ps;
    const Day since = *parse_day("2020-02-01");
    for (int i = 0; i < 2000; ++i) {
        ingest::AccountProfile p;
        p.account_id = testsupport::node_name(i);
        p.created_at = Timestamp{std::chrono::seconds(1575158400 + static_cast<long>(rng.below(120 * 86400)))};
        if (rng.bernoulli(0.7)) t.scores[p.account_id] = static_cast<double>(rng.below(21)) / 20.0;
        ps.push_back(p);
    }
    for (double thr : {0.0, 0.5, 0.75}) {
        std::uint64_t expected = 0, scored_since = 0;
        for (const auto& p : ps) {
            const auto s = t.find(p.account_id);
            if (day_of(p.created_at) >= since && s) {
                ++scored_since;
                if (*s > thr) ++expected;
            }
        }
        CHECK(filter_count(ps, t, since, thr) == expected);
        if (thr == 0.0) CHECK(expected <= scored_since);
    }
    std::uint64_t sum = 0;
    for (const auto& [day, bin] : creation_date_histogram(ps, t, 0.5)) sum += bin.count;
    CHECK(sum == ps.size());
}
