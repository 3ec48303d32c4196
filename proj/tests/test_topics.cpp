#include "support.hpp"

#include "streamlens/synth.hpp"
#include "streamlens/text.hpp"
#include "streamlens/topics.hpp"

#include <doctest.h>

using namespace streamlens;
using namespace streamlens::topics;

namespace {

// Two groups of documents over disjoint vocabularies "a00".."a19" and "b00".."b19".
std::vector<HashtagDocument> planted_docs(std::uint64_t seed, std::size_t per_group = 40, std::size_t length = 40) {
    Rng rng(seed);
    std::vector<HashtagDocument> docs;
    for (std::size_t g = 0; g < 2; ++g) {
        for (std::size_t d = 0; d < per_group; ++d) {
            HashtagDocument doc;
            doc.account_id = (g == 0 ? "A" : "B") + testsupport::node_name(d);
            for (std::size_t i = 0; i < length; ++i) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "%c%02d", g == 0 ? 'a' : 'b', static_cast<int>(rng.below(20)));
                ++doc.tokens[buf];
            }
            docs.push_back(doc);
        }
    }
    std::sort(docs.begin(), docs.end(), [](const auto& x, const auto& y) { return x.account_id < y.account_id; });
    return docs;
}

void check_stochastic(const TopicModel& m) {
    for (std::size_t t = 0; t < m.k; ++t) {
        double sum = 0;
        for (std::size_t w = 0; w < m.vocab_size(); ++w) {
            CHECK(m.phi_at(t, w) >= 0);
            sum += m.phi_at(t, w);
        }
        CHECK(std::abs(sum - 1) < 1e-9);
    }
    for (std::size_t d = 0; d < m.doc_count(); ++d) {
        double sum = 0;
        for (std::size_t t = 0; t < m.k; ++t) {
            CHECK(m.theta_at(d, t) >= 0);
            sum += m.theta_at(d, t);
        }
        CHECK(std::abs(sum - 1) < 1e-9);
    }
}

double top_word_purity(const TopicModel& m) {
    double worst = 1;
    for (std::size_t t = 0; t < m.k; ++t) {
        const auto words = m.top_words(t, 10);
        std::size_t a = 0;
        for (const auto& [w, p] : words) a += w[0] == 'a';
        worst = std::min(worst, static_cast<double>(std::max(a, words.size() - a)) / static_cast<double>(words.size()));
    }
    return worst;
}

double assignment_purity(const TopicModel& m) {
    std::map<std::size_t, std::map<char, std::size_t>> table;
    for (std::size_t d = 0; d < m.doc_count(); ++d) ++table[m.dominant_topic(d)][m.accounts[d][0]];
    std::size_t majority = 0;
    for (const auto& [topic, counts] : table) {
        std::size_t best = 0;
        for (const auto& [g, c] : counts) best = std::max(best, c);
        majority += best;
    }
    return static_cast<double>(majority) / static_cast<double>(m.doc_count());
}

ingest::TweetRecord tweet(std::string author, std::vector<std::string> tags, std::string lang = "en") {
    static int next = 0;
    ingest::TweetRecord r;
    r.tweet_id = std::to_string(++next);
    r.author_id = std::move(author);
    r.hashtags = std::move(tags);
    r.lang = std::move(lang);
    return r;
}

}  // namespace

TEST_CASE("hashtag documents") {
    const std::vector<ingest::TweetRecord> rs{tweet("u1", {"a", "a"}), tweet("u1", {"b"}), tweet("u2", {}),
                                              tweet("u3", {"c"}, "es")};
    const auto docs = build_hashtag_documents(rs);
    REQUIRE(docs.size() == 2);
    CHECK(docs[0].account_id == "u1");
    CHECK(docs[0].tokens == std::map<std::string, std::uint64_t>{{"a", 2}, {"b", 1}});
    CHECK(docs[0].length() == 3);
    CHECK(build_hashtag_documents(rs, "en").size() == 1);
}

TEST_CASE("hashtag documents on a synthetic corpus equal a group-by") {
    synth::SynthConfig cfg;
    cfg.tweets = 5000;
    cfg.users = 300;
    const auto gen = synth::generate(cfg);
    const auto c = ingest::parse_lines(gen.lines);
    std::map<std::string, std::map<std::string, std::uint64_t>> truth;
    for (const auto& t : gen.tweets) {
        if (t.lang != "en") continue;
        for (const auto& h : t.hashtags) ++truth[gen.users[t.author].account_id][text::fold_case(h)];
    }
    const auto docs = build_hashtag_documents(c.records, "en");
    REQUIRE(docs.size() == truth.size());
    for (const auto& d : docs) CHECK(d.tokens == truth[d.account_id]);
}

TEST_CASE("k = 1 gives unit theta and smoothed corpus frequencies") {
    const auto docs = planted_docs(1, 10, 20);
    LdaOptions o;
    o.k = 1;
    o.iterations = 20;
    const auto m = lda_fit(docs, o);
    std::map<std::string, double> freq;
    double total = 0;
    for (const auto& d : docs) {
        for (const auto& [w, c] : d.tokens) {
            freq[w] += static_cast<double>(c);
            total += static_cast<double>(c);
        }
    }
    for (std::size_t d = 0; d < m.doc_count(); ++d) CHECK(m.theta_at(d, 0) == 1.0);
    const double v = static_cast<double>(m.vocab_size());
    for (std::size_t w = 0; w < m.vocab_size(); ++w) {
        CHECK(std::abs(m.phi_at(0, w) - (freq[m.vocab[w]] + o.beta) / (total + v * o.beta)) < 1e-12);
    }
    const auto report = topic_report(m, nullptr, 0.5);
    REQUIRE(report.size() == 1);
    CHECK(report[0].accounts == docs.size());
}

TEST_CASE("planted two-vocabulary corpus separates over five seeds") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        LdaOptions o;
        o.k = 2;
        o.iterations = 500;
        o.seed = seed;
        const auto m = lda_fit(planted_docs(100 + seed), o);
        check_stochastic(m);
        CHECK(top_word_purity(m) >= 0.9);
        CHECK(assignment_purity(m) >= 0.9);
    }
}

TEST_CASE("fits are seed-deterministic") {
    const auto docs = planted_docs(7, 20, 30);
    LdaOptions o;
    o.k = 3;
    o.iterations = 100;
    o.seed = 42;
    const auto a = lda_fit(docs, o);
    const auto b = lda_fit(docs, o);
    CHECK(a == b);
    o.seed = 43;
    CHECK_FALSE(lda_fit(docs, o).phi == a.phi);
    CHECK(a.alpha == doctest::Approx(50.0 / 3.0));
}

TEST_CASE("invalid fits") {
    LdaOptions o;
    CHECK_THROWS_AS(lda_fit(std::vector<HashtagDocument>{}, o), InputError);
    const auto docs = planted_docs(1, 2, 3);
    o.k = 0;
    CHECK_THROWS_AS(lda_fit(docs, o), InputError);
    o.k = 2;
    o.beta = 0;
    CHECK_THROWS_AS(lda_fit(docs, o), InputError);
    o.beta = 0.01;
    o.k = 100;
    o.iterations = 5;
    const auto m = lda_fit(docs, o);
    CHECK_FALSE(m.warnings.empty());
    check_stochastic(m);
}

TEST_CASE("topic report bot fractions and captions") {
    LdaOptions o;
    o.k = 2;
    o.iterations = 200;
    const auto m = lda_fit(planted_docs(3), o);
    BotScoreTable scores;
    for (const auto& a : m.accounts) scores.scores[a] = a[0] == 'A' ? 0.9 : 0.1;
    const auto report = topic_report(m, &scores, 0.5, 5);
    REQUIRE(report.size() == 2);
    std::uint64_t total = 0;
    for (const auto& row : report) {
        total += row.accounts;
        CHECK(row.top_words.size() == 5);
        REQUIRE(row.bot_fraction);
        CHECK((*row.bot_fraction >= 0.9 || *row.bot_fraction <= 0.1));
    }
    CHECK(total == m.doc_count());
    TopicRow row;
    row.topic = 0;
    row.bot_fraction = 0.408;
    CHECK(row.caption() == "Topic One (40.8% bot)");
    row.topic = 5;
    row.bot_fraction.reset();
    CHECK(row.caption().rfind("Topic Six", 0) == 0);
}

TEST_CASE("model export round-trips") {
    LdaOptions o;
    o.k = 2;
    o.iterations = 30;
    const auto m = lda_fit(planted_docs(4, 5, 10), o);
    testsupport::TempDir dir;
    export_model(m, dir.path());
    const auto back = import_model(dir.path());
    CHECK(back.vocab == m.vocab);
    CHECK(back.accounts == m.accounts);
    CHECK(back.k == m.k);
    REQUIRE(back.phi.size() == m.phi.size());
    for (std::size_t i = 0; i < m.phi.size(); ++i) CHECK(back.phi[i] == m.phi[i]);
    for (std::size_t i = 0; i < m.theta.size(); ++i) CHECK(back.theta[i] == m.theta[i]);
}
