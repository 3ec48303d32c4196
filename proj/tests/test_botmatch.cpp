#include "support.hpp"

#include "streamlens/botmatch.hpp"

#include <doctest.h>

#include <sstream>

using namespace streamlens;
using namespace streamlens::botmatch;

namespace {

struct Dense {
    std::vector<std::vector<double>> rows;
};

// Sparse random DTM with its dense mirror for the oracles.
std::pair<DocTermMatrix, Dense> random_dtm(Rng& rng, std::size_t n, std::size_t v, double fill) {
    std::vector<std::string> accounts, vocab;
    for (std::size_t i = 0; i < n; ++i) accounts.push_back(testsupport::node_name(i));
    for (std::size_t j = 0; j < v; ++j) vocab.push_back("w" + std::to_string(j));
    std::vector<std::vector<DocTermMatrix::Cell>> rows(n);
    Dense dense{std::vector<std::vector<double>>(n, std::vector<double>(v, 0.0))};
    for (std::size_t i = 0; i < n; ++i) {
        // Some rows stay empty to exercise the degenerate case.
        if (i % 50 == 49) continue;
        const auto k = static_cast<std::size_t>(fill * static_cast<double>(v));
        for (auto j : rng.sample_indices(v, k)) {
            const double value = static_cast<double>(1 + rng.below(5));
            rows[i].emplace_back(static_cast<std::uint32_t>(j), value);
            dense.rows[i][j] = value;
        }
    }
    return {make_dtm(accounts, vocab, rows), dense};
}

std::vector<Match> exhaustive(const Dense& d, const DocTermMatrix& dtm, std::size_t seed, std::size_t top_n) {
    std::vector<Match> all;
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
        if (i != seed) all.push_back({dtm.accounts[i], testsupport::cosine_oracle(d.rows[seed], d.rows[i])});
    }
    std::sort(all.begin(), all.end(), [](const Match& a, const Match& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.account_id < b.account_id;
    });
    all.resize(std::min(all.size(), top_n));
    return all;
}

// Cluster A uses columns [0,100), cluster B [100,200), everyone draws a little from [200,210).
DocTermMatrix two_clusters(std::uint64_t seed, std::size_t per_cluster = 50) {
    Rng rng(seed);
    std::vector<std::string> accounts;
    std::vector<std::vector<DocTermMatrix::Cell>> rows;
    std::vector<std::string> vocab;
    for (int j = 0; j < 210; ++j) vocab.push_back("t" + std::to_string(j));
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < per_cluster; ++i) {
            accounts.push_back(std::string(c == 0 ? "A" : "B") + testsupport::node_name(i));
            std::vector<DocTermMatrix::Cell> row;
            for (auto j : rng.sample_indices(100, 30)) row.emplace_back(static_cast<std::uint32_t>(c * 100 + j), 1.0 + rng.below(3));
            for (auto j : rng.sample_indices(10, 2)) row.emplace_back(static_cast<std::uint32_t>(200 + j), 1.0);
            rows.push_back(row);
        }
    }
    return make_dtm(accounts, vocab, rows);
}

ingest::TweetRecord tweet(std::string author, std::string text, std::string lang = "en") {
    static int next = 0;
    ingest::TweetRecord r;
    r.tweet_id = std::to_string(++next);
    r.author_id = author;
    r.screen_name = "Name_" + author;
    r.text = std::move(text);
    r.lang = std::move(lang);
    return r;
}

std::vector<std::string> split_words(const std::string& s) {
    std::istringstream in(s);
    std::vector<std::string> out;
    for (std::string w; in >> w;) out.push_back(w);
    return out;
}

}  // namespace

TEST_CASE("document-term matrix from text matches a tokenize-and-count oracle") {
    const std::vector<ingest::TweetRecord> rs{tweet("a", "red blue red https://t.co/x"), tweet("b", "blue green"),
                                              tweet("a", "green red"), tweet("c", "ONLY rare words", "fr")};
    std::map<std::string, std::map<std::string, double>> truth;
    for (const auto& r : rs) {
        for (const auto& w : split_words(r.text)) {
            if (w.rfind("https://", 0) == 0) continue;
            std::string lower;
            for (char ch : w) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
            truth[r.author_id][lower] += 1;
        }
    }
    const auto dtm = build_dtm(rs, 100);
    REQUIRE(dtm.size() == 3);
    CHECK(dtm.vocab.size() == 6);
    CHECK(dtm.vocab[0] == "red");
    for (std::size_t i = 0; i < dtm.size(); ++i) {
        std::map<std::string, double> got;
        for (const auto& [col, value] : dtm.rows[i]) got[dtm.vocab[col]] = value;
        CHECK(got == truth[dtm.accounts[i]]);
    }
    const auto small = build_dtm(rs, 2);
    CHECK(small.vocab == std::vector<std::string>{"red", "blue"});
    CHECK(small.zero_row(*small.find("c")));
    CHECK(build_dtm(rs, 100, std::string("en")).size() == 2);
    CHECK(dtm.resolve("name_A") == *dtm.find("a"));
    CHECK_THROWS_AS(dtm.resolve("nobody"), NotFoundError);
}

TEST_CASE("cosine basics") {
    const auto dtm = make_dtm({"a", "b", "c", "z"}, {"x", "y"}, {{{0, 2.0}}, {{0, 5.0}}, {{1, 1.0}}, {}});
    CHECK(cosine_similarity(dtm, "a", "b").value == doctest::Approx(1.0));
    CHECK(cosine_similarity(dtm, "a", "c").value == 0.0);
    const auto zero = cosine_similarity(dtm, "a", "z");
    CHECK(zero.value == 0.0);
    CHECK(zero.degenerate);
    CHECK_THROWS_AS(cosine_similarity(dtm, "a", "nobody"), NotFoundError);
}

TEST_CASE("cosine matches a dense oracle on a 500 x 4000 matrix") {
    Rng rng(500);
    const auto [dtm, dense] = random_dtm(rng, 500, 4000, 0.01);
    for (std::size_t i = 0; i < dtm.size(); ++i) {
        for (std::size_t j = i; j < dtm.size(); j += 7) {
            const double got = cosine_similarity(dtm, i, j).value;
            CHECK(std::abs(got - testsupport::cosine_oracle(dense.rows[i], dense.rows[j])) < 1e-12);
            CHECK(got == cosine_similarity(dtm, j, i).value);
        }
        if (!dtm.zero_row(i)) CHECK(std::abs(cosine_similarity(dtm, i, i).value - 1) < 1e-12);
    }
}

TEST_CASE("query equals an exhaustive scan and survives scaling") {
    Rng rng(8);
    // Coarse values create exact ties, exercising the id tiebreak.
    const auto [dtm, dense] = random_dtm(rng, 200, 30, 0.1);
    const auto scaled = dtm.scaled(3.5);
    for (std::size_t seed = 0; seed < 200; seed += 13) {
        const auto got = bot_match_query(dtm, dtm.accounts[seed], 20);
        const auto want = exhaustive(dense, dtm, seed, 20);
        REQUIRE(got.size() == want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            CHECK(got[i].account_id == want[i].account_id);
            CHECK(std::abs(got[i].similarity - want[i].similarity) < 1e-12);
        }
        const auto s = bot_match_query(scaled, dtm.accounts[seed], 20);
        for (std::size_t i = 0; i < got.size(); ++i) CHECK(s[i].account_id == got[i].account_id);
    }
    CHECK(bot_match_query(dtm, dtm.accounts[0], 10000).size() == 199);
    CHECK_THROWS_AS(bot_match_query(dtm, "nobody", 5), NotFoundError);
}

TEST_CASE("an exact duplicate ranks first") {
    const auto dtm = make_dtm({"a", "b", "c"}, {"x", "y"}, {{{0, 1.0}, {1, 2.0}}, {{0, 2.0}}, {{0, 1.0}, {1, 2.0}}});
    const auto m = bot_match_query(dtm, "a", 2);
    CHECK(m[0].account_id == "c");
    CHECK(m[0].similarity == doctest::Approx(1.0));
}

TEST_CASE("session invariants under random actions") {
    Rng rng(4);
    const auto [dtm, dense] = random_dtm(rng, 150, 40, 0.15);
    const std::vector<std::string> seeds{dtm.accounts[0], dtm.accounts[1]};
    ExpansionSession s(dtm, seeds);
    for (int round = 0; round < 30; ++round) {
        s = expand(s, dtm, {ExpansionAction::Kind::Step, {}, 10});
        CHECK(s.round() == round + 1);
        for (const auto& m : s.frontier()) {
            CHECK_FALSE(s.seeds().contains(m.account_id));
            CHECK_FALSE(s.accepted().contains(m.account_id));
            CHECK_FALSE(s.rejected().contains(m.account_id));
            CHECK(m.similarity > 0);
        }
        std::vector<std::string> take, drop;
        for (const auto& m : s.frontier()) (rng.bernoulli(0.5) ? take : drop).push_back(m.account_id);
        s = expand(s, dtm, {ExpansionAction::Kind::Accept, take, 0});
        s = expand(s, dtm, {ExpansionAction::Kind::Reject, drop, 0});
        for (const auto& a : s.accepted()) CHECK_FALSE(s.rejected().contains(a));
    }
    const std::vector<std::string> outsider{dtm.accounts[0]};
    const auto before = s.accepted();
    CHECK_THROWS_AS(s.accept(outsider), InputError);
    CHECK(s.accepted() == before);
}

TEST_CASE("step frontier equals max-similarity oracle") {
    Rng rng(19);
    const auto [dtm, dense] = random_dtm(rng, 80, 25, 0.2);
    ExpansionSession s(dtm, std::vector<std::string>{dtm.accounts[3]});
    s.step(dtm, 5);
    std::vector<std::string> first;
    for (const auto& m : s.frontier()) first.push_back(m.account_id);
    s.accept(std::span<const std::string>(first.data(), 2));
    s.reject(std::span<const std::string>(first.data() + 2, 1));
    s.step(dtm, 8);
    std::set<std::string> members = s.seeds();
    members.insert(s.accepted().begin(), s.accepted().end());
    std::vector<Match> want;
    for (std::size_t i = 0; i < dtm.size(); ++i) {
        const auto& id = dtm.accounts[i];
        if (members.contains(id) || s.rejected().contains(id)) continue;
        double best = 0;
        for (const auto& m : members) best = std::max(best, testsupport::cosine_oracle(dense.rows[*dtm.find(m)], dense.rows[i]));
        if (best > 0) want.push_back({id, best});
    }
    std::sort(want.begin(), want.end(), [](const Match& a, const Match& b) {
        if (std::abs(a.similarity - b.similarity) > 1e-12) return a.similarity > b.similarity;
        return a.account_id < b.account_id;
    });
    want.resize(std::min<std::size_t>(8, want.size()));
    REQUIRE(s.frontier().size() == want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
        CHECK(s.frontier()[i].account_id == want[i].account_id);
        CHECK(std::abs(s.frontier()[i].similarity - want[i].similarity) < 1e-12);
    }
}

TEST_CASE("accepting the whole frontier keeps the next frontier disjoint") {
    const auto dtm = two_clusters(1);
    ExpansionSession s(dtm, std::vector<std::string>{"An0000"});
    s.step(dtm, 10);
    std::vector<std::string> all;
    for (const auto& m : s.frontier()) all.push_back(m.account_id);
    s.accept(all);
    s.step(dtm, 10);
    for (const auto& m : s.frontier()) CHECK_FALSE(s.accepted().contains(m.account_id));
}

TEST_CASE("rejecting everything empties the frontier") {
    const auto dtm = two_clusters(2, 20);
    ExpansionSession s(dtm, std::vector<std::string>{"An0000"});
    int rounds = 0;
    for (s.step(dtm, 7); !s.frontier().empty(); s.step(dtm, 7)) {
        std::vector<std::string> all;
        for (const auto& m : s.frontier()) all.push_back(m.account_id);
        s.reject(all);
        REQUIRE(++rounds < 100);
    }
    std::size_t reachable = 0;
    for (std::size_t i = 1; i < dtm.size(); ++i) reachable += cosine_similarity(dtm, 0, i).value > 0;
    CHECK(s.rejected().size() == reachable);
}

TEST_CASE("planted clusters: greedy acceptance recovers the seed cluster first") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto dtm = two_clusters(seed);
        ExpansionSession s(dtm, std::vector<std::string>{"An0000"});
        bool crossed = false;
        while (!crossed) {
            s.step(dtm, 5);
            if (s.frontier().empty()) break;
            std::vector<std::string> take;
            for (const auto& m : s.frontier()) {
                if (m.account_id[0] == 'B') {
                    crossed = true;
                    break;
                }
                take.push_back(m.account_id);
            }
            s.accept(take);
        }
        const double recovered = static_cast<double>(s.accepted().size() + 1) / 50.0;
        CHECK(recovered >= 0.9);
    }
}

TEST_CASE("session restore reproduces the visible state") {
    const auto dtm = two_clusters(3);
    ExpansionSession s(dtm, std::vector<std::string>{"An0001"});
    s.step(dtm, 6);
    const std::vector<std::string> take{s.frontier()[0].account_id};
    s.accept(take);
    auto r = ExpansionSession::restore(s.seeds(), s.accepted(), s.rejected(), s.frontier(), s.round());
    CHECK(r.frontier() == s.frontier());
    r.step(dtm, 6);
    s.step(dtm, 6);
    CHECK(r.frontier() == s.frontier());
    CHECK(r.round() == s.round());
}

TEST_CASE("matrix export round-trips") {
    Rng rng(2);
    const auto [dtm, dense] = random_dtm(rng, 60, 50, 0.1);
    testsupport::TempDir dir;
    export_dtm(dtm, dir.path());
    const auto back = import_dtm(dir.path());
    CHECK(back.accounts == dtm.accounts);
    CHECK(back.vocab == dtm.vocab);
    CHECK(back.rows == dtm.rows);
    CHECK(back.norms == dtm.norms);
}
