#include "support.hpp"

#include "streamlens/api.hpp"
#include "streamlens/botmatch.hpp"
#include "streamlens/config.hpp"
#include "streamlens/snapshot.hpp"
#include "streamlens/synth.hpp"

#include <doctest.h>
#include <httplib.h>
#include <json.hpp>

#include <thread>

using namespace streamlens;
using namespace streamlens::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Built {
    testsupport::TempDir dir;
    synth::GeneratedCorpus gen;
    synth::BundlePaths paths;
    AnalysisConfig config;
    BuildResult result;
};

AnalysisConfig bundle_config(const synth::BundlePaths& paths) {
    auto cfg = AnalysisConfig::load(paths.config);
    cfg.network.k_core_k = 2;
    cfg.network.export_full_graph = true;
    cfg.topics.iterations = 50;
    return cfg;
}

Built& built() {
    static const auto b = [] {
        auto x = std::make_unique<Built>();
        synth::SynthConfig sc;
        sc.tweets = 6000;
        sc.users = 400;
        sc.seed = 3;
        x->gen = synth::generate(sc);
        x->paths = synth::write_bundle(x->gen, x->dir / "bundle", {.shards = 2});
        x->config = bundle_config(x->paths);
        x->result = snapshot_build(x->config);
        return x;
    }();
    return *b;
}

fs::path store_of(const AnalysisConfig& cfg) { return cfg.resolve(cfg.snapshot.store); }

struct Reply {
    int status;
    json body;
};

Reply call(ApiService& api, const std::string& method, const std::string& path,
           std::multimap<std::string, std::string> query = {}, const std::string& body = "") {
    ApiRequest req;
    req.method = method;
    req.path = path;
    req.query = std::move(query);
    req.body = body;
    const auto res = api.handle(req);
    return {res.status, json::parse(res.body)};
}

std::string snap_path(const std::string& rest) { return "/api/snapshots/" + built().result.snapshot_id + rest; }

}  // namespace

TEST_CASE("config defaults") {
    const auto cfg = AnalysisConfig::parse(R"({"corpus": {"input": "x"}})");
    CHECK(cfg.network.k_core_k == 100);
    CHECK(cfg.network.edge_sample_m == 1000000);
    CHECK(cfg.botmatch.vocabulary == 4000);
    CHECK(cfg.bots.label_sample_size == 200);
    CHECK(cfg.audit.sample_size == 1000000);
    CHECK(cfg.audit.confidence == 0.95);
    CHECK(cfg.topics.k == 5);
    CHECK(AnalysisConfig::parse(cfg.canonical_json()).digest() == cfg.digest());
    CHECK(cfg.digest().size() == 64);
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("config errors name the offending field") {
    auto field_of = [](std::string text) {
        if (text.front() == '{' && text.size() > 2 && text[1] == '"') text = R"({"corpus": {"input": "c"}, )" + text.substr(1);
        try {
            AnalysisConfig::parse(text);
        } catch (const ConfigError& e) {
            return e.field();
        }
        return std::string("<none>");
    };
    CHECK(field_of(R"({"network": {"k_core_k": -1}})") == "network.k_core_k");
    CHECK(field_of(R"({"network": {"kcore": 3}})") == "network.kcore");
    CHECK(field_of(R"({"network": {"kinds": ["follow"]}})").rfind("network.kinds", 0) == 0);
    CHECK(field_of(R"({"bots": {"detectors": [{"name": "x"}]}})") == "bots.detectors[0].scores");
    CHECK(field_of(R"({"bots": {"detectors": [{"name": "x", "scores": "s.csv", "threshold": 2}]}})") ==
          "bots.detectors[0].threshold");
    CHECK(field_of("{not json") == "<root>");
    CHECK(field_of("{}") == "corpus.input");
    CHECK(field_of(R"({"topics": {"k": "five"}})") == "topics.k");
}

TEST_CASE("snapshot build is deterministic and reusable") {
    auto& b = built();
    CHECK(b.result.snapshot_id.size() == 64);
    const auto again = snapshot_build(b.config);
    CHECK(again.snapshot_id == b.result.snapshot_id);
    CHECK(again.reused);

    auto elsewhere = b.config;
    elsewhere.snapshot.store = b.dir / "other-store";
    elsewhere.corpus.threads = 1;
    const auto fresh = snapshot_build(elsewhere);
    CHECK_FALSE(fresh.reused);
    CHECK(fresh.snapshot_id == b.result.snapshot_id);
    for (const auto& entry : fs::recursive_directory_iterator(b.result.dir)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), b.result.dir);
        CHECK_MESSAGE(io::read_file(entry.path()) == io::read_file(fresh.dir / rel), rel.string());
    }
    verify_snapshot(b.result.dir);

    auto changed = b.config;
    changed.network.louvain_seed = 99;
    changed.snapshot.store = b.dir / "changed-store";
    CHECK(snapshot_build(changed).snapshot_id != b.result.snapshot_id);
}

TEST_CASE("every section of the bundle build is present") {
    for (const auto& [name, status] : built().result.sections) CHECK_MESSAGE(status.present, (name + ": " + status.reason));
    const auto info = read_snapshot_info(built().result.dir);
    CHECK(info.snapshot_id == built().result.snapshot_id);
    CHECK(info.config_digest == built().config.digest());
}

TEST_CASE("section values agree with direct module calls") {
    auto& b = built();
    const auto files = io::expand_inputs(b.config.resolve("corpus").string());
    ingest::LoadOptions lo;
    lo.keywords = ingest::load_keywords(b.paths.keywords);
    const auto corpus = ingest::load_corpus(files, lo);
    const auto stats = ingest::parse_stats_report(io::read_file(b.result.dir / "stats/stats.txt"));
    const auto direct = ingest::stream_summary(corpus.records, b.config.corpus.daily_cap);
    CHECK(stats.total_tweets == direct.total_tweets);
    CHECK(stats.retweet_tweets == direct.retweet_tweets);
    CHECK(io::read_file(b.result.dir / "stats/daily.csv") == ingest::format_daily_csv(direct.daily_counts));

    const auto graph = network::build_graph(corpus.records, InteractionKind::Mention);
    const auto saved = network::load_edge_csv(InteractionKind::Mention, b.result.dir / "network/mention/graph_edges.csv",
                                              b.result.dir / "network/mention/graph_nodes.csv");
    CHECK(saved == graph);
    const auto core = network::k_core(graph, b.config.network.k_core_k);
    const auto saved_core = network::load_edge_csv(InteractionKind::Mention, b.result.dir / "network/mention/core_edges.csv",
                                                   b.result.dir / "network/mention/core_nodes.csv");
    CHECK(saved_core == core);

    const auto dtm = botmatch::import_dtm(b.result.dir / "botmatch");
    const auto rebuilt = botmatch::build_dtm(corpus.records, b.config.botmatch.vocabulary, b.config.botmatch.lang);
    CHECK(dtm.accounts == rebuilt.accounts);
    CHECK(dtm.rows == rebuilt.rows);
}

TEST_CASE("tampering is detected") {
    auto& b = built();
    const auto copy = b.dir / "tampered";
    fs::copy(b.result.dir, copy, fs::copy_options::recursive);
    verify_snapshot(copy);
    io::write_file_atomic(copy / "stats/stats.txt", io::read_file(copy / "stats/stats.txt") + "x=1\n");
    CHECK_THROWS_AS(verify_snapshot(copy), InputError);
}

TEST_CASE("a minimal configuration marks optional sections absent") {
    auto& b = built();
    const auto cfg = AnalysisConfig::parse(
        json{{"corpus", {{"input", (b.paths.corpus_dir).string()}}}, {"snapshot", {{"store", (b.dir / "minimal").string()}}},
             {"topics", {{"iterations", 20}}}}
            .dump());
    const auto r = snapshot_build(cfg);
    CHECK(r.sections.at("stats").present);
    CHECK(r.sections.at("network.mention").present);
    CHECK_FALSE(r.sections.at("characterize.bias").present);
    CHECK_FALSE(r.sections.at("audit").present);
    CHECK_FALSE(r.sections.at("calibration").present);
    CHECK_FALSE(r.sections.at("characterize.bias").reason.empty());

    ApiService api(store_of(cfg));
    const auto bias = call(api, "GET", "/api/snapshots/" + r.snapshot_id + "/characterize/bias");
    CHECK(bias.status == 200);
    CHECK(bias.body["data"]["status"] == "absent");
    CHECK(bias.body["data"]["reason"].is_string());
    const auto unreadable = AnalysisConfig::parse(
        json{{"corpus", {{"input", "/nonexistent/dir"}}}, {"snapshot", {{"store", (b.dir / "never").string()}}}}.dump());
    CHECK_THROWS(snapshot_build(unreadable));
}

TEST_CASE("api: listing, stats fields and provenance") {
    auto& b = built();
    ApiService api(store_of(b.config));
    const auto list = call(api, "GET", "/api/snapshots");
    REQUIRE(list.status == 200);
    CHECK(list.body["data"]["latest"] == b.result.snapshot_id);
    CHECK(list.body["data"]["snapshots"].size() == 1);

    const auto stats = call(api, "GET", snap_path("/stats"));
    REQUIRE(stats.status == 200);
    CHECK(stats.body["snapshot_id"] == b.result.snapshot_id);
    CHECK(stats.body["config_digest"] == b.config.digest());
    const auto& fields = stats.body["data"]["fields"];
    for (const char* f : {"total_tweets", "unique_users", "original_tweets", "retweet_tweets", "reply_tweets",
                          "quote_tweets", "unique_hashtags", "images", "url_occurrences", "verified_tweets",
                          "bot_accounts", "state_media_tweets", "state_media_amplifications"}) {
        CHECK_MESSAGE(fields.contains(f), f);
    }
    CHECK(fields["original_tweets"].get<std::uint64_t>() + fields["retweet_tweets"].get<std::uint64_t>() +
              fields["reply_tweets"].get<std::uint64_t>() + fields["quote_tweets"].get<std::uint64_t>() ==
          fields["total_tweets"].get<std::uint64_t>());
    CHECK(call(api, "GET", "/api/snapshots/latest/stats").body["data"] == stats.body["data"]);

    for (const char* p : {"/timeline", "/influencers", "/communities", "/calibration", "/audit", "/topics", "/network",
                          "/characterize/marketshare", "/characterize/tally", "/characterize/bias",
                          "/characterize/abusive", "/characterize/flags", "/characterize/statemedia"}) {
        const auto r = call(api, "GET", snap_path(p));
        CHECK_MESSAGE(r.status == 200, p);
        CHECK(r.body["snapshot_id"] == b.result.snapshot_id);
    }
    for (const char* m : {"tweets", "abusive", "creation"}) {
        CHECK(call(api, "GET", snap_path("/timeline"), {{"metric", m}}).status == 200);
    }
    CHECK(call(api, "GET", snap_path("/timeline"), {{"metric", "weather"}}).status == 400);
}

TEST_CASE("api: error envelopes") {
    ApiService api(store_of(built().config));
    const auto missing = call(api, "GET", "/api/snapshots/deadbeef/stats");
    CHECK(missing.status == 404);
    CHECK(missing.body["error"]["code"] == "not_found");
    CHECK(call(api, "GET", "/api/nothing").status == 404);
    CHECK(call(api, "GET", snap_path("/network/ego"), {{"account", "nobody"}, {"hops", "1"}}).status == 404);
    const auto hops = call(api, "GET", snap_path("/network/ego"), {{"account", "x"}, {"hops", "many"}});
    CHECK(hops.status == 400);
    CHECK(hops.body["error"]["field"] == "hops");
    CHECK(call(api, "GET", snap_path("/network/ego"), {{"account", "x"}, {"hops", "1"}, {"kind", "follow"}}).status == 400);
    CHECK(call(api, "DELETE", "/api/snapshots").status == 405);
    CHECK(call(api, "POST", snap_path("/botmatch/session"), {}, "{oops").status == 400);
}

TEST_CASE("api: ego network") {
    ApiService api(store_of(built().config));
    const auto infl = call(api, "GET", snap_path("/influencers"), {{"kind", "mention"}});
    REQUIRE(infl.status == 200);
    const auto& rows = infl.body["data"]["rows"];
    REQUIRE_FALSE(rows.empty());
    const std::string top = rows[0]["account_id"];
    const auto zero = call(api, "GET", snap_path("/network/ego"), {{"account", top}, {"hops", "0"}, {"kind", "mention"}});
    REQUIRE(zero.status == 200);
    CHECK(zero.body["data"]["nodes"].size() == 1);
    CHECK(zero.body["data"]["edges"].empty());
    const auto one = call(api, "GET", snap_path("/network/ego"), {{"account", top}, {"hops", "1"}, {"kind", "mention"}});
    CHECK(one.body["data"]["nodes"].size() > 1);
    const std::string name = rows[0]["screen_name"];
    std::string upper;
    for (char c : name) upper += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    CHECK(call(api, "GET", snap_path("/network/ego"), {{"account", upper}, {"hops", "0"}, {"kind", "mention"}}).status == 200);
}

TEST_CASE("api: community drill-down") {
    ApiService api(store_of(built().config));
    const auto list = call(api, "GET", snap_path("/communities"), {{"kind", "mention"}});
    REQUIRE(list.status == 200);
    REQUIRE_FALSE(list.body["data"]["cards"].empty());
    const auto c0 = call(api, "GET", snap_path("/communities/0"), {{"kind", "mention"}, {"limit", "5"}});
    REQUIRE(c0.status == 200);
    CHECK(c0.body["data"]["members"].size() <= 5);
    CHECK(call(api, "GET", snap_path("/communities/99999"), {{"kind", "mention"}}).status == 404);
}

TEST_CASE("api: bot-match session equals direct module calls") {
    auto& b = built();
    ApiService api(store_of(b.config));
    const auto dtm = botmatch::import_dtm(b.result.dir / "botmatch");
    const std::string seed = dtm.accounts[dtm.size() / 2];
    const auto created = call(api, "POST", snap_path("/botmatch/session"), {}, json{{"seeds", {seed}}}.dump());
    REQUIRE(created.status == 200);
    const std::string sid = created.body["data"]["session_id"];
    CHECK(sid.size() == 32);

    botmatch::ExpansionSession direct(dtm, std::vector<std::string>{seed});
    auto compare = [&](const json& view) {
        const auto& f = view["data"]["frontier"];
        REQUIRE(f.size() == direct.frontier().size());
        for (std::size_t i = 0; i < f.size(); ++i) {
            CHECK(f[i]["account_id"] == direct.frontier()[i].account_id);
            CHECK(f[i]["similarity"].get<double>() == direct.frontier()[i].similarity);
        }
        CHECK(view["data"]["round"] == direct.round());
    };
    const auto base = snap_path("/botmatch/session/" + sid);
    auto step = call(api, "POST", base + "/step", {}, R"({"top_n": 8})");
    direct.step(dtm, 8);
    compare(step.body);
    REQUIRE(direct.frontier().size() >= 3);
    const std::vector<std::string> take{direct.frontier()[0].account_id, direct.frontier()[1].account_id};
    const std::vector<std::string> drop{direct.frontier()[2].account_id};
    CHECK(call(api, "POST", base + "/accept", {}, json{{"ids", take}}.dump()).status == 200);
    CHECK(call(api, "POST", base + "/reject", {}, json{{"ids", drop}}.dump()).status == 200);
    direct.accept(take);
    direct.reject(drop);
    step = call(api, "POST", base + "/step", {}, "{}");
    direct.step(dtm, 20);
    compare(step.body);
    CHECK(step.body["data"]["accepted"].size() == 2);

    const auto bad = call(api, "POST", base + "/accept", {}, json{{"ids", {seed}}}.dump());
    CHECK(bad.status == 400);
    CHECK(bad.body["error"]["field"] == "ids");
    CHECK(call(api, "POST", base + "/step", {}, R"({"top_n": 0})").status == 400);
    CHECK(call(api, "GET", base + "/step").status == 405);
    CHECK(call(api, "POST", snap_path("/botmatch/session"), {}, R"({"seeds": ["nobody-at-all"]})").status == 404);

    const auto persisted = call(api, "POST", base + "/persist", {}, "{}");
    REQUIRE(persisted.status == 200);
    ApiService other(store_of(b.config));
    const auto restored = call(other, "POST", snap_path("/botmatch/session"), {}, json{{"restore", sid}}.dump());
    REQUIRE(restored.status == 200);
    CHECK(restored.body["data"] == call(api, "GET", base).body["data"]);
}

TEST_CASE("api: idle sessions expire") {
    auto now = std::chrono::steady_clock::time_point{};
    ApiOptions options;
    options.session_ttl = std::chrono::seconds(60);
    options.clock = [&now] { return now; };
    ApiService api(store_of(built().config), options);
    const auto dtm = botmatch::import_dtm(built().result.dir / "botmatch");
    const auto created = call(api, "POST", snap_path("/botmatch/session"), {}, json{{"seeds", {dtm.accounts[0]}}}.dump());
    const std::string sid = created.body["data"]["session_id"];
    CHECK(api.session_count() == 1);
    now += std::chrono::seconds(30);
    CHECK(call(api, "GET", snap_path("/botmatch/session/" + sid)).status == 200);
    now += std::chrono::seconds(61);
    CHECK(call(api, "GET", snap_path("/botmatch/session/" + sid)).status == 404);
    CHECK(api.session_count() == 0);
}

TEST_CASE("api: concurrent identical reads return identical bodies") {
    ApiService api(store_of(built().config));
    const std::vector<std::string> paths{snap_path("/stats"), snap_path("/influencers"), snap_path("/communities"),
                                         snap_path("/calibration")};
    std::vector<std::string> reference;
    for (const auto& p : paths) reference.push_back(api.handle({"GET", p, {}, ""}).body);
    std::atomic<int> mismatches{0};
    std::vector<std::thread> threads;
    for (int t = 0; t < 8; ++t) {
        threads.emplace_back([&] {
            for (int i = 0; i < 10; ++i) {
                for (std::size_t j = 0; j < paths.size(); ++j) {
                    if (api.handle({"GET", paths[j], {}, ""}).body != reference[j]) ++mismatches;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    CHECK(mismatches == 0);
}

TEST_CASE("http front end") {
    ApiService api(store_of(built().config));
    HttpServer server(api);
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread thread([&] { server.listen(); });
    httplib::Client client("127.0.0.1", port);
    client.set_connection_timeout(5);
    httplib::Result res;
    for (int attempt = 0; attempt < 50 && !(res = client.Get("/api/snapshots")); ++attempt) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->get_header_value("Access-Control-Allow-Origin") == "*");
    CHECK(json::parse(res->body)["data"]["latest"] == built().result.snapshot_id);
    const auto ego = client.Get(snap_path("/network/ego?account=nobody&hops=1"));
    REQUIRE(ego);
    CHECK(ego->status == 404);
    const auto post = client.Post(snap_path("/botmatch/session"), R"({"seeds": []})", "application/json");
    REQUIRE(post);
    CHECK(post->status == 400);
    server.stop();
    thread.join();
}
