#include "streamlens/api.hpp"

#include "streamlens/botmatch.hpp"
#include "streamlens/io.hpp"
#include "streamlens/network.hpp"
#include "streamlens/scores.hpp"
#include "streamlens/text.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <random>
#include <set>
#include <shared_mutex>
#include <typeindex>

namespace streamlens::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct ApiError {
    int status;
    std::string code;
    std::string message;
    std::string field;
};

[[noreturn]] void not_found(const std::string& message) { throw ApiError{404, "not_found", message, ""}; }
[[noreturn]] void bad_request(const std::string& field, const std::string& message) {
    throw ApiError{400, "invalid_request", message, field};
}

// CSV cells become typed JSON values; columns named in `strings` stay text.
json cell_json(const std::string& cell) {
    if (cell.empty()) return nullptr;
    if (cell == "true") return true;
    if (cell == "false") return false;
    const char* b = cell.data();
    const char* e = b + cell.size();
    std::int64_t i = 0;
    if (auto [p, ec] = std::from_chars(b, e, i); ec == std::errc{} && p == e) return i;
    double d = 0;
    if (auto [p, ec] = std::from_chars(b, e, d); ec == std::errc{} && p == e) return d;
    return cell;
}

json table_json(const io::CsvTable& t, const std::set<std::string>& strings) {
    json rows = json::array();
    for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t c = 0; c < t.header.size(); ++c) {
            obj[t.header[c]] = strings.contains(t.header[c]) ? json(row[c]) : cell_json(row[c]);
        }
        rows.push_back(std::move(obj));
    }
    return rows;
}

json kv_json(const io::KeyValues& kv, const std::set<std::string>& strings = {}) {
    json obj = json::object();
    for (const auto& [k, v] : kv) obj[k] = strings.contains(k) ? json(v) : cell_json(v);
    return obj;
}

std::string random_id() {
    static std::mutex mu;
    static std::mt19937_64 rng{std::random_device{}()};
    std::lock_guard lock(mu);
    char buf[33];
    std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(rng()),
                  static_cast<unsigned long long>(rng()));
    return buf;
}

// One snapshot on disk with lazily parsed, immutable section data.
class LoadedSnapshot {
public:
    explicit LoadedSnapshot(SnapshotInfo info) : info_(std::move(info)) {
        config_ = json::parse(io::read_file(info_.dir / "config.json"));
        const auto& bots = config_["bots"];
        if (bots["primary"].is_string()) {
            primary_ = bots["primary"].get<std::string>();
            for (const auto& d : bots["detectors"]) {
                if (d["name"] == primary_) threshold_ = d["threshold"].get<double>();
            }
        }
    }

    const SnapshotInfo& info() const { return info_; }
    const json& config() const { return config_; }
    const std::string& primary() const { return primary_; }
    double threshold() const { return threshold_; }
    fs::path path(const std::string& rel) const { return info_.dir / rel; }
    bool has(const std::string& rel) const { return fs::exists(path(rel)); }

    const SectionStatus* section(const std::string& name) const {
        auto it = info_.sections.find(name);
        return it == info_.sections.end() ? nullptr : &it->second;
    }

    template <typename T, typename F>
    std::shared_ptr<const T> cached(const std::string& key, F&& load) {
        {
            std::shared_lock lock(mu_);
            if (auto it = cache_.find(key); it != cache_.end()) return std::static_pointer_cast<const T>(it->second);
        }
        auto value = std::make_shared<const T>(load());
        std::unique_lock lock(mu_);
        auto [it, inserted] = cache_.emplace(key, value);
        return std::static_pointer_cast<const T>(it->second);
    }

    std::shared_ptr<const io::CsvTable> csv(const std::string& rel) {
        return cached<io::CsvTable>("csv:" + rel, [&] { return io::read_csv(path(rel)); });
    }
    std::shared_ptr<const io::KeyValues> kv(const std::string& rel) {
        return cached<io::KeyValues>("kv:" + rel, [&] { return io::parse_key_values(io::read_file(path(rel))); });
    }
    std::shared_ptr<const BotScoreTable> scores() {
        return cached<BotScoreTable>("scores", [&] {
            BotScoreTable t;
            t.detector_name = primary_;
            t.default_threshold = threshold_;
            if (!primary_.empty() && has("scores/" + primary_ + ".csv")) t = load_scores(path("scores/" + primary_ + ".csv"), primary_, threshold_);
            return t;
        });
    }
    std::shared_ptr<const botmatch::DocTermMatrix> dtm() {
        return cached<botmatch::DocTermMatrix>("dtm", [&] { return botmatch::import_dtm(path("botmatch")); });
    }
    std::shared_ptr<const network::ConversationGraph> graph(InteractionKind kind) {
        const std::string dir = "network/" + std::string(to_string(kind)) + "/";
        return cached<network::ConversationGraph>("graph:" + dir, [&] {
            const bool full = has(dir + "graph_edges.csv");
            return network::load_edge_csv(kind, path(dir + (full ? "graph_edges.csv" : "core_edges.csv")),
                                          path(dir + (full ? "graph_nodes.csv" : "core_nodes.csv")));
        });
    }
    std::shared_ptr<const std::map<std::string, std::pair<double, std::int64_t>>> node_attributes(InteractionKind kind) {
        const std::string dir = "network/" + std::string(to_string(kind)) + "/";
        return cached<std::map<std::string, std::pair<double, std::int64_t>>>("attrs:" + dir, [&] {
            std::map<std::string, std::pair<double, std::int64_t>> out;
            if (has(dir + "centrality.csv")) {
                const auto c = io::read_csv(path(dir + "centrality.csv"));
                for (const auto& row : c.rows) out[row[0]] = {std::stod(row[1]), -1};
            }
            if (has(dir + "communities.csv")) {
                const auto p = io::read_csv(path(dir + "communities.csv"));
                for (const auto& row : p.rows) out[row[0]].second = std::stoll(row[1]);
            }
            return out;
        });
    }

private:
    SnapshotInfo info_;
    json config_;
    std::string primary_;
    double threshold_ = 0.5;
    std::shared_mutex mu_;
    std::map<std::string, std::shared_ptr<const void>> cache_;
};

struct Session {
    std::mutex mu;
    std::string id;
    std::string snapshot_id;
    botmatch::ExpansionSession state;
    std::map<std::string, double> decided_similarity;
    std::chrono::steady_clock::time_point last_used;
};

std::vector<std::string> string_list(const json& body, const std::string& field) {
    auto it = body.find(field);
    if (it == body.end() || !it->is_array()) bad_request(field, "expected a list of account ids");
    std::vector<std::string> out;
    for (const auto& v : *it) {
        if (!v.is_string()) bad_request(field, "expected a list of account ids");
        out.push_back(v.get<std::string>());
    }
    return out;
}

json parse_body(const std::string& body) {
    if (body.empty()) return json::object();
    auto j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) bad_request("body", "expected a JSON object");
    return j;
}

std::optional<std::string> query_param(const ApiRequest& r, const std::string& name) {
    auto it = r.query.find(name);
    if (it == r.query.end()) return std::nullopt;
    return it->second;
}

std::int64_t query_int(const ApiRequest& r, const std::string& name, std::int64_t fallback, std::int64_t lo,
                       std::int64_t hi) {
    auto v = query_param(r, name);
    if (!v) return fallback;
    std::int64_t out = 0;
    auto [p, ec] = std::from_chars(v->data(), v->data() + v->size(), out);
    if (ec != std::errc{} || p != v->data() + v->size()) bad_request(name, "expected an integer");
    if (out < lo || out > hi) bad_request(name, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
    return out;
}

InteractionKind query_kind(const ApiRequest& r) {
    auto v = query_param(r, "kind");
    if (!v) return InteractionKind::Mention;
    try {
        return parse_interaction_kind(*v);
    } catch (const ConfigError&) {
        bad_request("kind", "expected mention|retweet|reply|quote");
    }
}

json absent(const std::string& section, const SectionStatus* s) {
    return {{"section", section}, {"status", "absent"}, {"reason", s ? s->reason : "not built"}};
}

}  // namespace

struct ApiService::Impl {
    fs::path store;
    ApiOptions options;
    std::shared_mutex snapshots_mu;
    std::map<std::string, std::shared_ptr<LoadedSnapshot>> snapshots;
    std::string latest;
    std::mutex sessions_mu;
    std::map<std::string, std::shared_ptr<Session>> sessions;

    void refresh() {
        std::map<std::string, std::shared_ptr<LoadedSnapshot>> found;
        std::string last;
        for (auto& info : list_snapshots(store)) {
            const auto id = info.snapshot_id;
            {
                std::shared_lock lock(snapshots_mu);
                if (auto it = snapshots.find(id); it != snapshots.end()) {
                    found[id] = it->second;
                    last = id;
                    continue;
                }
            }
            found[id] = std::make_shared<LoadedSnapshot>(std::move(info));
            last = id;
        }
        std::unique_lock lock(snapshots_mu);
        snapshots = std::move(found);
        latest = last;
    }

    std::shared_ptr<LoadedSnapshot> snapshot(const std::string& id) {
        std::shared_lock lock(snapshots_mu);
        const auto& key = id == "latest" ? latest : id;
        auto it = snapshots.find(key);
        if (it == snapshots.end()) not_found("unknown snapshot '" + id + "'");
        return it->second;
    }

    static std::string envelope(const LoadedSnapshot* snap, json data) {
        json out = {{"snapshot_id", snap ? json(snap->info().snapshot_id) : json(nullptr)},
                    {"config_digest", snap ? json(snap->info().config_digest) : json(nullptr)},
                    {"data", std::move(data)}};
        return out.dump();
    }

    ApiResponse dispatch(const ApiRequest& req, std::shared_ptr<LoadedSnapshot>& snap);
    json snapshot_summary(const LoadedSnapshot& s) const;
    json stats(LoadedSnapshot& s);
    json timeline(LoadedSnapshot& s, const ApiRequest& req);
    json ego(LoadedSnapshot& s, const ApiRequest& req);
    json influencers(LoadedSnapshot& s, const ApiRequest& req);
    json communities(LoadedSnapshot& s, const ApiRequest& req, const std::optional<std::string>& cid);
    json calibration(LoadedSnapshot& s);
    json audit(LoadedSnapshot& s);
    json topics(LoadedSnapshot& s);
    json characterize(LoadedSnapshot& s, const std::string& table);
    json session_call(LoadedSnapshot& s, const ApiRequest& req, const std::vector<std::string>& parts);
    json session_view(LoadedSnapshot& s, const Session& session);
    std::shared_ptr<Session> find_session(const std::string& snapshot_id, const std::string& sid);
    void expire_sessions();
};

json ApiService::Impl::snapshot_summary(const LoadedSnapshot& s) const {
    json sections = json::object();
    for (const auto& [name, st] : s.info().sections) {
        sections[name] = st.present ? json{{"status", "present"}} : json{{"status", "absent"}, {"reason", st.reason}};
    }
    return {{"snapshot_id", s.info().snapshot_id},
            {"created_at", s.info().created_at},
            {"config_digest", s.info().config_digest},
            {"sections", sections}};
}

json ApiService::Impl::stats(LoadedSnapshot& s) {
    const auto stats = ingest::parse_stats_report(io::read_file(s.path("stats/stats.txt")));
    json fields = json::object();
    json table = json::array();
    auto add = [&](const std::string& key, const std::string& label, std::uint64_t value) {
        fields[key] = value;
        table.push_back({{"key", key}, {"label", label}, {"value", value}});
    };
    std::optional<io::KeyValues> bots, media;
    if (s.has("scores/summary.txt")) bots = *s.kv("scores/summary.txt");
    if (s.has("characterize/statemedia/totals.txt")) media = *s.kv("characterize/statemedia/totals.txt");
    for (const auto& row : ingest::stats_rows(stats)) {
        if (row.key == "images" && bots) {
            add("bot_accounts", "Bots @ " + bots->at("detector"), std::stoull(bots->at("bot_accounts")));
        }
        if (row.key == "verified_tweets" && media) {
            add("state_media_tweets", "State Sponsored Media Tweets", std::stoull(media->at("original_total")));
            add("state_media_amplifications", "Retweet/Mentions of State Sponsored Media",
                std::stoull(media->at("amplification_total")));
        }
        add(row.key, row.label, row.value);
    }
    json capped = json::array();
    for (auto d : stats.days_at_cap) capped.push_back(format_day(d));
    return {{"status", "present"},
            {"fields", fields},
            {"table", table},
            {"daily_cap", stats.daily_cap},
            {"days_at_cap", capped},
            {"ingest", kv_json(*s.kv("stats/ingest.txt"))}};
}

json ApiService::Impl::timeline(LoadedSnapshot& s, const ApiRequest& req) {
    const auto metric = query_param(req, "metric").value_or("tweets");
    std::string section, file;
    if (metric == "tweets") {
        section = "stats";
        file = "stats/daily.csv";
    } else if (metric == "abusive") {
        section = "characterize.abusive";
        file = "characterize/abusive/daily.csv";
    } else if (metric == "creation") {
        section = "creation";
        file = "creation/histogram.csv";
    } else {
        bad_request("metric", "expected tweets|abusive|creation");
    }
    const auto* st = s.section(section);
    if (!st || !st->present) {
        auto out = absent(section, st);
        out["metric"] = metric;
        return out;
    }
    json points = table_json(*s.csv(file), {"date"});
    if (metric != "creation") {
        for (auto& p : points) {
            p["value"] = p["count"];
            p.erase("count");
        }
    } else {
        for (auto& p : points) p["value"] = p["count"];
    }
    return {{"status", "present"}, {"metric", metric}, {"points", points}};
}

json ApiService::Impl::ego(LoadedSnapshot& s, const ApiRequest& req) {
    const auto kind = query_kind(req);
    const auto account = query_param(req, "account");
    if (!account || account->empty()) bad_request("account", "is required");
    const auto hops = static_cast<int>(query_int(req, "hops", 1, 0, 6));
    const std::string section = "network." + std::string(to_string(kind));
    const auto* st = s.section(section);
    if (!st || !st->present) return absent(section, st);
    const auto g = s.graph(kind);
    std::string id = *account;
    if (!g->find(id)) {
        auto wanted = text::ascii_lower(*account);
        if (!wanted.empty() && wanted[0] == '@') wanted.erase(0, 1);
        for (const auto& [acc, name] : g->screen_names()) {
            if (text::ascii_lower(name) == wanted) {
                id = acc;
                break;
            }
        }
    }
    if (!g->find(id)) not_found("account '" + *account + "' is not in the exported " + std::string(to_string(kind)) + " graph");
    const auto ego = network::ego_network(*g, id, hops, options.ego_max_nodes);
    const auto attrs = s.node_attributes(kind);
    const auto bots = s.scores();
    json nodes = json::array();
    for (network::NodeIndex i = 0; i < ego.graph.node_count(); ++i) {
        const auto& acc = ego.graph.account(i);
        json n = {{"account_id", acc}, {"screen_name", std::string(ego.graph.screen_name(i))}};
        auto a = attrs->find(acc);
        n["centrality"] = a != attrs->end() ? json(a->second.first) : json(nullptr);
        n["community"] = a != attrs->end() && a->second.second >= 0 ? json(a->second.second) : json(nullptr);
        auto score = bots->find(acc);
        n["bot_score"] = score ? json(*score) : json(nullptr);
        nodes.push_back(std::move(n));
    }
    json edges = json::array();
    for (const auto& e : ego.graph.edges()) {
        edges.push_back({{"src", ego.graph.account(e.src)}, {"dst", ego.graph.account(e.dst)}, {"weight", e.weight}});
    }
    return {{"status", "present"},
            {"kind", std::string(to_string(kind))},
            {"center", id},
            {"hops", hops},
            {"graph", s.has("network/" + std::string(to_string(kind)) + "/graph_edges.csv") ? "full" : "core"},
            {"max_nodes", options.ego_max_nodes},
            {"truncated", ego.truncated},
            {"nodes", nodes},
            {"edges", edges}};
}

json ApiService::Impl::influencers(LoadedSnapshot& s, const ApiRequest& req) {
    const auto kind = query_kind(req);
    const std::string section = "network." + std::string(to_string(kind));
    const auto* st = s.section(section);
    if (!st || !st->present) return absent(section, st);
    const std::string file = "network/" + std::string(to_string(kind)) + "/influencers.csv";
    json rows = s.has(file) ? table_json(*s.csv(file), {"account_id", "screen_name"}) : json::array();
    return {{"status", "present"},
            {"kind", std::string(to_string(kind))},
            {"detector", s.primary().empty() ? json(nullptr) : json(s.primary())},
            {"threshold", s.threshold()},
            {"rows", rows}};
}

json ApiService::Impl::communities(LoadedSnapshot& s, const ApiRequest& req, const std::optional<std::string>& cid) {
    const auto kind = query_kind(req);
    const std::string name(to_string(kind));
    const std::string section = "network." + name;
    const auto* st = s.section(section);
    if (!st || !st->present) return absent(section, st);
    const std::string dir = "network/" + name + "/";
    const auto graph = s.kv(dir + "graph.txt");
    json cards = s.has(dir + "community_cards.json") ? json::parse(io::read_file(s.path(dir + "community_cards.json")))
                                                     : json::array();
    if (!cid) {
        json passes = json::array();
        if (auto it = graph->find("pass_modularity"); it != graph->end()) {
            std::string_view rest = it->second;
            while (!rest.empty()) {
                const auto sp = rest.find(' ');
                passes.push_back(std::stod(std::string(rest.substr(0, sp))));
                if (sp == std::string_view::npos) break;
                rest.remove_prefix(sp + 1);
            }
        }
        return {{"status", "present"},
                {"kind", name},
                {"modularity", graph->contains("modularity") ? cell_json(graph->at("modularity")) : json(nullptr)},
                {"community_count",
                 graph->contains("community_count") ? cell_json(graph->at("community_count")) : json(0)},
                {"pass_modularity", passes},
                {"cards", cards}};
    }
    std::int64_t community = -1;
    {
        auto [p, ec] = std::from_chars(cid->data(), cid->data() + cid->size(), community);
        if (ec != std::errc{} || p != cid->data() + cid->size() || community < 0) bad_request("cid", "expected a community number");
    }
    const auto limit = static_cast<std::size_t>(query_int(req, "limit", 500, 1, 100000));
    const auto attrs = s.node_attributes(kind);
    std::vector<std::pair<double, std::string>> members;
    for (const auto& [acc, a] : *attrs) {
        if (a.second == community) members.emplace_back(a.first, acc);
    }
    if (members.empty()) not_found("community " + *cid + " does not exist in the " + name + " network");
    std::sort(members.begin(), members.end(), [](const auto& x, const auto& y) {
        return x.first != y.first ? x.first > y.first : x.second < y.second;
    });
    json card = nullptr;
    for (const auto& c : cards) {
        if (c["community"].get<std::int64_t>() == community) card = c;
    }
    const auto bots = s.scores();
    json list = json::array();
    for (std::size_t i = 0; i < std::min(limit, members.size()); ++i) {
        auto score = bots->find(members[i].second);
        list.push_back({{"account_id", members[i].second},
                        {"centrality", members[i].first},
                        {"bot_score", score ? json(*score) : json(nullptr)}});
    }
    return {{"status", "present"},
            {"kind", name},
            {"community", community},
            {"size", members.size()},
            {"card", card},
            {"members", list},
            {"truncated", members.size() > limit}};
}

json ApiService::Impl::calibration(LoadedSnapshot& s) {
    const auto* st = s.section("calibration");
    if (!st || !st->present) return absent("calibration", st);
    json detectors = json::array();
    for (const auto& d : s.config()["bots"]["detectors"]) {
        const auto name = d["name"].get<std::string>();
        const std::string dir = "calibration/" + name + "/";
        if (!s.has(dir + "metrics.txt")) continue;
        detectors.push_back({{"name", name},
                             {"threshold", d["threshold"]},
                             {"metrics", kv_json(*s.kv(dir + "metrics.txt"))},
                             {"pr_curve", table_json(*s.csv(dir + "pr_curve.csv"), {})},
                             {"roc_curve", table_json(*s.csv(dir + "roc_curve.csv"), {})},
                             {"policies", table_json(*s.csv(dir + "policies.csv"), {"policy", "note"})},
                             {"density", table_json(*s.csv(dir + "density.csv"), {})},
                             {"markers", table_json(*s.csv(dir + "markers.csv"), {})}});
    }
    return {{"status", "present"}, {"detectors", detectors}};
}

json ApiService::Impl::audit(LoadedSnapshot& s) {
    const auto* st = s.section("audit");
    if (!st || !st->present) return absent("audit", st);
    auto report = *s.kv("audit/report.txt");
    json ids = json::array();
    std::string_view rest = report["suspended_ids"];
    while (!rest.empty()) {
        const auto sp = rest.find(' ');
        ids.push_back(std::string(rest.substr(0, sp)));
        if (sp == std::string_view::npos) break;
        rest.remove_prefix(sp + 1);
    }
    report.erase("suspended_ids");
    auto out = kv_json(report, {"interval"});
    out["suspended_ids"] = ids;
    return {{"status", "present"},
            {"report", out},
            {"summary", io::read_file(s.path("audit/summary.txt"))},
            {"parameters", kv_json(*s.kv("audit/section.txt"), {"interval", "status"})}};
}

json ApiService::Impl::topics(LoadedSnapshot& s) {
    const auto* st = s.section("topics");
    if (!st || !st->present) return absent("topics", st);
    json rows = table_json(*s.csv("topics/report.csv"), {"caption", "top_words"});
    for (auto& r : rows) {
        json words = json::array();
        std::string_view rest = r["top_words"].get_ref<const std::string&>();
        while (!rest.empty()) {
            const auto sp = rest.find(' ');
            words.push_back(std::string(rest.substr(0, sp)));
            if (sp == std::string_view::npos) break;
            rest.remove_prefix(sp + 1);
        }
        r["top_words"] = words;
    }
    return {{"status", "present"},
            {"parameters", kv_json(*s.kv("topics/section.txt"), {"status", "lang"})},
            {"topics", rows}};
}

json ApiService::Impl::characterize(LoadedSnapshot& s, const std::string& table) {
    static const std::map<std::string, std::vector<std::pair<std::string, std::set<std::string>>>> kFiles = {
        {"marketshare", {{"marketshare.csv", {"date", "hashtag"}}}},
        {"tally", {{"lang.csv", {"lang", "name"}}, {"domain.csv", {"domain"}}}},
        {"bias", {{"categories.csv", {"kind", "category"}}, {"coverage.txt", {}}}},
        {"abusive", {{"daily.csv", {"date"}}, {"summary.txt", {}}}},
        {"flags", {{"combinations.csv", {"flags", "combination"}}}},
        {"statemedia", {{"countries.csv", {"country"}}, {"totals.txt", {}}}},
    };
    auto it = kFiles.find(table);
    if (it == kFiles.end()) not_found("unknown characterization table '" + table + "'");
    const auto section = "characterize." + table;
    const auto* st = s.section(section);
    if (!st || !st->present) return absent(section, st);
    json out = {{"status", "present"}, {"table", table}};
    for (const auto& [file, strings] : it->second) {
        const auto rel = "characterize/" + table + "/" + file;
        const auto key = file.substr(0, file.find('.'));
        out[key] = file.ends_with(".csv") ? table_json(*s.csv(rel), strings) : kv_json(*s.kv(rel));
    }
    out["parameters"] = kv_json(*s.kv("characterize/" + table + "/section.txt"), {"status", "detector", "denominator"});
    return out;
}

void ApiService::Impl::expire_sessions() {
    const auto now = options.clock();
    std::lock_guard lock(sessions_mu);
    std::erase_if(sessions, [&](const auto& kv) {
        std::lock_guard inner(kv.second->mu);
        return now - kv.second->last_used > options.session_ttl;
    });
}

std::shared_ptr<Session> ApiService::Impl::find_session(const std::string& snapshot_id, const std::string& sid) {
    std::lock_guard lock(sessions_mu);
    auto it = sessions.find(sid);
    if (it == sessions.end() || it->second->snapshot_id != snapshot_id) not_found("unknown or expired session '" + sid + "'");
    return it->second;
}

json ApiService::Impl::session_view(LoadedSnapshot& s, const Session& session) {
    const auto dtm = s.dtm();
    const auto bots = s.scores();
    auto account = [&](const std::string& id, std::optional<double> similarity) {
        json a = {{"account_id", id}};
        const auto row = dtm->find(id);
        a["screen_name"] = row ? dtm->screen_names[*row] : "";
        if (similarity) a["similarity"] = *similarity;
        auto score = bots->find(id);
        a["bot_score"] = score ? json(*score) : json(nullptr);
        return a;
    };
    auto decided = [&](const std::set<std::string>& ids) {
        json list = json::array();
        for (const auto& id : ids) {
            auto it = session.decided_similarity.find(id);
            list.push_back(account(id, it == session.decided_similarity.end() ? std::nullopt : std::optional(it->second)));
        }
        return list;
    };
    json seeds = json::array();
    for (const auto& id : session.state.seeds()) seeds.push_back(account(id, std::nullopt));
    json frontier = json::array();
    for (const auto& m : session.state.frontier()) frontier.push_back(account(m.account_id, m.similarity));
    return {{"session_id", session.id},
            {"round", session.state.round()},
            {"seeds", seeds},
            {"accepted", decided(session.state.accepted())},
            {"rejected", decided(session.state.rejected())},
            {"frontier", frontier}};
}

namespace {

json session_file(const Session& s) {
    json frontier = json::array();
    for (const auto& m : s.state.frontier()) frontier.push_back({{"account_id", m.account_id}, {"similarity", m.similarity}});
    return {{"session_id", s.id},
            {"snapshot_id", s.snapshot_id},
            {"round", s.state.round()},
            {"seeds", s.state.seeds()},
            {"accepted", s.state.accepted()},
            {"rejected", s.state.rejected()},
            {"frontier", frontier},
            {"decided_similarity", s.decided_similarity}};
}

}  // namespace

json ApiService::Impl::session_call(LoadedSnapshot& s, const ApiRequest& req, const std::vector<std::string>& parts) {
    // parts: botmatch, session[, sid[, action]]
    const auto* st = s.section("botmatch");
    if (!st || !st->present) not_found("snapshot has no document-term matrix (" + (st ? st->reason : "not built") + ")");
    expire_sessions();
    const auto& id = s.info().snapshot_id;
    if (parts.size() == 2) {
        if (req.method != "POST") throw ApiError{405, "method_not_allowed", "use POST to create a session", ""};
        const auto body = parse_body(req.body);
        auto session = std::make_shared<Session>();
        session->snapshot_id = id;
        if (auto r = body.find("restore"); r != body.end()) {
            if (!r->is_string()) bad_request("restore", "expected a session id");
            const auto sid = r->get<std::string>();
            if (sid.empty() || !std::all_of(sid.begin(), sid.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); })) {
                bad_request("restore", "expected a session id");
            }
            const auto file = store / "sessions" / id / (sid + ".json");
            if (!fs::exists(file)) not_found("no persisted session '" + sid + "'");
            const auto saved = json::parse(io::read_file(file));
            std::vector<botmatch::Match> frontier;
            for (const auto& m : saved["frontier"]) frontier.push_back({m["account_id"], m["similarity"]});
            session->id = sid;
            session->state = botmatch::ExpansionSession::restore(saved["seeds"], saved["accepted"], saved["rejected"],
                                                                 std::move(frontier), saved["round"]);
            session->decided_similarity = saved["decided_similarity"].get<std::map<std::string, double>>();
        } else {
            const auto seeds = string_list(body, "seeds");
            if (seeds.empty()) bad_request("seeds", "at least one seed account is required");
            const auto dtm = s.dtm();
            try {
                session->state = botmatch::ExpansionSession(*dtm, seeds);
            } catch (const NotFoundError& e) {
                not_found(e.what());
            }
            session->id = random_id();
        }
        session->last_used = options.clock();
        {
            std::lock_guard lock(sessions_mu);
            sessions[session->id] = session;
        }
        std::lock_guard lock(session->mu);
        return session_view(s, *session);
    }
    auto session = find_session(id, parts[2]);
    std::lock_guard lock(session->mu);
    session->last_used = options.clock();
    if (parts.size() == 3) {
        if (req.method != "GET") throw ApiError{405, "method_not_allowed", "use GET to read a session", ""};
        return session_view(s, *session);
    }
    if (req.method != "POST") throw ApiError{405, "method_not_allowed", "session actions use POST", ""};
    const auto& action = parts[3];
    const auto body = parse_body(req.body);
    if (action == "step") {
        std::size_t top_n = 20;
        if (auto t = body.find("top_n"); t != body.end()) {
            if (!t->is_number_integer() || t->get<std::int64_t>() < 1 || t->get<std::int64_t>() > 10000) {
                bad_request("top_n", "expected an integer in [1, 10000]");
            }
            top_n = t->get<std::size_t>();
        }
        session->state = botmatch::expand(std::move(session->state), *s.dtm(),
                                          {botmatch::ExpansionAction::Kind::Step, {}, top_n});
    } else if (action == "accept" || action == "reject") {
        const auto ids = string_list(body, "ids");
        std::map<std::string, double> sims;
        for (const auto& m : session->state.frontier()) sims[m.account_id] = m.similarity;
        try {
            session->state = botmatch::expand(
                session->state, *s.dtm(),
                {action == "accept" ? botmatch::ExpansionAction::Kind::Accept : botmatch::ExpansionAction::Kind::Reject,
                 ids, 0});
        } catch (const InputError& e) {
            bad_request("ids", e.what());
        }
        for (const auto& i : ids) session->decided_similarity[i] = sims[i];
    } else if (action == "persist") {
        const auto dir = store / "sessions" / id;
        fs::create_directories(dir);
        io::write_file_atomic(dir / (session->id + ".json"), session_file(*session).dump(2) + "\n");
        auto view = session_view(s, *session);
        view["persisted"] = ("sessions/" + id + "/" + session->id + ".json");
        return view;
    } else {
        not_found("unknown session action '" + action + "'");
    }
    return session_view(s, *session);
}

ApiResponse ApiService::Impl::dispatch(const ApiRequest& req, std::shared_ptr<LoadedSnapshot>& snap) {
    std::vector<std::string> parts;
    {
        std::string_view p = req.path;
        while (!p.empty()) {
            const auto slash = p.find('/');
            if (slash != 0) parts.emplace_back(p.substr(0, slash));
            if (slash == std::string_view::npos) break;
            p.remove_prefix(slash + 1);
        }
    }
    if (parts.size() < 2 || parts[0] != "api" || parts[1] != "snapshots") not_found("no such endpoint " + req.path);
    if (parts.size() == 2) {
        if (req.method != "GET") throw ApiError{405, "method_not_allowed", "use GET", ""};
        refresh();
        json list = json::array();
        std::shared_lock lock(snapshots_mu);
        std::vector<std::shared_ptr<LoadedSnapshot>> ordered;
        for (const auto& [id, s] : snapshots) ordered.push_back(s);
        std::sort(ordered.begin(), ordered.end(), [](const auto& a, const auto& b) {
            return std::tie(a->info().created_at, a->info().snapshot_id) < std::tie(b->info().created_at, b->info().snapshot_id);
        });
        for (const auto& s : ordered) list.push_back(snapshot_summary(*s));
        return {200, envelope(nullptr, {{"snapshots", list}, {"latest", latest.empty() ? json(nullptr) : json(latest)}})};
    }
    snap = snapshot(parts[2]);
    auto& s = *snap;
    const std::vector<std::string> rest(parts.begin() + 3, parts.end());
    if (!rest.empty() && rest[0] == "botmatch") {
        if (rest.size() < 2 || rest[1] != "session" || rest.size() > 4) not_found("no such endpoint " + req.path);
        return {200, envelope(&s, session_call(s, req, rest))};
    }
    if (req.method != "GET") throw ApiError{405, "method_not_allowed", "use GET", ""};
    json data;
    if (rest.empty()) {
        data = snapshot_summary(s);
        data["config"] = s.config();
    } else if (rest.size() == 1 && rest[0] == "stats") {
        data = stats(s);
    } else if (rest.size() == 1 && rest[0] == "timeline") {
        data = timeline(s, req);
    } else if (rest.size() == 2 && rest[0] == "network" && rest[1] == "ego") {
        data = ego(s, req);
    } else if (rest.size() == 1 && rest[0] == "network") {
        const auto kind = query_kind(req);
        const std::string section = "network." + std::string(to_string(kind));
        const auto* st = s.section(section);
        data = st && st->present ? json{{"status", "present"},
                                        {"kind", std::string(to_string(kind))},
                                        {"stats", kv_json(*s.kv("network/" + std::string(to_string(kind)) + "/graph.txt"))}}
                                 : absent(section, st);
    } else if (rest.size() == 1 && rest[0] == "influencers") {
        data = influencers(s, req);
    } else if (rest[0] == "communities" && rest.size() <= 2) {
        data = communities(s, req, rest.size() == 2 ? std::optional(rest[1]) : std::nullopt);
    } else if (rest.size() == 1 && rest[0] == "calibration") {
        data = calibration(s);
    } else if (rest.size() == 1 && rest[0] == "audit") {
        data = audit(s);
    } else if (rest.size() == 1 && rest[0] == "topics") {
        data = topics(s);
    } else if (rest.size() == 2 && rest[0] == "characterize") {
        data = characterize(s, rest[1]);
    } else {
        not_found("no such endpoint " + req.path);
    }
    return {200, envelope(&s, std::move(data))};
}

ApiService::ApiService(fs::path store, ApiOptions options) : impl_(std::make_unique<Impl>()) {
    impl_->store = std::move(store);
    impl_->options = std::move(options);
    impl_->refresh();
}

ApiService::~ApiService() = default;

void ApiService::refresh() { impl_->refresh(); }

std::size_t ApiService::session_count() {
    impl_->expire_sessions();
    std::lock_guard lock(impl_->sessions_mu);
    return impl_->sessions.size();
}

ApiResponse ApiService::handle(const ApiRequest& request) {
    std::shared_ptr<LoadedSnapshot> snap;
    auto error = [&](int status, const std::string& code, const std::string& message, const std::string& field) {
        json err = {{"status", status}, {"code", code}, {"message", message}};
        if (!field.empty()) err["field"] = field;
        json out = {{"snapshot_id", snap ? json(snap->info().snapshot_id) : json(nullptr)},
                    {"config_digest", snap ? json(snap->info().config_digest) : json(nullptr)},
                    {"error", err}};
        return ApiResponse{status, out.dump()};
    };
    try {
        return impl_->dispatch(request, snap);
    } catch (const ApiError& e) {
        return error(e.status, e.code, e.message, e.field);
    } catch (const NotFoundError& e) {
        return error(404, "not_found", e.what(), "");
    } catch (const ConfigError& e) {
        return error(400, "invalid_request", e.what(), e.field());
    } catch (const InputError& e) {
        return error(400, "invalid_request", e.what(), "");
    } catch (const std::exception& e) {
        return error(500, "internal_error", e.what(), "");
    }
}

struct HttpServer::Impl {
    ApiService& api;
    httplib::Server server;
    explicit Impl(ApiService& a) : api(a) {}
};

HttpServer::HttpServer(ApiService& api) : impl_(std::make_unique<Impl>(api)) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        r.body = req.body;
        const auto out = impl_->api.handle(r);
        res.status = out.status;
        res.set_content(out.body, "application/json");
        res.set_header("Access-Control-Allow-Origin", "*");
    };
    impl_->server.Get(".*", route);
    impl_->server.Post(".*", route);
    impl_->server.Put(".*", route);
    impl_->server.Delete(".*", route);
    impl_->server.Patch(".*", route);
    impl_->server.Options(".*", [](const httplib::Request&, httplib::Response& res) {
        res.status = 204;
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw Error("cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}

}  // namespace streamlens::service
