#include "streamlens/config.hpp"

#include "streamlens/botcal.hpp"
#include "streamlens/io.hpp"

#include <openssl/evp.h>

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <set>

namespace streamlens::service {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 digest failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out += kHex[digest[i] >> 4];
        out += kHex[digest[i] & 0xf];
    }
    return out;
}

namespace {

// Reads one JSON object, tracking the dotted path for error messages and
// rejecting keys nobody asked for.
class Section {
public:
    Section(const json& value, std::string path) : value_(value), path_(std::move(path)) {
        if (!value_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
    }
    ~Section() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (const auto& [key, v] : value_.items()) {
            if (!seen_.contains(key)) throw ConfigError(field(key), "unknown setting");
        }
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json* find(const std::string& key) {
        seen_.insert(key);
        auto it = value_.find(key);
        if (it == value_.end() || it->is_null()) return nullptr;
        return &*it;
    }

    template <typename T>
    void read(const std::string& key, T& out) {
        if (const auto* v = find(key)) out = convert<T>(*v, field(key));
    }
    template <typename T>
    void read(const std::string& key, std::optional<T>& out) {
        seen_.insert(key);
        auto it = value_.find(key);
        if (it == value_.end()) return;
        if (it->is_null()) {
            out.reset();
            return;
        }
        out = convert<T>(*it, field(key));
    }

    template <typename T>
    static T convert(const json& v, const std::string& where) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where, "expected true or false");
            return v.get<bool>();
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(where, "expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_unsigned()) return static_cast<T>(v.get<std::uint64_t>());
                if (v.get<std::int64_t>() < 0) throw ConfigError(where, "must not be negative");
            }
            return static_cast<T>(v.get<std::int64_t>());
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(where, "expected a number");
            return v.get<T>();
        } else if constexpr (std::is_same_v<T, std::filesystem::path>) {
            if (!v.is_string() || v.get<std::string>().empty()) throw ConfigError(where, "expected a path");
            return std::filesystem::path(v.get<std::string>());
        } else {
            if (!v.is_string()) throw ConfigError(where, "expected a string");
            return v.get<std::string>();
        }
    }

private:
    const json& value_;
    std::string path_;
    std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& message) {
    if (!ok) throw ConfigError(field, message);
}

json opt(const std::optional<std::filesystem::path>& p) { return p ? json(p->generic_string()) : json(nullptr); }
json opt(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

}  // namespace

AnalysisConfig AnalysisConfig::parse(std::string_view json_text, const std::filesystem::path& base_dir) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    AnalysisConfig cfg;
    cfg.base_dir = base_dir;
    Section top(root, "");

    if (const auto* v = top.find("corpus")) {
        Section s(*v, "corpus");
        if (const auto* in = s.find("input")) {
            if (in->is_string()) {
                cfg.corpus.inputs = {in->get<std::string>()};
            } else if (in->is_array()) {
                for (std::size_t i = 0; i < in->size(); ++i) {
                    cfg.corpus.inputs.push_back(
                        Section::convert<std::string>((*in)[i], "corpus.input[" + std::to_string(i) + "]"));
                }
            } else {
                throw ConfigError("corpus.input", "expected a path or a list of paths");
            }
        }
        s.read("keywords", cfg.corpus.keywords);
        s.read("countries", cfg.corpus.countries);
        s.read("daily_cap", cfg.corpus.daily_cap);
        s.read("threads", cfg.corpus.threads);
        require(cfg.corpus.daily_cap > 0, "corpus.daily_cap", "must be positive");
    }
    require(!cfg.corpus.inputs.empty(), "corpus.input", "at least one input is required");

    if (const auto* v = top.find("network")) {
        Section s(*v, "network");
        if (const auto* kinds = s.find("kinds")) {
            if (!kinds->is_array() || kinds->empty()) throw ConfigError("network.kinds", "expected a non-empty list");
            cfg.network.kinds.clear();
            for (std::size_t i = 0; i < kinds->size(); ++i) {
                const auto where = "network.kinds[" + std::to_string(i) + "]";
                try {
                    cfg.network.kinds.push_back(parse_interaction_kind(Section::convert<std::string>((*kinds)[i], where)));
                } catch (const ConfigError& e) {
                    throw ConfigError(where, "expected mention|retweet|reply|quote");
                }
            }
        }
        s.read("k_core_k", cfg.network.k_core_k);
        if (const auto* d = s.find("k_core_degree")) {
            try {
                cfg.network.k_core_degree = network::parse_degree_mode(Section::convert<std::string>(*d, "network.k_core_degree"));
            } catch (const InputError&) {
                throw ConfigError("network.k_core_degree", "expected total|in|out");
            }
        }
        s.read("edge_sample_m", cfg.network.edge_sample_m);
        s.read("sample_seed", cfg.network.sample_seed);
        s.read("centrality_tolerance", cfg.network.centrality_tolerance);
        s.read("centrality_max_iterations", cfg.network.centrality_max_iterations);
        s.read("louvain_seed", cfg.network.louvain_seed);
        s.read("top_n", cfg.network.top_n);
        s.read("community_cards", cfg.network.community_cards);
        s.read("export_full_graph", cfg.network.export_full_graph);
        require(cfg.network.centrality_tolerance > 0, "network.centrality_tolerance", "must be positive");
        require(cfg.network.centrality_max_iterations >= 1, "network.centrality_max_iterations", "must be at least 1");
        require(cfg.network.top_n >= 1, "network.top_n", "must be at least 1");
    }

    if (const auto* v = top.find("bots")) {
        Section s(*v, "bots");
        s.read("primary", cfg.bots.primary);
        if (const auto* ds = s.find("detectors")) {
            if (!ds->is_array()) throw ConfigError("bots.detectors", "expected a list");
            std::set<std::string> names;
            for (std::size_t i = 0; i < ds->size(); ++i) {
                const auto where = "bots.detectors[" + std::to_string(i) + "]";
                Section d((*ds)[i], where);
                DetectorConfig det;
                d.read("name", det.name);
                d.read("scores", det.scores);
                d.read("threshold", det.threshold);
                require(!det.name.empty(), where + ".name", "is required");
                require(std::all_of(det.name.begin(), det.name.end(),
                                    [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'; }),
                        where + ".name", "use letters, digits, '_' or '-'");
                require(!det.scores.empty(), where + ".scores", "is required");
                require(det.threshold >= 0.0 && det.threshold <= 1.0, where + ".threshold", "must lie in [0,1]");
                require(names.insert(det.name).second, where + ".name", "duplicate detector '" + det.name + "'");
                cfg.bots.detectors.push_back(std::move(det));
            }
        }
        s.read("labels", cfg.bots.labels);
        s.read("label_sample_size", cfg.bots.label_sample_size);
        s.read("label_sample_seed", cfg.bots.label_sample_seed);
        if (const auto* ps = s.find("policies")) {
            if (!ps->is_array()) throw ConfigError("bots.policies", "expected a list");
            cfg.bots.policies.clear();
            for (std::size_t i = 0; i < ps->size(); ++i) {
                const auto where = "bots.policies[" + std::to_string(i) + "]";
                auto text = Section::convert<std::string>((*ps)[i], where);
                try {
                    botcal::ThresholdPolicy::parse(text);
                } catch (const ConfigError& e) {
                    throw ConfigError(where, e.what());
                }
                cfg.bots.policies.push_back(std::move(text));
            }
        }
        s.read("density_bins", cfg.bots.density_bins);
        if (const auto* since = s.find("creation_since")) {
            auto day = parse_day(Section::convert<std::string>(*since, "bots.creation_since"));
            require(day.has_value(), "bots.creation_since", "expected YYYY-MM-DD");
            cfg.bots.creation_since = day;
        }
        require(cfg.bots.density_bins >= 1, "bots.density_bins", "must be at least 1");
        if (cfg.bots.primary) {
            const bool known = std::any_of(cfg.bots.detectors.begin(), cfg.bots.detectors.end(),
                                           [&](const DetectorConfig& d) { return d.name == *cfg.bots.primary; });
            require(known, "bots.primary", "no detector named '" + *cfg.bots.primary + "'");
        }
    }

    if (const auto* v = top.find("audit")) {
        Section s(*v, "audit");
        s.read("fixture", cfg.audit.fixture);
        s.read("endpoint", cfg.audit.endpoint);
        s.read("sample_size", cfg.audit.sample_size);
        s.read("seed", cfg.audit.seed);
        s.read("confidence", cfg.audit.confidence);
        s.read("interval", cfg.audit.interval);
        s.read("batch_size", cfg.audit.batch_size);
        s.read("parallelism", cfg.audit.parallelism);
        require(cfg.audit.confidence > 0.0 && cfg.audit.confidence < 1.0, "audit.confidence", "must lie in (0,1)");
        require(cfg.audit.interval == "wald" || cfg.audit.interval == "wilson", "audit.interval",
                "expected wald|wilson");
        require(cfg.audit.batch_size >= 1, "audit.batch_size", "must be at least 1");
        require(cfg.audit.parallelism >= 1, "audit.parallelism", "must be at least 1");
        require(!(cfg.audit.fixture && cfg.audit.endpoint), "audit", "set either fixture or endpoint, not both");
    }

    if (const auto* v = top.find("characterize")) {
        Section s(*v, "characterize");
        s.read("bias_dictionary", cfg.characterize.bias_dictionary);
        s.read("lexicon", cfg.characterize.lexicon);
        s.read("state_media", cfg.characterize.state_media);
        s.read("marketshare_top_k", cfg.characterize.marketshare_top_k);
        s.read("all_hashtag_denominator", cfg.characterize.all_hashtag_denominator);
        s.read("tally_top", cfg.characterize.tally_top);
        require(cfg.characterize.marketshare_top_k >= 1, "characterize.marketshare_top_k", "must be at least 1");
    }

    if (const auto* v = top.find("topics")) {
        Section s(*v, "topics");
        s.read("enabled", cfg.topics.enabled);
        s.read("k", cfg.topics.k);
        s.read("alpha", cfg.topics.alpha);
        s.read("beta", cfg.topics.beta);
        s.read("iterations", cfg.topics.iterations);
        s.read("seed", cfg.topics.seed);
        s.read("lang", cfg.topics.lang);
        s.read("top_words", cfg.topics.top_words);
        require(cfg.topics.k >= 1, "topics.k", "must be at least 1");
        require(!cfg.topics.alpha || *cfg.topics.alpha > 0.0, "topics.alpha", "must be positive");
        require(cfg.topics.beta > 0.0, "topics.beta", "must be positive");
        require(cfg.topics.iterations >= 0, "topics.iterations", "must not be negative");
    }

    if (const auto* v = top.find("botmatch")) {
        Section s(*v, "botmatch");
        s.read("enabled", cfg.botmatch.enabled);
        s.read("vocabulary", cfg.botmatch.vocabulary);
        s.read("lang", cfg.botmatch.lang);
        require(cfg.botmatch.vocabulary >= 1, "botmatch.vocabulary", "must be at least 1");
    }

    if (const auto* v = top.find("snapshot")) {
        Section s(*v, "snapshot");
        s.read("store", cfg.snapshot.store);
        s.read("filter", cfg.snapshot.filter);
        if (const auto* as_of = s.find("as_of")) {
            auto ts = parse_timestamp(Section::convert<std::string>(*as_of, "snapshot.as_of"));
            require(ts.has_value(), "snapshot.as_of", "expected an ISO-8601 timestamp");
            cfg.snapshot.as_of = ts;
        }
        require(!cfg.snapshot.filter || *cfg.snapshot.filter == "state_media", "snapshot.filter",
                "expected state_media or null");
        require(!cfg.snapshot.filter || cfg.characterize.state_media, "snapshot.filter",
                "the state_media filter needs characterize.state_media");
    }
    return cfg;
}

AnalysisConfig AnalysisConfig::load(const std::filesystem::path& file) {
    std::string text;
    try {
        text = io::read_file(file);
    } catch (const Error& e) {
        throw ConfigError("<file>", e.what());
    }
    return parse(text, file.parent_path());
}

std::filesystem::path AnalysisConfig::resolve(const std::filesystem::path& p) const {
    if (p.is_absolute() || base_dir.empty()) return p;
    return base_dir / p;
}

const DetectorConfig* AnalysisConfig::primary_detector() const {
    if (bots.detectors.empty()) return nullptr;
    if (!bots.primary) return &bots.detectors.front();
    for (const auto& d : bots.detectors) {
        if (d.name == *bots.primary) return &d;
    }
    return nullptr;
}

std::string AnalysisConfig::canonical_json() const {
    json kinds = json::array();
    for (auto k : network.kinds) kinds.push_back(std::string(to_string(k)));
    json detectors = json::array();
    for (const auto& d : bots.detectors) {
        detectors.push_back({{"name", d.name}, {"scores", d.scores.generic_string()}, {"threshold", d.threshold}});
    }
    const char* degree = network.k_core_degree == network::DegreeMode::Total ? "total"
                         : network.k_core_degree == network::DegreeMode::In  ? "in"
                                                                              : "out";
    json root = {
        {"corpus",
         {{"input", corpus.inputs},
          {"keywords", opt(corpus.keywords)},
          {"countries", opt(corpus.countries)},
          {"daily_cap", corpus.daily_cap}}},
        {"network",
         {{"kinds", kinds},
          {"k_core_k", network.k_core_k},
          {"k_core_degree", degree},
          {"edge_sample_m", network.edge_sample_m},
          {"sample_seed", network.sample_seed},
          {"centrality_tolerance", network.centrality_tolerance},
          {"centrality_max_iterations", network.centrality_max_iterations},
          {"louvain_seed", network.louvain_seed},
          {"top_n", network.top_n},
          {"community_cards", network.community_cards},
          {"export_full_graph", network.export_full_graph}}},
        {"bots",
         {{"primary", primary_detector() ? json(primary_detector()->name) : json(nullptr)},
          {"detectors", detectors},
          {"labels", opt(bots.labels)},
          {"label_sample_size", bots.label_sample_size},
          {"label_sample_seed", bots.label_sample_seed},
          {"policies", bots.policies},
          {"density_bins", bots.density_bins},
          {"creation_since", bots.creation_since ? json(format_day(*bots.creation_since)) : json(nullptr)}}},
        {"audit",
         {{"fixture", opt(audit.fixture)},
          {"endpoint", opt(audit.endpoint)},
          {"sample_size", audit.sample_size},
          {"seed", audit.seed},
          {"confidence", audit.confidence},
          {"interval", audit.interval},
          {"batch_size", audit.batch_size}}},
        {"characterize",
         {{"bias_dictionary", opt(characterize.bias_dictionary)},
          {"lexicon", opt(characterize.lexicon)},
          {"state_media", opt(characterize.state_media)},
          {"marketshare_top_k", characterize.marketshare_top_k},
          {"all_hashtag_denominator", characterize.all_hashtag_denominator},
          {"tally_top", characterize.tally_top}}},
        {"topics",
         {{"enabled", topics.enabled},
          {"k", topics.k},
          {"alpha", topics.alpha.value_or(50.0 / static_cast<double>(topics.k))},
          {"beta", topics.beta},
          {"iterations", topics.iterations},
          {"seed", topics.seed},
          {"lang", opt(topics.lang)},
          {"top_words", topics.top_words}}},
        {"botmatch",
         {{"enabled", botmatch.enabled}, {"vocabulary", botmatch.vocabulary}, {"lang", opt(botmatch.lang)}}},
        {"snapshot",
         {{"filter", opt(snapshot.filter)},
          {"as_of", snapshot.as_of ? json(format_timestamp(*snapshot.as_of)) : json(nullptr)}}},
    };
    return root.dump(2) + "\n";
}

std::string AnalysisConfig::digest() const { return sha256_hex(canonical_json()); }

}  // namespace streamlens::service
