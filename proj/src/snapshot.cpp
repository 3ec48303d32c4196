#include "streamlens/snapshot.hpp"

#include "streamlens/audit.hpp"
#include "streamlens/botcal.hpp"
#include "streamlens/botmatch.hpp"
#include "streamlens/characterize.hpp"
#include "streamlens/ingest.hpp"
#include "streamlens/network.hpp"
#include "streamlens/scores.hpp"
#include "streamlens/topics.hpp"

#include <json.hpp>

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <set>
#include <unordered_set>

namespace streamlens::service {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string optional_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

std::string csv_line(std::initializer_list<std::string> fields) { return io::join_csv(io::CsvRow(fields)) + "\n"; }

class SnapshotBuilder {
public:
    SnapshotBuilder(const AnalysisConfig& config, const ProgressFn& progress) : cfg_(config), progress_(progress) {}

    BuildResult run();

private:
    void log(std::string_view message) const {
        if (progress_) progress_(message);
    }
    void put(const std::string& rel, std::string_view content) { io::write_file_atomic(tmp_ / rel, content); }
    void mark(const std::string& section, bool present, std::string reason, io::KeyValues params = {}) {
        sections_[section] = {present, reason};
        params["status"] = present ? "present" : "absent";
        if (!present) params["reason"] = std::move(reason);
        auto rel = section;
        std::replace(rel.begin(), rel.end(), '.', '/');
        put(rel + "/section.txt", io::format_key_values(params));
    }
    // Resolves an optional configured input; nullopt plus a reason when unusable.
    std::optional<fs::path> input(const std::optional<fs::path>& configured, std::string& reason) const {
        if (!configured) {
            reason = "not configured";
            return std::nullopt;
        }
        const auto p = cfg_.resolve(*configured);
        if (!fs::exists(p)) {
            reason = "input not found: " + configured->generic_string();
            return std::nullopt;
        }
        return p;
    }

    void load_corpus();
    void apply_filter();
    void stats_section();
    void scores_section();
    void network_section(InteractionKind kind);
    void calibration_section();
    void creation_section();
    void audit_section();
    void characterize_sections();
    void topics_section();
    void botmatch_section();
    BuildResult persist();

    const AnalysisConfig& cfg_;
    const ProgressFn& progress_;
    fs::path store_;
    fs::path tmp_;
    ingest::Corpus corpus_;
    std::vector<ingest::AccountProfile> profiles_;
    std::map<std::string, BotScoreTable> detectors_;
    const BotScoreTable* primary_ = nullptr;
    double threshold_ = 0.5;
    std::map<std::string, SectionStatus> sections_;
    Timestamp created_at_{};
};

void SnapshotBuilder::load_corpus() {
    std::vector<fs::path> files;
    for (const auto& in : cfg_.corpus.inputs) {
        const auto resolved = cfg_.resolve(in).string();
        auto found = io::expand_inputs(resolved);
        if (found.empty()) throw InputError("corpus input matches no files: " + in);
        files.insert(files.end(), found.begin(), found.end());
    }
    ingest::LoadOptions options;
    options.threads = cfg_.corpus.threads;
    if (cfg_.corpus.keywords) options.keywords = ingest::load_keywords(cfg_.resolve(*cfg_.corpus.keywords));
    log("loading " + std::to_string(files.size()) + " corpus file(s)");
    corpus_ = ingest::load_corpus(files, options);
    if (cfg_.corpus.countries) {
        const auto p = cfg_.resolve(*cfg_.corpus.countries);
        if (fs::exists(p)) ingest::apply_country_annotations(corpus_, p);
    }
    created_at_ = cfg_.snapshot.as_of.value_or(corpus_.last_timestamp().value_or(Timestamp{}));
}

void SnapshotBuilder::apply_filter() {
    if (!cfg_.snapshot.filter) return;
    const auto dir = characterize::StateMediaDirectory::load(cfg_.resolve(*cfg_.characterize.state_media));
    std::unordered_set<std::string> keep;
    for (const auto& r : corpus_.records) {
        bool hit = dir.country_of(r.screen_name).has_value();
        if (r.retweeted_author && dir.country_of(r.retweeted_author->screen_name)) hit = true;
        for (const auto& m : r.mentions) hit = hit || dir.country_of(m.screen_name).has_value();
        if (hit) keep.insert(r.author_id);
    }
    std::erase_if(corpus_.records, [&](const ingest::TweetRecord& r) { return !keep.contains(r.author_id); });
    std::erase_if(corpus_.profiles, [&](const auto& kv) { return !keep.contains(kv.first); });
    log("state-media filter kept " + std::to_string(corpus_.records.size()) + " tweets");
}

void SnapshotBuilder::stats_section() {
    const auto stats = ingest::stream_summary(corpus_.records, cfg_.corpus.daily_cap);
    put("stats/stats.txt", ingest::format_stats_report(stats));
    put("stats/table.txt", ingest::format_stats_table(stats));
    put("stats/daily.csv", ingest::format_daily_csv(stats.daily_counts));
    const auto& c = corpus_.counters;
    io::KeyValues counters{{"lines", std::to_string(c.lines)},
                           {"parsed", std::to_string(c.parsed)},
                           {"filtered_out", std::to_string(c.filtered_out)},
                           {"duplicates", std::to_string(c.duplicates)},
                           {"parse_errors", std::to_string(c.parse_errors())},
                           {"skipped", std::to_string(c.skipped_total())}};
    for (const auto& [reason, n] : c.skipped) counters["skipped." + std::string(ingest::to_string(reason))] = std::to_string(n);
    put("stats/ingest.txt", io::format_key_values(counters));
    mark("stats", true, "", {{"daily_cap", std::to_string(cfg_.corpus.daily_cap)}});
}

void SnapshotBuilder::scores_section() {
    std::set<std::string> seen;
    for (const auto& r : corpus_.records) {
        seen.insert(r.author_id);
        for (const auto& m : r.mentions) seen.insert(m.account_id);
        for (const auto* ref : {&r.retweeted_author, &r.quoted_author, &r.reply_to_author}) {
            if (*ref) seen.insert((*ref)->account_id);
        }
    }
    io::KeyValues params;
    for (const auto& det : cfg_.bots.detectors) {
        std::string reason;
        auto path = input(det.scores, reason);
        if (!path) {
            params["detector." + det.name] = "absent: " + reason;
            continue;
        }
        auto table = load_scores(*path, det.name, det.threshold);
        std::string csv = "account_id,score\n";
        for (const auto& id : seen) {
            if (auto s = table.find(id)) csv += csv_line({id, format_real(*s)});
        }
        put("scores/" + det.name + ".csv", csv);
        params["detector." + det.name] = "threshold " + format_real(det.threshold);
        detectors_.emplace(det.name, std::move(table));
    }
    if (const auto* p = cfg_.primary_detector(); p && detectors_.contains(p->name)) {
        primary_ = &detectors_.at(p->name);
        threshold_ = p->threshold;
        params["primary"] = p->name;
    }
    if (primary_) {
        std::set<std::string> authors;
        std::uint64_t bot_tweets = 0;
        for (const auto& r : corpus_.records) {
            authors.insert(r.author_id);
            if (auto s = primary_->find(r.author_id); s && *s > threshold_) ++bot_tweets;
        }
        std::uint64_t scored = 0, bots = 0;
        for (const auto& a : authors) {
            if (auto s = primary_->find(a)) {
                ++scored;
                if (*s > threshold_) ++bots;
            }
        }
        put("scores/summary.txt", io::format_key_values({{"detector", primary_->detector_name},
                                                          {"threshold", format_real(threshold_)},
                                                          {"scored_accounts", std::to_string(scored)},
                                                          {"bot_accounts", std::to_string(bots)},
                                                          {"bot_tweets", std::to_string(bot_tweets)}}));
    }
    if (detectors_.empty()) {
        mark("scores", false, cfg_.bots.detectors.empty() ? "no detectors configured" : "no score files found", params);
    } else {
        mark("scores", true, "", params);
    }
}

void SnapshotBuilder::network_section(InteractionKind kind) {
    const std::string name(to_string(kind));
    const std::string section = "network." + name, dir = "network/" + name + "/";
    const auto& nc = cfg_.network;
    log("building " + name + " network");
    const auto g = network::build_graph(corpus_.records, kind);
    const auto full = network::graph_stats(g);
    const auto core = network::k_core(g, nc.k_core_k, nc.k_core_degree);
    const auto core_stats = network::graph_stats(core);
    const auto m_eff = std::min(nc.edge_sample_m, core.edge_count());
    const auto sample = network::sample_edges(core, m_eff, nc.sample_seed);
    const auto sample_stats = network::graph_stats(sample);

    io::KeyValues kv{
        {"nodes", std::to_string(full.nodes)},
        {"edges", std::to_string(full.edges)},
        {"density", format_real(full.density)},
        {"core_k", std::to_string(nc.k_core_k)},
        {"core_nodes", std::to_string(core_stats.nodes)},
        {"core_edges", std::to_string(core_stats.edges)},
        {"core_density", format_real(core_stats.density)},
        {"sample_m", std::to_string(m_eff)},
        {"sample_nodes", std::to_string(sample_stats.nodes)},
        {"sample_edges", std::to_string(sample_stats.edges)},
        {"sample_density", format_real(sample_stats.density)},
    };
    put(dir + "core_edges.csv", network::format_edge_csv(core));
    put(dir + "core_nodes.csv", network::format_node_csv(core));
    put(dir + "sample_edges.csv", network::format_edge_csv(sample));
    if (nc.export_full_graph) {
        put(dir + "graph_edges.csv", network::format_edge_csv(g));
        put(dir + "graph_nodes.csv", network::format_node_csv(g));
    }
    if (g.edge_count() > 0) {
        const auto c = network::eigenvector_centrality(g, nc.centrality_tolerance, nc.centrality_max_iterations);
        kv["centrality_iterations"] = std::to_string(c.iterations_used);
        kv["centrality_converged"] = c.converged ? "true" : "false";
        std::string centrality = "account_id,centrality\n";
        for (std::size_t i = 0; i < c.accounts.size(); ++i) centrality += csv_line({c.accounts[i], format_real(c.scores[i])});
        put(dir + "centrality.csv", centrality);

        std::string influencers = "rank,account_id,screen_name,centrality,bot_score,flagged\n";
        for (const auto& row : network::top_influencers(c, primary_, nc.top_n, threshold_, g.screen_names())) {
            influencers += csv_line({std::to_string(row.rank), row.account_id, row.screen_name, format_real(row.centrality),
                                     optional_real(row.bot_score), row.flagged ? "true" : "false"});
        }
        put(dir + "influencers.csv", influencers);

        const auto p = network::louvain(g, nc.louvain_seed);
        kv["modularity"] = format_real(p.modularity);
        kv["community_count"] = std::to_string(p.community_count());
        std::string passes;
        for (double q : p.pass_modularity) passes += (passes.empty() ? "" : " ") + format_real(q);
        kv["pass_modularity"] = passes;
        std::string members = "account_id,community\n";
        for (std::size_t i = 0; i < p.accounts.size(); ++i) members += csv_line({p.accounts[i], std::to_string(p.assignment[i])});
        put(dir + "communities.csv", members);

        json cards = json::array();
        for (const auto& card : network::community_summary(p, c, corpus_.records, primary_, threshold_, 5,
                                                           nc.community_cards, g.screen_names())) {
            json influencers_json = json::array();
            for (const auto& r : card.influencers) {
                influencers_json.push_back({{"rank", r.rank},
                                            {"account_id", r.account_id},
                                            {"screen_name", r.screen_name},
                                            {"centrality", r.centrality},
                                            {"bot_score", r.bot_score ? json(*r.bot_score) : json(nullptr)},
                                            {"flagged", r.flagged}});
            }
            json tags = json::array();
            for (const auto& [tag, n] : card.top_hashtags) tags.push_back({{"hashtag", tag}, {"count", n}});
            cards.push_back({{"community", card.community},
                             {"size", card.size},
                             {"scored_members", card.scored_members},
                             {"bot_members", card.bot_members},
                             {"bot_fraction", card.bot_fraction ? json(*card.bot_fraction) : json(nullptr)},
                             {"bot_share", network::format_bot_share(card.bot_fraction)},
                             {"influencers", influencers_json},
                             {"top_hashtags", tags}});
        }
        put(dir + "community_cards.json", cards.dump(2) + "\n");
    }
    put(dir + "graph.txt", io::format_key_values(kv));
    mark(section, true, "",
         {{"k_core_k", std::to_string(nc.k_core_k)},
          {"edge_sample_m", std::to_string(nc.edge_sample_m)},
          {"sample_seed", std::to_string(nc.sample_seed)},
          {"louvain_seed", std::to_string(nc.louvain_seed)},
          {"centrality_tolerance", format_real(nc.centrality_tolerance)},
          {"centrality_max_iterations", std::to_string(nc.centrality_max_iterations)},
          {"detector", primary_ ? primary_->detector_name : ""},
          {"threshold", format_real(threshold_)}});
}

void SnapshotBuilder::calibration_section() {
    std::string reason;
    auto labels_path = input(cfg_.bots.labels, reason);
    if (!labels_path || detectors_.empty()) {
        mark("calibration", false, labels_path ? "no detector scores" : reason);
        return;
    }
    const auto labels = botcal::LabeledSample::load(*labels_path);
    io::KeyValues params{{"labels", std::to_string(labels.entries.size())}};
    for (const auto& det : cfg_.bots.detectors) {
        auto it = detectors_.find(det.name);
        if (it == detectors_.end()) continue;
        const auto& table = it->second;
        const auto dir = "calibration/" + det.name + "/";
        const auto sample = botcal::join(table, labels);
        const auto m = botcal::evaluate_at_threshold(sample, det.threshold);
        io::KeyValues metrics{{"threshold", format_real(m.threshold)},
                              {"f1", format_real(m.f1)},
                              {"accuracy", format_real(m.accuracy)},
                              {"precision", format_real(m.precision)},
                              {"recall", format_real(m.recall)},
                              {"roc_auc", optional_real(m.roc_auc)},
                              {"tp", std::to_string(m.tp)},
                              {"fp", std::to_string(m.fp)},
                              {"tn", std::to_string(m.tn)},
                              {"fn", std::to_string(m.fn)},
                              {"precision_undefined", m.precision_undefined ? "true" : "false"},
                              {"recall_undefined", m.recall_undefined ? "true" : "false"}};
        put(dir + "metrics.txt", io::format_key_values(metrics));
        const auto curve = botcal::precision_recall_curve(sample);
        std::string curve_csv = "threshold,precision,recall,f1\n";
        for (const auto& p : curve) {
            curve_csv += csv_line({format_real(p.threshold), format_real(p.precision), format_real(p.recall), format_real(p.f1())});
        }
        put(dir + "pr_curve.csv", curve_csv);
        std::string roc_csv = "threshold,fpr,tpr\n";
        for (const auto& p : botcal::roc_curve(sample)) {
            roc_csv += csv_line({format_real(p.threshold), format_real(p.false_positive_rate), format_real(p.true_positive_rate)});
        }
        put(dir + "roc_curve.csv", roc_csv);
        std::string policies = "policy,threshold,note\n";
        std::vector<double> markers{det.threshold};
        for (const auto& text : cfg_.bots.policies) {
            try {
                const double t = botcal::select_threshold(curve, botcal::ThresholdPolicy::parse(text));
                markers.push_back(t);
                policies += csv_line({text, format_real(t), ""});
            } catch (const botcal::PolicyError& e) {
                policies += csv_line({text, "", e.what()});
            }
        }
        put(dir + "policies.csv", policies);
        const auto density = botcal::score_density(table, markers, cfg_.bots.density_bins);
        std::string density_csv = "bin,lower,upper,count,density\n";
        for (std::size_t b = 0; b < density.bins; ++b) {
            const double width = 1.0 / static_cast<double>(density.bins);
            density_csv += csv_line({std::to_string(b), format_real(static_cast<double>(b) * width),
                                     format_real(static_cast<double>(b + 1) * width), std::to_string(density.counts[b]),
                                     format_real(density.density[b])});
        }
        put(dir + "density.csv", density_csv);
        std::string marker_csv = "threshold,bin\n";
        for (const auto& mk : density.markers) marker_csv += csv_line({format_real(mk.threshold), std::to_string(mk.bin)});
        put(dir + "markers.csv", marker_csv);
        params["detector." + det.name] = format_real(det.threshold);
    }
    mark("calibration", true, "", params);
}

void SnapshotBuilder::creation_section() {
    if (!primary_) {
        mark("creation", false, "no primary detector scores");
        return;
    }
    std::string csv = "date,count,scored,bots,bot_proportion\n";
    for (const auto& [day, bin] : botcal::creation_date_histogram(profiles_, *primary_, threshold_)) {
        csv += csv_line({format_day(day), std::to_string(bin.count), std::to_string(bin.scored), std::to_string(bin.bots),
                         optional_real(bin.bot_proportion)});
    }
    put("creation/histogram.csv", csv);
    io::KeyValues params{{"detector", primary_->detector_name}, {"threshold", format_real(threshold_)}};
    if (cfg_.bots.creation_since) {
        params["since"] = format_day(*cfg_.bots.creation_since);
        params["filter_count"] =
            std::to_string(botcal::filter_count(profiles_, *primary_, *cfg_.bots.creation_since, threshold_));
    }
    mark("creation", true, "", params);
}

void SnapshotBuilder::audit_section() {
    const auto& ac = cfg_.audit;
    std::unique_ptr<audit::AccountStatusClient> client;
    std::string reason = "not configured";
    if (ac.endpoint) {
        client = std::make_unique<audit::HttpClient>(*ac.endpoint);
    } else if (auto p = input(ac.fixture, reason)) {
        client = std::make_unique<audit::FixtureClient>(audit::FixtureClient::load(*p));
    }
    if (!client) {
        mark("audit", false, reason);
        return;
    }
    std::set<std::string> unique_authors;
    for (const auto& r : corpus_.records) unique_authors.insert(r.author_id);
    const std::vector<std::string> population(unique_authors.begin(), unique_authors.end());
    const auto k = std::min(ac.sample_size, population.size());
    if (k == 0) {
        mark("audit", false, "corpus has no accounts");
        return;
    }
    log("auditing " + std::to_string(k) + " accounts");
    const auto ids = audit::sample_accounts(population, k, ac.seed);
    audit::AuditOptions options;
    options.batch_size = ac.batch_size;
    options.parallelism = ac.parallelism;
    auto report = audit::run_audit(ids, *client, options);
    audit::attach_estimates(report, ac.confidence,
                            ac.interval == "wilson" ? audit::ProportionEstimate::Method::Wilson
                                                    : audit::ProportionEstimate::Method::Wald);
    report.activity = audit::suspended_activity(report.suspended_ids, corpus_.records, primary_, threshold_);
    put("audit/report.txt", audit::format_audit_report(report));
    put("audit/summary.txt", audit::format_audit_summary(report));
    mark("audit", true, "",
         {{"population", std::to_string(population.size())},
          {"sample_size", std::to_string(ac.sample_size)},
          {"sample_size_effective", std::to_string(k)},
          {"seed", std::to_string(ac.seed)},
          {"confidence", format_real(ac.confidence)},
          {"interval", ac.interval},
          {"batch_size", std::to_string(ac.batch_size)}});
}

void SnapshotBuilder::characterize_sections() {
    const auto& cc = cfg_.characterize;
    const auto& records = corpus_.records;
    const io::KeyValues scored{{"detector", primary_ ? primary_->detector_name : ""}, {"threshold", format_real(threshold_)}};

    const auto share = characterize::hashtag_marketshare(records, cc.marketshare_top_k, cc.all_hashtag_denominator);
    put("characterize/marketshare/marketshare.csv", characterize::format_marketshare_csv(share));
    mark("characterize.marketshare", true, "",
         {{"top_k", std::to_string(cc.marketshare_top_k)},
          {"denominator", cc.all_hashtag_denominator ? "all" : "top_k"}});

    for (auto field : {characterize::TallyField::Lang, characterize::TallyField::Domain}) {
        const bool lang = field == characterize::TallyField::Lang;
        std::string csv = lang ? "lang,name,count\n" : "domain,count\n";
        for (const auto& [key, n] : characterize::tally(records, field)) {
            csv += lang ? csv_line({key, characterize::language_name(key), std::to_string(n)})
                        : csv_line({key, std::to_string(n)});
        }
        put(std::string("characterize/tally/") + (lang ? "lang.csv" : "domain.csv"), csv);
    }
    mark("characterize.tally", true, "", {});

    auto category_rows = [](const std::map<std::string, characterize::CategoryStat>& stats, std::string_view kind,
                            std::span<const std::string_view> order) {
        std::string out;
        for (auto key : order) {
            const auto& s = stats.at(std::string(key));
            out += csv_line({std::string(kind), std::string(key), std::to_string(s.count), std::to_string(s.accounts),
                             std::to_string(s.scored), std::to_string(s.bots), optional_real(s.bot_proportion)});
        }
        return out;
    };
    std::string reason;
    if (auto p = input(cc.bias_dictionary, reason)) {
        const auto dict = characterize::BiasDictionary::load(*p);
        const auto dist = characterize::bias_distribution(records, dict, primary_, threshold_);
        std::string csv = "kind,category,count,accounts,scored,bots,bot_proportion\n";
        csv += category_rows(dist.bias, "bias", characterize::kBiasCategories);
        csv += category_rows(dist.factual, "factual", characterize::kFactualCategories);
        put("characterize/bias/categories.csv", csv);
        put("characterize/bias/coverage.txt",
            io::format_key_values({{"total_occurrences", std::to_string(dist.total_occurrences)},
                                   {"matched_occurrences", std::to_string(dist.matched_occurrences)},
                                   {"unique_domains", std::to_string(dist.unique_domains)},
                                   {"matched_unique_domains", std::to_string(dist.matched_unique_domains)},
                                   {"coverage", format_real(dist.coverage)},
                                   {"unique_coverage", format_real(dist.unique_coverage)}}));
        auto params = scored;
        params["entries"] = std::to_string(dict.size());
        mark("characterize.bias", true, "", params);
    } else {
        mark("characterize.bias", false, reason);
    }

    if (auto p = input(cc.lexicon, reason)) {
        const auto lex = characterize::AbusiveLexicon::load(*p);
        const auto series = characterize::abusive_series(records, lex, primary_, threshold_);
        std::string csv = "date,count\n";
        for (const auto& [day, n] : series.daily) csv += csv_line({format_day(day), std::to_string(n)});
        put("characterize/abusive/daily.csv", csv);
        auto share_kv = [](io::KeyValues& kv, const std::string& prefix, const characterize::AccountShare& s) {
            kv[prefix + "_accounts"] = std::to_string(s.accounts);
            kv[prefix + "_scored"] = std::to_string(s.scored);
            kv[prefix + "_botlike"] = std::to_string(s.botlike);
            kv[prefix + "_botlike_share"] = optional_real(s.share);
        };
        io::KeyValues kv{{"abusive_tweets", std::to_string(series.abusive_tweets)}};
        share_kv(kv, "abusive", series.abusive_accounts);
        share_kv(kv, "other", series.other_accounts);
        put("characterize/abusive/summary.txt", io::format_key_values(kv));
        auto params = scored;
        params["terms"] = std::to_string(lex.size());
        mark("characterize.abusive", true, "", params);
    } else {
        mark("characterize.abusive", false, reason);
    }

    {
        const auto flags = characterize::flag_analysis(profiles_, primary_, threshold_);
        std::string csv = "flags,combination,frequency,scored,bots,bot_proportion\n";
        for (std::size_t b = 0; b < flags.buckets.size(); ++b) {
            const auto label = b + 1 == flags.buckets.size() ? std::to_string(b + 1) + "+" : std::to_string(b + 1);
            for (const auto& [combo, s] : flags.buckets[b]) {
                csv += csv_line({label, combo, std::to_string(s.frequency), std::to_string(s.scored), std::to_string(s.bots),
                                 optional_real(s.bot_proportion)});
            }
        }
        put("characterize/flags/combinations.csv", csv);
        auto params = scored;
        params["profiles_with_flags"] = std::to_string(flags.profiles_with_flags);
        mark("characterize.flags", true, "", params);
    }

    if (auto p = input(cc.state_media, reason)) {
        const auto dir = characterize::StateMediaDirectory::load(*p);
        const auto amp = characterize::state_media_amplification(records, dir, primary_, threshold_);
        std::string csv = "country,original_count,amplification_count,amplifiers,scored_amplifiers,bot_amplifiers,bot_proportion\n";
        for (const auto& [country, row] : amp.countries) {
            csv += csv_line({country, std::to_string(row.original_count), std::to_string(row.amplification_count),
                             std::to_string(row.amplifiers), std::to_string(row.scored_amplifiers),
                             std::to_string(row.bot_amplifiers), optional_real(row.bot_proportion)});
        }
        put("characterize/statemedia/countries.csv", csv);
        put("characterize/statemedia/totals.txt",
            io::format_key_values({{"original_total", std::to_string(amp.original_total)},
                                   {"amplification_total", std::to_string(amp.amplification_total)}}));
        auto params = scored;
        params["directory_entries"] = std::to_string(dir.size());
        mark("characterize.statemedia", true, "", params);
    } else {
        mark("characterize.statemedia", false, reason);
    }
}

void SnapshotBuilder::topics_section() {
    const auto& tc = cfg_.topics;
    if (!tc.enabled) {
        mark("topics", false, "disabled");
        return;
    }
    const auto docs = topics::build_hashtag_documents(corpus_.records, tc.lang);
    if (docs.empty()) {
        mark("topics", false, "no hashtag documents");
        return;
    }
    log("fitting topic model on " + std::to_string(docs.size()) + " documents");
    topics::LdaOptions options{tc.k, tc.alpha, tc.beta, tc.iterations, tc.seed};
    const auto model = topics::lda_fit(docs, options);
    topics::export_model(model, tmp_ / "topics");
    std::string csv = "topic,caption,accounts,scored,bots,bot_fraction,top_words\n";
    for (const auto& row : topics::topic_report(model, primary_, threshold_, tc.top_words)) {
        std::string words;
        for (const auto& [w, p] : row.top_words) words += (words.empty() ? "" : " ") + w;
        csv += csv_line({std::to_string(row.topic), row.caption(), std::to_string(row.accounts), std::to_string(row.scored),
                         std::to_string(row.bots), optional_real(row.bot_fraction), words});
    }
    put("topics/report.csv", csv);
    mark("topics", true, "",
         {{"k", std::to_string(model.k)},
          {"alpha", format_real(model.alpha)},
          {"beta", format_real(model.beta)},
          {"iterations", std::to_string(model.iterations)},
          {"seed", std::to_string(model.seed)},
          {"lang", tc.lang.value_or("")},
          {"documents", std::to_string(model.doc_count())}});
}

void SnapshotBuilder::botmatch_section() {
    const auto& bc = cfg_.botmatch;
    if (!bc.enabled) {
        mark("botmatch", false, "disabled");
        return;
    }
    log("building document-term matrix");
    const auto dtm = botmatch::build_dtm(corpus_.records, bc.vocabulary, bc.lang);
    if (dtm.size() == 0) {
        mark("botmatch", false, "no accounts pass the language filter");
        return;
    }
    botmatch::export_dtm(dtm, tmp_ / "botmatch");
    std::size_t zero_rows = 0;
    for (std::size_t i = 0; i < dtm.size(); ++i) zero_rows += dtm.zero_row(i) ? 1 : 0;
    mark("botmatch", true, "",
         {{"vocabulary", std::to_string(bc.vocabulary)},
          {"columns", std::to_string(dtm.vocab.size())},
          {"rows", std::to_string(dtm.size())},
          {"zero_rows", std::to_string(zero_rows)},
          {"lang", bc.lang.value_or("")}});
}

std::atomic<std::uint64_t> g_tmp_counter{0};

std::map<std::string, std::string> hash_tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const auto rel = fs::relative(entry.path(), root).generic_string();
        if (rel == "manifest.txt") continue;
        out[rel] = sha256_hex(io::read_file(entry.path()));
    }
    return out;
}

BuildResult SnapshotBuilder::persist() {
    io::KeyValues manifest{{"format", "1"},
                           {"created_at", format_timestamp(created_at_)},
                           {"config_digest", cfg_.digest()}};
    for (const auto& [name, status] : sections_) {
        manifest["section." + name] = status.present ? "present" : "absent: " + status.reason;
    }
    for (const auto& [rel, digest] : hash_tree(tmp_)) manifest["file." + rel] = digest;
    const auto id = manifest_digest(manifest);
    manifest["snapshot_id"] = id;
    put("manifest.txt", io::format_key_values(manifest));

    BuildResult result;
    result.snapshot_id = id;
    result.dir = store_ / id;
    result.sections = sections_;
    std::error_code ec;
    fs::rename(tmp_, result.dir, ec);
    if (ec) {
        if (!fs::exists(result.dir / "manifest.txt")) {
            fs::remove_all(tmp_);
            throw Error("cannot persist snapshot to " + result.dir.string() + ": " + ec.message());
        }
        fs::remove_all(tmp_);
        result.reused = true;
    }
    return result;
}

BuildResult SnapshotBuilder::run() {
    store_ = cfg_.resolve(cfg_.snapshot.store);
    fs::create_directories(store_);
    tmp_ = store_ / (".tmp-" + std::to_string(::getpid()) + "-" + std::to_string(g_tmp_counter++));
    fs::remove_all(tmp_);
    fs::create_directories(tmp_);
    try {
        load_corpus();
        apply_filter();
        for (const auto& [id, p] : corpus_.profiles) profiles_.push_back(p);
        put("config.json", cfg_.canonical_json());
        stats_section();
        scores_section();
        for (auto kind : cfg_.network.kinds) network_section(kind);
        calibration_section();
        creation_section();
        audit_section();
        characterize_sections();
        topics_section();
        botmatch_section();
        return persist();
    } catch (...) {
        std::error_code ec;
        fs::remove_all(tmp_, ec);
        throw;
    }
}

}  // namespace

std::string manifest_digest(const io::KeyValues& manifest) {
    auto copy = manifest;
    copy.erase("snapshot_id");
    return sha256_hex(io::format_key_values(copy));
}

BuildResult snapshot_build(const AnalysisConfig& config, const ProgressFn& progress) {
    return SnapshotBuilder(config, progress).run();
}

void verify_snapshot(const fs::path& dir) {
    const auto manifest = io::parse_key_values(io::read_file(dir / "manifest.txt"));
    std::map<std::string, std::string> expected;
    for (const auto& [key, value] : manifest) {
        if (key.starts_with("file.")) expected[key.substr(5)] = value;
    }
    const auto actual = hash_tree(dir);
    if (actual != expected) throw InputError("snapshot " + dir.string() + ": file hashes do not match the manifest");
    auto it = manifest.find("snapshot_id");
    if (it == manifest.end() || it->second != manifest_digest(manifest)) {
        throw InputError("snapshot " + dir.string() + ": snapshot id does not match the manifest");
    }
}

SnapshotInfo read_snapshot_info(const fs::path& dir) {
    const auto manifest = io::parse_key_values(io::read_file(dir / "manifest.txt"));
    SnapshotInfo info;
    info.dir = dir;
    auto get = [&](const std::string& key) {
        auto it = manifest.find(key);
        if (it == manifest.end()) throw InputError("snapshot manifest " + dir.string() + " lacks " + key);
        return it->second;
    };
    info.snapshot_id = get("snapshot_id");
    info.created_at = get("created_at");
    info.config_digest = get("config_digest");
    for (const auto& [key, value] : manifest) {
        if (!key.starts_with("section.")) continue;
        SectionStatus s;
        s.present = value == "present";
        if (!s.present && value.starts_with("absent: ")) s.reason = value.substr(8);
        info.sections[key.substr(8)] = s;
    }
    return info;
}

std::vector<SnapshotInfo> list_snapshots(const fs::path& store) {
    std::vector<SnapshotInfo> out;
    if (!fs::is_directory(store)) return out;
    for (const auto& entry : fs::directory_iterator(store)) {
        const auto name = entry.path().filename().string();
        if (!entry.is_directory() || name.starts_with(".") || !fs::exists(entry.path() / "manifest.txt")) continue;
        out.push_back(read_snapshot_info(entry.path()));
    }
    std::sort(out.begin(), out.end(), [](const SnapshotInfo& a, const SnapshotInfo& b) {
        return std::tie(a.created_at, a.snapshot_id) < std::tie(b.created_at, b.snapshot_id);
    });
    return out;
}

}  // namespace streamlens::service
