#include "streamlens/api.hpp"
#include "streamlens/audit.hpp"
#include "streamlens/botcal.hpp"
#include "streamlens/botmatch.hpp"
#include "streamlens/characterize.hpp"
#include "streamlens/config.hpp"
#include "streamlens/ingest.hpp"
#include "streamlens/io.hpp"
#include "streamlens/network.hpp"
#include "streamlens/snapshot.hpp"
#include "streamlens/synth.hpp"
#include "streamlens/text.hpp"
#include "streamlens/topics.hpp"

#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace streamlens;

namespace {

struct CorpusArgs {
    std::vector<std::string> inputs;
    std::string keywords;
    std::string countries;
    unsigned threads = 0;
};

void add_corpus_options(CLI::App* cmd, CorpusArgs& a, bool required = true) {
    auto* opt = cmd->add_option("--input", a.inputs, "Corpus files, directories or globs (gzip or plain NDJSON)");
    if (required) opt->required();
    cmd->add_option("--keywords", a.keywords, "Keyword file, one term per line");
    cmd->add_option("--countries", a.countries, "account_id,country annotations");
    cmd->add_option("--threads", a.threads, "Parser threads (0 = all cores)");
}

ingest::Corpus load(const CorpusArgs& a) {
    std::vector<fs::path> files;
    for (const auto& in : a.inputs) {
        auto found = io::expand_inputs(in);
        if (found.empty()) throw InputError("input matches no files: " + in);
        files.insert(files.end(), found.begin(), found.end());
    }
    ingest::LoadOptions options;
    options.threads = a.threads;
    if (!a.keywords.empty()) options.keywords = ingest::load_keywords(a.keywords);
    auto corpus = ingest::load_corpus(files, options);
    if (!a.countries.empty()) ingest::apply_country_annotations(corpus, a.countries);
    return corpus;
}

std::vector<ingest::AccountProfile> profiles_of(const ingest::Corpus& c) {
    std::vector<ingest::AccountProfile> out;
    out.reserve(c.profiles.size());
    for (const auto& [id, p] : c.profiles) out.push_back(p);
    return out;
}

struct ScoreArgs {
    std::string scores;
    std::string detector = "detector";
    double threshold = 0.5;
};

void add_score_options(CLI::App* cmd, ScoreArgs& a, bool required = false) {
    auto* opt = cmd->add_option("--scores", a.scores, "account_id,score file");
    if (required) opt->required();
    cmd->add_option("--detector", a.detector, "Detector name for reports");
    cmd->add_option("--threshold", a.threshold, "Bot score threshold")->check(CLI::Range(0.0, 1.0));
}

std::optional<BotScoreTable> load_optional_scores(const ScoreArgs& a) {
    if (a.scores.empty()) return std::nullopt;
    return load_scores(a.scores, a.detector, a.threshold);
}

void emit(const std::string& out_dir, const std::string& name, const std::string& content, bool print = false) {
    if (!out_dir.empty()) {
        fs::create_directories(out_dir);
        io::write_file_atomic(fs::path(out_dir) / name, content);
    }
    if (print || out_dir.empty()) std::cout << content;
}

std::vector<std::string> read_id_file(const fs::path& path) {
    std::vector<std::string> ids;
    for (auto& line : io::read_lines(path)) {
        auto id = text::trim(line);
        if (id.empty() || id[0] == '#') continue;
        if (auto comma = id.find(','); comma != std::string::npos) id.resize(comma);
        if (ids.empty() && id == "account_id") continue;
        ids.push_back(std::move(id));
    }
    return ids;
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

// ---------------------------------------------------------------- ingest

void setup_ingest(CLI::App& app) {
    auto* cmd = app.add_subcommand("ingest", "Parse a keyword-filtered stream and summarise it");
    static CorpusArgs corpus;
    static std::string out;
    static std::uint64_t cap = ingest::kDefaultDailyCap;
    add_corpus_options(cmd, corpus);
    cmd->add_option("--out", out, "Output directory");
    cmd->add_option("--daily-cap", cap, "Per-day collection ceiling");
    cmd->callback([] {
        const auto c = load(corpus);
        const auto stats = ingest::stream_summary(c.records, cap);
        emit(out, "table.txt", ingest::format_stats_table(stats), true);
        if (!out.empty()) {
            emit(out, "stats.txt", ingest::format_stats_report(stats));
            emit(out, "daily.csv", ingest::format_daily_csv(stats.daily_counts));
        }
        std::cerr << "lines=" << c.counters.lines << " parsed=" << c.counters.parsed
                  << " filtered_out=" << c.counters.filtered_out << " duplicates=" << c.counters.duplicates
                  << " parse_errors=" << c.counters.parse_errors() << "\n";
        for (auto d : stats.days_at_cap) std::cerr << "day at collection cap: " << format_day(d) << "\n";
    });
}

// ---------------------------------------------------------------- network

struct GraphArgs {
    CorpusArgs corpus;
    std::string edges;
    std::string nodes;
    std::string kind = "mention";
};

void add_graph_options(CLI::App* cmd, GraphArgs& a) {
    add_corpus_options(cmd, a.corpus, false);
    cmd->add_option("--edges", a.edges, "Load an src,dst,weight edge list instead of a corpus");
    cmd->add_option("--nodes", a.nodes, "account_id,screen_name node list for --edges");
    cmd->add_option("--kind", a.kind, "mention|retweet|reply|quote");
}

struct LoadedGraph {
    network::ConversationGraph graph;
    std::vector<ingest::TweetRecord> records;
};

LoadedGraph load_graph(const GraphArgs& a) {
    const auto kind = parse_interaction_kind(a.kind);
    if (!a.edges.empty()) {
        return {network::load_edge_csv(kind, a.edges, a.nodes.empty() ? std::nullopt : std::optional<fs::path>(a.nodes)), {}};
    }
    if (a.corpus.inputs.empty()) throw InputError("either --input or --edges is required");
    auto c = load(a.corpus);
    auto g = network::build_graph(c.records, kind);
    return {std::move(g), std::move(c.records)};
}

void print_stats(const char* label, const network::ConversationGraph& g) {
    const auto s = network::graph_stats(g);
    std::printf("%s nodes=%llu edges=%llu density=%s\n", label, static_cast<unsigned long long>(s.nodes),
                static_cast<unsigned long long>(s.edges), format_real(s.density).c_str());
}

std::string influencer_csv(const std::vector<network::InfluencerRow>& rows) {
    std::string out = "rank,account_id,screen_name,centrality,bot_score,flagged\n";
    for (const auto& r : rows) {
        out += io::join_csv({std::to_string(r.rank), r.account_id, r.screen_name, format_real(r.centrality),
                             opt_real(r.bot_score), r.flagged ? "true" : "false"}) +
               "\n";
    }
    return out;
}

void setup_network(CLI::App& app) {
    auto* net = app.add_subcommand("network", "Conversation graphs");
    net->require_subcommand(1);
    static GraphArgs g;
    static std::string out;
    static std::uint64_t k = 0;
    static std::string degree = "total";
    static std::uint64_t seed = 1;
    static std::size_t top_n = 50;
    static std::size_t m = 1'000'000;
    static ScoreArgs scores;

    auto core_of = [](const network::ConversationGraph& graph) {
        if (k == 0) return graph;
        auto core = network::k_core(graph, k, network::parse_degree_mode(degree));
        print_stats("core", core);
        return core;
    };

    auto* build = net->add_subcommand("build", "Build a graph and report its size and density");
    add_graph_options(build, g);
    build->add_option("--out", out, "Write edges.csv and nodes.csv here");
    build->callback([] {
        const auto lg = load_graph(g);
        print_stats("graph", lg.graph);
        if (!out.empty()) {
            emit(out, "edges.csv", network::format_edge_csv(lg.graph));
            emit(out, "nodes.csv", network::format_node_csv(lg.graph));
        }
    });

    auto* kcore = net->add_subcommand("kcore", "Extract the k-core");
    add_graph_options(kcore, g);
    kcore->add_option("--k", k, "Minimum degree")->required();
    kcore->add_option("--degree", degree, "total|in|out");
    kcore->add_option("--out", out, "Write core edges.csv and nodes.csv here");
    kcore->callback([core_of] {
        const auto lg = load_graph(g);
        print_stats("graph", lg.graph);
        const auto core = core_of(lg.graph);
        if (!out.empty()) {
            emit(out, "edges.csv", network::format_edge_csv(core));
            emit(out, "nodes.csv", network::format_node_csv(core));
        }
    });

    auto* sample = net->add_subcommand("sample", "Uniform edge sample");
    add_graph_options(sample, g);
    sample->add_option("--k", k, "Take the k-core first (0 = whole graph)");
    sample->add_option("--m", m, "Edges to keep");
    sample->add_option("--seed", seed, "Sampling seed");
    sample->add_option("--out", out, "Write sampled edges.csv here");
    sample->callback([core_of] {
        const auto lg = load_graph(g);
        const auto s = network::sample_edges(core_of(lg.graph), m, seed);
        print_stats("sample", s);
        if (!out.empty()) emit(out, "edges.csv", network::format_edge_csv(s));
    });

    auto* cent = net->add_subcommand("centrality", "Eigenvector centrality and top influencers");
    add_graph_options(cent, g);
    add_score_options(cent, scores);
    cent->add_option("--k", k, "Take the k-core first (0 = whole graph)");
    cent->add_option("--top-n", top_n, "Influencers to list");
    cent->add_option("--out", out, "Write influencers.csv here");
    cent->callback([core_of] {
        const auto lg = load_graph(g);
        const auto core = core_of(lg.graph);
        const auto c = network::eigenvector_centrality(core);
        const auto bots = load_optional_scores(scores);
        std::fprintf(stderr, "iterations=%d converged=%s\n", c.iterations_used, c.converged ? "true" : "false");
        emit(out, "influencers.csv",
             influencer_csv(network::top_influencers(c, bots ? &*bots : nullptr, top_n, scores.threshold,
                                                     core.screen_names())));
    });

    auto* comm = net->add_subcommand("communities", "Louvain communities with summary cards");
    add_graph_options(comm, g);
    add_score_options(comm, scores);
    comm->add_option("--k", k, "Take the k-core first (0 = whole graph)");
    comm->add_option("--seed", seed, "Louvain seed");
    comm->add_option("--top-n", top_n, "Influencers and hashtags per card");
    comm->add_option("--out", out, "Write communities.csv here");
    comm->callback([core_of] {
        const auto lg = load_graph(g);
        const auto core = core_of(lg.graph);
        const auto p = network::louvain(core, seed);
        const auto c = network::eigenvector_centrality(core);
        const auto bots = load_optional_scores(scores);
        std::printf("communities=%zu modularity=%s\n", p.community_count(), format_real(p.modularity).c_str());
        for (const auto& card : network::community_summary(p, c, lg.records, bots ? &*bots : nullptr,
                                                           scores.threshold, top_n, 10, core.screen_names())) {
            std::printf("community %u  size=%llu  %s\n", card.community, static_cast<unsigned long long>(card.size),
                        network::format_bot_share(card.bot_fraction).c_str());
            for (const auto& inf : card.influencers) {
                std::printf("    @%s  %s\n", inf.screen_name.empty() ? inf.account_id.c_str() : inf.screen_name.c_str(),
                            format_real(inf.centrality).c_str());
            }
            for (const auto& [tag, n] : card.top_hashtags) std::printf("    #%s  %llu\n", tag.c_str(), static_cast<unsigned long long>(n));
        }
        if (!out.empty()) {
            std::string csv = "account_id,community\n";
            for (std::size_t i = 0; i < p.accounts.size(); ++i) {
                csv += io::join_csv({p.accounts[i], std::to_string(p.assignment[i])}) + "\n";
            }
            emit(out, "communities.csv", csv);
        }
    });
}

// ---------------------------------------------------------------- botcal

std::string metrics_text(const botcal::MetricsRow& m) {
    io::KeyValues kv{{"threshold", format_real(m.threshold)},
                     {"f1", format_real(m.f1)},
                     {"accuracy", format_real(m.accuracy)},
                     {"precision", format_real(m.precision)},
                     {"recall", format_real(m.recall)},
                     {"roc_auc", opt_real(m.roc_auc)},
                     {"tp", std::to_string(m.tp)},
                     {"fp", std::to_string(m.fp)},
                     {"tn", std::to_string(m.tn)},
                     {"fn", std::to_string(m.fn)}};
    if (m.precision_undefined) kv["precision_undefined"] = "true";
    if (m.recall_undefined) kv["recall_undefined"] = "true";
    return io::format_key_values(kv);
}

void setup_botcal(CLI::App& app) {
    auto* bc = app.add_subcommand("botcal", "Bot detector threshold calibration");
    bc->require_subcommand(1);
    static ScoreArgs scores;
    static std::string labels;
    static std::string out;
    static std::vector<std::string> policies;
    static std::vector<double> thresholds;
    static std::size_t bins = 100;
    static std::size_t size = 200;
    static std::uint64_t seed = 1;
    static CorpusArgs corpus;
    static std::string since;

    auto sample_of = [] { return botcal::join(load_scores(scores.scores, scores.detector), botcal::LabeledSample::load(labels)); };

    auto* eval = bc->add_subcommand("evaluate", "Confusion metrics at a threshold");
    add_score_options(eval, scores, true);
    eval->add_option("--labels", labels, "account_id,label (bot|human)")->required();
    eval->callback([sample_of] {
        const auto s = sample_of();
        std::cout << metrics_text(botcal::evaluate_at_threshold(s, scores.threshold));
    });

    auto* curve = bc->add_subcommand("curve", "Precision-recall and ROC curves");
    add_score_options(curve, scores, true);
    curve->add_option("--labels", labels, "account_id,label (bot|human)")->required();
    curve->add_option("--out", out, "Write pr_curve.csv and roc_curve.csv here");
    curve->callback([sample_of] {
        const auto s = sample_of();
        std::string pr = "threshold,precision,recall,f1\n";
        for (const auto& p : botcal::precision_recall_curve(s)) {
            pr += io::join_csv({format_real(p.threshold), format_real(p.precision), format_real(p.recall), format_real(p.f1())}) + "\n";
        }
        emit(out, "pr_curve.csv", pr);
        if (!out.empty()) {
            std::string roc = "threshold,fpr,tpr\n";
            for (const auto& p : botcal::roc_curve(s)) {
                roc += io::join_csv({format_real(p.threshold), format_real(p.false_positive_rate), format_real(p.true_positive_rate)}) + "\n";
            }
            emit(out, "roc_curve.csv", roc);
        }
    });

    auto* select = bc->add_subcommand("select", "Choose thresholds by policy");
    add_score_options(select, scores, true);
    select->add_option("--labels", labels, "account_id,label (bot|human)")->required();
    select->add_option("--policy", policies, "max_f1 | precision>=v | recall>=v | fixed:v")->required();
    select->callback([sample_of] {
        const auto s = sample_of();
        const auto curve = botcal::precision_recall_curve(s);
        int failures = 0;
        for (const auto& text : policies) {
            const auto policy = botcal::ThresholdPolicy::parse(text);
            try {
                const double t = botcal::select_threshold(curve, policy);
                const auto m = botcal::evaluate_at_threshold(s, t);
                std::printf("%s threshold=%s f1=%s precision=%s recall=%s\n", policy.to_string().c_str(),
                            format_real(t).c_str(), format_real(m.f1).c_str(), format_real(m.precision).c_str(),
                            format_real(m.recall).c_str());
            } catch (const botcal::PolicyError& e) {
                ++failures;
                std::printf("%s unattainable: %s (best %s)\n", policy.to_string().c_str(), e.what(),
                            opt_real(e.best_attainable()).c_str());
            }
        }
        if (failures) throw CLI::RuntimeError(3);
    });

    auto* density = bc->add_subcommand("density", "Score histogram with threshold markers");
    add_score_options(density, scores, true);
    density->add_option("--bins", bins, "Histogram bins")->check(CLI::PositiveNumber);
    density->add_option("--marker", thresholds, "Threshold markers");
    density->callback([] {
        const auto d = botcal::score_density(load_scores(scores.scores, scores.detector), thresholds, bins);
        std::string csv = "bin,lower,upper,count,density\n";
        for (std::size_t i = 0; i < d.bins; ++i) {
            const double w = 1.0 / static_cast<double>(d.bins);
            csv += io::join_csv({std::to_string(i), format_real(i * w), format_real((i + 1) * w),
                                 std::to_string(d.counts[i]), format_real(d.density[i])}) + "\n";
        }
        std::cout << csv;
        for (const auto& mk : d.markers) std::cerr << "marker " << format_real(mk.threshold) << " in bin " << mk.bin << "\n";
    });

    auto* smp = bc->add_subcommand("sample", "Draw scored accounts for hand labelling");
    add_score_options(smp, scores, true);
    smp->add_option("--size", size, "Accounts to draw");
    smp->add_option("--seed", seed, "Sampling seed");
    smp->callback([] {
        const auto table = load_scores(scores.scores, scores.detector);
        std::vector<std::string> ids;
        for (const auto& [id, s] : table.scores) ids.push_back(id);
        std::sort(ids.begin(), ids.end());
        std::cout << "account_id,score\n";
        for (const auto& id : audit::sample_accounts(ids, std::min(size, ids.size()), seed)) {
            std::cout << io::join_csv({id, format_real(*table.find(id))}) << "\n";
        }
    });

    auto* creation = bc->add_subcommand("creation", "Account creation-date histogram with bot share");
    add_corpus_options(creation, corpus);
    add_score_options(creation, scores, true);
    creation->add_option("--since", since, "Also count bots created on or after YYYY-MM-DD");
    creation->callback([] {
        const auto c = load(corpus);
        const auto profiles = profiles_of(c);
        const auto table = load_scores(scores.scores, scores.detector);
        std::cout << "date,count,scored,bots,bot_proportion\n";
        for (const auto& [day, bin] : botcal::creation_date_histogram(profiles, table, scores.threshold)) {
            std::cout << io::join_csv({format_day(day), std::to_string(bin.count), std::to_string(bin.scored),
                                       std::to_string(bin.bots), opt_real(bin.bot_proportion)})
                      << "\n";
        }
        if (!since.empty()) {
            auto d = parse_day(since);
            if (!d) throw InputError("--since expects YYYY-MM-DD");
            std::cerr << "bots created since " << since << ": "
                      << botcal::filter_count(profiles, table, *d, scores.threshold) << "\n";
        }
    });
}

// ---------------------------------------------------------------- audit

void setup_audit(CLI::App& app) {
    auto* au = app.add_subcommand("audit", "Suspended-account audit");
    au->require_subcommand(1);
    static std::string ids_file, fixture, endpoint, checkpoint, out, interval = "wald";
    static CorpusArgs corpus;
    static std::size_t sample = 1'000'000, batch = audit::kDefaultBatchSize, parallelism = 1;
    static std::uint64_t seed = 1;
    static bool resume = false;
    static double confidence = 0.95;
    static ScoreArgs scores;

    auto* run = au->add_subcommand("run", "Rehydrate a sample and tally suspended versus deleted accounts");
    run->add_option("--ids", ids_file, "Account ids, one per line");
    add_corpus_options(run, corpus, false);
    auto* fx = run->add_option("--fixture", fixture, "account_id,status recorded statuses");
    auto* ep = run->add_option("--endpoint", endpoint, "Account status service base URL");
    fx->excludes(ep);
    run->add_option("--sample", sample, "Accounts to sample");
    run->add_option("--seed", seed, "Sampling seed");
    run->add_option("--batch", batch, "Ids per lookup request")->check(CLI::PositiveNumber);
    run->add_option("--parallelism", parallelism, "Concurrent probes")->check(CLI::PositiveNumber);
    run->add_option("--checkpoint", checkpoint, "Checkpoint file rewritten after every batch");
    run->add_flag("--resume", resume, "Continue from --checkpoint");
    run->add_option("--confidence", confidence, "Interval confidence")->check(CLI::Range(0.0, 1.0));
    run->add_option("--interval", interval, "wald|wilson");
    add_score_options(run, scores);
    run->add_option("--out", out, "Write report.txt and summary.txt here");
    run->callback([] {
        if (fixture.empty() && endpoint.empty()) throw InputError("one of --fixture or --endpoint is required");
        std::vector<std::string> population;
        std::optional<ingest::Corpus> c;
        if (!ids_file.empty()) {
            population = read_id_file(ids_file);
        } else if (!corpus.inputs.empty()) {
            c = load(corpus);
            std::set<std::string> authors;
            for (const auto& r : c->records) authors.insert(r.author_id);
            population.assign(authors.begin(), authors.end());
        } else {
            throw InputError("one of --ids or --input is required");
        }
        const auto ids = audit::sample_accounts(population, std::min(sample, population.size()), seed);
        std::unique_ptr<audit::AccountStatusClient> client;
        if (!fixture.empty()) {
            client = std::make_unique<audit::FixtureClient>(audit::FixtureClient::load(fixture));
        } else {
            client = std::make_unique<audit::HttpClient>(endpoint);
        }
        audit::AuditOptions options;
        options.batch_size = batch;
        options.parallelism = parallelism;
        if (!checkpoint.empty()) options.checkpoint = checkpoint;
        std::optional<audit::AuditProgress> progress;
        if (resume) {
            if (checkpoint.empty()) throw InputError("--resume needs --checkpoint");
            if (fs::exists(checkpoint)) progress = audit::parse_checkpoint(io::read_file(checkpoint));
        }
        audit::AuditReport report;
        try {
            report = audit::run_audit(ids, *client, options, progress);
        } catch (const audit::PartialAuditError& e) {
            std::cerr << "audit interrupted after " << e.progress().cursor << " of " << e.progress().total
                      << " ids: " << e.what() << "\n";
            if (!checkpoint.empty()) std::cerr << "rerun with --resume to continue\n";
            throw CLI::RuntimeError(4);
        }
        audit::attach_estimates(report, confidence,
                                interval == "wilson" ? audit::ProportionEstimate::Method::Wilson
                                                     : audit::ProportionEstimate::Method::Wald);
        if (c && !scores.scores.empty()) {
            const auto table = load_scores(scores.scores, scores.detector, scores.threshold);
            report.activity = audit::suspended_activity(report.suspended_ids, c->records, &table, scores.threshold);
        }
        emit(out, "summary.txt", audit::format_audit_summary(report), true);
        if (!out.empty()) emit(out, "report.txt", audit::format_audit_report(report));
    });

    static std::uint64_t items = 0, page = 0, ppm = 1;
    auto* budget = au->add_subcommand("budget", "Minutes needed to page through a collection");
    budget->add_option("--items", items, "Items to fetch")->required();
    budget->add_option("--page", page, "Items per page")->required();
    budget->add_option("--pages-per-minute", ppm, "Rate limit");
    budget->callback([] { std::cout << format_real(audit::rate_budget(items, page, ppm)) << " minutes\n"; });

    static std::uint64_t hits = 0, n = 0;
    auto* ci = au->add_subcommand("ci", "Proportion with a confidence interval");
    ci->add_option("--hits", hits, "Observed count")->required();
    ci->add_option("--n", n, "Sample size")->required();
    ci->add_option("--confidence", confidence, "Interval confidence");
    ci->add_option("--interval", interval, "wald|wilson");
    ci->callback([] {
        const auto e = audit::proportion_ci(hits, n, confidence,
                                            interval == "wilson" ? audit::ProportionEstimate::Method::Wilson
                                                                 : audit::ProportionEstimate::Method::Wald);
        std::cout << audit::format_percent_ci(e) << "  [" << format_real(e.lower) << ", " << format_real(e.upper) << "]\n";
    });
}

// ---------------------------------------------------------------- characterize

void setup_characterize(CLI::App& app) {
    auto* ch = app.add_subcommand("characterize", "Categorical characterisation tables");
    ch->require_subcommand(1);
    static CorpusArgs corpus;
    static ScoreArgs scores;
    static std::size_t top_k = 12, top = 10;
    static bool all_denominator = false;
    static std::string field = "lang", dict, lexicon, directory;

    auto scored = [] { return load_optional_scores(scores); };

    auto* ms = ch->add_subcommand("marketshare", "Daily share of the top hashtags");
    add_corpus_options(ms, corpus);
    ms->add_option("--top-k", top_k, "Hashtags to track");
    ms->add_flag("--all-hashtag-denominator", all_denominator, "Divide by every hashtag used that day");
    ms->callback([] {
        const auto c = load(corpus);
        std::cout << characterize::format_marketshare_csv(characterize::hashtag_marketshare(c.records, top_k, all_denominator));
    });

    auto* tl = ch->add_subcommand("tally", "Language or domain counts");
    add_corpus_options(tl, corpus);
    tl->add_option("--field", field, "lang|domain");
    tl->add_option("--top", top, "Rows to print");
    tl->callback([] {
        const auto c = load(corpus);
        const auto f = characterize::parse_tally_field(field);
        std::cout << characterize::format_tally_table(characterize::tally(c.records, f), f, top);
    });

    auto* bias = ch->add_subcommand("bias", "Bias and factual categories of shared URLs");
    add_corpus_options(bias, corpus);
    add_score_options(bias, scores);
    bias->add_option("--dict", dict, "domain,bias,factual dictionary")->required();
    bias->callback([scored] {
        const auto c = load(corpus);
        const auto s = scored();
        const auto d = characterize::bias_distribution(c.records, characterize::BiasDictionary::load(dict),
                                                       s ? &*s : nullptr, scores.threshold);
        std::cout << "kind,category,count,accounts,scored,bots,bot_proportion\n";
        auto rows = [](const char* kind, const auto& m) {
            for (const auto& [cat, st] : m) {
                std::cout << io::join_csv({kind, cat, std::to_string(st.count), std::to_string(st.accounts),
                                           std::to_string(st.scored), std::to_string(st.bots), opt_real(st.bot_proportion)})
                          << "\n";
            }
        };
        rows("bias", d.bias);
        rows("factual", d.factual);
        std::cerr << "coverage " << characterize::format_percent(d.coverage) << " of URL occurrences, "
                  << characterize::format_percent(d.unique_coverage) << " of distinct domains\n";
    });

    auto* ab = ch->add_subcommand("abusive", "Daily abusive-language tweets and account bot shares");
    add_corpus_options(ab, corpus);
    add_score_options(ab, scores);
    ab->add_option("--lexicon", lexicon, "Term list, optional lang: prefixes")->required();
    ab->callback([scored] {
        const auto c = load(corpus);
        const auto s = scored();
        const auto a = characterize::abusive_series(c.records, characterize::AbusiveLexicon::load(lexicon),
                                                    s ? &*s : nullptr, scores.threshold);
        std::cout << "date,count\n";
        for (const auto& [day, n] : a.daily) std::cout << format_day(day) << "," << n << "\n";
        std::cerr << "abusive tweets " << a.abusive_tweets << "; abusive accounts " << a.abusive_accounts.accounts
                  << " (" << characterize::format_percent(a.abusive_accounts.share) << " bot-like); other accounts "
                  << a.other_accounts.accounts << " (" << characterize::format_percent(a.other_accounts.share)
                  << " bot-like)\n";
    });

    auto* fl = ch->add_subcommand("flags", "Flag-emoji combinations in profile descriptions");
    add_corpus_options(fl, corpus);
    add_score_options(fl, scores);
    fl->callback([scored] {
        const auto c = load(corpus);
        const auto s = scored();
        const auto f = characterize::flag_analysis(profiles_of(c), s ? &*s : nullptr, scores.threshold);
        std::cout << "flags,combination,frequency,scored,bots,bot_proportion\n";
        for (std::size_t b = 0; b < f.buckets.size(); ++b) {
            const auto label = b + 1 == f.buckets.size() ? std::to_string(b + 1) + "+" : std::to_string(b + 1);
            for (const auto& [combo, st] : f.buckets[b]) {
                std::cout << io::join_csv({label, combo, std::to_string(st.frequency), std::to_string(st.scored),
                                           std::to_string(st.bots), opt_real(st.bot_proportion)})
                          << "\n";
            }
        }
    });

    auto* sm = ch->add_subcommand("statemedia", "Amplification of state-sponsored media accounts");
    add_corpus_options(sm, corpus);
    add_score_options(sm, scores);
    sm->add_option("--directory", directory, "screen_name,country directory")->required();
    sm->callback([scored] {
        const auto c = load(corpus);
        const auto s = scored();
        const auto a = characterize::state_media_amplification(
            c.records, characterize::StateMediaDirectory::load(directory), s ? &*s : nullptr, scores.threshold);
        std::cout << "country,original_count,amplification_count,amplifiers,scored_amplifiers,bot_amplifiers,bot_proportion\n";
        for (const auto& [country, r] : a.countries) {
            std::cout << io::join_csv({country, std::to_string(r.original_count), std::to_string(r.amplification_count),
                                       std::to_string(r.amplifiers), std::to_string(r.scored_amplifiers),
                                       std::to_string(r.bot_amplifiers), opt_real(r.bot_proportion)})
                      << "\n";
        }
        std::cerr << "state media tweets " << a.original_total << ", retweets/mentions " << a.amplification_total << "\n";
    });
}

// ---------------------------------------------------------------- topics

void setup_topics(CLI::App& app) {
    auto* tp = app.add_subcommand("topics", "LDA over per-account hashtag documents");
    tp->require_subcommand(1);
    static CorpusArgs corpus;
    static topics::LdaOptions lda;
    static double alpha = 0;
    static std::string lang = "en", out, model;
    static ScoreArgs scores;
    static std::size_t top_words = 10;

    auto* fit = tp->add_subcommand("fit", "Fit a topic model");
    add_corpus_options(fit, corpus);
    fit->add_option("--k", lda.k, "Topics")->check(CLI::PositiveNumber);
    fit->add_option("--alpha", alpha, "Document-topic prior (default 50/k)");
    fit->add_option("--beta", lda.beta, "Topic-word prior");
    fit->add_option("--iterations", lda.iterations, "Gibbs sweeps");
    fit->add_option("--seed", lda.seed, "Sampler seed");
    fit->add_option("--lang", lang, "Only tweets in this language (empty = all)");
    fit->add_option("--out", out, "Model directory")->required();
    fit->callback([] {
        if (alpha > 0) lda.alpha = alpha;
        const auto c = load(corpus);
        const auto docs = topics::build_hashtag_documents(c.records, lang.empty() ? std::nullopt : std::optional(lang));
        const auto m = topics::lda_fit(docs, lda);
        for (const auto& w : m.warnings) std::cerr << "warning: " << w << "\n";
        topics::export_model(m, out);
        std::cerr << "fitted " << m.k << " topics over " << m.doc_count() << " accounts, " << m.vocab_size() << " hashtags\n";
    });

    auto* report = tp->add_subcommand("report", "Top hashtags and bot share per topic");
    report->add_option("--model", model, "Model directory")->required();
    add_score_options(report, scores);
    report->add_option("--top-words", top_words, "Hashtags per topic");
    report->callback([] {
        const auto m = topics::import_model(model);
        const auto s = load_optional_scores(scores);
        for (const auto& row : topics::topic_report(m, s ? &*s : nullptr, scores.threshold, top_words)) {
            std::cout << row.caption() << "  accounts=" << row.accounts << "\n   ";
            for (const auto& [w, p] : row.top_words) std::cout << " #" << w;
            std::cout << "\n";
        }
    });
}

// ---------------------------------------------------------------- botmatch

void print_session(const botmatch::ExpansionSession& s, const botmatch::DocTermMatrix& dtm) {
    auto name = [&](const std::string& id) {
        const auto row = dtm.find(id);
        return row && !dtm.screen_names[*row].empty() ? "@" + dtm.screen_names[*row] : id;
    };
    std::cout << "round " << s.round() << ": " << s.seeds().size() << " seeds, " << s.accepted().size() << " accepted, "
              << s.rejected().size() << " rejected\n";
    for (std::size_t i = 0; i < s.frontier().size(); ++i) {
        const auto& m = s.frontier()[i];
        std::cout << "  " << i + 1 << ". " << m.account_id << " " << name(m.account_id) << " " << format_real(m.similarity) << "\n";
    }
}

void setup_botmatch(CLI::App& app) {
    auto* bm = app.add_subcommand("botmatch", "Document-term similarity search");
    bm->require_subcommand(1);
    static CorpusArgs corpus;
    static std::string dtm_dir, seed_account, out, lang = "en";
    static std::vector<std::string> seeds;
    static std::size_t top = 20, vocabulary = botmatch::kDefaultVocabulary;

    auto add_source = [](CLI::App* cmd) {
        add_corpus_options(cmd, corpus, false);
        cmd->add_option("--dtm", dtm_dir, "Load an exported document-term matrix");
        cmd->add_option("--vocabulary", vocabulary, "Token columns")->check(CLI::PositiveNumber);
        cmd->add_option("--lang", lang, "Only tweets in this language (empty = all)");
    };
    auto matrix = [] {
        if (!dtm_dir.empty()) return botmatch::import_dtm(dtm_dir);
        if (corpus.inputs.empty()) throw InputError("either --input or --dtm is required");
        const auto c = load(corpus);
        return botmatch::build_dtm(c.records, vocabulary, lang.empty() ? std::nullopt : std::optional(lang));
    };

    auto* build = bm->add_subcommand("build", "Build and export a document-term matrix");
    add_source(build);
    build->add_option("--out", out, "Output directory")->required();
    build->callback([matrix] {
        const auto d = matrix();
        botmatch::export_dtm(d, out);
        std::cerr << d.size() << " accounts x " << d.vocab.size() << " tokens\n";
    });

    auto* query = bm->add_subcommand("query", "Accounts most similar to a seed");
    add_source(query);
    query->add_option("--seed-account", seed_account, "Account id or screen name")->required();
    query->add_option("--top", top, "Matches to list");
    query->callback([matrix] {
        const auto d = matrix();
        const auto seed = d.accounts[d.resolve(seed_account)];
        std::cout << "rank,account_id,screen_name,similarity\n";
        std::size_t rank = 0;
        for (const auto& m : botmatch::bot_match_query(d, seed, top)) {
            std::cout << io::join_csv({std::to_string(++rank), m.account_id, d.screen_names[*d.find(m.account_id)],
                                       format_real(m.similarity)})
                      << "\n";
        }
    });

    auto* session = bm->add_subcommand("session", "Interactive expansion: step [n], accept <ids>, reject <ids>, show, quit");
    add_source(session);
    session->add_option("--seed-account", seeds, "Seed accounts (id or screen name)")->required();
    session->add_option("--top", top, "Frontier size per step");
    session->callback([matrix] {
        const auto d = matrix();
        std::vector<std::string> resolved;
        for (const auto& s : seeds) resolved.push_back(d.accounts[d.resolve(s)]);
        botmatch::ExpansionSession s(d, resolved);
        std::string line;
        while (std::cout << "> " << std::flush, std::getline(std::cin, line)) {
            std::istringstream in(line);
            std::string verb;
            in >> verb;
            std::vector<std::string> args;
            for (std::string a; in >> a;) args.push_back(a);
            try {
                if (verb == "step") {
                    s.step(d, args.empty() ? top : std::stoul(args[0]));
                } else if (verb == "accept" || verb == "reject") {
                    for (auto& a : args) {
                        // frontier positions are accepted as shorthand
                        if (std::all_of(a.begin(), a.end(), ::isdigit) && !d.find(a)) {
                            const auto i = std::stoul(a);
                            if (i >= 1 && i <= s.frontier().size()) a = s.frontier()[i - 1].account_id;
                        }
                    }
                    verb == "accept" ? s.accept(args) : s.reject(args);
                } else if (verb == "quit" || verb == "exit") {
                    break;
                } else if (!verb.empty() && verb != "show") {
                    std::cout << "commands: step [n], accept <ids>, reject <ids>, show, quit\n";
                    continue;
                }
                if (!verb.empty()) print_session(s, d);
            } catch (const std::exception& e) {
                std::cout << "error: " << e.what() << "\n";
            }
        }
        std::cout << "accepted:";
        for (const auto& a : s.accepted()) std::cout << " " << a;
        std::cout << "\n";
    });
}

// ---------------------------------------------------------------- pipeline / serve / synth

service::HttpServer* g_server = nullptr;

void on_signal(int) {
    if (g_server) g_server->stop();
}

void setup_service(CLI::App& app) {
    static std::string config, store, host = "127.0.0.1", dir;
    static int port = 8080;
    static bool quiet = false;
    static unsigned threads = 0;

    auto* pipeline = app.add_subcommand("pipeline", "Build analysis snapshots");
    pipeline->require_subcommand(1);
    auto* run = pipeline->add_subcommand("run", "Run every configured section and persist a snapshot");
    run->add_option("--config", config, "Analysis config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--store", store, "Override the snapshot store directory");
    run->add_option("--threads", threads, "Parser threads (0 = all cores)");
    run->add_flag("--quiet", quiet, "No progress messages");
    run->callback([] {
        auto cfg = service::AnalysisConfig::load(config);
        if (!store.empty()) cfg.snapshot.store = fs::absolute(store);
        if (threads) cfg.corpus.threads = threads;
        const auto result = service::snapshot_build(cfg, [](std::string_view m) {
            if (!quiet) std::cerr << m << "\n";
        });
        for (const auto& [name, st] : result.sections) {
            std::cerr << "  " << name << ": " << (st.present ? "present" : "absent (" + st.reason + ")") << "\n";
        }
        std::cout << result.snapshot_id << (result.reused ? " (unchanged)" : "") << "\n";
    });
    auto* verify = pipeline->add_subcommand("verify", "Check a snapshot's file hashes against its manifest");
    verify->add_option("dir", dir, "Snapshot directory")->required();
    verify->callback([] {
        service::verify_snapshot(dir);
        std::cout << "ok\n";
    });
    auto* list = pipeline->add_subcommand("list", "List snapshots in a store");
    list->add_option("--store", store, "Snapshot store")->required();
    list->callback([] {
        for (const auto& s : service::list_snapshots(store)) {
            std::size_t present = 0;
            for (const auto& [n, st] : s.sections) present += st.present;
            std::cout << s.snapshot_id << "  " << s.created_at << "  " << present << "/" << s.sections.size()
                      << " sections\n";
        }
    });

    auto* serve = app.add_subcommand("serve", "Serve a snapshot store over HTTP");
    serve->add_option("--store", store, "Snapshot store")->required()->check(CLI::ExistingDirectory);
    serve->add_option("--port", port, "Port (0 picks a free one)");
    serve->add_option("--host", host, "Bind address");
    serve->callback([] {
        service::ApiService api(store);
        service::HttpServer server(api);
        const int bound = server.bind(host, port);
        g_server = &server;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        std::cerr << "serving " << store << " on http://" << host << ":" << bound << "/api/snapshots\n";
        server.listen();
        g_server = nullptr;
    });

    static synth::SynthConfig sc;
    static std::string out;
    static std::size_t shards = 4;
    auto* sy = app.add_subcommand("synth", "Write a synthetic corpus with every side input and a pipeline config");
    sy->add_option("--out", out, "Output directory")->required();
    sy->add_option("--tweets", sc.tweets, "Tweets");
    sy->add_option("--users", sc.users, "Accounts");
    sy->add_option("--groups", sc.groups, "Planted communities");
    sy->add_option("--days", sc.days, "Days covered");
    sy->add_option("--seed", sc.seed, "Generator seed");
    sy->add_option("--shards", shards, "Corpus files");
    sy->callback([] {
        const auto corpus = synth::generate(sc);
        synth::BundleOptions options;
        options.shards = shards;
        const auto paths = synth::write_bundle(corpus, out, options);
        std::cout << paths.config.string() << "\n";
    });
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Stream forensics toolkit for social-media information operations"};
    app.require_subcommand(1);
    setup_ingest(app);
    setup_network(app);
    setup_botcal(app);
    setup_audit(app);
    setup_characterize(app);
    setup_topics(app);
    setup_botmatch(app);
    setup_service(app);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return 2;
    } catch (const NotFoundError& e) {
        std::cerr << "not found: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
