#include "streamlens/network.hpp"

#include "streamlens/io.hpp"
#include "streamlens/rng.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <unordered_map>

namespace streamlens::network {

namespace {

struct PairHash {
    std::size_t operator()(const std::pair<std::string, std::string>& p) const noexcept {
        const std::size_t h1 = std::hash<std::string>{}(p.first);
        return h1 ^ (std::hash<std::string>{}(p.second) + 0x9e3779b97f4a7c15ull + (h1 << 6) + (h1 >> 2));
    }
};

}  // namespace

ConversationGraph ConversationGraph::from_weighted_edges(
    InteractionKind kind, std::span<const std::tuple<std::string, std::string, std::uint64_t>> edges,
    const std::map<std::string, std::string>& screen_names) {
    std::unordered_map<std::pair<std::string, std::string>, std::uint64_t, PairHash> weights;
    for (const auto& [src, dst, w] : edges) {
        if (w == 0) throw InputError("edge " + src + "->" + dst + " has zero weight");
        if (src == dst) continue;
        weights[{src, dst}] += w;
    }
    ConversationGraph g;
    g.kind_ = kind;
    for (const auto& [key, w] : weights) {
        g.nodes_.push_back(key.first);
        g.nodes_.push_back(key.second);
    }
    std::sort(g.nodes_.begin(), g.nodes_.end());
    g.nodes_.erase(std::unique(g.nodes_.begin(), g.nodes_.end()), g.nodes_.end());
    g.edges_.reserve(weights.size());
    for (const auto& [key, w] : weights) {
        g.edges_.push_back({*g.find(key.first), *g.find(key.second), w});
    }
    std::sort(g.edges_.begin(), g.edges_.end(), [](const Edge& a, const Edge& b) {
        return std::tie(a.src, a.dst) < std::tie(b.src, b.dst);
    });
    for (const auto& node : g.nodes_) {
        if (auto it = screen_names.find(node); it != screen_names.end() && !it->second.empty()) {
            g.screen_names_.emplace(node, it->second);
        }
    }
    return g;
}

std::optional<NodeIndex> ConversationGraph::find(std::string_view account_id) const {
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), account_id,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == nodes_.end() || *it != account_id) return std::nullopt;
    return static_cast<NodeIndex>(it - nodes_.begin());
}

std::string_view ConversationGraph::screen_name(NodeIndex i) const {
    auto it = screen_names_.find(nodes_[i]);
    return it == screen_names_.end() ? std::string_view{} : std::string_view{it->second};
}

std::uint64_t ConversationGraph::total_weight() const {
    std::uint64_t total = 0;
    for (const auto& e : edges_) total += e.weight;
    return total;
}

ConversationGraph ConversationGraph::induced(std::span<const NodeIndex> keep) const {
    std::vector<NodeIndex> sorted(keep.begin(), keep.end());
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::int64_t> remap(nodes_.size(), -1);
    ConversationGraph g;
    g.kind_ = kind_;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        remap[sorted[i]] = static_cast<std::int64_t>(i);
        g.nodes_.push_back(nodes_[sorted[i]]);
        if (auto it = screen_names_.find(nodes_[sorted[i]]); it != screen_names_.end()) {
            g.screen_names_.insert(*it);
        }
    }
    for (const auto& e : edges_) {
        if (remap[e.src] >= 0 && remap[e.dst] >= 0) {
            g.edges_.push_back({static_cast<NodeIndex>(remap[e.src]),
                                static_cast<NodeIndex>(remap[e.dst]), e.weight});
        }
    }
    return g;
}

ConversationGraph ConversationGraph::with_edges(std::span<const std::size_t> edge_indices) const {
    std::vector<std::size_t> sorted(edge_indices.begin(), edge_indices.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<char> used(nodes_.size(), 0);
    for (auto i : sorted) {
        used[edges_.at(i).src] = 1;
        used[edges_[i].dst] = 1;
    }
    std::vector<std::int64_t> remap(nodes_.size(), -1);
    ConversationGraph g;
    g.kind_ = kind_;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!used[i]) continue;
        remap[i] = static_cast<std::int64_t>(g.nodes_.size());
        g.nodes_.push_back(nodes_[i]);
        if (auto it = screen_names_.find(nodes_[i]); it != screen_names_.end()) {
            g.screen_names_.insert(*it);
        }
    }
    for (auto i : sorted) {
        const auto& e = edges_[i];
        g.edges_.push_back({static_cast<NodeIndex>(remap[e.src]), static_cast<NodeIndex>(remap[e.dst]),
                            e.weight});
    }
    return g;
}

ConversationGraph build_graph(std::span<const ingest::TweetRecord> records, InteractionKind kind) {
    std::vector<std::tuple<std::string, std::string, std::uint64_t>> edges;
    std::map<std::string, std::string> names;
    auto add = [&](const ingest::TweetRecord& r, const ingest::AccountRef& target) {
        if (target.account_id.empty()) return;
        edges.emplace_back(r.author_id, target.account_id, 1);
        if (!target.screen_name.empty()) names.try_emplace(target.account_id, target.screen_name);
    };
    for (const auto& r : records) {
        if (!r.screen_name.empty()) names.insert_or_assign(r.author_id, r.screen_name);
        const bool is_retweet = r.retweeted_id.has_value();
        switch (kind) {
            case InteractionKind::Mention:
                for (const auto& m : r.mentions) add(r, m);
                break;
            case InteractionKind::Retweet:
                if (is_retweet && r.retweeted_author) add(r, *r.retweeted_author);
                break;
            // A retweet carries the original's quote/reply references; those
            // interactions belong to the original author, not the retweeter.
            case InteractionKind::Reply:
                if (!is_retweet && r.reply_to_id && r.reply_to_author) add(r, *r.reply_to_author);
                break;
            case InteractionKind::Quote:
                if (!is_retweet && r.quoted_id && r.quoted_author) add(r, *r.quoted_author);
                break;
        }
    }
    return ConversationGraph::from_weighted_edges(kind, edges, names);
}

double directed_density(std::uint64_t n, std::uint64_t m) {
    if (n < 2) {
        if (m > 0) throw InputError("directed_density: edges present with fewer than 2 nodes");
        return 0.0;
    }
    const long double max_edges = static_cast<long double>(n) * static_cast<long double>(n - 1);
    if (static_cast<long double>(m) > max_edges) {
        throw InputError("directed_density: " + std::to_string(m) + " edges exceed n(n-1) for n=" +
                         std::to_string(n));
    }
    return static_cast<double>(static_cast<long double>(m) / max_edges);
}

GraphStats graph_stats(const ConversationGraph& g) {
    return {g.node_count(), g.edge_count(), directed_density(g.node_count(), g.edge_count())};
}

DegreeMode parse_degree_mode(std::string_view text) {
    if (text == "total") return DegreeMode::Total;
    if (text == "in") return DegreeMode::In;
    if (text == "out") return DegreeMode::Out;
    throw ConfigError("degree", "expected total|in|out, got '" + std::string(text) + "'");
}

ConversationGraph k_core(const ConversationGraph& g, std::uint64_t k, DegreeMode mode) {
    const std::size_t n = g.node_count();
    std::vector<std::uint64_t> degree(n, 0);
    std::vector<std::vector<NodeIndex>> out_nb(n), in_nb(n);
    for (const auto& e : g.edges()) {
        out_nb[e.src].push_back(e.dst);
        in_nb[e.dst].push_back(e.src);
        if (mode != DegreeMode::In) ++degree[e.src];
        if (mode != DegreeMode::Out) ++degree[e.dst];
    }
    std::vector<char> removed(n, 0);
    std::vector<NodeIndex> queue;
    for (NodeIndex v = 0; v < n; ++v) {
        if (degree[v] < k) {
            removed[v] = 1;
            queue.push_back(v);
        }
    }
    // Removing v lowers the degree of every neighbour whose count included
    // the connecting edge.
    auto drop = [&](NodeIndex u) {
        if (removed[u]) return;
        if (--degree[u] < k) {
            removed[u] = 1;
            queue.push_back(u);
        }
    };
    while (!queue.empty()) {
        const NodeIndex v = queue.back();
        queue.pop_back();
        if (mode != DegreeMode::Out) {
            for (auto u : out_nb[v]) drop(u);  // edge v->u counted in u's in-degree
        }
        if (mode != DegreeMode::In) {
            for (auto u : in_nb[v]) drop(u);  // edge u->v counted in u's out-degree
        }
    }
    std::vector<NodeIndex> keep;
    for (NodeIndex v = 0; v < n; ++v) {
        if (!removed[v]) keep.push_back(v);
    }
    return g.induced(keep);
}

ConversationGraph sample_edges(const ConversationGraph& g, std::size_t m_target, std::uint64_t seed) {
    if (m_target > g.edge_count()) {
        throw InputError("sample_edges: requested " + std::to_string(m_target) + " of " +
                         std::to_string(g.edge_count()) + " edges");
    }
    Rng rng(seed);
    const auto picked = rng.sample_indices(g.edge_count(), m_target);
    return g.with_edges(picked);
}

SymmetricGraph symmetrize(const ConversationGraph& g) {
    SymmetricGraph s;
    s.adjacency.resize(g.node_count());
    for (const auto& e : g.edges()) {
        const double w = static_cast<double>(e.weight);
        s.adjacency[e.src].emplace_back(e.dst, w);
        s.adjacency[e.dst].emplace_back(e.src, w);
        s.total_weight += w;
    }
    for (auto& nb : s.adjacency) {
        std::sort(nb.begin(), nb.end());
        // Merge u->v and v->u into one entry.
        std::size_t out = 0;
        for (std::size_t i = 0; i < nb.size(); ++i) {
            if (out > 0 && nb[out - 1].first == nb[i].first) {
                nb[out - 1].second += nb[i].second;
            } else {
                nb[out++] = nb[i];
            }
        }
        nb.resize(out);
    }
    return s;
}

std::optional<double> CentralityResult::score(std::string_view account_id) const {
    auto it = std::lower_bound(accounts.begin(), accounts.end(), account_id,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == accounts.end() || *it != account_id) return std::nullopt;
    return scores[static_cast<std::size_t>(it - accounts.begin())];
}

CentralityResult eigenvector_centrality(const ConversationGraph& g, double tolerance, int max_iterations) {
    if (g.node_count() == 0) throw InputError("eigenvector_centrality: empty graph");
    if (!(tolerance > 0)) throw InputError("eigenvector_centrality: tolerance must be positive");
    const std::size_t n = g.node_count();
    auto sym = symmetrize(g);
    double max_degree = 0.0;
    for (const auto& nb : sym.adjacency) {
        double d = 0.0;
        for (const auto& [v, w] : nb) d += w;
        max_degree = std::max(max_degree, d);
    }
    // Normalising by the largest degree makes the iteration identical under
    // uniform integer rescaling of the weights.
    if (max_degree > 0) {
        for (auto& nb : sym.adjacency) {
            for (auto& [v, w] : nb) w /= max_degree;
        }
    }

    CentralityResult result;
    result.accounts = g.nodes();
    std::vector<double> x(n, 1.0 / std::sqrt(static_cast<double>(n)));
    std::vector<double> y(n);
    for (int iter = 1; iter <= max_iterations; ++iter) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (const auto& [v, w] : sym.adjacency[i]) acc += w * x[v];
            y[i] = x[i] + acc;
            norm += y[i] * y[i];
        }
        norm = std::sqrt(norm);
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            y[i] /= norm;
            delta = std::max(delta, std::abs(y[i] - x[i]));
        }
        x.swap(y);
        result.iterations_used = iter;
        if (delta < tolerance) {
            result.converged = true;
            break;
        }
    }
    result.scores = std::move(x);
    return result;
}

std::vector<InfluencerRow> top_influencers(const CentralityResult& c, const BotScoreTable* bots,
                                           std::size_t top_n, double threshold,
                                           const std::map<std::string, std::string>& screen_names) {
    if (top_n == 0) throw InputError("top_influencers: top_n must be at least 1");
    std::vector<std::size_t> order(c.accounts.size());
    std::iota(order.begin(), order.end(), 0);
    const auto keep = std::min(top_n, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(keep), order.end(),
                      [&](std::size_t a, std::size_t b) {
                          if (c.scores[a] != c.scores[b]) return c.scores[a] > c.scores[b];
                          return c.accounts[a] < c.accounts[b];
                      });
    std::vector<InfluencerRow> rows;
    for (std::size_t i = 0; i < keep; ++i) {
        const auto idx = order[i];
        InfluencerRow row;
        row.rank = i + 1;
        row.account_id = c.accounts[idx];
        if (auto it = screen_names.find(row.account_id); it != screen_names.end()) {
            row.screen_name = it->second;
        }
        row.centrality = c.scores[idx];
        if (bots != nullptr) row.bot_score = bots->find(row.account_id);
        row.flagged = row.bot_score && *row.bot_score > threshold;
        rows.push_back(std::move(row));
    }
    return rows;
}

std::optional<std::uint32_t> CommunityPartition::community_of(std::string_view account_id) const {
    auto it = std::lower_bound(accounts.begin(), accounts.end(), account_id,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == accounts.end() || *it != account_id) return std::nullopt;
    return assignment[static_cast<std::size_t>(it - accounts.begin())];
}

double modularity(const ConversationGraph& g, std::span<const std::uint32_t> assignment) {
    if (assignment.size() != g.node_count()) {
        throw InputError("modularity: assignment covers " + std::to_string(assignment.size()) + " of " +
                         std::to_string(g.node_count()) + " nodes");
    }
    const double m = static_cast<double>(g.total_weight());
    if (m == 0.0) throw InputError("modularity: graph has no edges");
    std::unordered_map<std::uint32_t, double> internal, degree;
    for (const auto& e : g.edges()) {
        const double w = static_cast<double>(e.weight);
        degree[assignment[e.src]] += w;
        degree[assignment[e.dst]] += w;
        if (assignment[e.src] == assignment[e.dst]) internal[assignment[e.src]] += w;
    }
    std::vector<std::uint32_t> ids;
    for (const auto& [c, d] : degree) ids.push_back(c);
    std::sort(ids.begin(), ids.end());
    double q = 0.0;
    for (auto c : ids) {
        const double frac = degree[c] / (2.0 * m);
        q += internal[c] / m - frac * frac;
    }
    return q;
}

double modularity(const ConversationGraph& g, const std::map<std::string, std::uint32_t>& assignment) {
    std::vector<std::uint32_t> dense(g.node_count());
    for (NodeIndex i = 0; i < g.node_count(); ++i) {
        auto it = assignment.find(g.account(i));
        if (it == assignment.end()) {
            throw InputError("modularity: account " + g.account(i) + " has no community");
        }
        dense[i] = it->second;
    }
    return modularity(g, dense);
}

namespace {

struct LevelGraph {
    std::vector<std::vector<std::pair<std::uint32_t, double>>> adjacency;  // no self entries
    std::vector<double> self_loop;
    std::vector<double> degree;  // includes twice the self loop
    double m = 0.0;
};

LevelGraph base_level(const ConversationGraph& g) {
    auto sym = symmetrize(g);
    LevelGraph level;
    level.m = sym.total_weight;
    level.self_loop.assign(g.node_count(), 0.0);
    level.degree.assign(g.node_count(), 0.0);
    level.adjacency.resize(g.node_count());
    for (std::size_t u = 0; u < g.node_count(); ++u) {
        for (const auto& [v, w] : sym.adjacency[u]) {
            level.adjacency[u].emplace_back(v, w);
            level.degree[u] += w;
        }
    }
    return level;
}

// Local-move phase: returns a compact community label per level node.
std::vector<std::uint32_t> local_moves(const LevelGraph& level, Rng& rng, double min_gain, bool& moved) {
    const std::size_t n = level.adjacency.size();
    std::vector<std::uint32_t> comm(n);
    std::iota(comm.begin(), comm.end(), 0u);
    std::vector<double> tot = level.degree;
    std::vector<NodeIndex> order(n);
    std::iota(order.begin(), order.end(), 0u);
    rng.shuffle(order);

    std::vector<double> link(n, 0.0);
    std::vector<std::uint32_t> touched;
    const double two_m = 2.0 * level.m;
    moved = false;
    bool improved = true;
    while (improved) {
        improved = false;
        for (auto u : order) {
            const std::uint32_t current = comm[u];
            const double k_u = level.degree[u];
            touched.clear();
            for (const auto& [v, w] : level.adjacency[u]) {
                const auto c = comm[v];
                if (link[c] == 0.0) touched.push_back(c);
                link[c] += w;
            }
            tot[current] -= k_u;
            const double stay_gain = link[current] - tot[current] * k_u / two_m;
            std::uint32_t best = current;
            double best_gain = stay_gain;
            for (auto c : touched) {
                if (c == current) continue;
                const double gain = link[c] - tot[c] * k_u / two_m;
                if (gain > best_gain) {
                    best_gain = gain;
                    best = c;
                }
            }
            if (best != current && (best_gain - stay_gain) / level.m <= min_gain) best = current;
            tot[best] += k_u;
            comm[u] = best;
            if (best != current) {
                moved = true;
                improved = true;
            }
            for (auto c : touched) link[c] = 0.0;
        }
    }
    // Compact labels by first appearance in node order.
    std::vector<std::int64_t> relabel(n, -1);
    std::uint32_t next = 0;
    for (auto& c : comm) {
        if (relabel[c] < 0) relabel[c] = next++;
        c = static_cast<std::uint32_t>(relabel[c]);
    }
    return comm;
}

LevelGraph aggregate(const LevelGraph& level, std::span<const std::uint32_t> comm) {
    const std::uint32_t count = comm.empty() ? 0 : *std::max_element(comm.begin(), comm.end()) + 1;
    LevelGraph next;
    next.m = level.m;
    next.self_loop.assign(count, 0.0);
    next.degree.assign(count, 0.0);
    next.adjacency.resize(count);
    std::vector<std::map<std::uint32_t, double>> links(count);
    for (std::size_t u = 0; u < level.adjacency.size(); ++u) {
        const auto cu = comm[u];
        next.self_loop[cu] += level.self_loop[u];
        next.degree[cu] += level.degree[u];
        for (const auto& [v, w] : level.adjacency[u]) {
            const auto cv = comm[v];
            if (cu == cv) {
                next.self_loop[cu] += w / 2.0;  // each internal edge is listed from both ends
            } else {
                links[cu][cv] += w;
            }
        }
    }
    for (std::uint32_t c = 0; c < count; ++c) {
        next.adjacency[c].assign(links[c].begin(), links[c].end());
    }
    return next;
}

}  // namespace

CommunityPartition louvain(const ConversationGraph& g, std::uint64_t seed, const LouvainOptions& options) {
    if (g.edge_count() == 0) throw InputError("louvain: graph has no edges");
    Rng rng(seed);
    LevelGraph level = base_level(g);
    std::vector<std::uint32_t> membership(g.node_count());
    std::iota(membership.begin(), membership.end(), 0u);
    CommunityPartition p;
    p.accounts = g.nodes();

    for (int pass = 0; pass < options.max_passes; ++pass) {
        bool moved = false;
        const auto comm = local_moves(level, rng, options.min_gain, moved);
        if (!moved) break;
        for (auto& c : membership) c = comm[c];
        p.pass_modularity.push_back(modularity(g, membership));
        level = aggregate(level, comm);
    }

    // Community ids ordered by size (desc), ties by lowest member index.
    const std::uint32_t count = *std::max_element(membership.begin(), membership.end()) + 1;
    std::vector<std::uint64_t> size(count, 0);
    std::vector<std::size_t> first(count, g.node_count());
    for (std::size_t i = 0; i < membership.size(); ++i) {
        ++size[membership[i]];
        first[membership[i]] = std::min(first[membership[i]], i);
    }
    std::vector<std::uint32_t> order(count);
    std::iota(order.begin(), order.end(), 0u);
    std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
        if (size[a] != size[b]) return size[a] > size[b];
        return first[a] < first[b];
    });
    std::vector<std::uint32_t> rank(count);
    for (std::uint32_t r = 0; r < count; ++r) rank[order[r]] = r;
    p.assignment.resize(membership.size());
    for (std::size_t i = 0; i < membership.size(); ++i) p.assignment[i] = rank[membership[i]];
    p.community_sizes.resize(count);
    for (std::uint32_t r = 0; r < count; ++r) p.community_sizes[r] = size[order[r]];
    p.modularity = modularity(g, p.assignment);
    return p;
}

std::vector<CommunityCard> community_summary(const CommunityPartition& p, const CentralityResult& c,
                                             std::span<const ingest::TweetRecord> records,
                                             const BotScoreTable* bots, double threshold,
                                             std::size_t top_n, std::size_t max_cards,
                                             const std::map<std::string, std::string>& screen_names) {
    const std::size_t cards = std::min(max_cards, p.community_count());
    std::vector<CommunityCard> out(cards);
    std::vector<std::vector<std::size_t>> members(cards);
    for (std::size_t i = 0; i < p.assignment.size(); ++i) {
        if (p.assignment[i] < cards) members[p.assignment[i]].push_back(i);
    }
    std::vector<std::map<std::string, std::uint64_t>> tags(cards);
    for (const auto& r : records) {
        auto community = p.community_of(r.author_id);
        if (!community || *community >= cards) continue;
        for (const auto& h : r.hashtags) ++tags[*community][h];
    }
    for (std::uint32_t id = 0; id < cards; ++id) {
        auto& card = out[id];
        card.community = id;
        card.size = p.community_sizes[id];
        CentralityResult sub;
        for (auto i : members[id]) {
            const auto& account = p.accounts[i];
            if (bots != nullptr) {
                if (auto s = bots->find(account)) {
                    ++card.scored_members;
                    if (*s > threshold) ++card.bot_members;
                }
            }
            if (auto score = c.score(account)) {
                sub.accounts.push_back(account);
                sub.scores.push_back(*score);
            }
        }
        if (card.scored_members > 0) {
            card.bot_fraction = static_cast<double>(card.bot_members) / static_cast<double>(card.scored_members);
        }
        if (!sub.accounts.empty() && top_n > 0) {
            card.influencers = top_influencers(sub, bots, top_n, threshold, screen_names);
        }
        std::vector<std::pair<std::string, std::uint64_t>> ranked(tags[id].begin(), tags[id].end());
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        if (ranked.size() > top_n) ranked.resize(top_n);
        card.top_hashtags = std::move(ranked);
    }
    return out;
}

std::string format_bot_share(const std::optional<double>& fraction) {
    if (!fraction) return "n/a";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%% Bots", *fraction * 100.0);
    return buf;
}

EgoNetwork ego_network(const ConversationGraph& g, std::string_view account_id, int hops,
                       std::size_t max_nodes) {
    auto start = g.find(account_id);
    if (!start) throw NotFoundError("account " + std::string(account_id) + " not in graph");
    if (hops < 0) throw InputError("ego_network: hops must be non-negative");
    std::vector<std::vector<NodeIndex>> nb(g.node_count());
    for (const auto& e : g.edges()) {
        nb[e.src].push_back(e.dst);
        nb[e.dst].push_back(e.src);
    }
    for (auto& list : nb) {
        std::sort(list.begin(), list.end());
        list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    EgoNetwork ego;
    std::vector<char> seen(g.node_count(), 0);
    std::vector<NodeIndex> keep{*start};
    seen[*start] = 1;
    std::vector<NodeIndex> frontier{*start};
    for (int h = 0; h < hops && !frontier.empty() && !ego.truncated; ++h) {
        std::vector<NodeIndex> next;
        for (auto u : frontier) {
            for (auto v : nb[u]) {
                if (seen[v]) continue;
                if (keep.size() >= max_nodes) {
                    ego.truncated = true;
                    break;
                }
                seen[v] = 1;
                keep.push_back(v);
                next.push_back(v);
            }
            if (ego.truncated) break;
        }
        frontier = std::move(next);
    }
    ego.graph = g.induced(keep);
    return ego;
}

std::string format_edge_csv(const ConversationGraph& g) {
    std::string out = "src,dst,weight\n";
    for (const auto& e : g.edges()) {
        out += io::csv_escape(g.account(e.src)) + "," + io::csv_escape(g.account(e.dst)) + "," +
               std::to_string(e.weight) + "\n";
    }
    return out;
}

std::string format_node_csv(const ConversationGraph& g) {
    std::string out = "account_id,screen_name\n";
    for (NodeIndex i = 0; i < g.node_count(); ++i) {
        out += io::csv_escape(g.account(i)) + "," + io::csv_escape(g.screen_name(i)) + "\n";
    }
    return out;
}

ConversationGraph parse_edge_csv(InteractionKind kind, std::string_view edges_csv, std::string_view nodes_csv) {
    const auto table = io::parse_csv(edges_csv, "edges");
    const auto src = table.column("src"), dst = table.column("dst"), weight = table.column("weight");
    std::vector<std::tuple<std::string, std::string, std::uint64_t>> edges;
    for (const auto& row : table.rows) {
        std::uint64_t w = 0;
        try {
            w = std::stoull(row[weight]);
        } catch (const std::exception&) {
            throw InputError("edges: bad weight '" + row[weight] + "'");
        }
        edges.emplace_back(row[src], row[dst], w);
    }
    std::map<std::string, std::string> names;
    if (!nodes_csv.empty()) {
        const auto nodes = io::parse_csv(nodes_csv, "nodes");
        const auto id = nodes.column("account_id"), name = nodes.column("screen_name");
        for (const auto& row : nodes.rows) names[row[id]] = row[name];
    }
    return ConversationGraph::from_weighted_edges(kind, edges, names);
}

ConversationGraph load_edge_csv(InteractionKind kind, const std::filesystem::path& edges,
                                const std::optional<std::filesystem::path>& nodes) {
    return parse_edge_csv(kind, io::read_file(edges), nodes ? io::read_file(*nodes) : std::string{});
}

}  // namespace streamlens::network
