#pragma once

#include "streamlens/common.hpp"
#include "streamlens/ingest.hpp"
#include "streamlens/scores.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace streamlens::network {

using NodeIndex = std::uint32_t;

struct Edge {
    NodeIndex src = 0;
    NodeIndex dst = 0;
    std::uint64_t weight = 1;
    bool operator==(const Edge&) const = default;
};

/// Directed, weighted account-to-account interaction graph of one kind.
/// Immutable once built. Nodes are sorted by account id and edges by
/// (src, dst), so two graphs with the same content compare equal.
class ConversationGraph {
public:
    ConversationGraph() = default;

    /// Parallel (src,dst) pairs accumulate; self-loops are dropped; weights
    /// of zero are rejected with InputError.
    static ConversationGraph from_weighted_edges(
        InteractionKind kind, std::span<const std::tuple<std::string, std::string, std::uint64_t>> edges,
        const std::map<std::string, std::string>& screen_names = {});

    InteractionKind kind() const { return kind_; }
    bool directed() const { return true; }
    std::size_t node_count() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const std::vector<std::string>& nodes() const { return nodes_; }
    std::span<const Edge> edges() const { return edges_; }
    const std::string& account(NodeIndex i) const { return nodes_[i]; }
    std::optional<NodeIndex> find(std::string_view account_id) const;
    /// Screen name for a node; empty when never observed.
    std::string_view screen_name(NodeIndex i) const;
    const std::map<std::string, std::string>& screen_names() const { return screen_names_; }
    std::uint64_t total_weight() const;

    /// Subgraph induced by a node subset (given as indices into this graph).
    ConversationGraph induced(std::span<const NodeIndex> keep) const;
    /// Subgraph formed by a subset of edges; nodes are the edge endpoints.
    ConversationGraph with_edges(std::span<const std::size_t> edge_indices) const;

    bool operator==(const ConversationGraph&) const = default;

private:
    InteractionKind kind_ = InteractionKind::Mention;
    std::vector<std::string> nodes_;
    std::vector<Edge> edges_;
    std::map<std::string, std::string> screen_names_;
};

/// src = tweet author, dst = mentioned / retweeted / replied-to / quoted account.
ConversationGraph build_graph(std::span<const ingest::TweetRecord> records, InteractionKind kind);

struct GraphStats {
    std::uint64_t nodes = 0;
    std::uint64_t edges = 0;
    double density = 0.0;
};

/// m / (n (n-1)); 0 when n < 2. InputError when m exceeds n (n-1).
double directed_density(std::uint64_t n, std::uint64_t m);
GraphStats graph_stats(const ConversationGraph& g);

enum class DegreeMode { Total, In, Out };
DegreeMode parse_degree_mode(std::string_view text);

/// Maximal subgraph whose nodes all have (unweighted) degree >= k, by
/// iterative peeling. Disconnected qualifying parts are all retained.
ConversationGraph k_core(const ConversationGraph& g, std::uint64_t k,
                         DegreeMode mode = DegreeMode::Total);

/// Uniform edge sample without replacement, deterministic for a seed.
ConversationGraph sample_edges(const ConversationGraph& g, std::size_t m_target, std::uint64_t seed);

/// Undirected view with w(u,v) + w(v,u) weights, as adjacency lists in node
/// order. Neighbour lists are sorted by node index.
struct SymmetricGraph {
    std::vector<std::vector<std::pair<NodeIndex, double>>> adjacency;
    double total_weight = 0.0;  // sum over unordered pairs
};
SymmetricGraph symmetrize(const ConversationGraph& g);

inline constexpr double kDefaultCentralityTolerance = 1e-10;
inline constexpr int kDefaultCentralityIterations = 1000;

struct CentralityResult {
    std::vector<std::string> accounts;  // same order as the graph's nodes
    std::vector<double> scores;         // unit Euclidean norm, non-negative
    int iterations_used = 0;
    bool converged = false;

    std::optional<double> score(std::string_view account_id) const;
};

/// Power iteration on the symmetrized weighted adjacency. Iterates
/// x <- (A / d_max + I) x with L2 normalisation: the shift keeps bipartite
/// graphs from oscillating and leaves eigenvectors unchanged. Converged when
/// the infinity-norm change drops below `tolerance`.
CentralityResult eigenvector_centrality(const ConversationGraph& g,
                                        double tolerance = kDefaultCentralityTolerance,
                                        int max_iterations = kDefaultCentralityIterations);

struct InfluencerRow {
    std::size_t rank = 0;
    std::string account_id;
    std::string screen_name;
    double centrality = 0.0;
    std::optional<double> bot_score;  // absent when the detector has no score
    bool flagged = false;             // bot_score > threshold
};

/// Descending centrality, ties by account id.
std::vector<InfluencerRow> top_influencers(const CentralityResult& c, const BotScoreTable* bots,
                                           std::size_t top_n, double threshold,
                                           const std::map<std::string, std::string>& screen_names = {});

struct CommunityPartition {
    std::vector<std::string> accounts;     // graph node order
    std::vector<std::uint32_t> assignment;  // community per node; ids ordered by size desc
    double modularity = 0.0;
    std::vector<std::uint64_t> community_sizes;  // indexed by community id
    std::vector<double> pass_modularity;         // Q after each aggregation pass

    std::size_t community_count() const { return community_sizes.size(); }
    std::optional<std::uint32_t> community_of(std::string_view account_id) const;
};

/// Newman-Girvan modularity on the symmetrized graph:
/// Q = sum_c (e_c / m - (d_c / 2m)^2). InputError on a partial assignment or
/// an edgeless graph.
double modularity(const ConversationGraph& g, std::span<const std::uint32_t> assignment);
double modularity(const ConversationGraph& g, const std::map<std::string, std::uint32_t>& assignment);

struct LouvainOptions {
    double min_gain = 1e-12;
    int max_passes = 64;
};

/// Two-phase Louvain (local moves, then aggregation) until no pass improves
/// modularity. Node visit order is reshuffled once per pass from `seed`.
CommunityPartition louvain(const ConversationGraph& g, std::uint64_t seed,
                           const LouvainOptions& options = {});

struct CommunityCard {
    std::uint32_t community = 0;
    std::uint64_t size = 0;
    std::uint64_t scored_members = 0;
    std::uint64_t bot_members = 0;
    std::optional<double> bot_fraction;  // bots / scored members
    std::vector<InfluencerRow> influencers;
    std::vector<std::pair<std::string, std::uint64_t>> top_hashtags;
};

/// Cards for the `max_cards` largest communities. Hashtags are tallied over
/// tweets authored by community members; bots are members scoring above the
/// threshold.
std::vector<CommunityCard> community_summary(const CommunityPartition& p, const CentralityResult& c,
                                             std::span<const ingest::TweetRecord> records,
                                             const BotScoreTable* bots, double threshold,
                                             std::size_t top_n, std::size_t max_cards = 10,
                                             const std::map<std::string, std::string>& screen_names = {});

/// "36.7% Bots" style label; "n/a" when no member is scored.
std::string format_bot_share(const std::optional<double>& fraction);

struct EgoNetwork {
    ConversationGraph graph;
    bool truncated = false;
};

/// Nodes within `hops` (ignoring direction) of an account, breadth first,
/// capped at `max_nodes`. NotFoundError for unknown accounts.
EgoNetwork ego_network(const ConversationGraph& g, std::string_view account_id, int hops,
                       std::size_t max_nodes = 500);

// Edge lists: `src,dst,weight`; node attributes: `account_id,screen_name`.
std::string format_edge_csv(const ConversationGraph& g);
std::string format_node_csv(const ConversationGraph& g);
ConversationGraph parse_edge_csv(InteractionKind kind, std::string_view edges_csv,
                                 std::string_view nodes_csv = {});
ConversationGraph load_edge_csv(InteractionKind kind, const std::filesystem::path& edges,
                                const std::optional<std::filesystem::path>& nodes = std::nullopt);

}  // namespace streamlens::network
