#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library's algorithms; they work from definitions.

#include "streamlens/network.hpp"
#include "streamlens/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

namespace testsupport {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        std::string tmpl = (fs::temp_directory_path() / "streamlens-test-XXXXXX").string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw std::runtime_error("mkdtemp failed");
        path_ = tmpl;
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

inline std::string node_name(std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "n%04zu", i);
    return buf;
}

using WeightedEdges = std::vector<std::tuple<std::string, std::string, std::uint64_t>>;

/// Random directed graph on n nodes with each ordered pair present with probability p.
inline WeightedEdges random_edges(streamlens::Rng& rng, std::size_t n, double p, std::uint64_t max_weight = 1) {
    WeightedEdges edges;
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t v = 0; v < n; ++v) {
            if (u != v && rng.bernoulli(p)) edges.emplace_back(node_name(u), node_name(v), 1 + rng.below(max_weight));
        }
    }
    return edges;
}

/// Adds a random spanning tree so the undirected view is connected.
inline void connect(streamlens::Rng& rng, std::size_t n, WeightedEdges& edges) {
    for (std::size_t v = 1; v < n; ++v) {
        const auto u = rng.below(v);
        if (rng.bernoulli(0.5)) {
            edges.emplace_back(node_name(u), node_name(v), 1);
        } else {
            edges.emplace_back(node_name(v), node_name(u), 1);
        }
    }
}

inline streamlens::network::ConversationGraph graph_of(const WeightedEdges& edges) {
    return streamlens::network::ConversationGraph::from_weighted_edges(streamlens::InteractionKind::Mention, edges);
}

/// Repeatedly delete every node whose in+out distinct-neighbour-edge count is
/// below k until nothing changes.
inline std::set<std::string> kcore_oracle(const WeightedEdges& edges, std::uint64_t k) {
    std::set<std::pair<std::string, std::string>> arcs;
    std::set<std::string> alive;
    for (const auto& [u, v, w] : edges) {
        if (u == v) continue;
        arcs.emplace(u, v);
        alive.insert(u);
        alive.insert(v);
    }
    for (bool changed = true; changed;) {
        changed = false;
        std::map<std::string, std::uint64_t> degree;
        for (const auto& a : alive) degree[a] = 0;
        for (const auto& [u, v] : arcs) {
            if (alive.contains(u) && alive.contains(v)) {
                ++degree[u];
                ++degree[v];
            }
        }
        for (const auto& [node, d] : degree) {
            if (d < k) {
                alive.erase(node);
                changed = true;
            }
        }
    }
    return alive;
}

/// Symmetrized dense adjacency w(u,v) + w(v,u) in graph node order.
inline Eigen::MatrixXd dense_symmetric(const streamlens::network::ConversationGraph& g) {
    const auto n = static_cast<Eigen::Index>(g.node_count());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges()) {
        a(e.src, e.dst) += static_cast<double>(e.weight);
        a(e.dst, e.src) += static_cast<double>(e.weight);
    }
    return a;
}

/// Principal eigenvector of the symmetrized adjacency, non-negative, unit norm.
inline Eigen::VectorXd dense_principal(const streamlens::network::ConversationGraph& g) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(dense_symmetric(g));
    Eigen::VectorXd v = solver.eigenvectors().col(solver.eigenvalues().size() - 1);
    if (v.sum() < 0) v = -v;
    return v.normalized();
}

inline double angle_between(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    // acos loses precision near 1; the chord length does not.
    return 2.0 * std::asin(std::min(1.0, (a.normalized() - b.normalized()).norm() / 2.0));
}

/// Q = 1/(2m) sum_ij [A_ij - k_i k_j / (2m)] delta(c_i, c_j) on the symmetrized graph.
inline double modularity_oracle(const streamlens::network::ConversationGraph& g, const std::vector<std::uint32_t>& c) {
    const auto a = dense_symmetric(g);
    const auto n = a.rows();
    const double two_m = a.sum();
    Eigen::VectorXd k = a.rowwise().sum();
    double q = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (c[i] == c[j]) q += a(i, j) - k(i) * k(j) / two_m;
        }
    }
    return q / two_m;
}

/// Two cliques of `size` nodes (all ordered pairs) joined by a single edge.
inline WeightedEdges two_cliques(std::size_t size) {
    WeightedEdges edges;
    for (std::size_t block = 0; block < 2; ++block) {
        for (std::size_t i = 0; i < size; ++i) {
            for (std::size_t j = 0; j < size; ++j) {
                if (i != j) edges.emplace_back(node_name(block * size + i), node_name(block * size + j), 1);
            }
        }
    }
    edges.emplace_back(node_name(0), node_name(size), 1);
    return edges;
}

struct Confusion {
    std::uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Confusion confusion_oracle(const std::vector<double>& scores, const std::vector<bool>& bot, double t) {
    Confusion c;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool predicted = scores[i] >= t;
        if (predicted && bot[i]) ++c.tp;
        if (predicted && !bot[i]) ++c.fp;
        if (!predicted && !bot[i]) ++c.tn;
        if (!predicted && bot[i]) ++c.fn;
    }
    return c;
}

/// Pairwise Mann-Whitney: P(bot score > human score) + 0.5 P(tie).
inline double auc_oracle(const std::vector<double>& scores, const std::vector<bool>& bot) {
    double wins = 0;
    double pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!bot[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (bot[j]) continue;
            pairs += 1;
            if (scores[i] > scores[j]) wins += 1;
            else if (scores[i] == scores[j]) wins += 0.5;
        }
    }
    return wins / pairs;
}

/// Dense cosine similarity; zero-norm rows give 0.
inline double cosine_oracle(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace testsupport
