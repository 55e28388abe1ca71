#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "graphcpd/random.hpp"

namespace graphcpd {

/// Undirected simple graph on nodes {0, ..., n-1}, stored as a sorted edge
/// list of pairs (i, j) with i < j. Self-loops and duplicates are rejected.
class Graph {
 public:
  Graph(int n, std::vector<std::pair<int, int>> edges)
      : n_(n), edges_(std::move(edges)) {
    if (n_ < 1) throw std::invalid_argument("Graph: node count must be positive");
    for (auto& [i, j] : edges_) {
      if (i == j) throw std::invalid_argument("Graph: self-loops are not allowed");
      if (i < 0 || j < 0 || i >= n_ || j >= n_)
        throw std::invalid_argument("Graph: node index out of range");
      if (i > j) std::swap(i, j);
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end())
      throw std::invalid_argument("Graph: duplicate edge");
  }

  int num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool has_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges_.begin(), edges_.end(), std::make_pair(i, j));
  }

  std::vector<int> degrees() const {
    std::vector<int> deg(n_, 0);
    for (const auto& [i, j] : edges_) {
      ++deg[i];
      ++deg[j];
    }
    return deg;
  }

 private:
  int n_;
  std::vector<std::pair<int, int>> edges_;
};

/// Erdos-Renyi graph: each of the n(n-1)/2 node pairs is an edge
/// independently with probability p. Pairs are visited in lexicographic
/// order, so a fixed seed gives a fixed graph.
inline Graph erdos_renyi(int n, double p, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("erdos_renyi: n must be positive");
  if (!(p >= 0.0 && p <= 1.0))
    throw std::invalid_argument("erdos_renyi: p must be in [0, 1]");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<std::pair<int, int>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (unif(rng) < p) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

/// Preferential-attachment graph. Growth starts from m isolated seed nodes;
/// every later node attaches to m distinct existing nodes, each drawn with
/// probability proportional to max(degree, 1) so that isolated nodes remain
/// reachable. With m = 1 the result is a tree on n-1 edges.
inline Graph barabasi_albert(int n, int m, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("barabasi_albert: n must be positive");
  if (m < 1 || m >= n)
    throw std::invalid_argument("barabasi_albert: require 1 <= m < n");
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<int> degree(n, 0);
  std::vector<char> taken(n, 0);
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(n - m) * m);
  for (int v = m; v < n; ++v) {
    std::fill(taken.begin(), taken.begin() + v, 0);
    for (int picked = 0; picked < m; ++picked) {
      double total = 0.0;
      for (int u = 0; u < v; ++u)
        if (!taken[u]) total += std::max(degree[u], 1);
      double r = unif(rng) * total;
      int target = -1;
      for (int u = 0; u < v; ++u) {
        if (taken[u]) continue;
        target = u;
        r -= std::max(degree[u], 1);
        if (r < 0.0) break;
      }
      taken[target] = 1;
      edges.emplace_back(target, v);
      ++degree[target];
      ++degree[v];
    }
  }
  return Graph(n, std::move(edges));
}

/// Replace the subgraph induced by nodes {0, ..., n0-1} of `base` with a
/// fresh Erdos-Renyi draw at density q; all edges leaving the block are kept.
inline Graph planted_dense_block(const Graph& base, int n0, double q,
                                 std::uint64_t seed) {
  const int n = base.num_nodes();
  if (n0 < 1 || n0 > n)
    throw std::invalid_argument("planted_dense_block: cutoff out of range");
  if (!(q >= 0.0 && q <= 1.0))
    throw std::invalid_argument("planted_dense_block: q must be in [0, 1]");
  std::vector<std::pair<int, int>> edges;
  for (const auto& e : base.edges())
    if (e.second >= n0) edges.push_back(e);
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < n0; ++i)
    for (int j = i + 1; j < n0; ++j)
      if (unif(rng) < q) edges.emplace_back(i, j);
  return Graph(n, std::move(edges));
}

enum class ShiftKind { Adjacency, Laplacian };

/// Dense symmetric shift operator of a graph: its adjacency matrix or
/// combinatorial Laplacian D - A.
class ShiftOperator {
 public:
  ShiftOperator(const Graph& g, ShiftKind kind) : kind_(kind) {
    const int n = g.num_nodes();
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [i, j] : g.edges()) {
      a(i, j) = 1.0;
      a(j, i) = 1.0;
    }
    if (kind == ShiftKind::Adjacency) {
      matrix_ = std::move(a);
    } else {
      Eigen::VectorXd deg = a.rowwise().sum();
      matrix_ = Eigen::MatrixXd(deg.asDiagonal());
      matrix_ -= a;
    }
  }

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  ShiftKind kind() const { return kind_; }
  int dim() const { return static_cast<int>(matrix_.rows()); }

 private:
  ShiftKind kind_;
  Eigen::MatrixXd matrix_;
};

inline ShiftOperator shift_operator(const Graph& g, ShiftKind kind) {
  return ShiftOperator(g, kind);
}

}  // namespace graphcpd
