#pragma once

// Small graphs and naive reference implementations shared by the tests.

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ocgl/dataset.hpp"
#include "ocgl/graph.hpp"
#include "ocgl/rng.hpp"
#include "ocgl/tensor.hpp"

namespace ocgl::testing {

inline DenseMatrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double scale = 1.0) {
  DenseMatrix m(rows, cols);
  for (double& v : m.values()) v = rng.normal(0.0, scale);
  return m;
}

/// Graph from an undirected edge list; node v gets features drawn from `rng`.
inline GrowingGraph graph_from_edges(std::size_t n, const std::vector<std::pair<NodeId, NodeId>>& edges,
                                     std::size_t dim, Rng& rng, const std::vector<int>& labels = {}) {
  std::vector<std::vector<NodeId>> earlier(n);
  for (auto [a, b] : edges) {
    if (a > b) std::swap(a, b);
    earlier[b].push_back(a);
  }
  GrowingGraph g(dim);
  for (NodeId v = 0; v < n; ++v) {
    NodeEvent e;
    e.id = v;
    for (std::size_t d = 0; d < dim; ++d) e.features.push_back(rng.normal());
    e.neighbors = earlier[v];
    e.label = labels.empty() ? static_cast<int>(v % 2) : labels[v];
    g.ingest(e);
  }
  return g;
}

inline std::vector<std::pair<NodeId, NodeId>> random_edges(std::size_t n, double p, Rng& rng) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b)
      if (rng.bernoulli(p)) edges.emplace_back(a, b);
  return edges;
}

/// Dense (A+I) and degree-normalized Â over the whole graph.
inline std::vector<std::vector<double>> dense_normalized(const GrowingGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  for (NodeId v = 0; v < n; ++v) {
    a[v][v] = 1.0;
    for (NodeId u : g.neighbors(v)) a[v][u] = 1.0;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a[i][j] != 0.0)
        a[i][j] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1) * static_cast<double>(g.degree(j) + 1));
  return a;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
  return m;
}

}  // namespace ocgl::testing
