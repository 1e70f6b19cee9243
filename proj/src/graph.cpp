#include "ocgl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "ocgl/error.hpp"

namespace ocgl {

GrowingGraph::GrowingGraph(std::size_t feature_dim) : feature_dim_(feature_dim) {}

void GrowingGraph::ingest(const NodeEvent& event) {
  require(event.id == adjacency_.size(), ErrorKind::stream_order,
          "node " + std::to_string(event.id) + " arrived while the graph holds " +
              std::to_string(adjacency_.size()) + " nodes");
  require(event.features.size() == feature_dim_, ErrorKind::dimension,
          "node " + std::to_string(event.id) + " has " + std::to_string(event.features.size()) +
              " features, expected " + std::to_string(feature_dim_));
  for (std::size_t i = 0; i < event.neighbors.size(); ++i) {
    const NodeId u = event.neighbors[i];
    require(u < event.id, ErrorKind::dangling_edge,
            "node " + std::to_string(event.id) + " links to unknown node " + std::to_string(u));
    for (std::size_t j = 0; j < i; ++j)
      require(event.neighbors[j] != u, ErrorKind::contract,
              "node " + std::to_string(event.id) + " lists neighbor " + std::to_string(u) + " twice");
  }

  features_.insert(features_.end(), event.features.begin(), event.features.end());
  labels_.push_back(event.label);
  splits_.push_back(event.split);
  timestamps_.push_back(event.timestamp);
  adjacency_.emplace_back(event.neighbors.begin(), event.neighbors.end());
  for (NodeId u : event.neighbors) adjacency_[u].push_back(event.id);
  edge_count_ += event.neighbors.size();
}

std::span<const double> GrowingGraph::features(NodeId v) const {
  return {features_.data() + static_cast<std::size_t>(v) * feature_dim_, feature_dim_};
}

std::optional<int> GrowingGraph::train_label(NodeId v) const {
  if (splits_[v] != Split::train || labels_[v] == kUnlabeled) return std::nullopt;
  return labels_[v];
}

std::pair<std::size_t, std::size_t> SampledEgoGraph::hop_range(std::size_t k) const {
  if (k == 0) return {0, hop_offsets[0]};
  return {hop_offsets[k - 1], hop_offsets[k]};
}

std::size_t ego_node_bound(std::size_t batch, std::span<const std::size_t> fanouts) {
  std::size_t total = 1;
  std::size_t layer = 1;
  for (std::size_t f : fanouts) {
    if (f == kAllNeighbors) return kAllNeighbors;
    layer *= f;
    total += layer;
  }
  return batch * total;
}

namespace {

std::uint64_t edge_key(std::uint32_t a, std::uint32_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | b;
}

// BFS over the growing graph shared by the sampled and full variants. Fills
// everything but the normalized matrix.
SampledEgoGraph expand(const GrowingGraph& graph, std::span<const NodeId> seeds,
                       std::span<const std::size_t> fanouts, Rng* rng) {
  require(!seeds.empty(), ErrorKind::empty_batch, "cannot build an ego graph without seeds");
  SampledEgoGraph ego;
  ego.seeds.assign(seeds.begin(), seeds.end());
  std::unordered_map<NodeId, std::uint32_t> local;
  local.reserve(seeds.size() * 16);

  auto local_id = [&](NodeId v) -> std::uint32_t {
    auto [it, inserted] = local.try_emplace(v, static_cast<std::uint32_t>(ego.local_to_global.size()));
    if (inserted) {
      ego.local_to_global.push_back(v);
      ego.adjacency.emplace_back();
    }
    return it->second;
  };

  for (NodeId s : seeds) {
    require(s < graph.size(), ErrorKind::contract, "seed " + std::to_string(s) + " is not in the graph");
    ego.seed_rows.push_back(local_id(s));
  }
  ego.hop_offsets.push_back(ego.local_to_global.size());

  std::unordered_set<std::uint64_t> edges;
  std::vector<NodeId> pool;
  for (std::size_t hop = 0; hop < fanouts.size(); ++hop) {
    const auto [first, last] = ego.hop_range(hop);
    const std::size_t fanout = fanouts[hop];
    for (std::size_t u = first; u < last; ++u) {
      const auto neighbors = graph.neighbors(ego.local_to_global[u]);
      std::span<const NodeId> chosen = neighbors;
      if (fanout < neighbors.size()) {
        // Partial Fisher-Yates: the first `fanout` slots are a uniform sample
        // without replacement.
        pool.assign(neighbors.begin(), neighbors.end());
        for (std::size_t i = 0; i < fanout; ++i) {
          const std::size_t j = i + rng->uniform_index(pool.size() - i);
          std::swap(pool[i], pool[j]);
        }
        chosen = std::span<const NodeId>(pool.data(), fanout);
      }
      for (NodeId w : chosen) {
        const std::uint32_t lw = local_id(w);
        const auto lu = static_cast<std::uint32_t>(u);
        if (edges.insert(edge_key(lu, lw)).second) {
          ego.adjacency[lu].push_back(lw);
          ego.adjacency[lw].push_back(lu);
        }
      }
    }
    ego.hop_offsets.push_back(ego.local_to_global.size());
  }

  for (std::size_t v = 0; v < ego.adjacency.size(); ++v) {
    ego.adjacency[v].push_back(static_cast<std::uint32_t>(v));
    std::sort(ego.adjacency[v].begin(), ego.adjacency[v].end());
  }

  ego.features = DenseMatrix(ego.node_count(), graph.feature_dim());
  for (std::size_t v = 0; v < ego.node_count(); ++v) {
    const auto x = graph.features(ego.local_to_global[v]);
    std::copy(x.begin(), x.end(), ego.features.row(v).begin());
  }
  return ego;
}

}  // namespace

SampledEgoGraph sample_ego(const GrowingGraph& graph, std::span<const NodeId> seeds,
                           std::span<const std::size_t> fanouts, Rng& rng) {
  SampledEgoGraph ego = expand(graph, seeds, fanouts, &rng);
  const std::size_t unique_seeds = ego.hop_offsets[0];
  require(ego.node_count() <= ego_node_bound(unique_seeds, fanouts), ErrorKind::contract,
          "sampled ego graph exceeds its closed-form node bound");
  ego.normalized = normalized_adjacency(ego.adjacency);
  return ego;
}

SampledEgoGraph full_ego(const GrowingGraph& graph, std::span<const NodeId> seeds, std::size_t hops) {
  const std::vector<std::size_t> fanouts(hops, kAllNeighbors);
  SampledEgoGraph ego = expand(graph, seeds, fanouts, nullptr);
  std::vector<double> degrees(ego.node_count());
  for (std::size_t v = 0; v < ego.node_count(); ++v)
    degrees[v] = static_cast<double>(graph.degree(ego.local_to_global[v]) + 1);
  ego.normalized = normalized_adjacency(ego.adjacency, degrees);
  return ego;
}

SparseMatrix normalized_adjacency(const LocalAdjacency& adjacency_with_loops) {
  std::vector<double> degrees(adjacency_with_loops.size());
  for (std::size_t v = 0; v < adjacency_with_loops.size(); ++v)
    degrees[v] = static_cast<double>(adjacency_with_loops[v].size());
  return normalized_adjacency(adjacency_with_loops, degrees);
}

SparseMatrix normalized_adjacency(const LocalAdjacency& adjacency_with_loops,
                                  std::span<const double> degrees) {
  const std::size_t n = adjacency_with_loops.size();
  require(degrees.size() == n, ErrorKind::dimension, "one degree per node required");
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> values;
  for (std::size_t u = 0; u < n; ++u) {
    const auto& row = adjacency_with_loops[u];
    require(std::binary_search(row.begin(), row.end(), static_cast<std::uint32_t>(u)), ErrorKind::contract,
            "adjacency row " + std::to_string(u) + " lacks its self-loop");
    for (std::size_t k = 0; k < row.size(); ++k) {
      const std::uint32_t w = row[k];
      require(w < n, ErrorKind::contract, "adjacency references an unknown local node");
      require(k == 0 || row[k - 1] < w, ErrorKind::contract, "adjacency rows must be sorted and unique");
      const auto& back = adjacency_with_loops[w];
      require(std::binary_search(back.begin(), back.end(), static_cast<std::uint32_t>(u)), ErrorKind::contract,
              "adjacency is not symmetric");
      cols.push_back(w);
      values.push_back(1.0 / std::sqrt(degrees[u] * degrees[w]));
    }
    offsets.push_back(cols.size());
  }
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::move(values));
}

SampledEgoGraph merge_egos(std::span<const SampledEgoGraph* const> parts) {
  require(!parts.empty(), ErrorKind::empty_batch, "nothing to merge");
  std::size_t hops = 0;
  std::size_t total = 0;
  std::size_t feature_dim = parts.front()->features.cols();
  for (const auto* part : parts) {
    hops = std::max(hops, part->hops());
    total += part->node_count();
    require(part->features.cols() == feature_dim, ErrorKind::dimension, "ego graphs disagree on feature width");
  }

  // new_id[p][old local id]
  std::vector<std::vector<std::uint32_t>> new_id(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p) new_id[p].resize(parts[p]->node_count());

  SampledEgoGraph merged;
  merged.local_to_global.reserve(total);
  for (std::size_t k = 0; k <= hops; ++k) {
    for (std::size_t p = 0; p < parts.size(); ++p) {
      if (k > parts[p]->hops()) continue;
      const auto [first, last] = parts[p]->hop_range(k);
      for (std::size_t v = first; v < last; ++v) {
        new_id[p][v] = static_cast<std::uint32_t>(merged.local_to_global.size());
        merged.local_to_global.push_back(parts[p]->local_to_global[v]);
      }
    }
    merged.hop_offsets.push_back(merged.local_to_global.size());
  }

  merged.adjacency.resize(total);
  merged.features = DenseMatrix(total, feature_dim);
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows(total);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto& part = *parts[p];
    for (NodeId s : part.seeds) merged.seeds.push_back(s);
    for (std::size_t r : part.seed_rows) merged.seed_rows.push_back(new_id[p][r]);
    const auto offsets = part.normalized.row_offsets();
    const auto cols = part.normalized.col_indices();
    const auto vals = part.normalized.values();
    for (std::size_t v = 0; v < part.node_count(); ++v) {
      const std::uint32_t nv = new_id[p][v];
      for (std::uint32_t w : part.adjacency[v]) merged.adjacency[nv].push_back(new_id[p][w]);
      std::sort(merged.adjacency[nv].begin(), merged.adjacency[nv].end());
      for (std::size_t k = offsets[v]; k < offsets[v + 1]; ++k) rows[nv].emplace_back(new_id[p][cols[k]], vals[k]);
      const auto x = part.features.row(v);
      std::copy(x.begin(), x.end(), merged.features.row(nv).begin());
    }
  }

  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> values;
  for (auto& row : rows) {
    std::sort(row.begin(), row.end());
    for (const auto& [c, v] : row) {
      cols.push_back(c);
      values.push_back(v);
    }
    offsets.push_back(cols.size());
  }
  merged.normalized = SparseMatrix(total, total, std::move(offsets), std::move(cols), std::move(values));
  return merged;
}

HopProfile profile_hops(const GrowingGraph& graph, std::span<const NodeId> batch, std::size_t l_max) {
  require(!batch.empty(), ErrorKind::empty_batch, "profile_hops needs a nonempty batch");
  HopProfile profile;
  std::vector<char> reached(graph.size(), 0);
  std::vector<NodeId> frontier;
  for (NodeId v : batch) {
    require(v < graph.size(), ErrorKind::contract, "batch node outside the graph");
    if (!reached[v]) {
      reached[v] = 1;
      frontier.push_back(v);
    }
  }
  std::size_t reached_count = frontier.size();
  profile.node_counts.push_back(reached_count);
  profile.edge_counts.push_back(0);

  // Edges incident to the current union, counted once each.
  std::size_t incident = 0;
  std::vector<NodeId> next;
  for (std::size_t hop = 1; hop <= l_max; ++hop) {
    // Nodes of `frontier` just joined the union: every edge touching them is
    // new to the incident set unless its other endpoint joined earlier, or
    // also belongs to the frontier (then it is seen twice).
    std::size_t doubled_inner = 0;
    for (NodeId u : frontier) {
      for (NodeId w : graph.neighbors(u)) {
        if (reached[w] == 2) continue;  // counted when w joined
        if (reached[w] == 1) {
          ++doubled_inner;
        } else {
          ++incident;
        }
      }
    }
    incident += doubled_inner / 2;
    for (NodeId u : frontier) reached[u] = 2;
    profile.edge_counts.push_back(incident);

    next.clear();
    for (NodeId u : frontier)
      for (NodeId w : graph.neighbors(u))
        if (!reached[w]) {
          reached[w] = 1;
          next.push_back(w);
        }
    reached_count += next.size();
    profile.node_counts.push_back(reached_count);
    frontier.swap(next);
  }
  return profile;
}

}  // namespace ocgl
