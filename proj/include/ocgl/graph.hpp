#pragma once

// The evolving graph G^t: node-event ingestion, fan-out-bounded ego-graph
// sampling, symmetric normalization and the hop-expansion profiler.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "ocgl/rng.hpp"
#include "ocgl/tensor.hpp"

namespace ocgl {

using NodeId = std::uint32_t;

enum class Split : std::uint8_t { train, val, test };

inline constexpr int kUnlabeled = -1;

/// One arrival: the node id equals the arrival index and every neighbor must
/// already be in the graph.
struct NodeEvent {
  NodeId id = 0;
  std::vector<double> features;
  std::vector<NodeId> neighbors;
  int label = kUnlabeled;
  Split split = Split::train;
  std::optional<std::uint32_t> timestamp;
};

class GrowingGraph {
 public:
  explicit GrowingGraph(std::size_t feature_dim);

  /// Appends the node and its undirected edges. Throws stream_order when the
  /// id is not the next arrival index, dangling_edge when a neighbor is
  /// unknown, dimension on a feature-length mismatch.
  void ingest(const NodeEvent& event);

  [[nodiscard]] std::size_t size() const noexcept { return adjacency_.size(); }
  [[nodiscard]] std::size_t feature_dim() const noexcept { return feature_dim_; }
  [[nodiscard]] std::size_t edge_count() const noexcept { return edge_count_; }

  [[nodiscard]] std::span<const double> features(NodeId v) const;
  [[nodiscard]] std::span<const NodeId> neighbors(NodeId v) const { return adjacency_[v]; }
  [[nodiscard]] std::size_t degree(NodeId v) const { return adjacency_[v].size(); }
  [[nodiscard]] Split split(NodeId v) const { return splits_[v]; }
  [[nodiscard]] std::optional<std::uint32_t> timestamp(NodeId v) const { return timestamps_[v]; }

  /// Label visible to training code: present only for labeled train nodes.
  [[nodiscard]] std::optional<int> train_label(NodeId v) const;
  /// Label for evaluation code paths (any split); kUnlabeled when unknown.
  [[nodiscard]] int eval_label(NodeId v) const { return labels_[v]; }

 private:
  std::size_t feature_dim_;
  std::size_t edge_count_ = 0;
  std::vector<double> features_;
  std::vector<int> labels_;
  std::vector<Split> splits_;
  std::vector<std::optional<std::uint32_t>> timestamps_;
  std::vector<std::vector<NodeId>> adjacency_;
};

/// Fan-out value that keeps every neighbor.
inline constexpr std::size_t kAllNeighbors = std::numeric_limits<std::size_t>::max();

using LocalAdjacency = std::vector<std::vector<std::uint32_t>>;

/// Locally renumbered computation graph of a mini-batch. Local ids are
/// ordered by hop, so the nodes within k hops of the seeds are exactly the
/// local ids below hop_offsets[k].
struct SampledEgoGraph {
  std::vector<NodeId> seeds;                 // as requested, may repeat
  std::vector<std::size_t> seed_rows;        // local id of each seed
  std::vector<std::size_t> hop_offsets;      // size hops+1
  std::vector<NodeId> local_to_global;
  LocalAdjacency adjacency;                  // sorted, with self-loops
  SparseMatrix normalized;                   // Â over local ids
  DenseMatrix features;                      // local id × F

  [[nodiscard]] std::size_t hops() const noexcept { return hop_offsets.size() - 1; }
  [[nodiscard]] std::size_t node_count() const noexcept { return local_to_global.size(); }
  /// Node ids of hop `k` (local), as a half-open range of local ids.
  [[nodiscard]] std::pair<std::size_t, std::size_t> hop_range(std::size_t k) const;
};

/// Samples, per node and per hop, min(degree, fanout) neighbors uniformly
/// without replacement, deduplicating nodes across hops and adding
/// self-loops. Normalization uses degrees within the sampled graph.
SampledEgoGraph sample_ego(const GrowingGraph& graph, std::span<const NodeId> seeds,
                           std::span<const std::size_t> fanouts, Rng& rng);

/// The unsampled `hops`-hop neighborhood, normalized with the degrees of the
/// whole current graph, so that rows of nodes within hops-1 of the seeds
/// equal the corresponding rows of the full-graph Â.
SampledEgoGraph full_ego(const GrowingGraph& graph, std::span<const NodeId> seeds, std::size_t hops);

/// Block-diagonal union of previously built ego graphs, keeping their stored
/// features and normalized values untouched. Local ids are reordered by hop.
SampledEgoGraph merge_egos(std::span<const SampledEgoGraph* const> parts);

/// D̃^{-1/2}(A+I)D̃^{-1/2} where the input already contains the self-loops and
/// D̃ is the row length. Throws contract on asymmetric or loop-free input.
SparseMatrix normalized_adjacency(const LocalAdjacency& adjacency_with_loops);

/// Same normalization with externally supplied self-loop-inclusive degrees.
SparseMatrix normalized_adjacency(const LocalAdjacency& adjacency_with_loops,
                                  std::span<const double> degrees);

/// Closed-form node bound B·(1 + f₁ + f₁f₂ + …) of a sampled ego graph.
std::size_t ego_node_bound(std::size_t batch, std::span<const std::size_t> fanouts);

struct HopProfile {
  std::vector<std::size_t> node_counts;  // |nodes within l hops|, l = 0..l_max
  std::vector<std::size_t> edge_counts;  // edges incident to the (l-1)-hop union; 0 for l = 0
};

HopProfile profile_hops(const GrowingGraph& graph, std::span<const NodeId> batch, std::size_t l_max);

}  // namespace ocgl
