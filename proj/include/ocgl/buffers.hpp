#pragma once

// Replay memories: a generic reservoir, the frozen embedding memory and the
// node-budgeted memory of sparsified ego graphs.

#include <cstddef>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ocgl/error.hpp"
#include "ocgl/graph.hpp"
#include "ocgl/rng.hpp"

namespace ocgl {

/// Draws min(count, n) distinct indices in [0, n) by a partial Fisher-Yates shuffle.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng);

template <typename T>
class ReservoirBuffer {
 public:
  explicit ReservoirBuffer(std::size_t capacity = 0, Rng rng = Rng(0)) : capacity_(capacity), rng_(rng) {}

  /// Classic reservoir step; returns whether the item was stored.
  bool insert(T item) {
    bool stored = false;
    if (items_.size() < capacity_) {
      items_.push_back(std::move(item));
      stored = true;
    } else if (capacity_ > 0) {
      const std::size_t j = rng_.uniform_index(seen_ + 1);
      if (j < capacity_) {
        items_[j] = std::move(item);
        stored = true;
      }
    }
    ++seen_;
    return stored;
  }

  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] std::size_t size() const noexcept { return items_.size(); }
  [[nodiscard]] bool empty() const noexcept { return items_.empty(); }
  [[nodiscard]] std::size_t seen() const noexcept { return seen_; }
  [[nodiscard]] const std::vector<T>& items() const noexcept { return items_; }
  [[nodiscard]] const Rng& rng() const noexcept { return rng_; }

 private:
  std::size_t capacity_;
  std::size_t seen_ = 0;
  Rng rng_;
  std::vector<T> items_;
};

struct StoredNode {
  NodeId id = 0;
  int label = kUnlabeled;
};

struct EmbeddingEntry {
  std::vector<double> embedding;
  int label = kUnlabeled;
};

using EmbeddingMemory = ReservoirBuffer<EmbeddingEntry>;

struct SubgraphEntry {
  NodeId seed = 0;
  int label = kUnlabeled;
  SampledEgoGraph ego;  // features, adjacency and normalization frozen at insertion
};

/// Reservoir over seeds whose capacity counts stored nodes. A replacement
/// that overflows the node budget evicts further random entries.
class SubgraphMemory {
 public:
  SubgraphMemory(std::size_t node_capacity, std::size_t entry_bound, Rng rng);

  bool insert(SubgraphEntry entry);

  [[nodiscard]] std::size_t node_capacity() const noexcept { return node_capacity_; }
  [[nodiscard]] std::size_t stored_nodes() const noexcept { return stored_nodes_; }
  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
  [[nodiscard]] std::size_t seen() const noexcept { return seen_; }
  [[nodiscard]] const std::vector<SubgraphEntry>& entries() const noexcept { return entries_; }
  [[nodiscard]] const Rng& rng() const noexcept { return rng_; }

 private:
  void evict(std::size_t index);

  std::size_t node_capacity_;
  std::size_t entry_bound_;
  std::size_t stored_nodes_ = 0;
  std::size_t seen_ = 0;
  Rng rng_;
  std::vector<SubgraphEntry> entries_;
};

}  // namespace ocgl
