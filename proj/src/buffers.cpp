#include "ocgl/buffers.hpp"

#include <string>

namespace ocgl {

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t count, Rng& rng) {
  count = std::min(count, n);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + rng.uniform_index(n - i)]);
  pool.resize(count);
  return pool;
}

SubgraphMemory::SubgraphMemory(std::size_t node_capacity, std::size_t entry_bound, Rng rng)
    : node_capacity_(node_capacity), entry_bound_(entry_bound), rng_(rng) {
  require(node_capacity_ >= entry_bound_, ErrorKind::config,
          "subgraph memory of " + std::to_string(node_capacity_) + " nodes cannot hold one entry of up to " +
              std::to_string(entry_bound_) + " nodes");
}

void SubgraphMemory::evict(std::size_t index) {
  stored_nodes_ -= entries_[index].ego.node_count();
  entries_[index] = std::move(entries_.back());
  entries_.pop_back();
}

bool SubgraphMemory::insert(SubgraphEntry entry) {
  const std::size_t nodes = entry.ego.node_count();
  require(nodes <= entry_bound_, ErrorKind::contract,
          "stored subgraph has " + std::to_string(nodes) + " nodes, budget allows " + std::to_string(entry_bound_));
  bool stored = false;
  if (stored_nodes_ + nodes <= node_capacity_) {
    entries_.push_back(std::move(entry));
    stored_nodes_ += nodes;
    stored = true;
  } else {
    const std::size_t j = rng_.uniform_index(seen_ + 1);
    if (j < entries_.size()) {
      stored_nodes_ -= entries_[j].ego.node_count();
      entries_[j] = std::move(entry);
      stored_nodes_ += nodes;
      std::size_t keep = j;
      while (stored_nodes_ > node_capacity_) {
        std::size_t victim = rng_.uniform_index(entries_.size() - 1);
        if (victim >= keep) ++victim;
        const bool keep_moves = keep == entries_.size() - 1;
        evict(victim);
        if (keep_moves) keep = victim;
      }
      stored = true;
    }
  }
  ++seen_;
  return stored;
}

}  // namespace ocgl
