#pragma once

// Static graph arrays and the on-disk ingestion directory:
//   meta.json        num_nodes, feature_dim, num_classes, has_timestamps, format_version
//   features.f32     little-endian float32, row-major num_nodes x feature_dim
//   labels.u32       little-endian uint32 per node, 0xFFFFFFFF = unlabeled
//   edges.u32        little-endian (src, dst) pairs, each undirected edge once, src < dst
//   timestamps.u32   optional, per node
//   order.u32        optional explicit stream permutation

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

namespace ocgl {

inline constexpr std::uint32_t kUnlabeledSentinel = 0xFFFFFFFFu;
inline constexpr int kFormatVersion = 1;

struct StaticGraph {
  std::size_t num_nodes = 0;
  std::size_t feature_dim = 0;
  std::size_t num_classes = 0;
  std::vector<float> features;
  std::vector<std::uint32_t> labels;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> edges;
  std::optional<std::vector<std::uint32_t>> timestamps;
  std::optional<std::vector<std::uint32_t>> order;

  /// Sorted undirected neighbor lists.
  [[nodiscard]] std::vector<std::vector<std::uint32_t>> adjacency() const;

  bool operator==(const StaticGraph&) const = default;
};

/// Checks counts, dimensions, label range and edge canonical form. Throws
/// ErrorKind::format.
void validate(const StaticGraph& graph);

StaticGraph load_dataset(const std::filesystem::path& directory);
void write_dataset(const StaticGraph& graph, const std::filesystem::path& directory);

}  // namespace ocgl
