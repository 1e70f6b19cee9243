#include "ocgl/dataset.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "ocgl/error.hpp"

namespace ocgl {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

namespace fs = std::filesystem;

std::vector<std::vector<std::uint32_t>> StaticGraph::adjacency() const {
  std::vector<std::vector<std::uint32_t>> adj(num_nodes);
  for (const auto& [u, v] : edges) {
    adj[u].push_back(v);
    adj[v].push_back(u);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

namespace {

[[noreturn]] void format_error(const fs::path& file, std::size_t offset, const std::string& what) {
  fail(ErrorKind::format, file.string() + " @ byte " + std::to_string(offset) + ": " + what);
}

std::vector<char> read_bytes(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) fail(ErrorKind::format, file.string() + ": cannot open");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

template <typename T>
std::vector<T> read_array(const fs::path& file, std::size_t expected_count) {
  const auto bytes = read_bytes(file);
  if (bytes.size() != expected_count * sizeof(T)) {
    const std::size_t offset = std::min(bytes.size(), expected_count * sizeof(T));
    format_error(file, offset,
                 "expected " + std::to_string(expected_count * sizeof(T)) + " bytes, found " +
                     std::to_string(bytes.size()));
  }
  std::vector<T> out(expected_count);
  if (!bytes.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

template <typename T>
void write_array(const fs::path& file, const T* data, std::size_t count) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, file.string() + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(count * sizeof(T)));
  if (!out) fail(ErrorKind::io, file.string() + ": write failed");
}

}  // namespace

void validate(const StaticGraph& g) {
  if (g.features.size() != g.num_nodes * g.feature_dim)
    format_error("features.f32", g.features.size() * 4, "feature count does not match num_nodes*feature_dim");
  if (g.labels.size() != g.num_nodes) format_error("labels.u32", g.labels.size() * 4, "label count mismatch");
  for (std::size_t i = 0; i < g.labels.size(); ++i)
    if (g.labels[i] != kUnlabeledSentinel && g.labels[i] >= g.num_classes)
      format_error("labels.u32", i * 4, "label " + std::to_string(g.labels[i]) + " outside num_classes");
  std::vector<std::pair<std::uint32_t, std::uint32_t>> sorted = g.edges;
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto [u, v] = g.edges[i];
    if (u >= g.num_nodes || v >= g.num_nodes)
      format_error("edges.u32", i * 8, "edge references node beyond num_nodes");
    if (u >= v) format_error("edges.u32", i * 8, "edge must satisfy src < dst");
  }
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    format_error("edges.u32", 0, "duplicate undirected edge");
  if (g.timestamps && g.timestamps->size() != g.num_nodes)
    format_error("timestamps.u32", g.timestamps->size() * 4, "timestamp count mismatch");
  if (g.order) {
    if (g.order->size() != g.num_nodes) format_error("order.u32", g.order->size() * 4, "order length mismatch");
    std::vector<char> seen(g.num_nodes, 0);
    for (std::size_t i = 0; i < g.order->size(); ++i) {
      const auto v = (*g.order)[i];
      if (v >= g.num_nodes || seen[v]) format_error("order.u32", i * 4, "order is not a permutation");
      seen[v] = 1;
    }
  }
}

StaticGraph load_dataset(const fs::path& dir) {
  const fs::path meta_path = dir / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) fail(ErrorKind::format, meta_path.string() + ": cannot open");
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(meta_in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, meta_path.string() + ": " + e.what());
  }

  StaticGraph g;
  bool has_timestamps = false;
  try {
    g.num_nodes = meta.at("num_nodes").get<std::size_t>();
    g.feature_dim = meta.at("feature_dim").get<std::size_t>();
    g.num_classes = meta.at("num_classes").get<std::size_t>();
    has_timestamps = meta.at("has_timestamps").get<bool>();
    const int version = meta.at("format_version").get<int>();
    if (version != kFormatVersion)
      fail(ErrorKind::format, meta_path.string() + ": unsupported format_version " + std::to_string(version));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::format, meta_path.string() + ": " + e.what());
  }

  g.features = read_array<float>(dir / "features.f32", g.num_nodes * g.feature_dim);
  g.labels = read_array<std::uint32_t>(dir / "labels.u32", g.num_nodes);

  const fs::path edge_path = dir / "edges.u32";
  const auto edge_bytes = fs::exists(edge_path) ? fs::file_size(edge_path) : 0;
  if (edge_bytes % 8 != 0) format_error(edge_path, edge_bytes - edge_bytes % 8, "truncated edge pair");
  const auto flat = read_array<std::uint32_t>(edge_path, edge_bytes / 4);
  g.edges.reserve(flat.size() / 2);
  for (std::size_t i = 0; i + 1 < flat.size(); i += 2) g.edges.emplace_back(flat[i], flat[i + 1]);

  if (has_timestamps) g.timestamps = read_array<std::uint32_t>(dir / "timestamps.u32", g.num_nodes);
  if (fs::exists(dir / "order.u32")) g.order = read_array<std::uint32_t>(dir / "order.u32", g.num_nodes);

  for (std::size_t i = 0; i < g.labels.size(); ++i)
    if (g.labels[i] != kUnlabeledSentinel && g.labels[i] >= g.num_classes)
      format_error(dir / "labels.u32", i * 4, "label " + std::to_string(g.labels[i]) + " outside num_classes");
  for (std::size_t i = 0; i < g.edges.size(); ++i) {
    const auto [u, v] = g.edges[i];
    if (u >= g.num_nodes || v >= g.num_nodes)
      format_error(edge_path, i * 8, "edge references node beyond num_nodes");
    if (u >= v) format_error(edge_path, i * 8, "edge must satisfy src < dst");
  }
  validate(g);
  return g;
}

void write_dataset(const StaticGraph& g, const fs::path& dir) {
  validate(g);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, dir.string() + ": " + ec.message());

  nlohmann::json meta;
  meta["num_nodes"] = g.num_nodes;
  meta["feature_dim"] = g.feature_dim;
  meta["num_classes"] = g.num_classes;
  meta["has_timestamps"] = g.timestamps.has_value();
  meta["format_version"] = kFormatVersion;
  {
    std::ofstream out(dir / "meta.json", std::ios::trunc);
    if (!out) fail(ErrorKind::io, (dir / "meta.json").string() + ": cannot open for writing");
    out << meta.dump(2) << '\n';
  }

  write_array(dir / "features.f32", g.features.data(), g.features.size());
  write_array(dir / "labels.u32", g.labels.data(), g.labels.size());
  std::vector<std::uint32_t> flat;
  flat.reserve(g.edges.size() * 2);
  for (const auto& [u, v] : g.edges) {
    flat.push_back(u);
    flat.push_back(v);
  }
  write_array(dir / "edges.u32", flat.data(), flat.size());
  if (g.timestamps) write_array(dir / "timestamps.u32", g.timestamps->data(), g.timestamps->size());
  if (g.order) write_array(dir / "order.u32", g.order->data(), g.order->size());
}

}  // namespace ocgl
