#include "ocgl/stream.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ocgl/error.hpp"
#include "ocgl/rng.hpp"

namespace ocgl {

namespace {

constexpr std::uint64_t kSplitStream = 11;
constexpr std::uint64_t kOrderStream = 12;

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) std::swap(items[i - 1], items[rng.uniform_index(i)]);
}

}  // namespace

std::size_t TaskSchedule::task_of(std::size_t position) const {
  for (std::size_t t = 0; t < tasks.size(); ++t)
    if (position >= tasks[t].begin && position < tasks[t].end) return t;
  fail(ErrorKind::schedule, "stream position " + std::to_string(position) + " belongs to no task");
}

std::size_t validation_boundary(std::size_t task_count, double fraction) {
  if (task_count <= 1) return 0;
  const auto rounded = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(task_count)));
  return std::min(std::max<std::size_t>(1, rounded), task_count - 1);
}

SplitAssignment assign_splits(const StaticGraph& graph, std::uint64_t seed) {
  SplitAssignment out;
  out.seed = seed;
  out.tags.assign(graph.num_nodes, Split::train);
  std::vector<std::vector<std::uint32_t>> by_class(graph.num_classes);
  for (std::uint32_t v = 0; v < graph.num_nodes; ++v)
    if (graph.labels[v] != kUnlabeledSentinel) by_class[graph.labels[v]].push_back(v);

  Rng rng = Rng::derive(seed, kSplitStream);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& nodes = by_class[c];
    if (nodes.empty()) continue;
    if (nodes.size() < 5)
      out.warnings.push_back("class " + std::to_string(c) + " has only " + std::to_string(nodes.size()) +
                             " nodes; splits fall back to proportional rounding");
    shuffle(nodes, rng);
    const double n = static_cast<double>(nodes.size());
    const auto train_end = static_cast<std::size_t>(std::llround(0.6 * n));
    const auto val_end = static_cast<std::size_t>(std::llround(0.8 * n));
    for (std::size_t i = 0; i < nodes.size(); ++i)
      out.tags[nodes[i]] = i < train_end ? Split::train : (i < val_end ? Split::val : Split::test);
  }
  return out;
}

NodeStream::NodeStream(std::vector<NodeEvent> events, std::size_t batch_size)
    : events_(std::move(events)), batch_size_(batch_size) {
  require(batch_size_ >= 1, ErrorKind::config, "batch size must be at least 1");
}

std::optional<std::span<const NodeEvent>> NodeStream::next_minibatch() {
  if (cursor_ >= events_.size()) return std::nullopt;
  const std::size_t count = std::min(batch_size_, events_.size() - cursor_);
  std::span<const NodeEvent> batch(events_.data() + cursor_, count);
  cursor_ += count;
  return batch;
}

std::size_t NodeStream::batch_count() const noexcept {
  return (events_.size() + batch_size_ - 1) / batch_size_;
}

NodeStream NodeStream::truncated(std::size_t end) const {
  end = std::min(end, events_.size());
  return NodeStream(std::vector<NodeEvent>(events_.begin(), events_.begin() + static_cast<std::ptrdiff_t>(end)),
                    batch_size_);
}

std::vector<NodeEvent> make_events(const StaticGraph& graph, std::span<const std::uint32_t> order,
                                   const SplitAssignment& splits) {
  constexpr auto kNotStreamed = static_cast<std::uint32_t>(-1);
  std::vector<std::uint32_t> position(graph.num_nodes, kNotStreamed);
  for (std::size_t p = 0; p < order.size(); ++p) position[order[p]] = static_cast<std::uint32_t>(p);
  const auto adjacency = graph.adjacency();

  std::vector<NodeEvent> events(order.size());
  for (std::size_t p = 0; p < order.size(); ++p) {
    const std::uint32_t v = order[p];
    NodeEvent& e = events[p];
    e.id = static_cast<NodeId>(p);
    const auto begin = graph.features.begin() + static_cast<std::ptrdiff_t>(v * graph.feature_dim);
    e.features.assign(begin, begin + static_cast<std::ptrdiff_t>(graph.feature_dim));
    for (std::uint32_t w : adjacency[v])
      if (position[w] < p) e.neighbors.push_back(position[w]);
    std::sort(e.neighbors.begin(), e.neighbors.end());
    e.label = graph.labels[v] == kUnlabeledSentinel ? kUnlabeled : static_cast<int>(graph.labels[v]);
    e.split = splits.tags[v];
    if (graph.timestamps) e.timestamp = (*graph.timestamps)[v];
  }
  return events;
}

StreamBundle build_class_incremental(const StaticGraph& graph, std::size_t classes_per_task,
                                     std::span<const int> class_order, std::uint64_t seed,
                                     std::size_t batch_size) {
  require(classes_per_task >= 1, ErrorKind::schedule, "classes_per_task must be at least 1");
  std::vector<int> order_of_classes(class_order.begin(), class_order.end());
  if (order_of_classes.empty()) {
    order_of_classes.resize(graph.num_classes);
    std::iota(order_of_classes.begin(), order_of_classes.end(), 0);
  }
  std::vector<std::vector<std::uint32_t>> by_class(graph.num_classes);
  for (std::uint32_t v = 0; v < graph.num_nodes; ++v)
    if (graph.labels[v] != kUnlabeledSentinel) by_class[graph.labels[v]].push_back(v);
  std::vector<char> used(graph.num_classes, 0);
  for (int c : order_of_classes) {
    require(c >= 0 && static_cast<std::size_t>(c) < graph.num_classes, ErrorKind::schedule,
            "class " + std::to_string(c) + " is outside the dataset's classes");
    require(!used[c], ErrorKind::schedule, "class " + std::to_string(c) + " appears twice in the class order");
    used[c] = 1;
    require(!by_class[c].empty(), ErrorKind::schedule, "class " + std::to_string(c) + " has no nodes");
  }

  StreamBundle bundle;
  bundle.splits = assign_splits(graph, seed);
  Rng rng = Rng::derive(seed, kOrderStream);
  for (std::size_t first = 0; first < order_of_classes.size(); first += classes_per_task) {
    Task task;
    task.begin = bundle.source_ids.size();
    std::vector<std::uint32_t> nodes;
    for (std::size_t i = first; i < std::min(first + classes_per_task, order_of_classes.size()); ++i) {
      task.classes.push_back(order_of_classes[i]);
      nodes.insert(nodes.end(), by_class[order_of_classes[i]].begin(), by_class[order_of_classes[i]].end());
    }
    shuffle(nodes, rng);
    bundle.source_ids.insert(bundle.source_ids.end(), nodes.begin(), nodes.end());
    task.end = bundle.source_ids.size();
    bundle.schedule.tasks.push_back(std::move(task));
  }
  bundle.schedule.boundary = validation_boundary(bundle.schedule.count());
  bundle.stream = NodeStream(make_events(graph, bundle.source_ids, bundle.splits), batch_size);
  return bundle;
}

StreamBundle build_time_incremental(const StaticGraph& graph, std::size_t eval_tasks, std::uint64_t seed,
                                    std::size_t batch_size) {
  require(graph.timestamps.has_value(), ErrorKind::schedule, "time-incremental streams need node timestamps");
  require(eval_tasks >= 1, ErrorKind::schedule, "at least one evaluation task is required");
  StreamBundle bundle;
  bundle.splits = assign_splits(graph, seed);
  bundle.source_ids.resize(graph.num_nodes);
  std::iota(bundle.source_ids.begin(), bundle.source_ids.end(), 0u);
  const auto& ts = *graph.timestamps;
  std::stable_sort(bundle.source_ids.begin(), bundle.source_ids.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return ts[a] < ts[b]; });

  const std::size_t n = graph.num_nodes;
  for (std::size_t i = 0; i < eval_tasks; ++i) {
    Task task;
    task.begin = i * n / eval_tasks;
    task.end = (i + 1) * n / eval_tasks;
    bundle.schedule.tasks.push_back(std::move(task));
  }
  bundle.schedule.boundary = validation_boundary(bundle.schedule.count());
  bundle.stream = NodeStream(make_events(graph, bundle.source_ids, bundle.splits), batch_size);
  return bundle;
}

}  // namespace ocgl
