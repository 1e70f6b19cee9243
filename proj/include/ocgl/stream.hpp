#pragma once

// Node streams and task schedules built from a static dataset, plus the
// synthetic stochastic-block-model generator used for desk-scale runs.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocgl/dataset.hpp"
#include "ocgl/graph.hpp"

namespace ocgl {

/// A contiguous interval [begin, end) of stream positions. Class-incremental
/// tasks also record their classes; time-incremental tasks exist only for
/// evaluation and leave `classes` empty.
struct Task {
  std::vector<int> classes;
  std::size_t begin = 0;
  std::size_t end = 0;
};

struct TaskSchedule {
  std::vector<Task> tasks;
  /// Tasks [0, boundary) are the hyperparameter-selection prefix.
  std::size_t boundary = 0;

  [[nodiscard]] std::size_t count() const noexcept { return tasks.size(); }
  [[nodiscard]] std::size_t task_of(std::size_t position) const;
};

/// max(1, round(fraction·T)), clamped below T (0 for a single task).
std::size_t validation_boundary(std::size_t task_count, double fraction = 0.2);

struct SplitAssignment {
  std::vector<Split> tags;  // indexed by dataset node id
  std::uint64_t seed = 0;
  std::vector<std::string> warnings;
};

/// Class-stratified 60/20/20 split. Unlabeled nodes are tagged train and
/// never contribute a loss term.
SplitAssignment assign_splits(const StaticGraph& graph, std::uint64_t seed);

class NodeStream {
 public:
  NodeStream() = default;
  NodeStream(std::vector<NodeEvent> events, std::size_t batch_size);

  /// Next B events (the last batch may be shorter); nullopt at end of stream.
  std::optional<std::span<const NodeEvent>> next_minibatch();

  [[nodiscard]] std::size_t batch_size() const noexcept { return batch_size_; }
  [[nodiscard]] std::size_t cursor() const noexcept { return cursor_; }
  [[nodiscard]] std::size_t size() const noexcept { return events_.size(); }
  [[nodiscard]] std::size_t batch_count() const noexcept;
  [[nodiscard]] const std::vector<NodeEvent>& events() const noexcept { return events_; }
  void reset() noexcept { cursor_ = 0; }

  /// Copy holding only the first `end` events.
  [[nodiscard]] NodeStream truncated(std::size_t end) const;

 private:
  std::vector<NodeEvent> events_;
  std::size_t batch_size_ = 1;
  std::size_t cursor_ = 0;
};

struct StreamBundle {
  NodeStream stream;
  TaskSchedule schedule;
  SplitAssignment splits;
  std::vector<std::uint32_t> source_ids;  // stream position → dataset node id
};

/// Groups classes (in `class_order`, ascending when empty) into tasks of
/// `classes_per_task`, shuffles nodes within each task with `seed`, and
/// keeps for each event only neighbors that arrived earlier. Unlabeled nodes
/// and classes outside the order are not streamed.
StreamBundle build_class_incremental(const StaticGraph& graph, std::size_t classes_per_task,
                                     std::span<const int> class_order, std::uint64_t seed,
                                     std::size_t batch_size);

/// Orders nodes by timestamp (ties by id) and cuts `eval_tasks` equal-count
/// evaluation intervals.
StreamBundle build_time_incremental(const StaticGraph& graph, std::size_t eval_tasks, std::uint64_t seed,
                                    std::size_t batch_size);

/// Events for an explicit dataset-id order, used by the builders above.
std::vector<NodeEvent> make_events(const StaticGraph& graph, std::span<const std::uint32_t> order,
                                   const SplitAssignment& splits);

struct SbmSpec {
  std::size_t classes = 2;
  std::size_t per_class = 100;
  double p_in = 0.1;
  double p_out = 0.005;
  std::size_t dim = 32;
  double separation = 4.0;
  double noise = 1.0;
  std::uint64_t seed = 0;
};

/// Stochastic block model: node i has class i / per_class, features are the
/// class mean separation·e_class plus N(0, noise²) per coordinate.
StaticGraph gen_sbm(const SbmSpec& spec);

}  // namespace ocgl
