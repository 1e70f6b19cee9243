#pragma once

// Task-wise scoring and the online protocol: ingest a batch, train on it,
// then evaluate anytime (validation) and at task ends (test).

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ocgl/graph.hpp"
#include "ocgl/learner.hpp"
#include "ocgl/metrics.hpp"
#include "ocgl/stream.hpp"

namespace ocgl {

struct EvalSpec {
  Metric metric = Metric::accuracy;
  int positive_class = 1;
};

/// Streamed, labeled nodes of `task` in `split`.
std::vector<NodeId> task_nodes(const GrowingGraph& graph, const Task& task, Split split);

/// Metric over the task's split nodes; nullopt when none has streamed.
std::optional<double> evaluate_task(const Learner& learner, const GrowingGraph& graph, const Task& task, Split split,
                                    const EvalSpec& spec);

/// evaluate_task for tasks [0, count) with one prediction call.
std::vector<std::optional<double>> evaluate_tasks(const Learner& learner, const GrowingGraph& graph,
                                                  const TaskSchedule& schedule, std::size_t count, Split split,
                                                  const EvalSpec& spec);

/// Mean over introduced tasks among [0, count) that have split nodes.
std::optional<double> average_performance(const Learner& learner, const GrowingGraph& graph,
                                          const TaskSchedule& schedule, std::size_t count, Split split,
                                          const EvalSpec& spec);

struct OnlineOptions {
  std::size_t eval_stride = 1;  // 0 disables anytime evaluation
  EvalSpec eval;
};

struct OnlineResult {
  PerformanceMatrix matrix;
  AnytimeTrace trace;
  std::vector<std::size_t> touched;  // per batch, 0 for skipped batches
  std::vector<double> seconds;       // training wall-clock per batch
  std::size_t skipped = 0;
  std::size_t batches = 0;
  std::size_t final_graph_size = 0;
};

/// Runs the learner over the whole stream. Row i of the performance matrix
/// is filled after the batch holding task i's last node.
OnlineResult run_online(Learner& learner, NodeStream stream, const TaskSchedule& schedule, std::size_t feature_dim,
                        const OnlineOptions& options);

/// Graph holding every event of the stream.
GrowingGraph materialize(const NodeStream& stream, std::size_t feature_dim);

}  // namespace ocgl
