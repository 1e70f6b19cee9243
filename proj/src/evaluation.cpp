#include "ocgl/evaluation.hpp"

#include <chrono>

#include "ocgl/error.hpp"

namespace ocgl {

std::vector<NodeId> task_nodes(const GrowingGraph& graph, const Task& task, Split split) {
  std::vector<NodeId> out;
  const std::size_t end = std::min(task.end, graph.size());
  for (std::size_t p = task.begin; p < end; ++p) {
    const auto v = static_cast<NodeId>(p);
    if (graph.split(v) == split && graph.eval_label(v) != kUnlabeled) out.push_back(v);
  }
  return out;
}

std::vector<std::optional<double>> evaluate_tasks(const Learner& learner, const GrowingGraph& graph,
                                                  const TaskSchedule& schedule, std::size_t count, Split split,
                                                  const EvalSpec& spec) {
  require(count <= schedule.count(), ErrorKind::schedule, "more tasks requested than scheduled");
  std::vector<NodeId> all;
  std::vector<std::size_t> offsets{0};
  for (std::size_t t = 0; t < count; ++t) {
    const auto nodes = task_nodes(graph, schedule.tasks[t], split);
    all.insert(all.end(), nodes.begin(), nodes.end());
    offsets.push_back(all.size());
  }
  const std::vector<int> predicted = learner.predict(graph, all);
  std::vector<int> truth(all.size());
  for (std::size_t i = 0; i < all.size(); ++i) truth[i] = graph.eval_label(all[i]);

  std::vector<std::optional<double>> out(count);
  for (std::size_t t = 0; t < count; ++t) {
    const std::size_t b = offsets[t], e = offsets[t + 1];
    if (b == e) continue;
    out[t] = score(spec.metric, std::span(predicted).subspan(b, e - b), std::span(truth).subspan(b, e - b),
                   spec.positive_class);
  }
  return out;
}

std::optional<double> evaluate_task(const Learner& learner, const GrowingGraph& graph, const Task& task, Split split,
                                    const EvalSpec& spec) {
  TaskSchedule single;
  single.tasks.push_back(task);
  return evaluate_tasks(learner, graph, single, 1, split, spec)[0];
}

std::optional<double> average_performance(const Learner& learner, const GrowingGraph& graph,
                                          const TaskSchedule& schedule, std::size_t count, Split split,
                                          const EvalSpec& spec) {
  std::size_t introduced = 0;
  while (introduced < count && schedule.tasks[introduced].begin < graph.size()) ++introduced;
  const auto values = evaluate_tasks(learner, graph, schedule, introduced, split, spec);
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values)
    if (v) {
      sum += *v;
      ++n;
    }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

OnlineResult run_online(Learner& learner, NodeStream stream, const TaskSchedule& schedule, std::size_t feature_dim,
                        const OnlineOptions& options) {
  const std::size_t tasks = schedule.count();
  OnlineResult result;
  result.matrix = PerformanceMatrix(tasks);
  result.trace.stride = options.eval_stride;
  GrowingGraph graph(feature_dim);
  std::vector<NodeId> batch_ids;
  std::size_t next_row = 0;

  stream.reset();
  while (const auto batch = stream.next_minibatch()) {
    batch_ids.clear();
    for (const NodeEvent& e : *batch) {
      graph.ingest(e);
      batch_ids.push_back(e.id);
    }
    const auto start = std::chrono::steady_clock::now();
    const StepReport step = learner.observe(graph, batch_ids);
    result.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    result.touched.push_back(step.touched);
    if (step.skipped) ++result.skipped;

    const std::size_t b = result.batches++;
    if (options.eval_stride > 0 && b % options.eval_stride == 0) {
      result.trace.batches.push_back(b);
      result.trace.values.push_back(average_performance(learner, graph, schedule, tasks, Split::val, options.eval));
    }

    std::size_t last_row = next_row;
    while (last_row < tasks && schedule.tasks[last_row].end <= graph.size()) ++last_row;
    if (last_row > next_row) {
      const auto test = evaluate_tasks(learner, graph, schedule, last_row, Split::test, options.eval);
      for (std::size_t i = next_row; i < last_row; ++i)
        for (std::size_t j = 0; j <= i; ++j)
          if (test[j]) result.matrix.set(i, j, *test[j]);
      next_row = last_row;
    }
  }
  result.final_graph_size = graph.size();
  return result;
}

GrowingGraph materialize(const NodeStream& stream, std::size_t feature_dim) {
  GrowingGraph graph(feature_dim);
  for (const NodeEvent& e : stream.events()) graph.ingest(e);
  return graph;
}

}  // namespace ocgl
