#include "ocgl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "ocgl/error.hpp"

namespace ocgl {

StaticGraph load_source(const RunConfig& cfg) {
  const std::string& data = cfg.get("data");
  return data.empty() ? gen_sbm(cfg.sbm()) : load_dataset(data);
}

StreamBundle build_stream(const RunConfig& cfg, const StaticGraph& graph) {
  const std::string& kind = cfg.get("stream");
  const std::size_t batch = cfg.get_size("batch_size");
  const std::uint64_t data_seed = cfg.get_u64("data_seed");
  if (kind == "class") {
    const std::vector<int> order = cfg.get_ints("class_order");
    return build_class_incremental(graph, cfg.get_size("classes_per_task"), order, data_seed, batch);
  }
  if (kind == "time") return build_time_incremental(graph, cfg.get_size("eval_tasks"), data_seed, batch);
  fail(ErrorKind::config, "stream must be class or time, got '" + kind + "'");
}

std::size_t selection_boundary(const RunConfig& cfg, const TaskSchedule& schedule) {
  require(schedule.count() >= 2, ErrorKind::schedule, "hyperparameter selection needs at least two tasks");
  const std::size_t boundary = cfg.get("boundary").empty() ? schedule.boundary : cfg.get_size("boundary");
  require(boundary >= 1 && boundary < schedule.count(), ErrorKind::config,
          "boundary must lie in [1, " + std::to_string(schedule.count() - 1) + "]");
  return boundary;
}

namespace {

EvalSpec eval_spec(const RunConfig& cfg) {
  EvalSpec spec;
  spec.metric = parse_metric(cfg.get("metric"));
  spec.positive_class = cfg.get_ints("positive_class").at(0);
  return spec;
}

std::vector<std::uint64_t> run_seeds(const RunConfig& cfg) {
  auto seeds = cfg.get_u64s("seeds");
  require(!seeds.empty(), ErrorKind::config, "at least one seed is required");
  return seeds;
}

bool any_present(const AnytimeTrace& trace) {
  return std::any_of(trace.values.begin(), trace.values.end(), [](const auto& v) { return v.has_value(); });
}

}  // namespace

ExperimentReport run_experiment(const RunConfig& cfg, const StreamBundle& bundle, std::size_t feature_dim,
                                std::size_t classes) {
  ExperimentReport report;
  report.config = cfg;
  report.tasks = bundle.schedule.count();
  report.nodes = bundle.stream.size();
  report.warnings = bundle.splits.warnings;
  const LearnerConfig lc = cfg.learner();
  OnlineOptions options;
  options.eval_stride = cfg.get_size("eval_stride");
  options.eval = eval_spec(cfg);

  std::vector<std::optional<double>> aps, afs, aaps;
  for (std::uint64_t seed : run_seeds(cfg)) {
    auto learner = make_learner(lc, feature_dim, classes, seed);
    report.touched_bound = learner->touched_bound();
    SeedResult r;
    r.seed = seed;
    r.online = run_online(*learner, bundle.stream, bundle.schedule, feature_dim, options);
    r.ap = compute_ap(r.online.matrix);
    r.af = compute_af(r.online.matrix);
    if (any_present(r.online.trace)) r.aap = compute_aap(r.online.trace);
    for (std::size_t t : r.online.touched) r.max_touched = std::max(r.max_touched, t);
    r.projection_violations = learner->projection_violations();
    r.projection_checks = learner->projection_checks();
    aps.push_back(r.ap);
    afs.push_back(r.af);
    aaps.push_back(r.aap);
    report.seeds.push_back(std::move(r));
  }
  report.ap = summarize(aps);
  report.af = summarize(afs);
  report.aap = summarize(aaps);
  return report;
}

ExperimentReport run_experiment(const RunConfig& cfg, const StaticGraph& graph) {
  return run_experiment(cfg, build_stream(cfg, graph), graph.feature_dim, graph.num_classes);
}

ExperimentReport run_experiment(const RunConfig& cfg) { return run_experiment(cfg, load_source(cfg)); }

std::vector<GridPoint> Grid::points() const {
  std::vector<GridPoint> out{GridPoint{}};
  for (const auto& [key, candidates] : axes) {
    require(!candidates.empty(), ErrorKind::config, "grid axis '" + key + "' has no candidates");
    std::vector<GridPoint> next;
    for (const auto& prefix : out)
      for (const auto& value : candidates) {
        GridPoint p = prefix;
        p.emplace_back(key, value);
        next.push_back(std::move(p));
      }
    out = std::move(next);
  }
  return out;
}

Grid Grid::from_text(std::string_view text, const std::string& origin) {
  Grid grid;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorKind::config,
            origin + ":" + std::to_string(number) + ": expected 'key = v1 | v2'");
    const std::string key = trim(std::string_view(body).substr(0, eq));
    require(RunConfig().values().count(key) > 0, ErrorKind::config,
            origin + ":" + std::to_string(number) + ": unknown config key '" + key + "'");
    grid.axes.emplace_back(key, split(std::string_view(body).substr(eq + 1), '|'));
  }
  return grid;
}

Grid Grid::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot read grid " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str(), path.string());
}

Grid Grid::defaults_for(const std::string& strategy) {
  Grid g;
  g.axes.push_back({"lr", {"0.01", "0.001", "0.0001", "0.00001"}});
  g.axes.push_back({"passes", {"1", "5"}});
  const std::vector<std::string> lambdas{"1", "100", "10000", "1000000", "100000000", "10000000000"};
  if (strategy == "er" || strategy == "agem" || strategy == "pdgnn")
    g.axes.push_back({"memory_proportion", {"1", "2", "3"}});
  if (strategy == "ewc") g.axes.push_back({"ewc.lambda", lambdas});
  if (strategy == "mas") g.axes.push_back({"mas.lambda", lambdas});
  if (strategy == "lwf") {
    g.axes.push_back({"lwf.lambda_dist", {"0.1", "1", "10"}});
    g.axes.push_back({"lwf.temperature", {"0.2", "2", "20"}});
    g.axes.push_back({"lwf.update_every", {"1", "10", "100"}});
  }
  if (strategy == "twp") {
    g.axes.push_back({"twp.lambda_l", {"100", "10000", "1000000"}});
    g.axes.push_back({"twp.lambda_t", {"100", "10000", "1000000"}});
    g.axes.push_back({"twp.beta", {"0.001", "0.01", "0.1"}});
  }
  if (strategy == "ssm") g.axes.push_back({"ssm.budget", {"5,5", "10,10", "25,25"}});
  return g;
}

double boundary_score(const RunConfig& cfg, const StreamBundle& bundle, std::size_t feature_dim, std::size_t classes,
                      std::size_t boundary, std::uint64_t seed) {
  TaskSchedule prefix;
  prefix.tasks.assign(bundle.schedule.tasks.begin(),
                      bundle.schedule.tasks.begin() + static_cast<std::ptrdiff_t>(boundary));
  const NodeStream stream = bundle.stream.truncated(prefix.tasks.back().end);
  OnlineOptions options;
  options.eval_stride = 0;
  options.eval = eval_spec(cfg);
  try {
    auto learner = make_learner(cfg.learner(), feature_dim, classes, seed);
    run_online(*learner, stream, prefix, feature_dim, options);
    const GrowingGraph graph = materialize(stream, feature_dim);
    const auto v = average_performance(*learner, graph, prefix, boundary, Split::val, options.eval);
    if (v && std::isfinite(*v)) return *v;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::numeric) throw;
  }
  return -std::numeric_limits<double>::infinity();
}

GridResult grid_select(const RunConfig& cfg, const Grid& grid, const StreamBundle& bundle, std::size_t feature_dim,
                       std::size_t classes) {
  GridResult result;
  require(!grid.axes.empty(), ErrorKind::config, "the grid is empty");
  result.points = grid.points();
  result.boundary = selection_boundary(cfg, bundle.schedule);
  result.consumed_nodes = bundle.schedule.tasks[result.boundary - 1].end;
  const std::uint64_t seed = run_seeds(cfg).front();
  for (const auto& point : result.points) {
    RunConfig c = cfg;
    for (const auto& [k, v] : point) c.set(k, v);
    result.scores.push_back(boundary_score(c, bundle, feature_dim, classes, result.boundary, seed));
  }
  for (std::size_t i = 1; i < result.scores.size(); ++i)
    if (result.scores[i] > result.scores[result.best]) result.best = i;
  return result;
}

JointResult run_joint_upper_bound(const RunConfig& cfg, const StreamBundle& bundle, std::size_t feature_dim,
                                  std::size_t classes, std::uint64_t seed) {
  const LearnerConfig lc = cfg.learner();
  const EvalSpec spec = eval_spec(cfg);
  const std::size_t epochs = cfg.get_size("joint.epochs");
  const std::size_t patience = cfg.get_size("joint.patience");
  const GrowingGraph graph = materialize(bundle.stream, feature_dim);
  const bool gcn = lc.backbone == "gcn";
  require(gcn || lc.backbone == "mlp", ErrorKind::config, "backbone must be gcn or mlp");

  ModelShape shape;
  shape.input_dim = feature_dim;
  shape.hidden_dim = lc.hidden;
  shape.output_capacity = classes;
  shape.layers = lc.layers;
  shape.bias = lc.bias;
  Rng init = Rng::derive(seed, rng_stream::init);
  Model model = Model::create(shape, init);
  AdamState adam(model.params, lc.lr);

  std::vector<NodeId> train;
  std::vector<int> targets;
  for (NodeId v = 0; v < graph.size(); ++v)
    if (const auto label = graph.train_label(v)) {
      train.push_back(v);
      targets.push_back(static_cast<int>(expand_head(model, *label)));
    }
  require(!train.empty(), ErrorKind::empty_batch, "the dataset has no labeled training nodes");

  auto features_of = [&](const std::vector<NodeId>& nodes) {
    DenseMatrix x(nodes.size(), feature_dim);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto f = graph.features(nodes[i]);
      std::copy(f.begin(), f.end(), x.row(i).begin());
    }
    return x;
  };
  struct Prepared {
    SampledEgoGraph ego;
    DenseMatrix x;
  };
  auto prepare = [&](const std::vector<NodeId>& nodes) {
    Prepared p;
    if (gcn)
      p.ego = full_ego(graph, nodes, lc.layers);
    else
      p.x = features_of(nodes);
    return p;
  };
  auto forward = [&](const Prepared& p) { return gcn ? gcn_forward(p.ego, model) : mlp_forward(p.x, model); };

  // Per-task node lists of one split, flattened for a single forward pass.
  struct SplitNodes {
    std::vector<NodeId> nodes;
    std::vector<std::size_t> offsets{0};
    Prepared input;
  };
  auto split_nodes = [&](Split s) {
    SplitNodes out;
    for (const Task& t : bundle.schedule.tasks) {
      const auto n = task_nodes(graph, t, s);
      out.nodes.insert(out.nodes.end(), n.begin(), n.end());
      out.offsets.push_back(out.nodes.size());
    }
    if (!out.nodes.empty()) out.input = prepare(out.nodes);
    return out;
  };
  auto task_scores = [&](const SplitNodes& s) {
    std::vector<std::optional<double>> out(bundle.schedule.count());
    if (s.nodes.empty()) return out;
    const auto predicted = predict_labels(forward(s.input).logits, model.head);
    std::vector<int> truth(s.nodes.size());
    for (std::size_t i = 0; i < s.nodes.size(); ++i) truth[i] = graph.eval_label(s.nodes[i]);
    for (std::size_t t = 0; t < out.size(); ++t) {
      const std::size_t b = s.offsets[t], e = s.offsets[t + 1];
      if (b < e)
        out[t] = score(spec.metric, std::span(predicted).subspan(b, e - b), std::span(truth).subspan(b, e - b),
                       spec.positive_class);
    }
    return out;
  };

  const Prepared train_input = prepare(train);
  const SplitNodes val = split_nodes(Split::val);
  const SplitNodes test = split_nodes(Split::test);

  JointResult result;
  result.seed = seed;
  result.best_validation = -std::numeric_limits<double>::infinity();
  std::vector<DenseMatrix> best_params;
  std::size_t since_best = 0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    model.params.zero_grad();
    const ForwardCache cache = forward(train_input);
    const LossResult ce = softmax_cross_entropy(cache.logits, targets, model.head.active_mask());
    backward(cache, ce.grad, model);
    adam_step(model.params, adam);
    ++result.epochs_run;

    const auto scores = task_scores(val);
    const Summary s = summarize(scores);
    const double v = s.count > 0 ? s.mean : 0.0;
    if (v > result.best_validation || best_params.empty()) {
      result.best_validation = v;
      result.best_epoch = epoch;
      best_params.clear();
      for (const auto& p : model.params) best_params.push_back(p.value);
      since_best = 0;
    } else if (++since_best >= patience) {
      break;
    }
  }
  for (std::size_t i = 0; i < best_params.size(); ++i) model.params[i].value = best_params[i];
  model.params.advance_generation();

  result.task_scores = task_scores(test);
  double sum = 0.0;
  for (const auto& v : result.task_scores) {
    require(v.has_value(), ErrorKind::contract, "a task has no test nodes");
    sum += *v;
  }
  result.ap = sum / static_cast<double>(result.task_scores.size());
  return result;
}

JointReport run_joint(const RunConfig& cfg) {
  const StaticGraph graph = load_source(cfg);
  const StreamBundle bundle = build_stream(cfg, graph);
  JointReport report;
  report.config = cfg;
  std::vector<std::optional<double>> aps;
  for (std::uint64_t seed : run_seeds(cfg)) {
    report.seeds.push_back(run_joint_upper_bound(cfg, bundle, graph.feature_dim, graph.num_classes, seed));
    aps.push_back(report.seeds.back().ap);
  }
  report.ap = summarize(aps);
  return report;
}

}  // namespace ocgl
