#include "ocgl/learner.hpp"

#include <algorithm>
#include <cstring>

#include "ocgl/error.hpp"
#include "ocgl/regularizers.hpp"

namespace ocgl {

namespace {

ModelShape shape_for(const LearnerConfig& cfg, std::size_t input_dim, std::size_t classes) {
  ModelShape s;
  s.input_dim = input_dim;
  s.hidden_dim = cfg.hidden;
  s.output_capacity = classes;
  s.layers = cfg.layers;
  s.bias = cfg.bias;
  return s;
}

}  // namespace

void hash_bytes(std::uint64_t& h, const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
}

void hash_value(std::uint64_t& h, std::uint64_t v) { hash_bytes(h, &v, sizeof v); }

void hash_matrix(std::uint64_t& h, const DenseMatrix& m) {
  hash_value(h, m.rows());
  hash_value(h, m.cols());
  hash_bytes(h, m.values().data(), m.size() * sizeof(double));
}

std::vector<std::string> strategy_names() {
  return {"bare", "er", "agem", "ewc", "mas", "lwf", "twp", "pdgnn", "ssm"};
}

Learner::Learner(const LearnerConfig& config, std::size_t input_dim, std::size_t classes, std::uint64_t seed)
    : cfg_(config),
      seed_(seed),
      ego_rng_(Rng::derive(seed, rng_stream::ego)),
      replay_rng_(Rng::derive(seed, rng_stream::replay)) {
  require(cfg_.backbone == "gcn" || cfg_.backbone == "mlp", ErrorKind::config,
          "backbone must be gcn or mlp, got '" + cfg_.backbone + "'");
  require(cfg_.layers >= 1, ErrorKind::config, "a model needs at least one layer");
  require(cfg_.passes >= 1, ErrorKind::config, "passes must be at least 1");
  require(cfg_.batch_size >= 1, ErrorKind::config, "batch size must be at least 1");
  require(cfg_.lr > 0.0, ErrorKind::config, "learning rate must be positive");
  if (graph_backbone())
    require(cfg_.fanouts.size() == cfg_.layers, ErrorKind::config,
            "fanouts must list one value per layer (" + std::to_string(cfg_.layers) + ")");
  if (!cfg_.eval_fanouts.empty())
    require(cfg_.eval_fanouts.size() == cfg_.layers, ErrorKind::config, "eval_fanouts must list one value per layer");
  Rng init = Rng::derive(seed, rng_stream::init);
  model_ = Model::create(shape_for(cfg_, input_dim, classes), init);
  adam_ = AdamState(model_.params, cfg_.lr);
}

Learner::Input Learner::sample_input(const GrowingGraph& graph, std::span<const NodeId> nodes, Rng& rng) const {
  Input in;
  if (graph_backbone()) {
    in.graph = true;
    in.ego = sample_ego(graph, nodes, cfg_.fanouts, rng);
    return in;
  }
  in.features = DenseMatrix(nodes.size(), graph.feature_dim());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const auto x = graph.features(nodes[i]);
    std::copy(x.begin(), x.end(), in.features.row(i).begin());
  }
  return in;
}

Learner::Input Learner::eval_input(const GrowingGraph& graph, std::span<const NodeId> nodes) const {
  if (!graph_backbone()) {
    Rng unused(0);
    return sample_input(graph, nodes, unused);
  }
  Input in;
  in.graph = true;
  if (cfg_.eval_fanouts.empty()) {
    in.ego = full_ego(graph, nodes, cfg_.layers);
  } else {
    // Keyed by graph size so repeated evaluations of one state agree.
    Rng rng = Rng::derive(splitmix64(seed_) ^ graph.size(), rng_stream::eval);
    in.ego = sample_ego(graph, nodes, cfg_.eval_fanouts, rng);
  }
  return in;
}

ForwardCache Learner::forward(const Input& input, const Model& model) const {
  return input.graph ? gcn_forward(input.ego, model) : mlp_forward(input.features, model);
}

double Learner::supervised_pass(const ForwardCache& cache, std::span<const int> targets) {
  const LossResult ce = softmax_cross_entropy(cache.logits, targets, model_.head.active_mask());
  backward(cache, ce.grad, model_);
  return ce.loss;
}

double Learner::supervised_pass(const Input& input, std::span<const int> targets) {
  return supervised_pass(forward(input, model_), targets);
}

Learner::Pass Learner::batch_pass(const GrowingGraph& graph, const Batch& batch) {
  Pass p;
  p.input = sample_input(graph, batch.seeds, ego_rng_);
  p.cache = forward(p.input, model_);
  p.loss = supervised_pass(p.cache, batch.targets);
  p.touched = p.input.nodes();
  return p;
}

std::size_t Learner::train_pass(const GrowingGraph& graph, const Batch& batch, std::size_t /*pass*/,
                                double& loss) {
  const Pass p = batch_pass(graph, batch);
  loss = p.loss;
  return p.touched;
}

StepReport Learner::observe(const GrowingGraph& graph, std::span<const NodeId> batch_nodes) {
  Batch batch;
  for (NodeId v : batch_nodes) {
    const auto label = graph.train_label(v);
    if (!label) continue;
    batch.seeds.push_back(v);
    batch.labels.push_back(*label);
    batch.targets.push_back(static_cast<int>(expand_head(model_, *label)));
  }
  StepReport report;
  if (batch.seeds.empty()) {
    report.skipped = true;
    return report;
  }
  for (std::size_t pass = 0; pass < cfg_.passes; ++pass) {
    model_.params.zero_grad();
    double loss = 0.0;
    report.touched = std::max(report.touched, train_pass(graph, batch, pass, loss));
    if (report.touched > touched_bound())
      fail(ErrorKind::contract, "step touched " + std::to_string(report.touched) + " nodes, bound is " +
                                    std::to_string(touched_bound()));
    for (const auto& p : model_.params)
      if (!all_finite(p.grad)) fail(ErrorKind::numeric, "non-finite gradient in parameter " + p.name);
    adam_step(model_.params, adam_);
    report.loss = loss;
  }
  after_batch(graph, batch);
  return report;
}

std::vector<int> Learner::predict(const GrowingGraph& graph, std::span<const NodeId> nodes) const {
  if (nodes.empty()) return {};
  const ForwardCache cache = forward(eval_input(graph, nodes), model_);
  return predict_labels(cache.logits, model_.head);
}

std::size_t Learner::touched_bound() const {
  return graph_backbone() ? ego_node_bound(cfg_.batch_size, cfg_.fanouts) : cfg_.batch_size;
}

void Learner::apply_replay(const Input& input, std::span<const int> targets, bool project, double& loss) {
  if (!project) {
    loss += supervised_pass(input, targets);
    return;
  }
  const std::vector<double> g = model_.params.flat_grads();
  model_.params.zero_grad();
  supervised_pass(input, targets);
  const std::vector<double> g_ref = model_.params.flat_grads();
  const std::vector<double> projected = agem_project(g, g_ref);
  record_projection(dot(projected, g_ref));
  model_.params.set_flat_grads(projected);
}

void Learner::record_projection(double dot_with_reference) {
  ++projection_checks_;
  if (dot_with_reference < -1e-9) ++violations_;
}

std::uint64_t Learner::state_hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& p : model_.params) hash_matrix(h, p.value);
  for (const auto& m : adam_.first_moment) hash_matrix(h, m);
  for (const auto& m : adam_.second_moment) hash_matrix(h, m);
  hash_value(h, adam_.step);
  for (int label : model_.head.labels()) hash_value(h, static_cast<std::uint64_t>(label));
  const std::string rngs = ego_rng_.state() + "|" + replay_rng_.state();
  hash_bytes(h, rngs.data(), rngs.size());
  hash_extra(h);
  return h;
}

}  // namespace ocgl
