#include <algorithm>
#include <cmath>

#include "ocgl/buffers.hpp"
#include "ocgl/error.hpp"
#include "ocgl/learner.hpp"
#include "ocgl/regularizers.hpp"

namespace ocgl {

namespace {

void hash_rng(std::uint64_t& h, const Rng& rng) {
  const std::string s = rng.state();
  hash_bytes(h, s.data(), s.size());
}

void hash_importance(std::uint64_t& h, const ImportanceState& s) {
  for (const auto& m : s.importance) hash_matrix(h, m);
  for (const auto& m : s.anchor) hash_matrix(h, m);
  hash_value(h, s.updates);
}

DenseMatrix stack_rows(const std::vector<std::vector<double>>& rows, std::size_t cols) {
  DenseMatrix out(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) std::copy(rows[i].begin(), rows[i].end(), out.row(i).begin());
  return out;
}

// ER and A-GEM: a reservoir of node ids whose neighborhoods are re-sampled
// from the current graph at replay time.
class ReplayLearner final : public Learner {
 public:
  ReplayLearner(const LearnerConfig& cfg, std::size_t input_dim, std::size_t classes, std::uint64_t seed,
                bool project)
      : Learner(cfg, input_dim, classes, seed),
        buffer_(cfg.buffer_size, Rng::derive(seed, rng_stream::reservoir)),
        project_(project) {}

  [[nodiscard]] std::size_t touched_bound() const override {
    return Learner::touched_bound() +
           (graph_backbone() ? ego_node_bound(replay_count(), cfg_.fanouts) : replay_count());
  }

  [[nodiscard]] std::optional<DenseMatrix> memory_logits(const GrowingGraph& graph) const override {
    std::vector<NodeId> ids;
    for (const auto& item : buffer_.items()) ids.push_back(item.id);
    if (ids.empty()) return DenseMatrix();
    Input in;
    if (graph_backbone()) {
      in.graph = true;
      in.ego = full_ego(graph, ids, cfg_.layers);
    } else {
      Rng unused(0);
      in = sample_input(graph, ids, unused);
    }
    return forward(in, model_).logits;
  }

  [[nodiscard]] const ReservoirBuffer<StoredNode>& buffer() const { return buffer_; }

 protected:
  std::size_t train_pass(const GrowingGraph& graph, const Batch& batch, std::size_t, double& loss) override {
    const Pass p = batch_pass(graph, batch);
    loss = p.loss;
    std::size_t touched = p.touched;
    if (buffer_.empty()) return touched;
    const auto picks = sample_without_replacement(buffer_.size(), replay_count(), replay_rng_);
    std::vector<NodeId> ids;
    std::vector<int> targets;
    for (std::size_t i : picks) {
      ids.push_back(buffer_.items()[i].id);
      targets.push_back(static_cast<int>(*model_.head.column_of(buffer_.items()[i].label)));
    }
    const Input in = sample_input(graph, ids, replay_rng_);
    touched += in.nodes();
    apply_replay(in, targets, project_, loss);
    return touched;
  }

  void after_batch(const GrowingGraph&, const Batch& batch) override {
    for (std::size_t i = 0; i < batch.seeds.size(); ++i) buffer_.insert({batch.seeds[i], batch.labels[i]});
  }

  void hash_extra(std::uint64_t& h) const override {
    for (const auto& item : buffer_.items()) {
      hash_value(h, item.id);
      hash_value(h, static_cast<std::uint64_t>(item.label));
    }
    hash_value(h, buffer_.seen());
    hash_rng(h, buffer_.rng());
  }

 private:
  ReservoirBuffer<StoredNode> buffer_;
  bool project_;
};

// EWC (empirical Fisher) and MAS (output sensitivity): λ Σ Ω (θ − θ*)² with a
// running-average importance and an anchor refreshed after every batch.
class ImportanceLearner final : public Learner {
 public:
  enum class Source { fisher, sensitivity };

  ImportanceLearner(const LearnerConfig& cfg, std::size_t input_dim, std::size_t classes, std::uint64_t seed,
                    Source source, double lambda)
      : Learner(cfg, input_dim, classes, seed),
        state_(ImportanceState::zeros(model_.params)),
        source_(source),
        lambda_(lambda) {}

  [[nodiscard]] const ImportanceState& importance() const { return state_; }

 protected:
  std::size_t train_pass(const GrowingGraph& graph, const Batch& batch, std::size_t, double& loss) override {
    Pass p = batch_pass(graph, batch);
    loss = p.loss;
    if (source_ == Source::fisher)
      last_grad_ = gradients_of(model_.params);
    else
      last_input_ = std::move(p.input);
    if (state_.updates > 0) loss += quadratic_penalty(state_, model_, lambda_);
    return p.touched;
  }

  void after_batch(const GrowingGraph&, const Batch& batch) override {
    if (source_ == Source::fisher) {
      for (auto& g : last_grad_)
        for (double& v : g.values()) v *= v;
      state_.accumulate(last_grad_);
    } else {
      const ForwardCache cache = forward(last_input_, model_);
      state_.accumulate(output_sensitivity(cache, batch.targets, model_));
    }
    state_.set_anchor(model_.params);
  }

  void hash_extra(std::uint64_t& h) const override { hash_importance(h, state_); }

 private:
  ImportanceState state_;
  Source source_;
  double lambda_;
  std::vector<DenseMatrix> last_grad_;
  Input last_input_;
};

class LwfLearner final : public Learner {
 public:
  LwfLearner(const LearnerConfig& cfg, std::size_t input_dim, std::size_t classes, std::uint64_t seed)
      : Learner(cfg, input_dim, classes, seed) {
    require(cfg.lwf_temperature > 0.0, ErrorKind::config, "lwf.temperature must be positive");
    require(cfg.lwf_update_every >= 1, ErrorKind::config, "lwf.update_every must be at least 1");
  }

 protected:
  std::size_t train_pass(const GrowingGraph& graph, const Batch& batch, std::size_t, double& loss) override {
    const Pass p = batch_pass(graph, batch);
    loss = p.loss;
    if (teacher_ && teacher_->head.active_count() > 0) {
      const ForwardCache t = forward(p.input, *teacher_);
      const DistillationResult d = distillation_loss(p.cache.logits, t.logits, teacher_->head.active_count(),
                                                     batch.targets, cfg_.lwf_lambda, cfg_.lwf_temperature);
      backward(p.cache, d.grad, model_);
      loss += d.loss;
    }
    return p.touched;
  }

  void after_batch(const GrowingGraph&, const Batch&) override {
    if (++since_update_ % cfg_.lwf_update_every == 0) {
      teacher_ = model_;
      teacher_->params.zero_grad();
    }
  }

  void hash_extra(std::uint64_t& h) const override {
    hash_value(h, since_update_);
    if (teacher_)
      for (const auto& p : teacher_->params) hash_matrix(h, p.value);
  }

 private:
  std::optional<Model> teacher_;
  std::size_t since_update_ = 0;
};

// Loss importance |∂CE|, topology importance from the first-layer message
// norm, and the plasticity term β‖∇CE‖₁ whose gradient is β·H·sign(∇CE).
class TwpLearner final : public Learner {
 public:
  TwpLearner(const LearnerConfig& cfg, std::size_t input_dim, std::size_t classes, std::uint64_t seed)
      : Learner(cfg, input_dim, classes, seed),
        loss_importance_(ImportanceState::zeros(model_.params)),
        topology_importance_(ImportanceState::zeros(model_.params)) {}

 protected:
  std::size_t train_pass(const GrowingGraph& graph, const Batch& batch, std::size_t, double& loss) override {
    Pass p = batch_pass(graph, batch);
    loss = p.loss;
    last_grad_ = gradients_of(model_.params);
    if (cfg_.twp_beta != 0.0) {
      std::vector<DenseMatrix> direction = last_grad_;
      double l1 = 0.0;
      for (auto& d : direction)
        for (double& v : d.values()) {
          l1 += std::abs(v);
          v = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        }
      const auto hv = cross_entropy_hvp(p.cache, batch.targets, model_, direction);
      for (std::size_t i = 0; i < hv.size(); ++i) add_scaled(model_.params[i].grad, hv[i], cfg_.twp_beta);
      loss += cfg_.twp_beta * l1;
    }
    if (loss_importance_.updates > 0) {
      loss += quadratic_penalty(loss_importance_, model_, cfg_.twp_lambda_l);
      loss += quadratic_penalty(topology_importance_, model_, cfg_.twp_lambda_t);
    }
    last_pass_ = std::move(p);
    return last_pass_.touched;
  }

  void after_batch(const GrowingGraph&, const Batch& batch) override {
    loss_importance_.accumulate(abs_of(last_grad_));
    topology_importance_.accumulate(
        message_sensitivity(last_pass_.cache, last_pass_.input.ego, batch.targets, model_));
    loss_importance_.set_anchor(model_.params);
    topology_importance_.set_anchor(model_.params);
  }

  void hash_extra(std::uint64_t& h) const override {
    hash_importance(h, loss_importance_);
    hash_importance(h, topology_importance_);
  }

 private:
  ImportanceState loss_importance_;
  ImportanceState topology_importance_;
  std::vector<DenseMatrix> last_grad_;
  Pass last_pass_;
};

LearnerConfig as_mlp(LearnerConfig cfg) {
  cfg.backbone = "mlp";
  return cfg;
}

// MLP over frozen SGC embeddings; the memory keeps (embedding, label) pairs.
class PdgnnLearner final : public Learner {
 public:
  PdgnnLearner(const LearnerConfig& cfg, std::size_t input_dim, std::size_t classes, std::uint64_t seed)
      : Learner(as_mlp(cfg), input_dim, classes, seed),
        memory_(cfg.buffer_size, Rng::derive(seed, rng_stream::reservoir)),
        depth_(cfg.sgc_depth.value_or(cfg.layers)) {
    require(depth_ <= cfg.fanouts.size(), ErrorKind::config,
            "pdgnn.sgc_depth needs one fanout per propagation step");
    if (!cfg.eval_fanouts.empty())
      require(depth_ <= cfg.eval_fanouts.size(), ErrorKind::config, "eval_fanouts too short for pdgnn.sgc_depth");
  }

  [[nodiscard]] std::vector<int> predict(const GrowingGraph& graph, std::span<const NodeId> nodes) const override {
    if (nodes.empty()) return {};
    DenseMatrix x;
    if (depth_ == 0) {
      Rng unused(0);
      x = sample_input(graph, nodes, unused).features;
    } else if (cfg_.eval_fanouts.empty()) {
      x = sgc_embed(full_ego(graph, nodes, depth_), depth_);
    } else {
      Rng rng = Rng::derive(splitmix64(seed_) ^ graph.size(), rng_stream::eval);
      x = sgc_embed(sample_ego(graph, nodes, std::span(cfg_.eval_fanouts).first(depth_), rng), depth_);
    }
    return predict_labels(mlp_forward(x, model_).logits, model_.head);
  }

  [[nodiscard]] std::size_t touched_bound() const override {
    return ego_node_bound(cfg_.batch_size, std::span(cfg_.fanouts).first(depth_)) + replay_count();
  }

  [[nodiscard]] std::optional<DenseMatrix> memory_logits(const GrowingGraph&) const override {
    if (memory_.empty()) return DenseMatrix();
    std::vector<std::vector<double>> rows;
    for (const auto& e : memory_.items()) rows.push_back(e.embedding);
    return mlp_forward(stack_rows(rows, model_.shape.input_dim), model_).logits;
  }

 protected:
  std::size_t train_pass(const GrowingGraph& graph, const Batch& batch, std::size_t pass, double& loss) override {
    std::size_t touched = batch.seeds.size();
    DenseMatrix x;
    if (depth_ == 0) {
      x = sample_input(graph, batch.seeds, ego_rng_).features;
    } else {
      const SampledEgoGraph ego = sample_ego(graph, batch.seeds, std::span(cfg_.fanouts).first(depth_), ego_rng_);
      touched = ego.node_count();
      x = sgc_embed(ego, depth_);
    }
    loss = supervised_pass(mlp_forward(x, model_), batch.targets);
    if (pass == 0) arrival_ = x;

    if (memory_.empty()) return touched;
    const auto picks = sample_without_replacement(memory_.size(), replay_count(), replay_rng_);
    std::vector<std::vector<double>> rows;
    std::vector<int> targets;
    for (std::size_t i : picks) {
      rows.push_back(memory_.items()[i].embedding);
      targets.push_back(static_cast<int>(*model_.head.column_of(memory_.items()[i].label)));
    }
    loss += supervised_pass(mlp_forward(stack_rows(rows, x.cols()), model_), targets);
    return touched + picks.size();
  }

  void after_batch(const GrowingGraph&, const Batch& batch) override {
    for (std::size_t i = 0; i < batch.seeds.size(); ++i) {
      const auto row = arrival_.row(i);
      memory_.insert({std::vector<double>(row.begin(), row.end()), batch.labels[i]});
    }
  }

  void hash_extra(std::uint64_t& h) const override {
    for (const auto& e : memory_.items()) {
      hash_bytes(h, e.embedding.data(), e.embedding.size() * sizeof(double));
      hash_value(h, static_cast<std::uint64_t>(e.label));
    }
    hash_value(h, memory_.seen());
    hash_rng(h, memory_.rng());
  }

 private:
  EmbeddingMemory memory_;
  std::size_t depth_;
  DenseMatrix arrival_;
};

// Replay from sparsified ego graphs stored by value at insertion time.
class SsmLearner final : public Learner {
 public:
  SsmLearner(const LearnerConfig& cfg, std::size_t input_dim, std::size_t classes, std::uint64_t seed)
      : Learner(cfg, input_dim, classes, seed),
        memory_(cfg.buffer_size, ego_node_bound(1, cfg.ssm_budget), Rng::derive(seed, rng_stream::reservoir)),
        memory_ego_rng_(Rng::derive(seed, rng_stream::memory_ego)) {
    require(graph_backbone(), ErrorKind::config, "ssm replays stored graphs and needs the gcn backbone");
    require(cfg.ssm_budget.size() == cfg.layers, ErrorKind::config, "ssm.budget must list one value per layer");
    require(cfg.ssm_mode == "er" || cfg.ssm_mode == "agem", ErrorKind::config, "ssm.mode must be er or agem");
  }

  [[nodiscard]] std::size_t touched_bound() const override {
    return Learner::touched_bound() + replay_count() * ego_node_bound(1, cfg_.ssm_budget);
  }

  [[nodiscard]] std::optional<DenseMatrix> memory_logits(const GrowingGraph&) const override {
    if (memory_.empty()) return DenseMatrix();
    std::vector<const SampledEgoGraph*> parts;
    for (const auto& e : memory_.entries()) parts.push_back(&e.ego);
    return gcn_forward(merge_egos(parts), model_).logits;
  }

  [[nodiscard]] const SubgraphMemory& memory() const { return memory_; }

 protected:
  std::size_t train_pass(const GrowingGraph& graph, const Batch& batch, std::size_t, double& loss) override {
    const Pass p = batch_pass(graph, batch);
    loss = p.loss;
    std::size_t touched = p.touched;
    if (memory_.empty()) return touched;
    const auto picks = sample_without_replacement(memory_.size(), replay_count(), replay_rng_);
    std::vector<const SampledEgoGraph*> parts;
    std::vector<int> targets;
    for (std::size_t i : picks) {
      parts.push_back(&memory_.entries()[i].ego);
      targets.push_back(static_cast<int>(*model_.head.column_of(memory_.entries()[i].label)));
    }
    Input in;
    in.graph = true;
    in.ego = merge_egos(parts);
    touched += in.nodes();
    apply_replay(in, targets, cfg_.ssm_mode == "agem", loss);
    return touched;
  }

  void after_batch(const GrowingGraph& graph, const Batch& batch) override {
    for (std::size_t i = 0; i < batch.seeds.size(); ++i) {
      const NodeId seed = batch.seeds[i];
      memory_.insert({seed, batch.labels[i], sample_ego(graph, std::span(&seed, 1), cfg_.ssm_budget, memory_ego_rng_)});
    }
  }

  void hash_extra(std::uint64_t& h) const override {
    for (const auto& e : memory_.entries()) {
      hash_value(h, e.seed);
      hash_matrix(h, e.ego.features);
    }
    hash_value(h, memory_.seen());
    hash_rng(h, memory_.rng());
    hash_rng(h, memory_ego_rng_);
  }

 private:
  SubgraphMemory memory_;
  Rng memory_ego_rng_;
};

}  // namespace

std::unique_ptr<Learner> make_learner(const LearnerConfig& config, std::size_t input_dim, std::size_t classes,
                                      std::uint64_t seed) {
  const std::string& s = config.strategy;
  if (s == "bare") return std::make_unique<Learner>(config, input_dim, classes, seed);
  if (s == "er") return std::make_unique<ReplayLearner>(config, input_dim, classes, seed, false);
  if (s == "agem") return std::make_unique<ReplayLearner>(config, input_dim, classes, seed, true);
  if (s == "ewc")
    return std::make_unique<ImportanceLearner>(config, input_dim, classes, seed,
                                               ImportanceLearner::Source::fisher, config.ewc_lambda);
  if (s == "mas")
    return std::make_unique<ImportanceLearner>(config, input_dim, classes, seed,
                                               ImportanceLearner::Source::sensitivity, config.mas_lambda);
  if (s == "lwf") return std::make_unique<LwfLearner>(config, input_dim, classes, seed);
  if (s == "twp") return std::make_unique<TwpLearner>(config, input_dim, classes, seed);
  if (s == "pdgnn") return std::make_unique<PdgnnLearner>(config, input_dim, classes, seed);
  if (s == "ssm") return std::make_unique<SsmLearner>(config, input_dim, classes, seed);
  fail(ErrorKind::config, "unknown strategy '" + s + "'");
}

}  // namespace ocgl
