#pragma once

// Online learners. Every strategy shares the same step skeleton (head growth,
// `passes` optimizer steps, one post-batch update) and differs in the loss it
// builds for a pass and in what it remembers afterwards.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ocgl/graph.hpp"
#include "ocgl/model.hpp"
#include "ocgl/rng.hpp"

namespace ocgl {

struct LearnerConfig {
  std::string strategy = "bare";  // bare|er|agem|ewc|mas|lwf|twp|pdgnn|ssm
  std::string backbone = "gcn";   // gcn|mlp
  std::size_t hidden = 256;
  std::size_t layers = 2;
  bool bias = false;
  double lr = 1e-3;
  std::size_t passes = 1;
  std::size_t batch_size = 10;
  std::vector<std::size_t> fanouts{10, 10};
  std::vector<std::size_t> eval_fanouts;  // empty: full neighborhoods
  std::size_t buffer_size = 500;
  std::size_t memory_proportion = 1;
  double ewc_lambda = 1e4;
  double mas_lambda = 1e4;
  double lwf_lambda = 1.0;
  double lwf_temperature = 2.0;
  std::size_t lwf_update_every = 10;
  double twp_lambda_l = 1e4;
  double twp_lambda_t = 1e4;
  double twp_beta = 0.01;
  std::vector<std::size_t> ssm_budget{10, 10};
  std::string ssm_mode = "er";  // er|agem
  std::optional<std::size_t> sgc_depth;  // defaults to `layers`
};

std::vector<std::string> strategy_names();

struct StepReport {
  bool skipped = false;
  std::size_t touched = 0;  // nodes entering a forward pass, max over passes
  double loss = 0.0;        // training loss of the last pass
};

class Learner {
 public:
  Learner(const LearnerConfig& config, std::size_t input_dim, std::size_t classes, std::uint64_t seed);
  virtual ~Learner() = default;
  Learner(const Learner&) = delete;
  Learner& operator=(const Learner&) = delete;

  /// One online step on the newest batch (already ingested into `graph`).
  /// Batches without labeled train nodes are skipped.
  StepReport observe(const GrowingGraph& graph, std::span<const NodeId> batch);

  /// Argmax labels over the active head. Never touches training state.
  [[nodiscard]] virtual std::vector<int> predict(const GrowingGraph& graph, std::span<const NodeId> nodes) const;

  /// Closed-form cap on nodes entering the forward passes of one step.
  [[nodiscard]] virtual std::size_t touched_bound() const;

  /// Logits the current model assigns to every stored memory entry, computed
  /// the way replay computes them; nullopt for memory-free strategies.
  [[nodiscard]] virtual std::optional<DenseMatrix> memory_logits(const GrowingGraph& /*graph*/) const {
    return std::nullopt;
  }

  /// FNV-1a over parameters, optimizer moments, rng states and memories.
  [[nodiscard]] std::uint64_t state_hash() const;

  /// Steps whose projected gradient had g'·g_ref < -1e-9.
  [[nodiscard]] std::size_t projection_violations() const noexcept { return violations_; }
  [[nodiscard]] std::size_t projection_checks() const noexcept { return projection_checks_; }

  [[nodiscard]] const Model& model() const noexcept { return model_; }
  [[nodiscard]] const LearnerConfig& config() const noexcept { return cfg_; }

 protected:
  struct Batch {
    std::vector<NodeId> seeds;  // labeled train nodes of the batch
    std::vector<int> targets;   // their output columns
    std::vector<int> labels;
  };

  /// Forward input: a sampled ego graph (GCN) or raw feature rows (MLP).
  struct Input {
    bool graph = false;
    SampledEgoGraph ego;
    DenseMatrix features;
    [[nodiscard]] std::size_t nodes() const { return graph ? ego.node_count() : features.rows(); }
  };

  struct Pass {
    Input input;
    ForwardCache cache;
    double loss = 0.0;
    std::size_t touched = 0;
  };

  Input sample_input(const GrowingGraph& graph, std::span<const NodeId> nodes, Rng& rng) const;
  Input eval_input(const GrowingGraph& graph, std::span<const NodeId> nodes) const;
  ForwardCache forward(const Input& input, const Model& model) const;

  /// Samples the batch ego graph and accumulates the batch cross-entropy gradient.
  Pass batch_pass(const GrowingGraph& graph, const Batch& batch);
  /// Forward + cross-entropy backward on `input`; returns the loss.
  double supervised_pass(const Input& input, std::span<const int> targets);
  double supervised_pass(const ForwardCache& cache, std::span<const int> targets);

  /// Builds one pass's loss and leaves its gradient in the parameter slots.
  /// Returns the number of nodes touched. The default is plain fine-tuning.
  /// Adds the replay cross-entropy on `input` to the batch gradient already
  /// in place (ER), or uses it as the reference for projection (A-GEM).
  void apply_replay(const Input& input, std::span<const int> targets, bool project, double& loss);

  virtual std::size_t train_pass(const GrowingGraph& graph, const Batch& batch, std::size_t pass, double& loss);
  virtual void after_batch(const GrowingGraph& /*graph*/, const Batch& /*batch*/) {}
  virtual void hash_extra(std::uint64_t& /*h*/) const {}

  [[nodiscard]] std::size_t replay_count() const { return cfg_.memory_proportion * cfg_.batch_size; }
  [[nodiscard]] bool graph_backbone() const { return cfg_.backbone == "gcn"; }
  void record_projection(double dot_with_reference);

  LearnerConfig cfg_;
  std::uint64_t seed_;
  Model model_;
  AdamState adam_;
  Rng ego_rng_;
  Rng replay_rng_;
  std::size_t violations_ = 0;
  std::size_t projection_checks_ = 0;
};

std::unique_ptr<Learner> make_learner(const LearnerConfig& config, std::size_t input_dim, std::size_t classes,
                                      std::uint64_t seed);

/// Rng stream tags derived from the run seed.
namespace rng_stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t ego = 2;
inline constexpr std::uint64_t replay = 3;
inline constexpr std::uint64_t reservoir = 4;
inline constexpr std::uint64_t eval = 5;
inline constexpr std::uint64_t memory_ego = 6;
}  // namespace rng_stream

void hash_bytes(std::uint64_t& h, const void* data, std::size_t size);
void hash_matrix(std::uint64_t& h, const DenseMatrix& m);
void hash_value(std::uint64_t& h, std::uint64_t v);

}  // namespace ocgl
