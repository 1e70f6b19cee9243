#pragma once

// GCN backbone, MLP head and the parameter-free SGC encoder, with hand-derived
// backward passes. A model is a stack of `layers` dense maps; the GCN variant
// propagates with the ego graph's Â before every map, the MLP variant does not.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "ocgl/graph.hpp"
#include "ocgl/rng.hpp"
#include "ocgl/tensor.hpp"

namespace ocgl {

struct ModelShape {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 256;
  std::size_t output_capacity = 0;
  std::size_t layers = 2;
  bool bias = false;
};

/// Class label → output column, assigned in order of first observation.
class OutputHead {
 public:
  explicit OutputHead(std::size_t capacity = 0) : capacity_(capacity) {}

  [[nodiscard]] std::optional<std::size_t> column_of(int label) const;
  [[nodiscard]] int label_of(std::size_t column) const { return labels_.at(column); }
  [[nodiscard]] std::size_t active_count() const noexcept { return labels_.size(); }
  [[nodiscard]] std::size_t capacity() const noexcept { return capacity_; }
  [[nodiscard]] const std::vector<int>& labels() const noexcept { return labels_; }
  /// Width `capacity`, true for the first active_count() columns.
  [[nodiscard]] std::vector<bool> active_mask() const;

  /// Maps a new label to the next free column. Throws capacity.
  std::size_t activate(int label);

  bool operator==(const OutputHead&) const = default;

 private:
  std::size_t capacity_;
  std::map<int, std::size_t> columns_;
  std::vector<int> labels_;
};

struct Model {
  ModelShape shape;
  ParameterSet params;
  OutputHead head;

  /// Glorot-uniform weights, zero biases, empty head.
  static Model create(const ModelShape& shape, Rng& rng);

  [[nodiscard]] std::size_t weight_index(std::size_t layer) const;
  [[nodiscard]] std::optional<std::size_t> bias_index(std::size_t layer) const;
  [[nodiscard]] const DenseMatrix& weight(std::size_t layer) const { return params[weight_index(layer)].value; }
  DenseMatrix& weight(std::size_t layer) { return params[weight_index(layer)].value; }
};

/// Intermediate values of one forward pass, needed by the backward pass.
struct ForwardCache {
  const Model* model = nullptr;
  std::uint64_t generation = 0;
  bool propagate = false;
  SparseMatrix adjacency;              // Â of the ego graph
  SparseMatrix seed_adjacency;         // rows of Â for the seeds
  std::vector<std::size_t> input_rows; // rows of the layer input Z_l
  std::vector<DenseMatrix> inputs;     // P_l: (propagated) input of layer l
  std::vector<DenseMatrix> preacts;    // A_l = P_l W_l (+ b_l)
  DenseMatrix logits;                  // one row per seed
};

/// H⁽ˡ⁺¹⁾ = ReLU(Â H⁽ˡ⁾ W⁽ˡ⁾), logits = Â H⁽ᴸ⁻¹⁾ W⁽ᴸ⁻¹⁾ restricted to the seeds.
/// Only the rows within reach of the seeds are computed at each layer.
ForwardCache gcn_forward(const SampledEgoGraph& ego, const Model& model);

/// Plain stack of dense layers on the rows of `x`.
ForwardCache mlp_forward(const DenseMatrix& x, const Model& model);

/// Accumulates dLoss/dθ into the model's gradient slots. Throws contract when
/// the cache belongs to another model or predates an optimizer step.
void backward(const ForwardCache& cache, const DenseMatrix& d_logits, Model& model);

inline void gcn_backward(const ForwardCache& cache, const DenseMatrix& d_logits, Model& model) {
  backward(cache, d_logits, model);
}

/// Hessian of the mean masked cross-entropy times `direction` (shaped like the
/// parameters, same order), by forward-over-reverse differentiation.
std::vector<DenseMatrix> cross_entropy_hvp(const ForwardCache& cache, std::span<const int> labels,
                                           const Model& model, const std::vector<DenseMatrix>& direction);

/// (Â^k X) restricted to the seed rows.
DenseMatrix sgc_embed(const SampledEgoGraph& ego, std::size_t k);

/// Activates `label` (no-op when active) and zeroes its output column.
std::size_t expand_head(Model& model, int label);

/// Argmax over active columns, ties to the lowest column; returns labels.
/// Rows give kUnlabeled when no class is active.
std::vector<int> predict_labels(const DenseMatrix& logits, const OutputHead& head);

/// Flat little-endian float64 blob plus a textual manifest:
///   <prefix>.bin, <prefix>.manifest
void save_checkpoint(const Model& model, const std::filesystem::path& prefix);
Model load_checkpoint(const std::filesystem::path& prefix);

}  // namespace ocgl
