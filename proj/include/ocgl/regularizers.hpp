#pragma once

// Loss terms shared by the regularization strategies: importance-weighted
// quadratic anchors, gradient projection and distillation.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "ocgl/model.hpp"
#include "ocgl/tensor.hpp"

namespace ocgl {

/// Per-parameter importance with its anchor θ*. Shapes follow the parameter
/// set; output columns are allocated up front, so head growth never reshapes.
struct ImportanceState {
  std::vector<DenseMatrix> importance;
  std::vector<DenseMatrix> anchor;
  std::size_t updates = 0;

  static ImportanceState zeros(const ParameterSet& params);

  /// importance ← (updates·importance + sample) / (updates + 1)
  void accumulate(const std::vector<DenseMatrix>& sample);
  void set_anchor(const ParameterSet& params);
};

/// λ Σ importance (θ − θ*)², adding 2λ importance (θ − θ*) to the gradients.
double quadratic_penalty(const ImportanceState& state, Model& model, double lambda);

/// Value of the same penalty without touching gradients.
double quadratic_penalty_value(const ImportanceState& state, const ParameterSet& params, double lambda);

/// If g·g_ref < 0, removes the component of g along g_ref.
std::vector<double> agem_project(std::span<const double> g, std::span<const double> g_ref);

double dot(std::span<const double> a, std::span<const double> b);

struct DistillationResult {
  double loss = 0.0;
  DenseMatrix grad;  // w.r.t. student logits
};

/// λ T² · mean over counted rows of CE(softmax(t/T), softmax(s/T)), restricted
/// to the first `teacher_classes` columns. Rows with kIgnoreLabel are skipped.
DistillationResult distillation_loss(const DenseMatrix& student_logits, const DenseMatrix& teacher_logits,
                                     std::size_t teacher_classes, std::span<const int> rows_mask,
                                     double lambda, double temperature);

/// |gradient| of the mean squared L2 norm of active logits over counted rows.
std::vector<DenseMatrix> output_sensitivity(const ForwardCache& cache, std::span<const int> rows_mask,
                                            Model& model);

/// |gradient| w.r.t. the first weight of the mean squared norm of the
/// first-layer messages P₀W₀ at the seed rows; every other parameter gets zero.
std::vector<DenseMatrix> message_sensitivity(const ForwardCache& cache, const SampledEgoGraph& ego,
                                             std::span<const int> rows_mask, const Model& model);

/// Elementwise |m| of each matrix.
std::vector<DenseMatrix> abs_of(const std::vector<DenseMatrix>& m);
/// Current gradients of the parameter set, in order.
std::vector<DenseMatrix> gradients_of(const ParameterSet& params);

}  // namespace ocgl
