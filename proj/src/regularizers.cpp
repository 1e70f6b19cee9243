#include "ocgl/regularizers.hpp"

#include <cmath>

#include "ocgl/error.hpp"

namespace ocgl {

ImportanceState ImportanceState::zeros(const ParameterSet& params) {
  ImportanceState s;
  s.importance = zeros_like(params);
  s.anchor.reserve(params.size());
  for (const auto& p : params) s.anchor.push_back(p.value);
  return s;
}

void ImportanceState::accumulate(const std::vector<DenseMatrix>& sample) {
  require(sample.size() == importance.size(), ErrorKind::dimension, "importance sample does not match parameters");
  const double n = static_cast<double>(updates);
  for (std::size_t i = 0; i < importance.size(); ++i) {
    auto acc = importance[i].values();
    const auto add = sample[i].values();
    require(acc.size() == add.size(), ErrorKind::dimension, "importance sample has the wrong shape");
    for (std::size_t k = 0; k < acc.size(); ++k) acc[k] = (n * acc[k] + add[k]) / (n + 1.0);
  }
  ++updates;
}

void ImportanceState::set_anchor(const ParameterSet& params) {
  for (std::size_t i = 0; i < params.size(); ++i) anchor[i] = params[i].value;
}

double quadratic_penalty(const ImportanceState& state, Model& model, double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    auto& p = model.params[i];
    const auto w = p.value.values();
    const auto imp = state.importance[i].values();
    const auto anchor = state.anchor[i].values();
    auto g = p.grad.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double d = w[k] - anchor[k];
      total += imp[k] * d * d;
      g[k] += 2.0 * lambda * imp[k] * d;
    }
  }
  return lambda * total;
}

double quadratic_penalty_value(const ImportanceState& state, const ParameterSet& params, double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto w = params[i].value.values();
    const auto imp = state.importance[i].values();
    const auto anchor = state.anchor[i].values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      const double d = w[k] - anchor[k];
      total += imp[k] * d * d;
    }
  }
  return lambda * total;
}

double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorKind::dimension, "dot product of vectors with different lengths");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> agem_project(std::span<const double> g, std::span<const double> g_ref) {
  std::vector<double> out(g.begin(), g.end());
  const double gg = dot(g, g_ref);
  const double rr = dot(g_ref, g_ref);
  if (gg >= 0.0 || rr == 0.0) return out;
  const double scale = gg / rr;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= scale * g_ref[i];
  return out;
}

DistillationResult distillation_loss(const DenseMatrix& student_logits, const DenseMatrix& teacher_logits,
                                     std::size_t teacher_classes, std::span<const int> rows_mask,
                                     double lambda, double temperature) {
  require(student_logits.rows() == teacher_logits.rows() && student_logits.cols() == teacher_logits.cols(),
          ErrorKind::dimension, "teacher and student logits differ in shape");
  require(temperature > 0.0, ErrorKind::config, "distillation temperature must be positive");
  require(teacher_classes <= student_logits.cols(), ErrorKind::dimension, "teacher has more classes than the head");
  DistillationResult out;
  out.grad = DenseMatrix(student_logits.rows(), student_logits.cols());
  if (teacher_classes == 0) return out;

  std::vector<bool> active(student_logits.cols(), false);
  for (std::size_t c = 0; c < teacher_classes; ++c) active[c] = true;
  const DenseMatrix p = masked_softmax(teacher_logits, active, temperature);
  const DenseMatrix q = masked_softmax(student_logits, active, temperature);

  std::size_t counted = 0;
  for (int m : rows_mask)
    if (m != kIgnoreLabel) ++counted;
  if (counted == 0) return out;
  const double inv = 1.0 / static_cast<double>(counted);

  double total = 0.0;
  for (std::size_t r = 0; r < student_logits.rows(); ++r) {
    if (rows_mask[r] == kIgnoreLabel) continue;
    // log q over the teacher's classes, computed stably from the scaled logits.
    double max = student_logits(r, 0) / temperature;
    for (std::size_t c = 1; c < teacher_classes; ++c) max = std::max(max, student_logits(r, c) / temperature);
    double sum = 0.0;
    for (std::size_t c = 0; c < teacher_classes; ++c) sum += std::exp(student_logits(r, c) / temperature - max);
    const double log_norm = max + std::log(sum);
    for (std::size_t c = 0; c < teacher_classes; ++c) {
      total -= p(r, c) * (student_logits(r, c) / temperature - log_norm);
      out.grad(r, c) = lambda * temperature * (q(r, c) - p(r, c)) * inv;
    }
  }
  out.loss = lambda * temperature * temperature * total * inv;
  return out;
}

std::vector<DenseMatrix> gradients_of(const ParameterSet& params) {
  std::vector<DenseMatrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.grad);
  return out;
}

std::vector<DenseMatrix> abs_of(const std::vector<DenseMatrix>& m) {
  std::vector<DenseMatrix> out = m;
  for (auto& x : out)
    for (double& v : x.values()) v = std::abs(v);
  return out;
}

std::vector<DenseMatrix> output_sensitivity(const ForwardCache& cache, std::span<const int> rows_mask,
                                            Model& model) {
  const auto active = model.head.active_mask();
  DenseMatrix d(cache.logits.rows(), cache.logits.cols());
  std::size_t counted = 0;
  for (int m : rows_mask)
    if (m != kIgnoreLabel) ++counted;
  if (counted > 0) {
    const double scale = 2.0 / static_cast<double>(counted);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      if (rows_mask[r] == kIgnoreLabel) continue;
      for (std::size_t c = 0; c < d.cols(); ++c)
        if (active[c]) d(r, c) = scale * cache.logits(r, c);
    }
  }
  const auto saved = gradients_of(model.params);
  model.params.zero_grad();
  backward(cache, d, model);
  auto out = abs_of(gradients_of(model.params));
  for (std::size_t i = 0; i < model.params.size(); ++i) model.params[i].grad = saved[i];
  return out;
}

std::vector<DenseMatrix> message_sensitivity(const ForwardCache& cache, const SampledEgoGraph& ego,
                                             std::span<const int> rows_mask, const Model& model) {
  std::vector<DenseMatrix> out = zeros_like(model.params);
  const DenseMatrix& p0 = cache.inputs.at(0);
  const DenseMatrix& w0 = model.weight(0);
  const bool seed_indexed = cache.propagate && model.shape.layers > 1;
  std::size_t counted = 0;
  for (int m : rows_mask)
    if (m != kIgnoreLabel) ++counted;
  if (counted == 0) return out;
  const double scale = 2.0 / static_cast<double>(counted);

  DenseMatrix& g = out[model.weight_index(0)];
  std::vector<double> message(w0.cols());
  for (std::size_t i = 0; i < rows_mask.size(); ++i) {
    if (rows_mask[i] == kIgnoreLabel) continue;
    const auto x = p0.row(seed_indexed ? ego.seed_rows[i] : i);
    std::fill(message.begin(), message.end(), 0.0);
    for (std::size_t k = 0; k < x.size(); ++k) {
      if (x[k] == 0.0) continue;
      const auto wk = w0.row(k);
      for (std::size_t c = 0; c < message.size(); ++c) message[c] += x[k] * wk[c];
    }
    for (std::size_t k = 0; k < x.size(); ++k) {
      auto gk = g.row(k);
      for (std::size_t c = 0; c < message.size(); ++c) gk[c] += scale * x[k] * message[c];
    }
  }
  for (double& v : g.values()) v = std::abs(v);
  return out;
}

}  // namespace ocgl
