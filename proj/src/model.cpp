#include "ocgl/model.hpp"

#include <cmath>

#include "ocgl/error.hpp"

namespace ocgl {

std::optional<std::size_t> OutputHead::column_of(int label) const {
  const auto it = columns_.find(label);
  if (it == columns_.end()) return std::nullopt;
  return it->second;
}

std::vector<bool> OutputHead::active_mask() const {
  std::vector<bool> mask(capacity_, false);
  for (std::size_t c = 0; c < labels_.size(); ++c) mask[c] = true;
  return mask;
}

std::size_t OutputHead::activate(int label) {
  if (const auto existing = column_of(label)) return *existing;
  require(labels_.size() < capacity_, ErrorKind::capacity,
          "output head is full (" + std::to_string(capacity_) + " columns), cannot add class " +
              std::to_string(label));
  const std::size_t column = labels_.size();
  columns_.emplace(label, column);
  labels_.push_back(label);
  return column;
}

Model Model::create(const ModelShape& shape, Rng& rng) {
  require(shape.layers >= 1, ErrorKind::config, "a model needs at least one layer");
  require(shape.hidden_dim > 0 && shape.input_dim > 0 && shape.output_capacity > 0, ErrorKind::config,
          "model dimensions must be positive");
  Model model;
  model.shape = shape;
  model.head = OutputHead(shape.output_capacity);
  for (std::size_t l = 0; l < shape.layers; ++l) {
    const std::size_t in = l == 0 ? shape.input_dim : shape.hidden_dim;
    const std::size_t out = l + 1 == shape.layers ? shape.output_capacity : shape.hidden_dim;
    const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
    DenseMatrix w(in, out);
    for (double& v : w.values()) v = (2.0 * rng.uniform() - 1.0) * limit;
    model.params.add("W" + std::to_string(l), std::move(w));
    if (shape.bias) model.params.add("b" + std::to_string(l), DenseMatrix(1, out));
  }
  return model;
}

std::size_t Model::weight_index(std::size_t layer) const { return shape.bias ? 2 * layer : layer; }

std::optional<std::size_t> Model::bias_index(std::size_t layer) const {
  if (!shape.bias) return std::nullopt;
  return 2 * layer + 1;
}

namespace {

void add_bias(DenseMatrix& a, const Model& model, std::size_t layer) {
  const auto b = model.bias_index(layer);
  if (!b) return;
  const auto bias = model.params[*b].value.row(0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    auto row = a.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) row[c] += bias[c];
  }
}

DenseMatrix relu(const DenseMatrix& a) {
  DenseMatrix out = a;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

void mask_relu(DenseMatrix& grad, const DenseMatrix& preact) {
  auto g = grad.values();
  auto a = preact.values();
  for (std::size_t i = 0; i < g.size(); ++i)
    if (!(a[i] > 0.0)) g[i] = 0.0;
}

DenseMatrix column_sums(const DenseMatrix& m) {
  DenseMatrix out(1, m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) out(0, c) += m(r, c);
  return out;
}

// Nodes within k hops of the seeds; all nodes once k exceeds the sampled depth.
std::size_t within(const SampledEgoGraph& ego, std::size_t k) {
  return k < ego.hop_offsets.size() ? ego.hop_offsets[k] : ego.node_count();
}

// Propagation used in front of layer `l` (forward) and its transpose.
DenseMatrix propagate(const ForwardCache& cache, std::size_t layer, const DenseMatrix& z, std::size_t rows) {
  if (!cache.propagate) return z;
  const bool is_last = layer + 1 == cache.input_rows.size();
  return is_last ? spmm(cache.seed_adjacency, z, cache.seed_adjacency.rows()) : spmm(cache.adjacency, z, rows);
}

DenseMatrix propagate_transposed(const ForwardCache& cache, std::size_t layer, const DenseMatrix& dp) {
  if (!cache.propagate) return dp;
  const bool is_last = layer + 1 == cache.input_rows.size();
  return spmm_transposed(is_last ? cache.seed_adjacency : cache.adjacency, dp, cache.input_rows[layer]);
}

void check_cache(const ForwardCache& cache, const Model& model) {
  require(cache.model == &model, ErrorKind::contract, "forward cache was produced by another model");
  require(cache.generation == model.params.generation(), ErrorKind::contract,
          "forward cache is stale: parameters changed since the forward pass");
}

}  // namespace

ForwardCache gcn_forward(const SampledEgoGraph& ego, const Model& model) {
  const std::size_t layers = model.shape.layers;
  require(ego.features.cols() == model.shape.input_dim, ErrorKind::dimension,
          "ego features have " + std::to_string(ego.features.cols()) + " columns, model expects " +
              std::to_string(model.shape.input_dim));
  require(ego.hops() >= layers, ErrorKind::dimension,
          "ego graph has " + std::to_string(ego.hops()) + " hops, model needs " + std::to_string(layers));

  ForwardCache cache;
  cache.model = &model;
  cache.generation = model.params.generation();
  cache.propagate = true;
  cache.adjacency = ego.normalized;
  cache.seed_adjacency = ego.normalized.select_rows(ego.seed_rows);

  DenseMatrix z = ego.features;
  for (std::size_t l = 0; l < layers; ++l) {
    cache.input_rows.push_back(z.rows());
    const bool is_last = l + 1 == layers;
    DenseMatrix p = is_last ? spmm(cache.seed_adjacency, z, cache.seed_adjacency.rows())
                            : spmm(cache.adjacency, z, within(ego, layers - 1 - l));
    DenseMatrix a = matmul(p, model.weight(l));
    add_bias(a, model, l);
    if (!is_last) z = relu(a);
    cache.inputs.push_back(std::move(p));
    cache.preacts.push_back(std::move(a));
  }
  cache.logits = cache.preacts.back();
  return cache;
}

ForwardCache mlp_forward(const DenseMatrix& x, const Model& model) {
  require(x.cols() == model.shape.input_dim, ErrorKind::dimension,
          "input has " + std::to_string(x.cols()) + " columns, model expects " +
              std::to_string(model.shape.input_dim));
  ForwardCache cache;
  cache.model = &model;
  cache.generation = model.params.generation();
  cache.propagate = false;
  DenseMatrix z = x;
  for (std::size_t l = 0; l < model.shape.layers; ++l) {
    cache.input_rows.push_back(z.rows());
    DenseMatrix a = matmul(z, model.weight(l));
    add_bias(a, model, l);
    cache.inputs.push_back(z);
    if (l + 1 < model.shape.layers) z = relu(a);
    cache.preacts.push_back(std::move(a));
  }
  cache.logits = cache.preacts.back();
  return cache;
}

void backward(const ForwardCache& cache, const DenseMatrix& d_logits, Model& model) {
  check_cache(cache, model);
  require(d_logits.rows() == cache.logits.rows() && d_logits.cols() == cache.logits.cols(), ErrorKind::dimension,
          "logit gradient shape does not match the forward pass");
  DenseMatrix da = d_logits;
  for (std::size_t l = model.shape.layers; l-- > 0;) {
    add_scaled(model.params[model.weight_index(l)].grad, matmul_tn(cache.inputs[l], da));
    if (const auto b = model.bias_index(l)) add_scaled(model.params[*b].grad, column_sums(da));
    if (l == 0) break;
    DenseMatrix dz = propagate_transposed(cache, l, matmul_nt(da, model.weight(l)));
    mask_relu(dz, cache.preacts[l - 1]);
    da = std::move(dz);
  }
}

std::vector<DenseMatrix> cross_entropy_hvp(const ForwardCache& cache, std::span<const int> labels,
                                           const Model& model, const std::vector<DenseMatrix>& direction) {
  check_cache(cache, model);
  require(direction.size() == model.params.size(), ErrorKind::dimension, "direction must match the parameters");
  const std::size_t layers = model.shape.layers;
  auto dir_weight = [&](std::size_t l) -> const DenseMatrix& { return direction[model.weight_index(l)]; };

  // Forward directional derivatives R{P_l}.
  std::vector<DenseMatrix> r_inputs;
  DenseMatrix r_z(cache.input_rows[0], model.shape.input_dim);
  DenseMatrix r_a;
  for (std::size_t l = 0; l < layers; ++l) {
    DenseMatrix r_p = l == 0 ? DenseMatrix(cache.inputs[0].rows(), cache.inputs[0].cols())
                             : propagate(cache, l, r_z, cache.inputs[l].rows());
    r_a = matmul(r_p, model.weight(l));
    add_scaled(r_a, matmul(cache.inputs[l], dir_weight(l)));
    if (const auto b = model.bias_index(l)) {
      const auto vb = direction[*b].row(0);
      for (std::size_t r = 0; r < r_a.rows(); ++r)
        for (std::size_t c = 0; c < r_a.cols(); ++c) r_a(r, c) += vb[c];
    }
    r_inputs.push_back(std::move(r_p));
    if (l + 1 < layers) {
      r_z = r_a;
      mask_relu(r_z, cache.preacts[l]);
    }
  }

  const auto active = model.head.active_mask();
  const LossResult ce = softmax_cross_entropy(cache.logits, labels, active);
  const DenseMatrix probs = masked_softmax(cache.logits, active);
  DenseMatrix r_grad(cache.logits.rows(), cache.logits.cols());
  if (ce.counted_rows > 0) {
    const double scale = 1.0 / static_cast<double>(ce.counted_rows);
    for (std::size_t r = 0; r < r_grad.rows(); ++r) {
      if (labels[r] == kIgnoreLabel) continue;
      double dot = 0.0;
      for (std::size_t c = 0; c < r_grad.cols(); ++c)
        if (active[c]) dot += probs(r, c) * r_a(r, c);
      for (std::size_t c = 0; c < r_grad.cols(); ++c)
        if (active[c]) r_grad(r, c) = probs(r, c) * (r_a(r, c) - dot) * scale;
    }
  }

  std::vector<DenseMatrix> hv = zeros_like(model.params);
  DenseMatrix da = ce.grad;
  DenseMatrix r_da = r_grad;
  for (std::size_t l = layers; l-- > 0;) {
    DenseMatrix& hw = hv[model.weight_index(l)];
    add_scaled(hw, matmul_tn(r_inputs[l], da));
    add_scaled(hw, matmul_tn(cache.inputs[l], r_da));
    if (const auto b = model.bias_index(l)) add_scaled(hv[*b], column_sums(r_da));
    if (l == 0) break;
    DenseMatrix dp = matmul_nt(da, model.weight(l));
    DenseMatrix r_dp = matmul_nt(r_da, model.weight(l));
    add_scaled(r_dp, matmul_nt(da, dir_weight(l)));
    DenseMatrix dz = propagate_transposed(cache, l, dp);
    DenseMatrix r_dz = propagate_transposed(cache, l, r_dp);
    mask_relu(dz, cache.preacts[l - 1]);
    mask_relu(r_dz, cache.preacts[l - 1]);
    da = std::move(dz);
    r_da = std::move(r_dz);
  }
  return hv;
}

DenseMatrix sgc_embed(const SampledEgoGraph& ego, std::size_t k) {
  require(k <= ego.hops(), ErrorKind::dimension,
          "SGC depth " + std::to_string(k) + " exceeds the ego graph's " + std::to_string(ego.hops()) + " hops");
  if (k == 0) {
    DenseMatrix out(ego.seed_rows.size(), ego.features.cols());
    for (std::size_t i = 0; i < ego.seed_rows.size(); ++i) {
      const auto x = ego.features.row(ego.seed_rows[i]);
      std::copy(x.begin(), x.end(), out.row(i).begin());
    }
    return out;
  }
  DenseMatrix z = ego.features;
  for (std::size_t step = 0; step + 1 < k; ++step) z = spmm(ego.normalized, z, within(ego, k - 1 - step));
  const SparseMatrix seed_rows = ego.normalized.select_rows(ego.seed_rows);
  return spmm(seed_rows, z, seed_rows.rows());
}

std::size_t expand_head(Model& model, int label) {
  if (const auto existing = model.head.column_of(label)) return *existing;
  const std::size_t column = model.head.activate(label);
  const std::size_t last = model.shape.layers - 1;
  DenseMatrix& w = model.weight(last);
  for (std::size_t r = 0; r < w.rows(); ++r) w(r, column) = 0.0;
  if (const auto b = model.bias_index(last)) model.params[*b].value(0, column) = 0.0;
  return column;
}

std::vector<int> predict_labels(const DenseMatrix& logits, const OutputHead& head) {
  std::vector<int> out(logits.rows(), kUnlabeled);
  const std::size_t active = head.active_count();
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    if (active == 0) continue;
    std::size_t best = 0;
    for (std::size_t c = 1; c < active; ++c)
      if (logits(r, c) > logits(r, best)) best = c;
    out[r] = head.label_of(best);
  }
  return out;
}

}  // namespace ocgl
