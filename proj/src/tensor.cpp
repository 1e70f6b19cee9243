#include "ocgl/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ocgl/error.hpp"

namespace ocgl {

namespace {

std::string shape(const DenseMatrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

}  // namespace

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  require(values_.size() == rows * cols, ErrorKind::dimension,
          "dense matrix value count does not match its shape");
  require(std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); }),
          ErrorKind::numeric, "dense matrix constructed with non-finite values");
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

void DenseMatrix::fill(double value) { std::fill(values_.begin(), values_.end(), value); }

DenseMatrix DenseMatrix::top_rows(std::size_t count) const {
  require(count <= rows_, ErrorKind::dimension, "top_rows beyond matrix height");
  DenseMatrix out(count, cols_);
  std::copy_n(values_.begin(), count * cols_, out.values_.begin());
  return out;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorKind::dimension,
          "matmul shape mismatch " + shape(a) + " * " + shape(b));
  DenseMatrix out(a.rows(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* out_row = out.row(i).data();
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const double* b_row = b.row(k).data();
      for (std::size_t j = 0; j < n; ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.rows() == b.rows(), ErrorKind::dimension,
          "matmul_tn shape mismatch " + shape(a) + "^T * " + shape(b));
  DenseMatrix out(a.cols(), b.cols());
  const std::size_t n = b.cols();
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double* b_row = b.row(k).data();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = a(k, i);
      if (aki == 0.0) continue;
      double* out_row = out.row(i).data();
      for (std::size_t j = 0; j < n; ++j) out_row[j] += aki * b_row[j];
    }
  }
  return out;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.cols(), ErrorKind::dimension,
          "matmul_nt shape mismatch " + shape(a) + " * " + shape(b) + "^T");
  DenseMatrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* a_row = a.row(i).data();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const double* b_row = b.row(j).data();
      double sum = 0.0;
      for (std::size_t k = 0; k < a.cols(); ++k) sum += a_row[k] * b_row[k];
      out(i, j) = sum;
    }
  }
  return out;
}

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  return out;
}

void add_scaled(DenseMatrix& target, const DenseMatrix& source, double scale) {
  require(target.rows() == source.rows() && target.cols() == source.cols(), ErrorKind::dimension,
          "add_scaled shape mismatch " + shape(target) + " vs " + shape(source));
  auto t = target.values();
  auto s = source.values();
  for (std::size_t i = 0; i < t.size(); ++i) t[i] += scale * s[i];
}

bool all_finite(const DenseMatrix& m) {
  return std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
}

double frobenius_sq(const DenseMatrix& m) {
  double sum = 0.0;
  for (double v : m.values()) sum += v * v;
  return sum;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
                           std::vector<std::uint32_t> col_indices, std::vector<double> values)
    : rows_(rows),
      cols_(cols),
      row_offsets_(std::move(row_offsets)),
      col_indices_(std::move(col_indices)),
      values_(std::move(values)) {
  require(row_offsets_.size() == rows_ + 1, ErrorKind::dimension, "row_offsets length must be rows+1");
  require(row_offsets_.front() == 0 && row_offsets_.back() == col_indices_.size(),
          ErrorKind::dimension, "row_offsets must span all nonzeros");
  require(values_.size() == col_indices_.size(), ErrorKind::dimension,
          "sparse value count does not match index count");
  for (std::size_t r = 0; r < rows_; ++r) {
    require(row_offsets_[r] <= row_offsets_[r + 1], ErrorKind::dimension,
            "row_offsets must be non-decreasing");
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      require(col_indices_[k] < cols_, ErrorKind::dimension, "sparse column index out of range");
      require(k == row_offsets_[r] || col_indices_[k - 1] < col_indices_[k], ErrorKind::dimension,
              "sparse column indices must be strictly increasing per row");
    }
  }
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<std::size_t> offsets(n + 1);
  std::vector<std::uint32_t> cols(n);
  for (std::size_t i = 0; i < n; ++i) {
    offsets[i + 1] = i + 1;
    cols[i] = static_cast<std::uint32_t>(i);
  }
  return SparseMatrix(n, n, std::move(offsets), std::move(cols), std::vector<double>(n, 1.0));
}

SparseMatrix SparseMatrix::zeros(std::size_t rows, std::size_t cols) {
  return SparseMatrix(rows, cols, std::vector<std::size_t>(rows + 1, 0), {}, {});
}

SparseMatrix SparseMatrix::from_dense(const DenseMatrix& dense) {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  for (std::size_t r = 0; r < dense.rows(); ++r) {
    for (std::size_t c = 0; c < dense.cols(); ++c) {
      if (dense(r, c) != 0.0) {
        cols.push_back(static_cast<std::uint32_t>(c));
        vals.push_back(dense(r, c));
      }
    }
    offsets.push_back(cols.size());
  }
  return SparseMatrix(dense.rows(), dense.cols(), std::move(offsets), std::move(cols), std::move(vals));
}

DenseMatrix SparseMatrix::to_dense() const {
  DenseMatrix out(rows_, cols_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) out(r, col_indices_[k]) = values_[k];
  return out;
}

SparseMatrix SparseMatrix::select_rows(std::span<const std::size_t> rows) const {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> vals;
  for (std::size_t r : rows) {
    require(r < rows_, ErrorKind::dimension, "select_rows index out of range");
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k) {
      cols.push_back(col_indices_[k]);
      vals.push_back(values_[k]);
    }
    offsets.push_back(cols.size());
  }
  return SparseMatrix(rows.size(), cols_, std::move(offsets), std::move(cols), std::move(vals));
}

double SparseMatrix::at(std::size_t r, std::size_t c) const {
  const auto first = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r]);
  const auto last = col_indices_.begin() + static_cast<std::ptrdiff_t>(row_offsets_[r + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(c));
  if (it == last || *it != c) return 0.0;
  return values_[static_cast<std::size_t>(it - col_indices_.begin())];
}

bool SparseMatrix::is_symmetric() const {
  if (rows_ != cols_) return false;
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t k = row_offsets_[r]; k < row_offsets_[r + 1]; ++k)
      if (at(col_indices_[k], r) != values_[k]) return false;
  return true;
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
  require(a.cols() == b.rows(), ErrorKind::dimension,
          "spmm shape mismatch " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " * " +
              shape(b));
  return spmm(a, b, a.rows());
}

DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b, std::size_t row_count) {
  require(row_count <= a.rows(), ErrorKind::dimension, "spmm row_count exceeds matrix height");
  DenseMatrix out(row_count, b.cols());
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < row_count; ++r) {
    double* out_row = out.row(r).data();
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      if (cols[k] >= b.rows()) fail(ErrorKind::dimension, "spmm references a row beyond the dense operand");
      const double v = vals[k];
      const double* b_row = b.row(cols[k]).data();
      for (std::size_t j = 0; j < n; ++j) out_row[j] += v * b_row[j];
    }
  }
  return out;
}

DenseMatrix spmm_transposed(const SparseMatrix& a, const DenseMatrix& b, std::size_t out_rows) {
  require(b.rows() <= a.rows(), ErrorKind::dimension, "spmm_transposed operand taller than matrix");
  DenseMatrix out(out_rows, b.cols());
  const auto offsets = a.row_offsets();
  const auto cols = a.col_indices();
  const auto vals = a.values();
  const std::size_t n = b.cols();
  for (std::size_t r = 0; r < b.rows(); ++r) {
    const double* b_row = b.row(r).data();
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k) {
      if (cols[k] >= out_rows) fail(ErrorKind::dimension, "spmm_transposed column beyond output height");
      double* out_row = out.row(cols[k]).data();
      const double v = vals[k];
      for (std::size_t j = 0; j < n; ++j) out_row[j] += v * b_row[j];
    }
  }
  return out;
}

void ParameterSet::add(std::string name, DenseMatrix value) {
  require(!contains(name), ErrorKind::contract, "duplicate parameter name " + name);
  DenseMatrix grad(value.rows(), value.cols());
  entries_.push_back({std::move(name), std::move(value), std::move(grad)});
}

Parameter& ParameterSet::at(const std::string& name) {
  for (auto& p : entries_)
    if (p.name == name) return p;
  fail(ErrorKind::contract, "unknown parameter " + name);
}

const Parameter& ParameterSet::at(const std::string& name) const {
  for (const auto& p : entries_)
    if (p.name == name) return p;
  fail(ErrorKind::contract, "unknown parameter " + name);
}

bool ParameterSet::contains(const std::string& name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const Parameter& p) { return p.name == name; });
}

void ParameterSet::zero_grad() {
  for (auto& p : entries_) p.grad.fill(0.0);
}

std::size_t ParameterSet::total_size() const {
  std::size_t n = 0;
  for (const auto& p : entries_) n += p.value.size();
  return n;
}

std::vector<double> ParameterSet::flat_values() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& p : entries_) flat.insert(flat.end(), p.value.values().begin(), p.value.values().end());
  return flat;
}

std::vector<double> ParameterSet::flat_grads() const {
  std::vector<double> flat;
  flat.reserve(total_size());
  for (const auto& p : entries_) flat.insert(flat.end(), p.grad.values().begin(), p.grad.values().end());
  return flat;
}

void ParameterSet::set_flat_grads(std::span<const double> flat) {
  require(flat.size() == total_size(), ErrorKind::dimension, "flat gradient length mismatch");
  std::size_t offset = 0;
  for (auto& p : entries_) {
    auto g = p.grad.values();
    std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), g.size(), g.begin());
    offset += g.size();
  }
}

std::vector<DenseMatrix> zeros_like(const ParameterSet& params) {
  std::vector<DenseMatrix> out;
  out.reserve(params.size());
  for (const auto& p : params) out.emplace_back(p.value.rows(), p.value.cols());
  return out;
}

AdamState::AdamState(const ParameterSet& params, double lr)
    : first_moment(zeros_like(params)), second_moment(zeros_like(params)), learning_rate(lr) {}

void adam_step(ParameterSet& params, AdamState& state) {
  require(state.first_moment.size() == params.size(), ErrorKind::dimension,
          "Adam state does not match the parameter set");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i].value.values();
    auto grad = params[i].grad.values();
    auto m = state.first_moment[i].values();
    auto v = state.second_moment[i].values();
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * grad[k];
      v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * grad[k] * grad[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      value[k] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
  params.advance_generation();
}

DenseMatrix masked_softmax(const DenseMatrix& logits, const std::vector<bool>& active, double temperature) {
  require(active.size() == logits.cols(), ErrorKind::dimension, "class mask width mismatch");
  DenseMatrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.cols(); ++c)
      if (active[c]) max_logit = std::max(max_logit, logits(r, c) / temperature);
    double total = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      if (!active[c]) continue;
      out(r, c) = std::exp(logits(r, c) / temperature - max_logit);
      total += out(r, c);
    }
    for (std::size_t c = 0; c < logits.cols(); ++c)
      if (active[c]) out(r, c) /= total;
  }
  return out;
}

LossResult softmax_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                                 const std::vector<bool>& active) {
  require(labels.size() == logits.rows(), ErrorKind::dimension, "one label per logit row required");
  require(active.size() == logits.cols(), ErrorKind::dimension, "class mask width mismatch");
  LossResult result;
  result.grad = DenseMatrix(logits.rows(), logits.cols());
  for (int label : labels) {
    if (label == kIgnoreLabel) continue;
    require(label >= 0 && static_cast<std::size_t>(label) < active.size() && active[label],
            ErrorKind::invalid_label, "label " + std::to_string(label) + " is not an active class");
    ++result.counted_rows;
  }
  if (result.counted_rows == 0) return result;

  const double scale = 1.0 / static_cast<double>(result.counted_rows);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const int label = labels[r];
    if (label == kIgnoreLabel) continue;
    double max_logit = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.cols(); ++c)
      if (active[c]) max_logit = std::max(max_logit, logits(r, c));
    double total = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c)
      if (active[c]) total += std::exp(logits(r, c) - max_logit);
    const double log_total = std::log(total) + max_logit;
    result.loss += (log_total - logits(r, static_cast<std::size_t>(label))) * scale;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      if (!active[c]) continue;
      const double p = std::exp(logits(r, c) - log_total);
      result.grad(r, c) = (p - (static_cast<int>(c) == label ? 1.0 : 0.0)) * scale;
    }
  }
  return result;
}

double finite_diff_check(const std::function<double(const ParameterSet&)>& f, ParameterSet& params,
                         double h) {
  double worst = 0.0;
  for (auto& p : params) {
    auto value = p.value.values();
    auto grad = p.grad.values();
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double original = value[k];
      value[k] = original + h;
      const double plus = f(params);
      value[k] = original - h;
      const double minus = f(params);
      value[k] = original;
      require(std::isfinite(plus) && std::isfinite(minus), ErrorKind::numeric,
              "objective is not finite near parameter " + p.name);
      const double numeric = (plus - minus) / (2.0 * h);
      const double err = std::abs(grad[k] - numeric) / std::max(1.0, std::abs(numeric));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace ocgl
