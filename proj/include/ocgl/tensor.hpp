#pragma once

// Dense/sparse kernels, the masked cross-entropy loss, Adam and the
// finite-difference gradient oracle. Everything runs in 64-bit floats with a
// fixed reduction order so that repeated runs are bit-identical.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace ocgl {

class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix identity(std::size_t n);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
  [[nodiscard]] bool empty() const noexcept { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {values_.data() + r * cols_, cols_}; }

  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }

  void fill(double value);
  /// Copy of the leading `count` rows.
  [[nodiscard]] DenseMatrix top_rows(std::size_t count) const;

  bool operator==(const DenseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
/// aᵀ·b
DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b);
/// a·bᵀ
DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix transpose(const DenseMatrix& a);
void add_scaled(DenseMatrix& target, const DenseMatrix& source, double scale = 1.0);
bool all_finite(const DenseMatrix& m);
double frobenius_sq(const DenseMatrix& m);

/// Compressed sparse row matrix with strictly increasing columns per row.
class SparseMatrix {
 public:
  SparseMatrix() = default;
  SparseMatrix(std::size_t rows, std::size_t cols, std::vector<std::size_t> row_offsets,
               std::vector<std::uint32_t> col_indices, std::vector<double> values);

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix zeros(std::size_t rows, std::size_t cols);
  /// Keeps the nonzero entries of `dense`.
  static SparseMatrix from_dense(const DenseMatrix& dense);

  [[nodiscard]] DenseMatrix to_dense() const;
  /// Row subset (rows may repeat); the column space is unchanged.
  [[nodiscard]] SparseMatrix select_rows(std::span<const std::size_t> rows) const;
  [[nodiscard]] bool is_symmetric() const;

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t nnz() const noexcept { return col_indices_.size(); }
  [[nodiscard]] std::span<const std::size_t> row_offsets() const noexcept { return row_offsets_; }
  [[nodiscard]] std::span<const std::uint32_t> col_indices() const noexcept { return col_indices_; }
  [[nodiscard]] std::span<const double> values() const noexcept { return values_; }

  /// Value at (r, c), zero when not stored.
  [[nodiscard]] double at(std::size_t r, std::size_t c) const;

  bool operator==(const SparseMatrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::size_t> row_offsets_{0};
  std::vector<std::uint32_t> col_indices_;
  std::vector<double> values_;
};

/// a·b, accumulating each output row in ascending column order of `a`.
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b);
/// Leading `row_count` rows of a·b. Columns of `a` referenced by those rows
/// must be < b.rows().
DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b, std::size_t row_count);
/// a[0:b.rows(), :]ᵀ · b with `out_rows` output rows.
DenseMatrix spmm_transposed(const SparseMatrix& a, const DenseMatrix& b, std::size_t out_rows);

struct Parameter {
  std::string name;
  DenseMatrix value;
  DenseMatrix grad;
};

/// Ordered named parameters with one gradient slot each. The generation
/// counter advances on every optimizer step so that caches built against an
/// older state can be detected.
class ParameterSet {
 public:
  void add(std::string name, DenseMatrix value);

  [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
  Parameter& operator[](std::size_t i) { return entries_[i]; }
  const Parameter& operator[](std::size_t i) const { return entries_[i]; }
  Parameter& at(const std::string& name);
  const Parameter& at(const std::string& name) const;
  [[nodiscard]] bool contains(const std::string& name) const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }

  void zero_grad();
  [[nodiscard]] std::size_t total_size() const;
  [[nodiscard]] std::vector<double> flat_values() const;
  [[nodiscard]] std::vector<double> flat_grads() const;
  void set_flat_grads(std::span<const double> flat);

  [[nodiscard]] std::uint64_t generation() const noexcept { return generation_; }
  void advance_generation() noexcept { ++generation_; }

 private:
  std::vector<Parameter> entries_;
  std::uint64_t generation_ = 0;
};

/// Zero-filled matrices shaped like each parameter, same order.
std::vector<DenseMatrix> zeros_like(const ParameterSet& params);

struct AdamState {
  AdamState() = default;
  AdamState(const ParameterSet& params, double learning_rate);

  std::vector<DenseMatrix> first_moment;
  std::vector<DenseMatrix> second_moment;
  std::uint64_t step = 0;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update. Gradients are left in place.
void adam_step(ParameterSet& params, AdamState& state);

inline constexpr int kIgnoreLabel = -1;

struct LossResult {
  double loss = 0.0;
  DenseMatrix grad;
  std::size_t counted_rows = 0;
};

/// Mean cross-entropy over rows whose label is not kIgnoreLabel, with the
/// softmax taken over active columns only. Gradient entries of inactive
/// columns and ignored rows are zero.
LossResult softmax_cross_entropy(const DenseMatrix& logits, std::span<const int> labels,
                                 const std::vector<bool>& active);

/// Row-wise softmax over active columns; inactive entries are zero.
DenseMatrix masked_softmax(const DenseMatrix& logits, const std::vector<bool>& active,
                           double temperature = 1.0);

/// Central-difference check of the gradient already stored in `params`.
/// Returns max over coordinates of |analytic - numeric| / max(1, |numeric|).
double finite_diff_check(const std::function<double(const ParameterSet&)>& f, ParameterSet& params,
                         double h = 1e-5);

}  // namespace ocgl
