#pragma once

// Performance matrix, AP/AF/AAP, accuracy and binary F1.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ocgl {

/// M(i, j): metric on task j's test nodes after the stream finished task i.
class PerformanceMatrix {
 public:
  explicit PerformanceMatrix(std::size_t tasks = 0) : tasks_(tasks), cells_(tasks * tasks) {}

  [[nodiscard]] std::size_t tasks() const noexcept { return tasks_; }
  [[nodiscard]] std::optional<double> at(std::size_t i, std::size_t j) const { return cells_.at(i * tasks_ + j); }
  /// Throws contract when the value is outside [0, 1].
  void set(std::size_t i, std::size_t j, double value);
  [[nodiscard]] bool row_started(std::size_t i) const;

  bool operator==(const PerformanceMatrix&) const = default;

 private:
  std::size_t tasks_;
  std::vector<std::optional<double>> cells_;
};

/// (1/T) Σ_j M(T, j). Throws contract when the last row has a gap.
double compute_ap(const PerformanceMatrix& m);

/// (1/(T−1)) Σ_{j<T} (M(T, j) − M(j, j)); nullopt when T < 2.
std::optional<double> compute_af(const PerformanceMatrix& m);

/// Anytime evaluations: AP after batch `batches[k]` is `values[k]`, absent when
/// no introduced task had validation nodes yet.
struct AnytimeTrace {
  std::size_t stride = 1;
  std::vector<std::size_t> batches;
  std::vector<std::optional<double>> values;
};

/// Mean of the present values. Throws contract when none is present.
double compute_aap(const AnytimeTrace& trace);

enum class Metric { accuracy, f1 };

Metric parse_metric(const std::string& name);
std::string to_string(Metric metric);

double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// 2PR/(P+R) for `positive_class`, 0 when P+R = 0.
double f1_binary(std::span<const int> predictions, std::span<const int> labels, int positive_class);

double score(Metric metric, std::span<const int> predictions, std::span<const int> labels, int positive_class);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t count = 0;
};

/// Summary of the present values; count 0 when none.
Summary summarize(std::span<const std::optional<double>> values);

}  // namespace ocgl
