#include "ocgl/metrics.hpp"

#include <cmath>

#include "ocgl/error.hpp"

namespace ocgl {

void PerformanceMatrix::set(std::size_t i, std::size_t j, double value) {
  require(i < tasks_ && j < tasks_, ErrorKind::dimension, "performance matrix index out of range");
  require(value >= 0.0 && value <= 1.0, ErrorKind::contract,
          "performance value " + std::to_string(value) + " lies outside [0, 1]");
  cells_[i * tasks_ + j] = value;
}

bool PerformanceMatrix::row_started(std::size_t i) const {
  for (std::size_t j = 0; j < tasks_; ++j)
    if (at(i, j)) return true;
  return false;
}

double compute_ap(const PerformanceMatrix& m) {
  require(m.tasks() > 0, ErrorKind::contract, "performance matrix has no tasks");
  const std::size_t last = m.tasks() - 1;
  double sum = 0.0;
  for (std::size_t j = 0; j < m.tasks(); ++j) {
    const auto v = m.at(last, j);
    require(v.has_value(), ErrorKind::contract, "last row of the performance matrix is not filled");
    sum += *v;
  }
  return sum / static_cast<double>(m.tasks());
}

std::optional<double> compute_af(const PerformanceMatrix& m) {
  if (m.tasks() < 2) return std::nullopt;
  const std::size_t last = m.tasks() - 1;
  double sum = 0.0;
  for (std::size_t j = 0; j < last; ++j) {
    const auto final_value = m.at(last, j);
    const auto diagonal = m.at(j, j);
    require(final_value && diagonal, ErrorKind::contract, "diagonal or last row of the performance matrix is not filled");
    sum += *final_value - *diagonal;
  }
  return sum / static_cast<double>(last);
}

double compute_aap(const AnytimeTrace& trace) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : trace.values) {
    if (!v) continue;
    sum += *v;
    ++n;
  }
  require(n > 0, ErrorKind::contract, "anytime trace is empty");
  return sum / static_cast<double>(n);
}

Metric parse_metric(const std::string& name) {
  if (name == "accuracy") return Metric::accuracy;
  if (name == "f1") return Metric::f1;
  fail(ErrorKind::config, "metric must be accuracy or f1, got '" + name + "'");
}

std::string to_string(Metric metric) { return metric == Metric::accuracy ? "accuracy" : "f1"; }

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  require(predictions.size() == labels.size(), ErrorKind::dimension, "prediction and label counts differ");
  require(!labels.empty(), ErrorKind::contract, "accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (predictions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

double f1_binary(std::span<const int> predictions, std::span<const int> labels, int positive_class) {
  require(predictions.size() == labels.size(), ErrorKind::dimension, "prediction and label counts differ");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool predicted = predictions[i] == positive_class;
    const bool actual = labels[i] == positive_class;
    if (predicted && actual) ++tp;
    if (predicted && !actual) ++fp;
    if (!predicted && actual) ++fn;
  }
  if (tp == 0) return 0.0;
  const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
  const double recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
  return 2.0 * precision * recall / (precision + recall);
}

double score(Metric metric, std::span<const int> predictions, std::span<const int> labels, int positive_class) {
  return metric == Metric::accuracy ? accuracy(predictions, labels)
                                    : f1_binary(predictions, labels, positive_class);
}

Summary summarize(std::span<const std::optional<double>> values) {
  Summary s;
  double sum = 0.0;
  for (const auto& v : values)
    if (v) {
      sum += *v;
      ++s.count;
    }
  if (s.count == 0) return s;
  s.mean = sum / static_cast<double>(s.count);
  double sq = 0.0;
  for (const auto& v : values)
    if (v) sq += (*v - s.mean) * (*v - s.mean);
  s.std = std::sqrt(sq / static_cast<double>(s.count));
  return s;
}

}  // namespace ocgl
