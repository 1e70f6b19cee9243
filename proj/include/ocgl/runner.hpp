#pragma once

// Experiment orchestration: seeded replications, the first-tasks grid
// protocol, the joint upper bound and report files.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ocgl/config.hpp"
#include "ocgl/dataset.hpp"
#include "ocgl/evaluation.hpp"
#include "ocgl/metrics.hpp"
#include "ocgl/stream.hpp"

namespace ocgl {

/// The configured dataset directory, or the SBM when `data` is empty.
StaticGraph load_source(const RunConfig& cfg);

/// Stream, schedule and splits for the configured stream kind and data seed.
StreamBundle build_stream(const RunConfig& cfg, const StaticGraph& graph);

/// `boundary` when set, else the schedule's default; always in [1, T).
std::size_t selection_boundary(const RunConfig& cfg, const TaskSchedule& schedule);

struct SeedResult {
  std::uint64_t seed = 0;
  OnlineResult online;
  double ap = 0.0;
  std::optional<double> af;
  std::optional<double> aap;
  std::size_t max_touched = 0;
  std::size_t projection_violations = 0;
  std::size_t projection_checks = 0;
};

struct ExperimentReport {
  RunConfig config;
  std::size_t tasks = 0;
  std::size_t nodes = 0;
  std::size_t touched_bound = 0;
  std::vector<SeedResult> seeds;
  Summary ap, af, aap;
  std::vector<std::pair<std::string, std::string>> selected;
  std::vector<std::string> warnings;
};

ExperimentReport run_experiment(const RunConfig& cfg);
ExperimentReport run_experiment(const RunConfig& cfg, const StaticGraph& graph);
ExperimentReport run_experiment(const RunConfig& cfg, const StreamBundle& bundle, std::size_t feature_dim,
                                std::size_t classes);

using GridPoint = std::vector<std::pair<std::string, std::string>>;

/// Cartesian product of candidate values, first axis outermost.
struct Grid {
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;

  [[nodiscard]] std::vector<GridPoint> points() const;

  /// Lines `key = v1 | v2 | v3`; `#` starts a comment.
  static Grid from_text(std::string_view text, const std::string& origin = "<text>");
  static Grid from_file(const std::filesystem::path& path);
  /// The default candidate sets for a strategy.
  static Grid defaults_for(const std::string& strategy);
};

struct GridResult {
  std::vector<GridPoint> points;
  std::vector<double> scores;  // validation AP at the boundary, -inf when training diverged
  std::size_t best = 0;
  std::size_t boundary = 0;
  std::size_t consumed_nodes = 0;  // stream positions seen by any grid run
};

/// Runs each point on tasks [0, boundary) with the first configured seed and
/// returns the argmax (ties to the earliest point).
GridResult grid_select(const RunConfig& cfg, const Grid& grid, const StreamBundle& bundle, std::size_t feature_dim,
                       std::size_t classes);

/// Validation AP over tasks [0, boundary) after the online run over them.
double boundary_score(const RunConfig& cfg, const StreamBundle& bundle, std::size_t feature_dim, std::size_t classes,
                      std::size_t boundary, std::uint64_t seed);

struct JointResult {
  std::uint64_t seed = 0;
  std::vector<std::optional<double>> task_scores;
  double ap = 0.0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_validation = 0.0;
};

/// Full-batch training on the final graph with validation early stopping,
/// scored on each task's test nodes.
JointResult run_joint_upper_bound(const RunConfig& cfg, const StreamBundle& bundle, std::size_t feature_dim,
                                  std::size_t classes, std::uint64_t seed);

struct JointReport {
  RunConfig config;
  std::vector<JointResult> seeds;
  Summary ap;
};

JointReport run_joint(const RunConfig& cfg);

nlohmann::json metrics_json(const ExperimentReport& report);
nlohmann::json metrics_json(const JointReport& report);

/// metrics.json, anytime.csv, perf_matrix.csv (mean over seeds), per-seed
/// copies under seed_<s>/, touched.csv, timing.csv and config.txt.
void emit_reports(const ExperimentReport& report, const std::filesystem::path& out_dir);
void emit_reports(const JointReport& report, const std::filesystem::path& out_dir);
void emit_grid_report(const GridResult& result, const std::filesystem::path& out_dir);

/// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace ocgl
