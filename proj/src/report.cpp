#include <algorithm>
#include <charconv>
#include <fstream>

#include "ocgl/error.hpp"
#include "ocgl/runner.hpp"

namespace ocgl {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json summary_json(const Summary& s) {
  if (s.count == 0) return nullptr;
  return json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}};
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << content;
  if (!out.good()) fail(ErrorKind::io, "failed while writing " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::io, "cannot create directory " + dir.string() + ": " + ec.message());
}

std::string cell(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

std::optional<double> mean_of(const std::vector<std::optional<double>>& values) {
  const Summary s = summarize(values);
  if (s.count == 0) return std::nullopt;
  return s.mean;
}

std::string anytime_csv(const std::vector<const AnytimeTrace*>& traces) {
  std::string out = "batch_index,ap_value\n";
  if (traces.empty()) return out;
  for (std::size_t k = 0; k < traces[0]->batches.size(); ++k) {
    std::vector<std::optional<double>> values;
    for (const auto* t : traces) values.push_back(t->values[k]);
    out += std::to_string(traces[0]->batches[k]) + "," + cell(mean_of(values)) + "\n";
  }
  return out;
}

std::string matrix_csv(const std::vector<const PerformanceMatrix*>& matrices) {
  const std::size_t tasks = matrices.empty() ? 0 : matrices[0]->tasks();
  std::string out = "after_task";
  for (std::size_t j = 0; j < tasks; ++j) out += ",task_" + std::to_string(j);
  out += "\n";
  for (std::size_t i = 0; i < tasks; ++i) {
    out += std::to_string(i);
    for (std::size_t j = 0; j < tasks; ++j) {
      std::vector<std::optional<double>> values;
      for (const auto* m : matrices) values.push_back(m->at(i, j));
      out += "," + cell(mean_of(values));
    }
    out += "\n";
  }
  return out;
}

template <typename F>
std::string per_batch_csv(const ExperimentReport& report, F value) {
  std::string out = "batch_index";
  for (const auto& s : report.seeds) out += ",seed_" + std::to_string(s.seed);
  out += "\n";
  const std::size_t batches = report.seeds.empty() ? 0 : report.seeds[0].online.batches;
  for (std::size_t b = 0; b < batches; ++b) {
    out += std::to_string(b);
    for (const auto& s : report.seeds) out += "," + value(s, b);
    out += "\n";
  }
  return out;
}

}  // namespace

json metrics_json(const ExperimentReport& report) {
  json j;
  j["strategy"] = report.config.get("strategy");
  j["backbone"] = report.config.get("backbone");
  j["stream"] = report.config.get("stream");
  j["metric"] = report.config.get("metric");
  j["tasks"] = report.tasks;
  j["nodes"] = report.nodes;
  j["touched_bound"] = report.touched_bound;
  j["ap"] = summary_json(report.ap);
  j["af"] = summary_json(report.af);
  j["aap"] = summary_json(report.aap);
  j["seeds"] = json::array();
  for (const auto& s : report.seeds) {
    j["seeds"].push_back(json{{"seed", s.seed},
                              {"ap", s.ap},
                              {"af", optional_number(s.af)},
                              {"aap", optional_number(s.aap)},
                              {"max_touched", s.max_touched},
                              {"skipped_batches", s.online.skipped},
                              {"batches", s.online.batches},
                              {"projection_violations", s.projection_violations},
                              {"projection_checks", s.projection_checks}});
  }
  json selected = json::object();
  for (const auto& [k, v] : report.selected) selected[k] = v;
  j["selected"] = selected;
  j["warnings"] = report.warnings;
  return j;
}

json metrics_json(const JointReport& report) {
  json j;
  j["strategy"] = "joint";
  j["backbone"] = report.config.get("backbone");
  j["stream"] = report.config.get("stream");
  j["metric"] = report.config.get("metric");
  j["ap"] = summary_json(report.ap);
  j["seeds"] = json::array();
  for (const auto& s : report.seeds) {
    json scores = json::array();
    for (const auto& v : s.task_scores) scores.push_back(optional_number(v));
    j["seeds"].push_back(json{{"seed", s.seed},
                              {"ap", s.ap},
                              {"task_scores", scores},
                              {"epochs_run", s.epochs_run},
                              {"best_epoch", s.best_epoch},
                              {"best_validation", s.best_validation}});
  }
  return j;
}

void emit_reports(const ExperimentReport& report, const fs::path& out_dir) {
  make_dir(out_dir);
  write_file(out_dir / "metrics.json", metrics_json(report).dump(2) + "\n");
  write_file(out_dir / "config.txt", report.config.echo());

  std::vector<const AnytimeTrace*> traces;
  std::vector<const PerformanceMatrix*> matrices;
  for (const auto& s : report.seeds) {
    traces.push_back(&s.online.trace);
    matrices.push_back(&s.online.matrix);
    const fs::path dir = out_dir / ("seed_" + std::to_string(s.seed));
    make_dir(dir);
    write_file(dir / "anytime.csv", anytime_csv({&s.online.trace}));
    write_file(dir / "perf_matrix.csv", matrix_csv({&s.online.matrix}));
  }
  write_file(out_dir / "anytime.csv", anytime_csv(traces));
  write_file(out_dir / "perf_matrix.csv", matrix_csv(matrices));
  write_file(out_dir / "touched.csv", per_batch_csv(report, [](const SeedResult& s, std::size_t b) {
               return std::to_string(s.online.touched[b]);
             }));
  write_file(out_dir / "timing.csv", per_batch_csv(report, [](const SeedResult& s, std::size_t b) {
               return format_double(s.online.seconds[b]);
             }));
}

void emit_reports(const JointReport& report, const fs::path& out_dir) {
  make_dir(out_dir);
  write_file(out_dir / "metrics.json", metrics_json(report).dump(2) + "\n");
  write_file(out_dir / "config.txt", report.config.echo());
}

void emit_grid_report(const GridResult& result, const fs::path& out_dir) {
  make_dir(out_dir);
  std::string out = "point,score,selected,assignment\n";
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    std::string assignment;
    for (const auto& [k, v] : result.points[i]) {
      if (!assignment.empty()) assignment += ";";
      assignment += k + "=" + v;
    }
    out += std::to_string(i) + "," + format_double(result.scores[i]) + "," + (i == result.best ? "1" : "0") +
           ",\"" + assignment + "\"\n";
  }
  write_file(out_dir / "grid.csv", out);
}

}  // namespace ocgl
