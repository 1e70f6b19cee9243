// Command-line front end: run, grid, joint, gen-sbm, profile-hops.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "ocgl/config.hpp"
#include "ocgl/error.hpp"
#include "ocgl/runner.hpp"

namespace {

using namespace ocgl;

void print_error(std::string_view kind, const std::string& message) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", message}}.dump() << "\n";
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  RunConfig cfg = path.empty() ? RunConfig() : RunConfig::from_file(path);
  for (const auto& o : overrides) cfg.apply_override(o);
  return cfg;
}

void print_summary(const std::string& label, const Summary& s) {
  if (s.count == 0) {
    std::cout << label << ": absent\n";
    return;
  }
  std::cout << label << ": " << format_double(s.mean) << " +- " << format_double(s.std) << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online continual graph learning experiments"};
  app.require_subcommand(1);

  std::string config_path, out_dir, grid_path, strategy;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run one strategy over the stream for every seed");
  run->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "output directory")->required();
  run->add_option("--seed", seed, "run a single seed");
  run->add_option("--strategy", strategy, "strategy name");
  run->add_option("--override", overrides, "key=value, repeatable");

  auto* grid = app.add_subcommand("grid", "select hyperparameters on the first tasks, then run");
  grid->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  grid->add_option("--grid", grid_path, "grid file; defaults to the strategy's standard grid")
      ->check(CLI::ExistingFile);
  grid->add_option("--out", out_dir, "output directory")->required();
  grid->add_option("--override", overrides, "key=value, repeatable");

  auto* joint = app.add_subcommand("joint", "offline full-graph training (upper bound)");
  joint->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  joint->add_option("--out", out_dir, "output directory")->required();
  joint->add_option("--override", overrides, "key=value, repeatable");

  SbmSpec sbm;
  auto* gen = app.add_subcommand("gen-sbm", "write a stochastic-block-model dataset");
  gen->add_option("--out", out_dir, "dataset directory")->required();
  gen->add_option("--classes", sbm.classes, "classes")->capture_default_str();
  gen->add_option("--per-class", sbm.per_class, "nodes per class")->capture_default_str();
  gen->add_option("--p-in", sbm.p_in, "intra-class edge probability")->capture_default_str();
  gen->add_option("--p-out", sbm.p_out, "inter-class edge probability")->capture_default_str();
  gen->add_option("--dim", sbm.dim, "feature dimension")->capture_default_str();
  gen->add_option("--sep,--separation", sbm.separation, "class mean separation")->capture_default_str();
  gen->add_option("--noise", sbm.noise, "feature noise")->capture_default_str();
  gen->add_option("--seed", sbm.seed, "generator seed")->capture_default_str();

  std::size_t hops = 2, batch_size = 10;
  std::string data_dir, profile_out;
  auto* profile = app.add_subcommand("profile-hops", "per-batch l-hop neighborhood sizes along the stream");
  profile->add_option("--data", data_dir, "dataset directory; the configured source when omitted");
  profile->add_option("--config", config_path, "config file")->check(CLI::ExistingFile);
  profile->add_option("--override", overrides, "key=value, repeatable");
  profile->add_option("--batch-size", batch_size, "nodes per batch")->capture_default_str()->check(
      CLI::PositiveNumber);
  profile->add_option("--hops", hops, "largest hop count")->capture_default_str();
  profile->add_option("--out", profile_out, "CSV file; stdout when omitted");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*run) {
      RunConfig cfg = load_config(config_path, overrides);
      if (!strategy.empty()) cfg.set("strategy", strategy);
      if (seed) cfg.set("seeds", std::to_string(*seed));
      const ExperimentReport report = run_experiment(cfg);
      emit_reports(report, out_dir);
      print_summary("AP", report.ap);
      print_summary("AF", report.af);
      print_summary("AAP", report.aap);
    } else if (*grid) {
      RunConfig cfg = load_config(config_path, overrides);
      const Grid g = grid_path.empty() ? Grid::defaults_for(cfg.get("strategy")) : Grid::from_file(grid_path);
      const StaticGraph graph = load_source(cfg);
      const StreamBundle bundle = build_stream(cfg, graph);
      const GridResult selection = grid_select(cfg, g, bundle, graph.feature_dim, graph.num_classes);
      emit_grid_report(selection, out_dir);
      for (const auto& [k, v] : selection.points[selection.best]) cfg.set(k, v);
      ExperimentReport report = run_experiment(cfg, bundle, graph.feature_dim, graph.num_classes);
      report.selected = selection.points[selection.best];
      emit_reports(report, out_dir);
      for (const auto& [k, v] : report.selected) std::cout << "selected " << k << " = " << v << "\n";
      print_summary("AP", report.ap);
      print_summary("AF", report.af);
      print_summary("AAP", report.aap);
    } else if (*joint) {
      const JointReport report = run_joint(load_config(config_path, overrides));
      emit_reports(report, out_dir);
      print_summary("AP", report.ap);
    } else if (*gen) {
      write_dataset(gen_sbm(sbm), out_dir);
    } else if (*profile) {
      const StaticGraph graph =
          data_dir.empty() ? load_source(load_config(config_path, overrides)) : load_dataset(data_dir);
      std::vector<std::uint32_t> order(graph.num_nodes);
      if (graph.order)
        order = *graph.order;
      else
        for (std::uint32_t v = 0; v < graph.num_nodes; ++v) order[v] = v;
      NodeStream stream(make_events(graph, order, assign_splits(graph, 0)), batch_size);
      std::ofstream file;
      if (!profile_out.empty()) {
        file.open(profile_out);
        if (!file) fail(ErrorKind::io, "cannot write " + profile_out);
      }
      std::ostream& out = profile_out.empty() ? std::cout : file;
      out << "batch_index,hop,node_count,edge_count\n";
      GrowingGraph g(graph.feature_dim);
      std::vector<NodeId> ids;
      for (std::size_t b = 0; const auto batch = stream.next_minibatch(); ++b) {
        ids.clear();
        for (const NodeEvent& e : *batch) {
          g.ingest(e);
          ids.push_back(e.id);
        }
        const HopProfile p = profile_hops(g, ids, hops);
        for (std::size_t l = 0; l <= hops; ++l)
          out << b << "," << l << "," << p.node_counts[l] << "," << p.edge_counts[l] << "\n";
      }
    }
  } catch (const Error& e) {
    print_error(to_string(e.kind()), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return 1;
  }
  return 0;
}
