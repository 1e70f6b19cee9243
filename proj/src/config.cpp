#include "ocgl/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ocgl/error.hpp"

namespace ocgl {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

const std::vector<std::pair<std::string, std::pair<std::string, std::string>>>& RunConfig::defaults() {
  static const std::vector<std::pair<std::string, std::pair<std::string, std::string>>> table = {
      {"data", {"", "dataset directory; empty means the synthetic SBM below"}},
      {"sbm.classes", {"10", "SBM class count"}},
      {"sbm.per_class", {"200", "SBM nodes per class"}},
      {"sbm.p_in", {"0.1", "SBM intra-class edge probability"}},
      {"sbm.p_out", {"0.005", "SBM inter-class edge probability"}},
      {"sbm.dim", {"32", "SBM feature dimension"}},
      {"sbm.separation", {"4", "distance of SBM class means from the origin"}},
      {"sbm.noise", {"1", "SBM feature noise standard deviation"}},
      {"sbm.seed", {"0", "SBM generator seed"}},
      {"stream", {"class", "class (class-incremental) or time (time-incremental)"}},
      {"classes_per_task", {"2", "classes per task of a class-incremental stream"}},
      {"class_order", {"", "comma-separated class order; empty means ascending"}},
      {"eval_tasks", {"10", "evaluation intervals of a time-incremental stream"}},
      {"batch_size", {"10", "nodes per mini-batch"}},
      {"fanouts", {"10,10", "neighbors sampled per hop during training"}},
      {"eval_fanouts", {"", "neighbors sampled per hop at evaluation; empty means full neighborhoods"}},
      {"strategy", {"bare", "bare|er|agem|ewc|mas|lwf|twp|pdgnn|ssm"}},
      {"backbone", {"gcn", "gcn or mlp"}},
      {"hidden", {"256", "hidden width"}},
      {"layers", {"2", "number of layers"}},
      {"bias", {"false", "use bias terms"}},
      {"lr", {"0.001", "Adam learning rate"}},
      {"passes", {"1", "optimizer steps per mini-batch"}},
      {"buffer_size", {"500", "replay memory capacity (stored nodes)"}},
      {"memory_proportion", {"1", "replayed examples per step, as a multiple of batch_size"}},
      {"ewc.lambda", {"10000", "EWC penalty weight"}},
      {"mas.lambda", {"10000", "MAS penalty weight"}},
      {"lwf.lambda_dist", {"1", "LwF distillation weight"}},
      {"lwf.temperature", {"2", "LwF softmax temperature"}},
      {"lwf.update_every", {"10", "batches between teacher refreshes"}},
      {"twp.lambda_l", {"10000", "TWP loss-importance weight"}},
      {"twp.lambda_t", {"10000", "TWP topology-importance weight"}},
      {"twp.beta", {"0.01", "TWP gradient-norm plasticity weight"}},
      {"ssm.budget", {"10,10", "per-hop neighbor budgets of stored subgraphs"}},
      {"ssm.mode", {"er", "er or agem"}},
      {"pdgnn.sgc_depth", {"", "SGC propagation steps; empty means layers"}},
      {"seeds", {"0,1,2,3,4", "run seeds (model init and sampling)"}},
      {"data_seed", {"0", "seed of the split and the within-task order"}},
      {"eval_stride", {"1", "anytime evaluation every k batches; 0 disables it"}},
      {"metric", {"accuracy", "accuracy or f1"}},
      {"positive_class", {"1", "positive class of the f1 metric"}},
      {"joint.epochs", {"200", "full-graph training epochs of the joint bound"}},
      {"joint.patience", {"20", "early-stopping patience (epochs) of the joint bound"}},
      {"boundary", {"", "tasks used for hyperparameter selection; empty means max(1, round(0.2 T))"}},
  };
  return table;
}

RunConfig::RunConfig() {
  for (const auto& [key, entry] : defaults()) values_[key] = entry.first;
}

RunConfig RunConfig::from_text(std::string_view text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    require(eq != std::string::npos, ErrorKind::config,
            origin + ":" + std::to_string(number) + ": expected 'key = value'");
    try {
      cfg.set(trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)));
    } catch (const Error& e) {
      fail(ErrorKind::config, origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return cfg;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::io, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return from_text(buffer.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  require(values_.count(key) > 0, ErrorKind::config, "unknown config key '" + key + "'");
  values_[key] = value;
}

void RunConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  require(eq != std::string_view::npos, ErrorKind::config,
          "override '" + std::string(assignment) + "' is not of the form key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  require(it != values_.end(), ErrorKind::config, "unknown config key '" + key + "'");
  return it->second;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    fail(ErrorKind::config, "config key '" + key + "' expects a number, got '" + text + "'");
  return value;
}

}  // namespace

std::size_t RunConfig::get_size(const std::string& key) const { return parse_number<std::size_t>(key, get(key)); }

std::uint64_t RunConfig::get_u64(const std::string& key) const { return parse_number<std::uint64_t>(key, get(key)); }

double RunConfig::get_double(const std::string& key) const {
  const double v = parse_number<double>(key, get(key));
  require(std::isfinite(v), ErrorKind::config, "config key '" + key + "' must be finite");
  return v;
}

bool RunConfig::get_bool(const std::string& key) const {
  const std::string& v = get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  fail(ErrorKind::config, "config key '" + key + "' expects true or false, got '" + v + "'");
}

std::vector<std::size_t> RunConfig::get_sizes(const std::string& key) const {
  std::vector<std::size_t> out;
  if (get(key).empty()) return out;
  for (const auto& token : split(get(key), ','))
    out.push_back(token == "all" ? kAllNeighbors : parse_number<std::size_t>(key, token));
  return out;
}

std::vector<std::uint64_t> RunConfig::get_u64s(const std::string& key) const {
  std::vector<std::uint64_t> out;
  if (get(key).empty()) return out;
  for (const auto& token : split(get(key), ',')) out.push_back(parse_number<std::uint64_t>(key, token));
  return out;
}

std::vector<int> RunConfig::get_ints(const std::string& key) const {
  std::vector<int> out;
  if (get(key).empty()) return out;
  for (const auto& token : split(get(key), ',')) out.push_back(parse_number<int>(key, token));
  return out;
}

std::string RunConfig::echo() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

LearnerConfig RunConfig::learner() const {
  LearnerConfig c;
  c.strategy = get("strategy");
  const auto names = strategy_names();
  require(std::find(names.begin(), names.end(), c.strategy) != names.end(), ErrorKind::config,
          "unknown strategy '" + c.strategy + "'");
  c.backbone = get("backbone");
  c.hidden = get_size("hidden");
  c.layers = get_size("layers");
  c.bias = get_bool("bias");
  c.lr = get_double("lr");
  c.passes = get_size("passes");
  c.batch_size = get_size("batch_size");
  c.fanouts = get_sizes("fanouts");
  c.eval_fanouts = get_sizes("eval_fanouts");
  c.buffer_size = get_size("buffer_size");
  c.memory_proportion = get_size("memory_proportion");
  c.ewc_lambda = get_double("ewc.lambda");
  c.mas_lambda = get_double("mas.lambda");
  c.lwf_lambda = get_double("lwf.lambda_dist");
  c.lwf_temperature = get_double("lwf.temperature");
  c.lwf_update_every = get_size("lwf.update_every");
  c.twp_lambda_l = get_double("twp.lambda_l");
  c.twp_lambda_t = get_double("twp.lambda_t");
  c.twp_beta = get_double("twp.beta");
  c.ssm_budget = get_sizes("ssm.budget");
  c.ssm_mode = get("ssm.mode");
  if (!get("pdgnn.sgc_depth").empty()) c.sgc_depth = get_size("pdgnn.sgc_depth");
  require(c.memory_proportion >= 1, ErrorKind::config, "memory_proportion must be at least 1");
  return c;
}

SbmSpec RunConfig::sbm() const {
  SbmSpec s;
  s.classes = get_size("sbm.classes");
  s.per_class = get_size("sbm.per_class");
  s.p_in = get_double("sbm.p_in");
  s.p_out = get_double("sbm.p_out");
  s.dim = get_size("sbm.dim");
  s.separation = get_double("sbm.separation");
  s.noise = get_double("sbm.noise");
  s.seed = get_u64("sbm.seed");
  return s;
}

}  // namespace ocgl
