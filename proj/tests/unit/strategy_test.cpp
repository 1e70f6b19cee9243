#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <memory>

#include "fixtures.hpp"
#include "ocgl/buffers.hpp"
#include "ocgl/error.hpp"
#include "ocgl/learner.hpp"
#include "ocgl/model.hpp"
#include "ocgl/regularizers.hpp"
#include "ocgl/stream.hpp"

using namespace ocgl;
using ocgl::testing::graph_from_edges;
using ocgl::testing::random_edges;
using ocgl::testing::random_matrix;

namespace {

LearnerConfig small_config(const std::string& strategy) {
  LearnerConfig cfg;
  cfg.strategy = strategy;
  cfg.hidden = 16;
  cfg.lr = 1e-2;
  cfg.fanouts = {4, 4};
  cfg.buffer_size = 60;
  cfg.ewc_lambda = 10.0;
  cfg.mas_lambda = 10.0;
  cfg.twp_lambda_l = 10.0;
  cfg.twp_lambda_t = 10.0;
  cfg.lwf_update_every = 2;
  cfg.ssm_budget = {3, 3};
  return cfg;
}

StreamBundle small_stream(std::uint64_t seed = 0) {
  SbmSpec spec;
  spec.classes = 4;
  spec.per_class = 30;
  spec.dim = 8;
  spec.p_in = 0.15;
  spec.p_out = 0.01;
  spec.seed = seed;
  return build_class_incremental(gen_sbm(spec), 2, {}, seed, 10);
}

// Feeds up to `limit` batches; returns the graph.
GrowingGraph feed(Learner& learner, NodeStream stream, std::size_t limit = SIZE_MAX) {
  GrowingGraph graph(8);
  std::size_t batches = 0;
  while (batches < limit) {
    const auto batch = stream.next_minibatch();
    if (!batch) break;
    std::vector<NodeId> ids;
    for (const auto& e : *batch) {
      graph.ingest(e);
      ids.push_back(e.id);
    }
    const StepReport r = learner.observe(graph, ids);
    EXPECT_LE(r.touched, learner.touched_bound());
    ++batches;
  }
  return graph;
}

std::vector<double> trained_params(const LearnerConfig& cfg, const StreamBundle& b) {
  auto learner = make_learner(cfg, 8, 4, 3);
  feed(*learner, b.stream);
  return learner->model().params.flat_values();
}

struct Fixture {
  GrowingGraph graph;
  Model model;
  SampledEgoGraph ego;
  ForwardCache cache;
  std::vector<int> targets;
};

// Heap-allocated so the cache keeps pointing at the fixture's model.
std::unique_ptr<Fixture> gcn_fixture(std::size_t layers, bool bias, std::uint64_t seed) {
  Rng rng(seed);
  GrowingGraph g = graph_from_edges(30, random_edges(30, 0.15, rng), 5, rng);
  Rng init(seed + 1);
  Model m = Model::create({5, 6, 4, layers, bias}, init);
  for (int c = 0; c < 3; ++c) m.head.activate(c);
  const std::vector<NodeId> seeds{1, 4, 9, 22};
  std::vector<std::size_t> fanouts(layers, kAllNeighbors);
  SampledEgoGraph ego = sample_ego(g, seeds, fanouts, rng);
  auto f = std::make_unique<Fixture>(Fixture{std::move(g), std::move(m), std::move(ego), {}, {0, 2, kIgnoreLabel, 1}});
  f->cache = gcn_forward(f->ego, f->model);
  return f;
}

double ce_of(const Fixture& f, const ParameterSet& params) {
  Model m = f.model;
  m.params = params;
  return softmax_cross_entropy(gcn_forward(f.ego, m).logits, f.targets, m.head.active_mask()).loss;
}

}  // namespace

TEST(Reservoir, KeepsFirstItemsUntilFull) {
  ReservoirBuffer<int> r(5, Rng(1));
  for (int i = 0; i < 5; ++i) EXPECT_TRUE(r.insert(i));
  EXPECT_EQ(r.items(), (std::vector<int>{0, 1, 2, 3, 4}));
  EXPECT_EQ(r.seen(), 5u);
}

TEST(Reservoir, ZeroCapacityStoresNothing) {
  ReservoirBuffer<int> r(0, Rng(1));
  for (int i = 0; i < 10; ++i) EXPECT_FALSE(r.insert(i));
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.seen(), 10u);
}

TEST(Reservoir, InclusionIsUniform) {
  const int trials = 4000;
  std::vector<int> hits(100, 0);
  for (int t = 0; t < trials; ++t) {
    ReservoirBuffer<int> r(10, Rng::derive(77, t));
    for (int i = 0; i < 100; ++i) r.insert(i);
    for (int v : r.items()) ++hits[v];
  }
  for (int h : hits) EXPECT_NEAR(h / double(trials), 0.1, 0.025);
}

TEST(Reservoir, SampleWithoutReplacementIsDistinct) {
  Rng rng(2);
  auto picks = sample_without_replacement(20, 8, rng);
  std::sort(picks.begin(), picks.end());
  EXPECT_EQ(std::adjacent_find(picks.begin(), picks.end()), picks.end());
  EXPECT_EQ(picks.size(), 8u);
  EXPECT_EQ(sample_without_replacement(3, 10, rng).size(), 3u);
}

TEST(SubgraphMemory, RespectsNodeCapacity) {
  Rng rng(3);
  const GrowingGraph g = graph_from_edges(80, random_edges(80, 0.1, rng), 2, rng);
  const std::vector<std::size_t> budget{3, 2};
  SubgraphMemory mem(40, ego_node_bound(1, budget), Rng(4));
  for (NodeId v = 0; v < 80; ++v) {
    mem.insert({v, 0, sample_ego(g, std::span(&v, 1), budget, rng)});
    std::size_t total = 0;
    for (const auto& e : mem.entries()) total += e.ego.node_count();
    EXPECT_EQ(total, mem.stored_nodes());
    EXPECT_LE(mem.stored_nodes(), 40u);
  }
  EXPECT_EQ(mem.seen(), 80u);
}

TEST(SubgraphMemory, OversizedEntryIsContractError) {
  Rng rng(5);
  const GrowingGraph g = graph_from_edges(20, random_edges(20, 0.5, rng), 2, rng);
  SubgraphMemory mem(100, 3, Rng(6));
  const NodeId v = 0;
  const std::vector<std::size_t> wide{10};
  try {
    mem.insert({v, 0, sample_ego(g, std::span(&v, 1), wide, rng)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::contract);
  }
  EXPECT_THROW(SubgraphMemory(2, 3, Rng(0)), Error);
}

TEST(Agem, ProjectionExamples) {
  const std::vector<double> g{1.0, 0.0}, r{-1.0, 1.0};
  const auto p = agem_project(g, r);
  EXPECT_NEAR(p[0], 0.5, 1e-15);
  EXPECT_NEAR(p[1], 0.5, 1e-15);
  EXPECT_NEAR(dot(p, r), 0.0, 1e-15);
  const std::vector<double> aligned{1.0, 2.0};
  EXPECT_EQ(agem_project(aligned, std::vector<double>{1.0, 0.0}), aligned);
  EXPECT_EQ(agem_project(aligned, std::vector<double>{0.0, 0.0}), aligned);
}

TEST(Agem, RandomProjectionsNeverOppose) {
  Rng rng(7);
  for (int t = 0; t < 500; ++t) {
    std::vector<double> g(12), r(12);
    for (auto& v : g) v = rng.normal();
    for (auto& v : r) v = rng.normal();
    EXPECT_GE(dot(agem_project(g, r), r), -1e-9);
  }
}

TEST(Importance, RunningAverage) {
  ParameterSet ps;
  ps.add("w", DenseMatrix(1, 2));
  ImportanceState s = ImportanceState::zeros(ps);
  s.accumulate({DenseMatrix(1, 2, std::vector<double>{2.0, 4.0})});
  s.accumulate({DenseMatrix(1, 2, std::vector<double>{4.0, 0.0})});
  s.accumulate({DenseMatrix(1, 2, std::vector<double>{0.0, 2.0})});
  EXPECT_NEAR(s.importance[0](0, 0), 2.0, 1e-15);
  EXPECT_NEAR(s.importance[0](0, 1), 2.0, 1e-15);
  EXPECT_EQ(s.updates, 3u);
}

TEST(Importance, QuadraticPenaltyGradient) {
  auto owned = gcn_fixture(2, true, 10);
    Fixture& f = *owned;
  Rng rng(11);
  ImportanceState s = ImportanceState::zeros(f.model.params);
  std::vector<DenseMatrix> sample;
  for (const auto& p : f.model.params) sample.push_back(random_matrix(p.value.rows(), p.value.cols(), rng));
  s.accumulate(abs_of(sample));
  for (auto& a : s.anchor) add_scaled(a, random_matrix(a.rows(), a.cols(), rng), 0.3);
  f.model.params.zero_grad();
  const double value = quadratic_penalty(s, f.model, 7.0);
  EXPECT_NEAR(value, quadratic_penalty_value(s, f.model.params, 7.0), 1e-12);
  const double err = finite_diff_check(
      [&](const ParameterSet& p) { return quadratic_penalty_value(s, p, 7.0); }, f.model.params);
  EXPECT_LT(err, 1e-6);
}

TEST(Importance, OutputSensitivityMatchesFiniteDifferences) {
  auto owned = gcn_fixture(2, false, 12);
    Fixture& f = *owned;
  const auto active = f.model.head.active_mask();
  auto objective = [&](const ParameterSet& params) {
    Model m = f.model;
    m.params = params;
    const DenseMatrix l = gcn_forward(f.ego, m).logits;
    double s = 0.0;
    std::size_t rows = 0;
    for (std::size_t r = 0; r < l.rows(); ++r) {
      if (f.targets[r] == kIgnoreLabel) continue;
      ++rows;
      for (std::size_t c = 0; c < l.cols(); ++c)
        if (active[c]) s += l(r, c) * l(r, c);
    }
    return s / static_cast<double>(rows);
  };
  const auto omega = output_sensitivity(f.cache, f.targets, f.model);
  for (const auto& p : f.model.params) EXPECT_EQ(frobenius_sq(p.grad), 0.0);
  const double h = 1e-6;
  for (std::size_t i = 0; i < f.model.params.size(); ++i) {
    auto values = f.model.params[i].value.values();
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double keep = values[k];
      values[k] = keep + h;
      const double up = objective(f.model.params);
      values[k] = keep - h;
      const double down = objective(f.model.params);
      values[k] = keep;
      EXPECT_NEAR(omega[i].values()[k], std::abs((up - down) / (2 * h)), 1e-5);
    }
  }
}

TEST(Importance, MessageSensitivityTouchesOnlyFirstWeight) {
  for (std::size_t layers : {1u, 2u}) {
    auto owned = gcn_fixture(layers, true, 13);
    Fixture& f = *owned;
    const auto t = message_sensitivity(f.cache, f.ego, f.targets, f.model);
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i == f.model.weight_index(0)) continue;
      EXPECT_EQ(frobenius_sq(t[i]), 0.0);
    }
    EXPECT_GT(frobenius_sq(t[f.model.weight_index(0)]), 0.0);

    // |d/dW0| of mean over counted seeds of ||(Â X W0)[seed]||².
    const DenseMatrix x = spmm(f.ego.normalized, f.ego.features);
    auto objective = [&](const DenseMatrix& w0) {
      const DenseMatrix msg = matmul(x, w0);
      double s = 0.0;
      std::size_t rows = 0;
      for (std::size_t i = 0; i < f.targets.size(); ++i) {
        if (f.targets[i] == kIgnoreLabel) continue;
        ++rows;
        for (double v : msg.row(f.ego.seed_rows[i])) s += v * v;
      }
      return s / static_cast<double>(rows);
    };
    DenseMatrix w0 = f.model.weight(0);
    const double h = 1e-6;
    for (std::size_t k = 0; k < w0.size(); ++k) {
      const double keep = w0.values()[k];
      w0.values()[k] = keep + h;
      const double up = objective(w0);
      w0.values()[k] = keep - h;
      const double down = objective(w0);
      w0.values()[k] = keep;
      EXPECT_NEAR(t[f.model.weight_index(0)].values()[k], std::abs((up - down) / (2 * h)), 1e-5);
    }
  }
}

TEST(Distillation, GradientMatchesFiniteDifferences) {
  Rng rng(14);
  const DenseMatrix teacher = random_matrix(5, 6, rng, 2.0);
  DenseMatrix student = random_matrix(5, 6, rng, 2.0);
  const std::vector<int> mask{0, kIgnoreLabel, 1, 1, 0};
  const auto d = distillation_loss(student, teacher, 4, mask, 1.7, 2.5);
  const double h = 1e-6;
  for (std::size_t k = 0; k < student.size(); ++k) {
    const double keep = student.values()[k];
    student.values()[k] = keep + h;
    const double up = distillation_loss(student, teacher, 4, mask, 1.7, 2.5).loss;
    student.values()[k] = keep - h;
    const double down = distillation_loss(student, teacher, 4, mask, 1.7, 2.5).loss;
    student.values()[k] = keep;
    EXPECT_NEAR(d.grad.values()[k], (up - down) / (2 * h), 1e-7);
  }
  for (std::size_t c = 4; c < 6; ++c) EXPECT_EQ(d.grad(0, c), 0.0);
}

TEST(Distillation, IdenticalLogitsGiveZeroGradient) {
  Rng rng(15);
  const DenseMatrix l = random_matrix(3, 4, rng);
  const auto d = distillation_loss(l, l, 4, std::vector<int>{0, 0, 0}, 1.0, 2.0);
  for (double v : d.grad.values()) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(Distillation, ThroughTheNetworkMatchesFiniteDifferences) {
  auto owned = gcn_fixture(2, true, 16);
    Fixture& f = *owned;
  Model teacher = f.model;
  Rng rng(17);
  for (auto& p : teacher.params) add_scaled(p.value, random_matrix(p.value.rows(), p.value.cols(), rng), 0.2);
  const DenseMatrix t = gcn_forward(f.ego, teacher).logits;
  f.model.params.zero_grad();
  const auto d = distillation_loss(f.cache.logits, t, 2, f.targets, 1.3, 2.0);
  backward(f.cache, d.grad, f.model);
  const double err = finite_diff_check(
      [&](const ParameterSet& p) {
        Model m = f.model;
        m.params = p;
        return distillation_loss(gcn_forward(f.ego, m).logits, t, 2, f.targets, 1.3, 2.0).loss;
      },
      f.model.params);
  EXPECT_LT(err, 1e-6);
}

TEST(Plasticity, HessianSignProductIsGradientOfL1Norm) {
  auto owned = gcn_fixture(2, true, 18);
    Fixture& f = *owned;
  f.model.params.zero_grad();
  const LossResult ce = softmax_cross_entropy(f.cache.logits, f.targets, f.model.head.active_mask());
  backward(f.cache, ce.grad, f.model);
  std::vector<DenseMatrix> sign = gradients_of(f.model.params);
  for (auto& m : sign)
    for (double& v : m.values()) v = v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0);
  const auto hv = cross_entropy_hvp(f.cache, f.targets, f.model, sign);

  auto grad_l1 = [&](const ParameterSet& params) {
    Model m = f.model;
    m.params = params;
    m.params.zero_grad();
    const ForwardCache c = gcn_forward(f.ego, m);
    backward(c, softmax_cross_entropy(c.logits, f.targets, m.head.active_mask()).grad, m);
    double s = 0.0;
    for (const auto& p : m.params)
      for (double v : p.grad.values()) s += std::abs(v);
    return s;
  };
  for (std::size_t i = 0; i < hv.size(); ++i) f.model.params[i].grad = hv[i];
  EXPECT_LT(finite_diff_check(grad_l1, f.model.params, 1e-6), 1e-4);
}

TEST(Plasticity, CrossEntropyGradientMatchesFiniteDifferences) {
  auto owned = gcn_fixture(2, true, 19);
    Fixture& f = *owned;
  f.model.params.zero_grad();
  backward(f.cache, softmax_cross_entropy(f.cache.logits, f.targets, f.model.head.active_mask()).grad, f.model);
  EXPECT_LT(finite_diff_check([&](const ParameterSet& p) { return ce_of(f, p); }, f.model.params), 1e-6);
}

TEST(Strategies, UnknownStrategyIsConfigError) {
  try {
    make_learner(small_config("icarl"), 8, 4, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Strategies, InvalidConfigsAreRejected) {
  LearnerConfig wrong_fanouts = small_config("bare");
  wrong_fanouts.fanouts = {5};
  EXPECT_THROW(make_learner(wrong_fanouts, 8, 4, 0), Error);
  LearnerConfig ssm_mlp = small_config("ssm");
  ssm_mlp.backbone = "mlp";
  EXPECT_THROW(make_learner(ssm_mlp, 8, 4, 0), Error);
  LearnerConfig ssm_budget = small_config("ssm");
  ssm_budget.ssm_budget = {3};
  EXPECT_THROW(make_learner(ssm_budget, 8, 4, 0), Error);
  LearnerConfig lwf = small_config("lwf");
  lwf.lwf_temperature = 0.0;
  EXPECT_THROW(make_learner(lwf, 8, 4, 0), Error);
}

TEST(Strategies, EveryStrategyTrainsWithinItsBound) {
  const StreamBundle b = small_stream();
  for (const std::string& name : strategy_names()) {
    LearnerConfig cfg = small_config(name);
    cfg.passes = 2;
    auto learner = make_learner(cfg, 8, 4, 1);
    const GrowingGraph g = feed(*learner, b.stream);
    for (const auto& p : learner->model().params) EXPECT_TRUE(all_finite(p.value)) << name;
    EXPECT_EQ(learner->model().head.active_count(), 4u) << name;
    EXPECT_EQ(learner->predict(g, std::vector<NodeId>{0, 1, 2}).size(), 3u) << name;
  }
}

TEST(Strategies, ReplayBoundDoublesWithFullProportion) {
  LearnerConfig bare = small_config("bare");
  LearnerConfig er = small_config("er");
  er.memory_proportion = 1;
  EXPECT_EQ(make_learner(er, 8, 4, 0)->touched_bound(), 2 * make_learner(bare, 8, 4, 0)->touched_bound());
  er.memory_proportion = 3;
  EXPECT_EQ(make_learner(er, 8, 4, 0)->touched_bound(), 4 * make_learner(bare, 8, 4, 0)->touched_bound());
}

TEST(Strategies, ZeroCoefficientsReduceToBare) {
  const StreamBundle b = small_stream(2);
  const auto bare = trained_params(small_config("bare"), b);

  LearnerConfig ewc = small_config("ewc");
  ewc.ewc_lambda = 0.0;
  LearnerConfig mas = small_config("mas");
  mas.mas_lambda = 0.0;
  LearnerConfig lwf = small_config("lwf");
  lwf.lwf_lambda = 0.0;
  LearnerConfig twp = small_config("twp");
  twp.twp_lambda_l = twp.twp_lambda_t = twp.twp_beta = 0.0;
  LearnerConfig er = small_config("er");
  er.buffer_size = 0;
  LearnerConfig agem = small_config("agem");
  agem.buffer_size = 0;
  for (const auto& cfg : {ewc, mas, lwf, twp, er, agem}) EXPECT_EQ(trained_params(cfg, b), bare) << cfg.strategy;
}

TEST(Strategies, PdgnnWithoutPropagationIsReplayOnFeatures) {
  const StreamBundle b = small_stream(3);
  LearnerConfig pdgnn = small_config("pdgnn");
  pdgnn.sgc_depth = 0;
  LearnerConfig er = small_config("er");
  er.backbone = "mlp";
  EXPECT_EQ(trained_params(pdgnn, b), trained_params(er, b));
}

TEST(Strategies, EvaluationLeavesStateUntouched) {
  const StreamBundle b = small_stream(4);
  for (const std::string& name : strategy_names()) {
    auto learner = make_learner(small_config(name), 8, 4, 5);
    const GrowingGraph g = feed(*learner, b.stream, 6);
    const std::uint64_t before = learner->state_hash();
    std::vector<NodeId> all(g.size());
    for (NodeId v = 0; v < g.size(); ++v) all[v] = v;
    const auto first = learner->predict(g, all);
    (void)learner->memory_logits(g);
    EXPECT_EQ(learner->predict(g, all), first) << name;
    EXPECT_EQ(learner->state_hash(), before) << name;
  }
}

TEST(Strategies, ValidationOnlyBatchIsSkipped) {
  GrowingGraph g(3);
  for (NodeId v = 0; v < 4; ++v) {
    NodeEvent e;
    e.id = v;
    e.features = {1.0, 0.5, -0.5};
    e.label = static_cast<int>(v % 2);
    e.split = Split::val;
    if (v > 0) e.neighbors = {v - 1};
    g.ingest(e);
  }
  LearnerConfig cfg = small_config("er");
  auto learner = make_learner(cfg, 3, 2, 0);
  const auto before = learner->model().params.flat_values();
  const std::uint64_t hash = learner->state_hash();
  const StepReport r = learner->observe(g, std::vector<NodeId>{0, 1, 2, 3});
  EXPECT_TRUE(r.skipped);
  EXPECT_EQ(learner->model().params.flat_values(), before);
  EXPECT_EQ(learner->state_hash(), hash);
  EXPECT_EQ(learner->model().head.active_count(), 0u);
}

TEST(Strategies, AgemNeverOpposesReplayGradient) {
  const StreamBundle b = small_stream(5);
  auto learner = make_learner(small_config("agem"), 8, 4, 6);
  feed(*learner, b.stream);
  EXPECT_GT(learner->projection_checks(), 0u);
  EXPECT_EQ(learner->projection_violations(), 0u);
}

TEST(Strategies, StoredSubgraphsAreFrozen) {
  const StreamBundle b = small_stream(6);
  const std::size_t half = b.stream.size() / 2;
  for (const std::string& name : {std::string("ssm"), std::string("pdgnn"), std::string("er")}) {
    auto learner = make_learner(small_config(name), 8, 4, 7);
    NodeStream stream = b.stream;
    GrowingGraph g(8);
    while (g.size() < half) {
      std::vector<NodeId> ids;
      const auto batch = stream.next_minibatch();
      for (const auto& e : *batch) {
        g.ingest(e);
        ids.push_back(e.id);
      }
      learner->observe(g, ids);
    }
    const DenseMatrix before = *learner->memory_logits(g);
    while (const auto batch = stream.next_minibatch())
      for (const auto& e : *batch) g.ingest(e);
    const DenseMatrix after = *learner->memory_logits(g);
    if (name == "er")
      EXPECT_NE(after, before);
    else
      EXPECT_EQ(after, before) << name;
  }
}

TEST(Strategies, SameSeedSameState) {
  const StreamBundle b = small_stream(7);
  for (const std::string& name : strategy_names()) {
    auto x = make_learner(small_config(name), 8, 4, 9);
    auto y = make_learner(small_config(name), 8, 4, 9);
    feed(*x, b.stream, 5);
    feed(*y, b.stream, 5);
    EXPECT_EQ(x->state_hash(), y->state_hash()) << name;
  }
}
