#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "fixtures.hpp"
#include "ocgl/error.hpp"
#include "ocgl/model.hpp"

using namespace ocgl;
using ocgl::testing::graph_from_edges;
using ocgl::testing::max_abs_diff;
using ocgl::testing::random_matrix;

namespace {

Model small_model(std::size_t in, std::size_t hidden, std::size_t classes, bool bias, std::uint64_t seed,
                  std::size_t layers = 2) {
  Rng rng(seed);
  Model m = Model::create({in, hidden, classes, layers, bias}, rng);
  for (std::size_t c = 0; c < classes; ++c) m.head.activate(static_cast<int>(c));
  // Give every column nonzero weights (activate alone keeps the random init).
  return m;
}

GrowingGraph six_node_graph(Rng& rng) {
  return graph_from_edges(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {1, 4}, {4, 5}}, 3, rng);
}

double ce_loss(const SampledEgoGraph& ego, const Model& model, const std::vector<int>& labels) {
  return softmax_cross_entropy(gcn_forward(ego, model).logits, labels, model.head.active_mask()).loss;
}

// Naive two-layer message passing: loops over neighbors with global degrees.
DenseMatrix naive_gcn(const GrowingGraph& g, const Model& m, const std::vector<NodeId>& seeds) {
  const auto a = ocgl::testing::dense_normalized(g);
  const std::size_t n = g.size();
  const DenseMatrix& w0 = m.weight(0);
  const DenseMatrix& w1 = m.weight(1);
  DenseMatrix h(n, w0.cols());
  for (std::size_t v = 0; v < n; ++v)
    for (std::size_t u = 0; u < n; ++u) {
      if (a[v][u] == 0.0) continue;
      const auto x = g.features(static_cast<NodeId>(u));
      for (std::size_t c = 0; c < w0.cols(); ++c)
        for (std::size_t k = 0; k < x.size(); ++k) h(v, c) += a[v][u] * x[k] * w0(k, c);
    }
  for (double& v : h.values()) v = std::max(v, 0.0);
  DenseMatrix out(seeds.size(), w1.cols());
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t u = 0; u < n; ++u) {
      const double w = a[seeds[i]][u];
      if (w == 0.0) continue;
      for (std::size_t c = 0; c < w1.cols(); ++c)
        for (std::size_t k = 0; k < w0.cols(); ++k) out(i, c) += w * h(u, k) * w1(k, c);
    }
  return out;
}

}  // namespace

TEST(GcnForward, IsolatedNodeEqualsMlp) {
  Rng rng(1);
  const GrowingGraph g = graph_from_edges(1, {}, 4, rng);
  const Model m = small_model(4, 5, 3, false, 2);
  const std::vector<NodeId> seeds{0};
  const SampledEgoGraph ego = full_ego(g, seeds, 2);
  EXPECT_EQ(ego.normalized.at(0, 0), 1.0);
  const DenseMatrix gcn = gcn_forward(ego, m).logits;
  const DenseMatrix mlp = mlp_forward(ego.features, m).logits;
  EXPECT_LT(max_abs_diff(gcn, mlp), 1e-14);
}

TEST(GcnForward, ZeroFeaturesGiveZeroLogits) {
  const std::size_t n = 4;
  GrowingGraph g(3);
  for (NodeId v = 0; v < n; ++v) {
    NodeEvent e;
    e.id = v;
    e.features.assign(3, 0.0);
    if (v > 0) e.neighbors = {v - 1};
    g.ingest(e);
  }
  const Model m = small_model(3, 4, 2, false, 3);
  const std::vector<NodeId> seeds{0, 2};
  const DenseMatrix logits = gcn_forward(full_ego(g, seeds, 2), m).logits;
  for (double v : logits.values()) EXPECT_EQ(v, 0.0);
}

TEST(GcnForward, MatchesNaiveMessagePassing) {
  Rng rng(4);
  const GrowingGraph g = six_node_graph(rng);
  const Model m = small_model(3, 5, 2, false, 5);
  const std::vector<NodeId> seeds{1, 4, 5};
  const DenseMatrix got = gcn_forward(full_ego(g, seeds, 2), m).logits;
  EXPECT_LT(max_abs_diff(got, naive_gcn(g, m, seeds)), 1e-12);
}

TEST(GcnForward, HopDeficitIsDimensionError) {
  Rng rng(6);
  const GrowingGraph g = six_node_graph(rng);
  const Model m = small_model(3, 4, 2, false, 7);
  const std::vector<NodeId> seeds{0};
  try {
    gcn_forward(full_ego(g, seeds, 1), m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::dimension);
  }
}

TEST(GcnBackward, ZeroUpstreamGivesZeroGradients) {
  Rng rng(8);
  const GrowingGraph g = six_node_graph(rng);
  Model m = small_model(3, 4, 2, true, 9);
  const std::vector<NodeId> seeds{0, 3};
  const ForwardCache cache = gcn_forward(full_ego(g, seeds, 2), m);
  m.params.zero_grad();
  backward(cache, DenseMatrix(2, 2), m);
  for (const auto& p : m.params)
    for (double v : p.grad.values()) EXPECT_EQ(v, 0.0);
}

TEST(GcnBackward, MatchesFiniteDifferences) {
  for (bool bias : {false, true}) {
    Rng rng(10);
    const GrowingGraph g = six_node_graph(rng);
    Model m = small_model(3, 4, 3, bias, 11);
    const std::vector<NodeId> seeds{0, 2, 5};
    Rng sample_rng(12);
    const std::vector<std::size_t> fanouts{2, 2};
    const SampledEgoGraph ego = sample_ego(g, seeds, fanouts, sample_rng);
    const std::vector<int> labels{0, 2, 1};
    const ForwardCache cache = gcn_forward(ego, m);
    m.params.zero_grad();
    backward(cache, softmax_cross_entropy(cache.logits, labels, m.head.active_mask()).grad, m);
    const double err = finite_diff_check(
        [&](const ParameterSet& p) {
          Model probe = m;
          probe.params = p;
          return ce_loss(ego, probe, labels);
        },
        m.params);
    EXPECT_LT(err, 1e-6) << "bias=" << bias;
  }
}

TEST(GcnBackward, DuplicatedSeedDoublesGradient) {
  Rng rng(13);
  const GrowingGraph g = six_node_graph(rng);
  Model m = small_model(3, 4, 2, false, 14);
  auto grads_for = [&](const std::vector<NodeId>& seeds) {
    const ForwardCache cache = gcn_forward(full_ego(g, seeds, 2), m);
    DenseMatrix d(seeds.size(), 2, 1.0);
    m.params.zero_grad();
    backward(cache, d, m);
    return m.params.flat_grads();
  };
  const auto single = grads_for({3});
  const auto twice = grads_for({3, 3});
  for (std::size_t i = 0; i < single.size(); ++i) EXPECT_NEAR(twice[i], 2.0 * single[i], 1e-12);
}

TEST(GcnBackward, StaleCacheIsContractError) {
  Rng rng(15);
  const GrowingGraph g = six_node_graph(rng);
  Model m = small_model(3, 4, 2, false, 16);
  const std::vector<NodeId> seeds{1};
  const ForwardCache cache = gcn_forward(full_ego(g, seeds, 2), m);
  AdamState adam(m.params, 0.01);
  adam_step(m.params, adam);
  try {
    backward(cache, DenseMatrix(1, 2), m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::contract);
  }
}

TEST(Mlp, ZeroInputGivesZeroLogits) {
  const Model m = small_model(8, 6, 3, false, 17);
  const DenseMatrix logits = mlp_forward(DenseMatrix(4, 8), m).logits;
  for (double v : logits.values()) EXPECT_EQ(v, 0.0);
}

TEST(Mlp, GradientMatchesFiniteDifferences) {
  Rng rng(18);
  Model m = small_model(8, 6, 3, true, 19);
  const DenseMatrix x = random_matrix(4, 8, rng);
  const std::vector<int> labels{0, 1, 2, 1};
  const ForwardCache cache = mlp_forward(x, m);
  m.params.zero_grad();
  backward(cache, softmax_cross_entropy(cache.logits, labels, m.head.active_mask()).grad, m);
  const double err = finite_diff_check(
      [&](const ParameterSet& p) {
        Model probe = m;
        probe.params = p;
        return softmax_cross_entropy(mlp_forward(x, probe).logits, labels, probe.head.active_mask()).loss;
      },
      m.params);
  EXPECT_LT(err, 1e-6);
}

TEST(Hvp, MatchesDifferenceOfGradients) {
  Rng rng(20);
  const GrowingGraph g = six_node_graph(rng);
  Model m = small_model(3, 4, 3, true, 21);
  const std::vector<NodeId> seeds{0, 1, 4};
  const SampledEgoGraph ego = full_ego(g, seeds, 2);
  const std::vector<int> labels{2, 0, kIgnoreLabel};
  std::vector<DenseMatrix> direction;
  for (const auto& p : m.params) direction.push_back(random_matrix(p.value.rows(), p.value.cols(), rng));

  auto gradient_at = [&](double t) {
    Model probe = m;
    for (std::size_t i = 0; i < probe.params.size(); ++i) add_scaled(probe.params[i].value, direction[i], t);
    const ForwardCache c = gcn_forward(ego, probe);
    probe.params.zero_grad();
    backward(c, softmax_cross_entropy(c.logits, labels, probe.head.active_mask()).grad, probe);
    return probe.params.flat_grads();
  };
  const double h = 1e-5;
  const auto plus = gradient_at(h);
  const auto minus = gradient_at(-h);
  const auto hv = cross_entropy_hvp(gcn_forward(ego, m), labels, m, direction);
  std::vector<double> flat;
  for (const auto& x : hv) flat.insert(flat.end(), x.values().begin(), x.values().end());
  for (std::size_t i = 0; i < flat.size(); ++i) {
    const double numeric = (plus[i] - minus[i]) / (2 * h);
    EXPECT_NEAR(flat[i], numeric, 1e-5 * std::max(1.0, std::abs(numeric)));
  }
}

TEST(Sgc, DepthZeroReturnsRawFeatures) {
  Rng rng(22);
  const GrowingGraph g = six_node_graph(rng);
  const std::vector<NodeId> seeds{2, 5};
  const DenseMatrix e = sgc_embed(full_ego(g, seeds, 2), 0);
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t d = 0; d < 3; ++d) EXPECT_EQ(e(i, d), g.features(seeds[i])[d]);
}

TEST(Sgc, TwoNodeEdgeAveragesFeatures) {
  Rng rng(23);
  const GrowingGraph g = graph_from_edges(2, {{0, 1}}, 3, rng);
  const std::vector<NodeId> seeds{0, 1};
  const DenseMatrix e = sgc_embed(full_ego(g, seeds, 1), 1);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t d = 0; d < 3; ++d)
      EXPECT_NEAR(e(i, d), (g.features(0)[d] + g.features(1)[d]) / 2.0, 1e-12);
}

TEST(Sgc, DepthTwoEqualsNormalizedSquare) {
  Rng rng(24);
  const GrowingGraph g = six_node_graph(rng);
  const std::vector<NodeId> seeds{0, 3};
  const DenseMatrix got = sgc_embed(full_ego(g, seeds, 2), 2);
  const auto a = ocgl::testing::dense_normalized(g);
  for (std::size_t i = 0; i < seeds.size(); ++i)
    for (std::size_t d = 0; d < 3; ++d) {
      double expected = 0.0;
      for (std::size_t u = 0; u < g.size(); ++u)
        for (std::size_t w = 0; w < g.size(); ++w) expected += a[seeds[i]][u] * a[u][w] * g.features(static_cast<NodeId>(w))[d];
      EXPECT_NEAR(got(i, d), expected, 1e-12);
    }
}

TEST(Sgc, LinearInFeatures) {
  Rng rng(25);
  const GrowingGraph g = six_node_graph(rng);
  const std::vector<NodeId> seeds{1, 4};
  SampledEgoGraph x = full_ego(g, seeds, 2);
  SampledEgoGraph y = x;
  SampledEgoGraph mix = x;
  y.features = random_matrix(x.features.rows(), x.features.cols(), rng);
  for (std::size_t i = 0; i < mix.features.size(); ++i)
    mix.features.values()[i] = 2.0 * x.features.values()[i] - 3.0 * y.features.values()[i];
  const DenseMatrix ex = sgc_embed(x, 2), ey = sgc_embed(y, 2), em = sgc_embed(mix, 2);
  for (std::size_t i = 0; i < em.size(); ++i)
    EXPECT_NEAR(em.values()[i], 2.0 * ex.values()[i] - 3.0 * ey.values()[i], 1e-12);
}

TEST(Head, FirstLabelTakesColumnZeroAndRepeatsAreNoOps) {
  Rng rng(26);
  Model m = Model::create({3, 4, 3, 2, false}, rng);
  EXPECT_EQ(expand_head(m, 7), 0u);
  EXPECT_EQ(expand_head(m, 2), 1u);
  EXPECT_EQ(expand_head(m, 7), 0u);
  EXPECT_EQ(m.head.active_count(), 2u);
}

TEST(Head, ExhaustedWidthIsCapacityError) {
  Rng rng(27);
  Model m = Model::create({3, 4, 1, 2, false}, rng);
  expand_head(m, 0);
  try {
    expand_head(m, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::capacity);
  }
}

TEST(Head, ExpansionKeepsOldLogits) {
  Rng rng(28);
  Model m = Model::create({4, 6, 4, 2, true}, rng);
  expand_head(m, 10);
  expand_head(m, 11);
  const DenseMatrix x = random_matrix(5, 4, rng);
  const DenseMatrix before = mlp_forward(x, m).logits;
  expand_head(m, 12);
  const DenseMatrix after = mlp_forward(x, m).logits;
  for (std::size_t r = 0; r < 5; ++r) {
    EXPECT_EQ(after(r, 0), before(r, 0));
    EXPECT_EQ(after(r, 1), before(r, 1));
    EXPECT_EQ(after(r, 2), 0.0);
  }
}

TEST(Predict, TiesGoToLowestColumn) {
  OutputHead head(3);
  head.activate(5);
  head.activate(9);
  DenseMatrix logits(1, 3, 1.0);
  logits(0, 2) = 50.0;  // inactive column never wins
  EXPECT_EQ(predict_labels(logits, head)[0], 5);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Rng rng(29);
  Model m = Model::create({5, 7, 4, 2, true}, rng);
  expand_head(m, 3);
  expand_head(m, 1);
  const auto prefix = std::filesystem::temp_directory_path() / "ocgl_model_checkpoint";
  save_checkpoint(m, prefix);
  const Model loaded = load_checkpoint(prefix);
  ASSERT_EQ(loaded.params.size(), m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    EXPECT_EQ(loaded.params[i].name, m.params[i].name);
    EXPECT_EQ(loaded.params[i].value, m.params[i].value);
  }
  EXPECT_EQ(loaded.head, m.head);
}
