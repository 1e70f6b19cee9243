#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "ocgl/error.hpp"
#include "ocgl/stream.hpp"

using namespace ocgl;

namespace {

StaticGraph labeled_graph(std::size_t classes, std::size_t per_class) {
  SbmSpec spec;
  spec.classes = classes;
  spec.per_class = per_class;
  spec.dim = std::max<std::size_t>(classes, 4);
  spec.p_in = 0.3;
  spec.p_out = 0.02;
  return gen_sbm(spec);
}

ErrorKind schedule_error(const StaticGraph& g, std::size_t per_task, std::vector<int> order) {
  try {
    build_class_incremental(g, per_task, order, 0, 10);
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "bad schedule accepted";
  return ErrorKind::io;
}

}  // namespace

TEST(ClassIncremental, FourClassesMakeTwoTasks) {
  const StaticGraph g = labeled_graph(4, 30);
  const StreamBundle b = build_class_incremental(g, 2, {}, 0, 10);
  ASSERT_EQ(b.schedule.count(), 2u);
  EXPECT_EQ(b.schedule.tasks[0].classes, (std::vector<int>{0, 1}));
  EXPECT_EQ(b.schedule.tasks[1].classes, (std::vector<int>{2, 3}));
  EXPECT_EQ(b.schedule.tasks[0].begin, 0u);
  EXPECT_EQ(b.schedule.tasks[0].end, 60u);
  EXPECT_EQ(b.schedule.tasks[1].end, 120u);
  for (std::size_t p = 0; p < b.stream.size(); ++p) {
    const int label = b.stream.events()[p].label;
    const auto& classes = b.schedule.tasks[b.schedule.task_of(p)].classes;
    EXPECT_NE(std::find(classes.begin(), classes.end(), label), classes.end());
  }
}

TEST(ClassIncremental, SeventyClassesMakeThirtyFiveTasks) {
  const StaticGraph g = labeled_graph(70, 5);
  const StreamBundle b = build_class_incremental(g, 2, {}, 0, 10);
  EXPECT_EQ(b.schedule.count(), 35u);
  EXPECT_EQ(b.schedule.boundary, 7u);
}

TEST(ClassIncremental, CustomOrderIsRespected) {
  const StaticGraph g = labeled_graph(4, 10);
  const StreamBundle b = build_class_incremental(g, 2, std::vector<int>{3, 1, 0, 2}, 0, 10);
  EXPECT_EQ(b.schedule.tasks[0].classes, (std::vector<int>{3, 1}));
  EXPECT_EQ(b.schedule.tasks[1].classes, (std::vector<int>{0, 2}));
}

TEST(ClassIncremental, NeighborsAlwaysPrecedeTheNode) {
  const StaticGraph g = labeled_graph(6, 25);
  const StreamBundle b = build_class_incremental(g, 2, {}, 4, 10);
  std::size_t kept = 0;
  for (const auto& e : b.stream.events()) {
    EXPECT_TRUE(std::is_sorted(e.neighbors.begin(), e.neighbors.end()));
    for (NodeId u : e.neighbors) EXPECT_LT(u, e.id);
    kept += e.neighbors.size();
  }
  EXPECT_EQ(kept, g.edges.size());
}

TEST(ClassIncremental, UnlabeledNodesAreNotStreamed) {
  StaticGraph g = labeled_graph(2, 10);
  g.labels[3] = kUnlabeledSentinel;
  const StreamBundle b = build_class_incremental(g, 2, {}, 0, 10);
  EXPECT_EQ(b.stream.size(), 19u);
  EXPECT_EQ(std::count(b.source_ids.begin(), b.source_ids.end(), 3u), 0);
}

TEST(ClassIncremental, BadOrdersAreScheduleErrors) {
  const StaticGraph g = labeled_graph(4, 10);
  EXPECT_EQ(schedule_error(g, 2, {0, 1, 1, 2}), ErrorKind::schedule);
  EXPECT_EQ(schedule_error(g, 2, {0, 7}), ErrorKind::schedule);
  EXPECT_EQ(schedule_error(g, 0, {}), ErrorKind::schedule);
  StaticGraph missing = g;
  missing.num_classes = 5;
  EXPECT_EQ(schedule_error(missing, 2, {}), ErrorKind::schedule);
}

TEST(ClassIncremental, OrderDependsOnlyOnSeed) {
  const StaticGraph g = labeled_graph(4, 20);
  const auto a = build_class_incremental(g, 2, {}, 9, 10);
  const auto b = build_class_incremental(g, 2, {}, 9, 10);
  const auto c = build_class_incremental(g, 2, {}, 10, 10);
  EXPECT_EQ(a.source_ids, b.source_ids);
  EXPECT_NE(a.source_ids, c.source_ids);
}

TEST(TimeIncremental, OrderFollowsTimestamps) {
  StaticGraph g = labeled_graph(2, 50);
  std::vector<std::uint32_t> ts(g.num_nodes);
  for (std::uint32_t v = 0; v < g.num_nodes; ++v) ts[v] = (v * 37u) % 11u;
  g.timestamps = ts;
  const StreamBundle b = build_time_incremental(g, 10, 0, 10);
  ASSERT_EQ(b.schedule.count(), 10u);
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_EQ(b.schedule.tasks[t].begin, 10 * t);
    EXPECT_EQ(b.schedule.tasks[t].end, 10 * (t + 1));
  }
  for (std::size_t p = 1; p < b.source_ids.size(); ++p) {
    const auto prev = b.source_ids[p - 1], cur = b.source_ids[p];
    EXPECT_TRUE(ts[prev] < ts[cur] || (ts[prev] == ts[cur] && prev < cur));
  }
  for (const auto& e : b.stream.events()) EXPECT_TRUE(e.timestamp.has_value());
}

TEST(TimeIncremental, RequiresTimestamps) {
  const StaticGraph g = labeled_graph(2, 10);
  try {
    build_time_incremental(g, 2, 0, 10);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::schedule);
  }
}

TEST(NodeStream, LastBatchIsShorter) {
  std::vector<NodeEvent> events(25);
  for (std::size_t i = 0; i < events.size(); ++i) events[i].id = static_cast<NodeId>(i);
  NodeStream s(events, 10);
  EXPECT_EQ(s.batch_count(), 3u);
  std::vector<std::size_t> sizes;
  while (auto batch = s.next_minibatch()) sizes.push_back(batch->size());
  EXPECT_EQ(sizes, (std::vector<std::size_t>{10, 10, 5}));
  EXPECT_FALSE(s.next_minibatch().has_value());
  s.reset();
  EXPECT_EQ(s.next_minibatch()->front().id, 0u);
  EXPECT_EQ(s.truncated(12).size(), 12u);
}

TEST(NodeStream, ZeroBatchSizeIsConfigError) {
  try {
    NodeStream s({}, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(Splits, StratifiedProportions) {
  const StaticGraph g = labeled_graph(3, 100);
  const SplitAssignment s = assign_splits(g, 5);
  for (std::uint32_t c = 0; c < 3; ++c) {
    std::size_t counts[3] = {0, 0, 0};
    for (std::uint32_t v = 0; v < g.num_nodes; ++v)
      if (g.labels[v] == c) ++counts[static_cast<int>(s.tags[v])];
    EXPECT_NEAR(static_cast<double>(counts[0]), 60.0, 1.0);
    EXPECT_NEAR(static_cast<double>(counts[1]), 20.0, 1.0);
    EXPECT_NEAR(static_cast<double>(counts[2]), 20.0, 1.0);
  }
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Splits, TinyClassWarns) {
  const StaticGraph g = labeled_graph(2, 3);
  EXPECT_EQ(assign_splits(g, 0).warnings.size(), 2u);
}

TEST(Splits, UnlabeledNodesAreTrain) {
  StaticGraph g = labeled_graph(2, 10);
  g.labels[0] = kUnlabeledSentinel;
  EXPECT_EQ(assign_splits(g, 1).tags[0], Split::train);
}

TEST(Boundary, TwentyPercentRounded) {
  EXPECT_EQ(validation_boundary(1), 0u);
  EXPECT_EQ(validation_boundary(2), 1u);
  EXPECT_EQ(validation_boundary(5), 1u);
  EXPECT_EQ(validation_boundary(10), 2u);
  EXPECT_EQ(validation_boundary(35), 7u);
}

TEST(Sbm, PureBlocksGiveDisjointTriangles) {
  SbmSpec spec;
  spec.classes = 2;
  spec.per_class = 3;
  spec.p_in = 1.0;
  spec.p_out = 0.0;
  spec.dim = 2;
  const StaticGraph g = gen_sbm(spec);
  const std::vector<std::pair<std::uint32_t, std::uint32_t>> expected{{0, 1}, {0, 2}, {1, 2},
                                                                      {3, 4}, {3, 5}, {4, 5}};
  EXPECT_EQ(g.edges, expected);
  EXPECT_EQ(g.labels, (std::vector<std::uint32_t>{0, 0, 0, 1, 1, 1}));
}

TEST(Sbm, EdgeDensityMatchesProbabilities) {
  SbmSpec spec;
  spec.classes = 4;
  spec.per_class = 100;
  spec.p_in = 0.1;
  spec.p_out = 0.01;
  const StaticGraph g = gen_sbm(spec);
  std::size_t in = 0, out = 0;
  for (const auto& [a, b] : g.edges) (g.labels[a] == g.labels[b] ? in : out)++;
  const double in_pairs = 4 * 100.0 * 99.0 / 2.0;
  const double out_pairs = 400.0 * 399.0 / 2.0 - in_pairs;
  EXPECT_NEAR(in / in_pairs, 0.1, 0.01);
  EXPECT_NEAR(out / out_pairs, 0.01, 0.002);
}

TEST(Sbm, FeaturesCenterOnClassMeans) {
  SbmSpec spec;
  spec.classes = 3;
  spec.per_class = 400;
  spec.dim = 5;
  spec.separation = 3.0;
  const StaticGraph g = gen_sbm(spec);
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t d = 0; d < 5; ++d) {
      double sum = 0.0;
      for (std::size_t v = c * 400; v < (c + 1) * 400; ++v) sum += g.features[v * 5 + d];
      EXPECT_NEAR(sum / 400.0, d == c ? 3.0 : 0.0, 0.2);
    }
}

TEST(Sbm, SameSeedSameBytes) {
  SbmSpec spec;
  spec.seed = 17;
  EXPECT_EQ(gen_sbm(spec), gen_sbm(spec));
  SbmSpec other = spec;
  other.seed = 18;
  EXPECT_NE(gen_sbm(spec), gen_sbm(other));
}

TEST(Sbm, RejectsBadSpecs) {
  for (auto mutate : {+[](SbmSpec& s) { s.classes = 1; }, +[](SbmSpec& s) { s.p_in = 1.5; },
                      +[](SbmSpec& s) { s.dim = 1; }}) {
    SbmSpec spec;
    mutate(spec);
    try {
      gen_sbm(spec);
      ADD_FAILURE();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::config);
    }
  }
}
