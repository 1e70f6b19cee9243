#include <cmath>

#include "ocgl/error.hpp"
#include "ocgl/rng.hpp"
#include "ocgl/stream.hpp"

namespace ocgl {

StaticGraph gen_sbm(const SbmSpec& spec) {
  require(spec.classes >= 2, ErrorKind::config, "an SBM needs at least two classes");
  require(spec.per_class >= 1, ErrorKind::config, "an SBM needs at least one node per class");
  require(spec.p_in >= 0.0 && spec.p_in <= 1.0 && spec.p_out >= 0.0 && spec.p_out <= 1.0, ErrorKind::config,
          "SBM edge probabilities must lie in [0, 1]");
  require(spec.dim >= spec.classes, ErrorKind::config, "orthogonal class means need dim >= classes");
  require(spec.noise >= 0.0, ErrorKind::config, "noise scale must be nonnegative");

  StaticGraph g;
  g.num_nodes = spec.classes * spec.per_class;
  g.feature_dim = spec.dim;
  g.num_classes = spec.classes;
  g.labels.resize(g.num_nodes);
  for (std::size_t v = 0; v < g.num_nodes; ++v) g.labels[v] = static_cast<std::uint32_t>(v / spec.per_class);

  Rng feature_rng = Rng::derive(spec.seed, 1);
  g.features.resize(g.num_nodes * g.feature_dim);
  for (std::size_t v = 0; v < g.num_nodes; ++v) {
    for (std::size_t d = 0; d < g.feature_dim; ++d) {
      const double mean = d == g.labels[v] ? spec.separation : 0.0;
      g.features[v * g.feature_dim + d] = static_cast<float>(mean + spec.noise * feature_rng.normal());
    }
  }

  Rng edge_rng = Rng::derive(spec.seed, 2);
  for (std::uint32_t u = 0; u < g.num_nodes; ++u) {
    for (std::uint32_t v = u + 1; v < g.num_nodes; ++v) {
      const double p = g.labels[u] == g.labels[v] ? spec.p_in : spec.p_out;
      if (edge_rng.uniform() < p) g.edges.emplace_back(u, v);
    }
  }
  return g;
}

}  // namespace ocgl
