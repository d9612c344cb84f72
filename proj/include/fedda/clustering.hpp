#pragma once

#include <cstdint>
#include <vector>

#include "fedda/data.hpp"

namespace fedda {

struct ClusteringConfig {
  int c = 16;                // cluster count
  int max_iter_kmeans = 100;
  int j_max = 20;            // dual clustering iteration threshold
  std::uint64_t seed = 0;
};

struct KMeansResult {
  std::vector<int> labels;
  std::vector<std::vector<double>> centers;
};

// Lloyd iterations with deterministic tie-breaking (equidistant points go to
// the lowest-index center). Without init_centers, c distinct points are
// sampled uniformly by seed. A cluster that ends an assignment pass empty
// re-seizes the point farthest from its own (stale) center, which also keeps
// the within-cluster sum of squares non-increasing.
KMeansResult kmeans(const std::vector<std::vector<double>>& points, int c,
                    const std::vector<std::vector<double>>* init_centers, std::uint64_t seed,
                    int max_iter = 100);

// Partition equality: true iff some bijection of label values maps a onto b.
bool labels_equivalent(const std::vector<int>& a, const std::vector<int>& b);

struct ClusterAssignment {
  std::vector<int> labels;                           // per station, in [0, effective_c)
  std::vector<std::vector<double>> centers_traffic;  // effective_c x W
  std::vector<std::vector<double>> centers_geo;      // effective_c x 2
  int effective_c = 0;
  bool converged = false;
};

// Iterative dual clustering: alternates K-Means over the augmented weekly
// traffic and over the geo-locations, each view seeding the other, until the
// two partitions agree or j_max iterations pass (then the last traffic
// labels are returned with converged = false).
ClusterAssignment dual_cluster(const std::vector<AugmentedSeries>& augmented,
                               const std::vector<GeoPoint>& locations,
                               const ClusteringConfig& cfg);

}  // namespace fedda
