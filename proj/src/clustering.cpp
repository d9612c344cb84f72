#include "fedda/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "fedda/rng.hpp"

namespace fedda {

namespace {

double sq_dist(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

int nearest_center(const std::vector<double>& p, const std::vector<std::vector<double>>& centers) {
  int best = 0;
  double best_d = sq_dist(p, centers[0]);
  for (int c = 1; c < static_cast<int>(centers.size()); ++c) {
    double d = sq_dist(p, centers[c]);
    if (d < best_d) {  // strict: ties keep the lowest index
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans(const std::vector<std::vector<double>>& points, int c,
                    const std::vector<std::vector<double>>* init_centers, std::uint64_t seed,
                    int max_iter) {
  const int n = static_cast<int>(points.size());
  if (c < 1) throw std::invalid_argument("kmeans: c must be >= 1");
  if (n < c)
    throw std::invalid_argument("kmeans: " + std::to_string(c) + " clusters but only " +
                                std::to_string(n) + " points");
  const std::size_t dim = points[0].size();
  for (const auto& p : points)
    if (p.size() != dim) throw std::invalid_argument("kmeans: inconsistent point dimension");

  KMeansResult res;
  if (init_centers) {
    if (static_cast<int>(init_centers->size()) != c)
      throw std::invalid_argument("kmeans: init_centers must have c rows");
    for (const auto& v : *init_centers)
      if (v.size() != dim) throw std::invalid_argument("kmeans: init_centers dimension mismatch");
    res.centers = *init_centers;
  } else {
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 gen(derive_seed(seed, "kmeans-init"));
    for (int i = 0; i < c; ++i) {
      int j = i + static_cast<int>(gen() % static_cast<std::uint64_t>(n - i));
      std::swap(idx[i], idx[j]);
      res.centers.push_back(points[idx[i]]);
    }
  }

  res.labels.assign(n, -1);
  std::vector<int> counts(c, 0);
  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    std::fill(counts.begin(), counts.end(), 0);
    for (int i = 0; i < n; ++i) {
      int l = nearest_center(points[i], res.centers);
      if (l != res.labels[i]) changed = true;
      res.labels[i] = l;
      ++counts[l];
    }

    // Empty-cluster repair: the empty cluster takes the point farthest from
    // its own center (only from clusters that can spare one) and moves its
    // center onto that point.
    for (int e = 0; e < c; ++e) {
      if (counts[e] > 0) continue;
      int steal = -1;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[res.labels[i]] < 2) continue;
        double d = sq_dist(points[i], res.centers[e]);
        if (d > far_d) {
          far_d = d;
          steal = i;
        }
      }
      if (steal < 0) break;
      --counts[res.labels[steal]];
      res.labels[steal] = e;
      ++counts[e];
      res.centers[e] = points[steal];
      changed = true;
    }

    // Center update: mean of members.
    for (int cc = 0; cc < c; ++cc)
      if (counts[cc] > 0) std::fill(res.centers[cc].begin(), res.centers[cc].end(), 0.0);
    for (int i = 0; i < n; ++i) {
      const auto& p = points[i];
      auto& center = res.centers[res.labels[i]];
      for (std::size_t d = 0; d < dim; ++d) center[d] += p[d];
    }
    for (int cc = 0; cc < c; ++cc)
      if (counts[cc] > 0)
        for (double& v : res.centers[cc]) v /= static_cast<double>(counts[cc]);

    if (!changed) break;
  }
  return res;
}

bool labels_equivalent(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("labels_equivalent: length mismatch");
  std::map<int, int> fwd, bwd;
  for (std::size_t i = 0; i < a.size(); ++i) {
    auto [fit, fnew] = fwd.emplace(a[i], b[i]);
    if (!fnew && fit->second != b[i]) return false;
    auto [bit, bnew] = bwd.emplace(b[i], a[i]);
    if (!bnew && bit->second != a[i]) return false;
  }
  return true;
}

ClusterAssignment dual_cluster(const std::vector<AugmentedSeries>& augmented,
                               const std::vector<GeoPoint>& locations,
                               const ClusteringConfig& cfg) {
  const int k = static_cast<int>(augmented.size());
  if (k != static_cast<int>(locations.size()))
    throw std::invalid_argument("dual_cluster: augmented/location length mismatch");
  if (k < cfg.c)
    throw std::invalid_argument("dual_cluster: " + std::to_string(cfg.c) +
                                " clusters but only " + std::to_string(k) + " stations");
  if (cfg.c < 1) throw std::invalid_argument("dual_cluster: c must be >= 1");
  if (cfg.j_max < 1) throw std::invalid_argument("dual_cluster: j_max must be >= 1");

  std::vector<std::vector<double>> traffic(k);
  std::vector<std::vector<double>> geo(k);
  for (int i = 0; i < k; ++i) {
    traffic[i] = augmented[i].values;
    geo[i] = {locations[i].lon, locations[i].lat};
  }

  // Initial traffic centers: a seeded first station, then greedy
  // farthest-first picks. Uniform sampling of all c centers tends to land
  // two centers in one traffic archetype, and a split/merge introduced that
  // way is a fixed point of the outer loop and never heals; maximin picks
  // cover the well-separated patterns.
  std::vector<std::vector<double>> v_centers;
  {
    std::mt19937_64 gen(derive_seed(cfg.seed, "dual-init"));
    std::vector<double> nearest(k, std::numeric_limits<double>::infinity());
    int pick = static_cast<int>(gen() % static_cast<std::uint64_t>(k));
    for (int i = 0; i < cfg.c; ++i) {
      v_centers.push_back(traffic[pick]);
      for (int p = 0; p < k; ++p) {
        double d = 0.0;
        for (std::size_t x = 0; x < traffic[p].size(); ++x) {
          double diff = traffic[p][x] - traffic[pick][x];
          d += diff * diff;
        }
        nearest[p] = std::min(nearest[p], d);
      }
      pick = static_cast<int>(std::max_element(nearest.begin(), nearest.end()) -
                              nearest.begin());
    }
  }

  ClusterAssignment out;
  KMeansResult traffic_km, geo_km;
  for (int j = 0; j < cfg.j_max; ++j) {
    traffic_km = kmeans(traffic, cfg.c, &v_centers, cfg.seed, cfg.max_iter_kmeans);

    // Seed the location clustering with the geographic means of the traffic
    // clusters so the two views exchange information both ways.
    std::vector<std::vector<double>> geo_seeds(cfg.c, std::vector<double>(2, 0.0));
    std::vector<int> counts(cfg.c, 0);
    for (int i = 0; i < k; ++i) {
      geo_seeds[traffic_km.labels[i]][0] += geo[i][0];
      geo_seeds[traffic_km.labels[i]][1] += geo[i][1];
      ++counts[traffic_km.labels[i]];
    }
    for (int c = 0; c < cfg.c; ++c)
      if (counts[c] > 0) {
        geo_seeds[c][0] /= counts[c];
        geo_seeds[c][1] /= counts[c];
      }
    geo_km = kmeans(geo, cfg.c, &geo_seeds, cfg.seed, cfg.max_iter_kmeans);

    if (labels_equivalent(traffic_km.labels, geo_km.labels)) {
      out.converged = true;
      break;
    }

    // Recompute traffic centers from the location-cluster memberships.
    std::vector<std::vector<double>> next(cfg.c, std::vector<double>(traffic[0].size(), 0.0));
    std::vector<int> gcounts(cfg.c, 0);
    for (int i = 0; i < k; ++i) {
      auto& acc = next[geo_km.labels[i]];
      for (std::size_t d = 0; d < traffic[i].size(); ++d) acc[d] += traffic[i][d];
      ++gcounts[geo_km.labels[i]];
    }
    for (int c = 0; c < cfg.c; ++c) {
      if (gcounts[c] > 0)
        for (double& v : next[c]) v /= static_cast<double>(gcounts[c]);
      else
        next[c] = v_centers[c];
    }
    v_centers = std::move(next);
  }

  // Compact label values to a prefix of [0, c); empty final clusters reduce
  // the effective count.
  std::vector<int> remap(cfg.c, -1);
  int effective = 0;
  for (int l : traffic_km.labels)
    if (remap[l] < 0) remap[l] = 1;  // mark used
  for (int c = 0; c < cfg.c; ++c)
    if (remap[c] > 0) remap[c] = effective++;
  out.labels.resize(k);
  for (int i = 0; i < k; ++i) out.labels[i] = remap[traffic_km.labels[i]];
  out.effective_c = effective;
  out.centers_traffic.resize(effective);
  out.centers_geo.resize(effective);
  for (int c = 0; c < cfg.c; ++c)
    if (remap[c] >= 0) {
      out.centers_traffic[remap[c]] = traffic_km.centers[c];
      out.centers_geo[remap[c]] = geo_km.centers.empty() ? std::vector<double>(2, 0.0)
                                                         : geo_km.centers[c];
    }
  return out;
}

}  // namespace fedda
