#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "bodyid/body_model.hpp"
#include "bodyid/embedding.hpp"
#include "bodyid/error.hpp"
#include "bodyid/geometry.hpp"

namespace bodyid {

// Equal-width yaw bins covering [-pi, pi), centered so that yaw = 0 is a bin
// center. The experiments use 1, 4 or 8 bins; pitch is not binned.
struct ViewBinConfig {
  int n_yaw = 1;

  void validate() const {
    if (n_yaw < 1) throw ConfigError("view bins: n_yaw must be >= 1");
  }
  double bin_width() const { return 2.0 * kPi / n_yaw; }
};

inline int yaw_bin(double yaw, const ViewBinConfig& cfg) {
  cfg.validate();
  if (cfg.n_yaw == 1) return 0;
  const double w = cfg.bin_width();
  const double two_pi = 2.0 * kPi;
  double shifted = yaw + w / 2.0;
  shifted -= two_pi * std::floor(shifted / two_pi);  // wrap to [0, 2*pi)
  int bin = static_cast<int>(std::floor(shifted / w));
  if (bin >= cfg.n_yaw) bin = 0;  // guards the shifted == 2*pi rounding edge
  return bin;
}

inline double angular_distance(const VecX& f1, const VecX& f2) {
  if (f1.size() != f2.size()) throw DimensionError("angular_distance: dims disagree");
  return std::acos(std::clamp(f1.dot(f2), -1.0, 1.0));
}

inline double angular_distance(const IdFeature& f1, const IdFeature& f2) {
  return angular_distance(f1.vector, f2.vector);
}

// Per-bin (feature, occupancy) pairs; occupancy 0 <=> empty feature.
struct FeatureSet {
  int n_yaw = 1;
  std::vector<long long> occupancy;
  std::vector<VecX> features;

  static FeatureSet empty(const ViewBinConfig& cfg) {
    cfg.validate();
    FeatureSet fs;
    fs.n_yaw = cfg.n_yaw;
    fs.occupancy.assign(static_cast<std::size_t>(cfg.n_yaw), 0);
    fs.features.resize(static_cast<std::size_t>(cfg.n_yaw));
    return fs;
  }

  bool any_occupied() const {
    for (long long o : occupancy)
      if (o > 0) return true;
    return false;
  }
};

enum class AggMethod { mean, median, best };

inline AggMethod agg_method_from_string(const std::string& name) {
  if (name == "mean") return AggMethod::mean;
  if (name == "median") return AggMethod::median;
  if (name == "best") return AggMethod::best;
  throw ConfigError("unknown aggregation method: " + name);
}

namespace detail {

inline VecX normalize_or_throw(const VecX& v, const char* what) {
  const double norm = v.norm();
  if (norm <= 1e-12) throw DataError(std::string(what) + ": aggregate cancelled to zero");
  return v / norm;
}

// nearest-rank percentile of a sorted list
inline double percentile_sorted(const std::vector<double>& sorted, double pct) {
  const std::size_t n = sorted.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
  if (rank < 1) rank = 1;
  if (rank > n) rank = n;
  return sorted[rank - 1];
}

inline double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline VecX aggregate_bin(const std::vector<const VecX*>& members, AggMethod method) {
  const Eigen::Index dim = members.front()->size();
  const std::size_t n = members.size();
  if (n == 1) return *members.front();
  switch (method) {
    case AggMethod::mean: {
      VecX sum = VecX::Zero(dim);
      for (const VecX* f : members) sum += *f;
      return normalize_or_throw(sum / static_cast<double>(n), "mean aggregation");
    }
    case AggMethod::median: {
      VecX med(dim);
      for (Eigen::Index d = 0; d < dim; ++d) {
        std::vector<double> comps;
        comps.reserve(n);
        for (const VecX* f : members) comps.push_back((*f)(d));
        med(d) = median_of(std::move(comps));
      }
      return normalize_or_throw(med, "median aggregation");
    }
    case AggMethod::best: {
      // inliers = features whose median distance to the others does not
      // exceed the 90th percentile of all pairwise distances
      std::vector<double> pairwise;
      pairwise.reserve(n * (n - 1) / 2);
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
          pairwise.push_back(angular_distance(*members[i], *members[j]));
      std::sort(pairwise.begin(), pairwise.end());
      const double threshold = percentile_sorted(pairwise, 90.0);
      VecX sum = VecX::Zero(dim);
      std::size_t inliers = 0;
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> dists;
        dists.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) dists.push_back(angular_distance(*members[i], *members[j]));
        if (median_of(std::move(dists)) <= threshold) {
          sum += *members[i];
          ++inliers;
        }
      }
      if (inliers == 0) {
        for (const VecX* f : members) sum += *f;
      }
      return normalize_or_throw(sum, "best aggregation");
    }
  }
  throw ConfigError("aggregate: unknown method");
}

}  // namespace detail

// Bin features by yaw and reduce each occupied bin with the chosen method.
inline FeatureSet aggregate(const std::vector<std::pair<IdFeature, ViewAngles>>& features,
                            AggMethod method, const ViewBinConfig& cfg) {
  if (features.empty()) throw DataError("aggregate: empty feature list");
  FeatureSet fs = FeatureSet::empty(cfg);
  std::vector<std::vector<const VecX*>> bins(static_cast<std::size_t>(cfg.n_yaw));
  for (const auto& [feature, view] : features)
    bins[static_cast<std::size_t>(yaw_bin(view.yaw, cfg))].push_back(&feature.vector);
  for (int b = 0; b < cfg.n_yaw; ++b) {
    if (bins[b].empty()) continue;
    fs.features[b] = detail::aggregate_bin(bins[b], method);
    fs.occupancy[b] = static_cast<long long>(bins[b].size());
  }
  return fs;
}

// Occupancy-weighted merge of feature sets with the same bin layout.
inline FeatureSet merge(const std::vector<FeatureSet>& sets) {
  if (sets.empty()) throw DataError("merge: no feature sets");
  const int n_yaw = sets.front().n_yaw;
  for (const auto& s : sets)
    if (s.n_yaw != n_yaw) throw ConfigError("merge: mixed bin configurations");
  FeatureSet out = FeatureSet::empty(ViewBinConfig{n_yaw});
  for (int b = 0; b < n_yaw; ++b) {
    VecX sum;
    long long occ = 0;
    for (const auto& s : sets) {
      if (s.occupancy[b] == 0) continue;
      if (sum.size() == 0) sum = VecX::Zero(s.features[b].size());
      sum += static_cast<double>(s.occupancy[b]) * s.features[b];
      occ += s.occupancy[b];
    }
    if (occ > 0) {
      out.features[b] = detail::normalize_or_throw(sum / static_cast<double>(occ), "merge");
      out.occupancy[b] = occ;
    }
  }
  return out;
}

// Occupancy-weighted collapse to a single direction.
inline VecX collapse(const FeatureSet& fs) {
  VecX sum;
  long long occ = 0;
  for (int b = 0; b < fs.n_yaw; ++b) {
    if (fs.occupancy[b] == 0) continue;
    if (sum.size() == 0) sum = VecX::Zero(fs.features[b].size());
    sum += static_cast<double>(fs.occupancy[b]) * fs.features[b];
    occ += fs.occupancy[b];
  }
  if (occ == 0) throw DataError("collapse: feature set has no occupied bins");
  return detail::normalize_or_throw(sum, "collapse");
}

// Match rule: compare features in the bin maximizing o1*o2 (lowest index on
// ties); if no bin is occupied in both sets, collapse each set and compare.
inline double match(const FeatureSet& f1, const FeatureSet& f2) {
  if (f1.n_yaw != f2.n_yaw) throw ConfigError("match: mixed bin configurations");
  if (!f1.any_occupied() || !f2.any_occupied())
    throw DataError("match: feature set has no occupied bins");
  int best_bin = -1;
  long long best_product = 0;
  for (int b = 0; b < f1.n_yaw; ++b) {
    const long long product = f1.occupancy[b] * f2.occupancy[b];
    if (product > best_product) {
      best_product = product;
      best_bin = b;
    }
  }
  if (best_bin >= 0) return angular_distance(f1.features[best_bin], f2.features[best_bin]);
  return angular_distance(collapse(f1), collapse(f2));
}

}  // namespace bodyid
