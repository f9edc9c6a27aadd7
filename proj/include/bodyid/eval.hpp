#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "bodyid/aggregation.hpp"
#include "bodyid/error.hpp"
#include "bodyid/geometry.hpp"

namespace bodyid {

struct GalleryEntry {
  std::string subject;
  FeatureSet features;
};

// truth subjects absent from the gallery are confusers: excluded from CMC,
// included in the impostor pool
struct ProbeEntry {
  std::string id;
  std::string subject;
  FeatureSet features;
};

struct Protocol {
  std::vector<GalleryEntry> gallery;
  std::vector<ProbeEntry> probes;

  void validate() const {
    if (gallery.empty()) throw DataError("protocol: empty gallery");
    if (probes.empty()) throw DataError("protocol: no probes");
    std::set<std::string> seen;
    for (const auto& g : gallery) {
      if (!seen.insert(g.subject).second)
        throw ConfigError("protocol: duplicate gallery subject " + g.subject);
      if (!g.features.any_occupied())
        throw DataError("protocol: gallery subject " + g.subject + " has no occupied bins");
    }
    for (const auto& p : probes)
      if (!p.features.any_occupied())
        throw DataError("protocol: probe " + p.id + " has no occupied bins");
  }
};

// Pairwise match distances, probes as rows.
inline MatX score_matrix(const Protocol& protocol) {
  protocol.validate();
  MatX scores(protocol.probes.size(), protocol.gallery.size());
  for (std::size_t p = 0; p < protocol.probes.size(); ++p)
    for (std::size_t g = 0; g < protocol.gallery.size(); ++g) {
      try {
        scores(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(g)) =
            match(protocol.probes[p].features, protocol.gallery[g].features);
      } catch (const Error& e) {
        throw DataError("score_matrix: probe " + protocol.probes[p].id + " vs gallery " +
                        protocol.gallery[g].subject + ": " + e.what());
      }
    }
  return scores;
}

struct CmcResult {
  std::vector<double> accuracy;  // accuracy[k-1] = rank-k accuracy
  int counted = 0;
  int excluded = 0;  // probes whose subject is missing from the gallery
};

// truth[p] = gallery column of the probe's subject, or -1 for confusers.
// Rank of the true entry = number of gallery entries strictly closer, plus
// equal-distance entries with a lower column index.
inline CmcResult cmc(const MatX& scores, const std::vector<int>& truth) {
  if (static_cast<Eigen::Index>(truth.size()) != scores.rows())
    throw DimensionError("cmc: truth size does not match score rows");
  const Eigen::Index gallery_n = scores.cols();
  CmcResult res;
  res.accuracy.assign(static_cast<std::size_t>(gallery_n), 0.0);
  std::vector<int> correct_at(static_cast<std::size_t>(gallery_n), 0);
  for (Eigen::Index p = 0; p < scores.rows(); ++p) {
    const int t = truth[static_cast<std::size_t>(p)];
    if (t < 0) {
      ++res.excluded;
      continue;
    }
    ++res.counted;
    const double d_true = scores(p, t);
    int position = 0;
    for (Eigen::Index g = 0; g < gallery_n; ++g) {
      if (g == t) continue;
      if (scores(p, g) < d_true || (scores(p, g) == d_true && g < t)) ++position;
    }
    for (Eigen::Index k = position; k < gallery_n; ++k) ++correct_at[static_cast<std::size_t>(k)];
  }
  if (res.counted == 0) throw DataError("cmc: no probe has its subject in the gallery");
  for (std::size_t k = 0; k < res.accuracy.size(); ++k)
    res.accuracy[k] = static_cast<double>(correct_at[k]) / res.counted;
  return res;
}

// TAR at the distance threshold set by the FAR quantile of the impostor
// distances: threshold = k-th smallest impostor with k = floor(far * N)
// (the smallest impostor when k = 0); TAR counts genuine distances strictly
// below it.
inline double tar_at_far(std::vector<double> genuine, std::vector<double> impostor, double far) {
  if (genuine.empty() || impostor.empty()) throw DataError("tar_at_far: empty score list");
  if (far <= 0.0 || far >= 1.0) throw ConfigError("tar_at_far: far must lie in (0, 1)");
  std::sort(impostor.begin(), impostor.end());
  const std::size_t k =
      static_cast<std::size_t>(std::floor(far * static_cast<double>(impostor.size())));
  const double threshold = k >= 1 ? impostor[k - 1] : impostor[0];
  std::size_t accepted = 0;
  for (double d : genuine)
    if (d < threshold) ++accepted;
  return static_cast<double>(accepted) / static_cast<double>(genuine.size());
}

// (FAR, TAR) sweep over impostor-distance thresholds, ending at (1, 1).
inline std::vector<std::pair<double, double>> roc_points(std::vector<double> genuine,
                                                         std::vector<double> impostor) {
  if (genuine.empty() || impostor.empty()) throw DataError("roc_points: empty score list");
  std::sort(genuine.begin(), genuine.end());
  std::sort(impostor.begin(), impostor.end());
  std::vector<std::pair<double, double>> pts;
  const double n_imp = static_cast<double>(impostor.size());
  const double n_gen = static_cast<double>(genuine.size());
  std::size_t gi = 0;
  for (std::size_t i = 0; i < impostor.size(); ++i) {
    if (i > 0 && impostor[i] == impostor[i - 1]) continue;
    const double thr = impostor[i];
    while (gi < genuine.size() && genuine[gi] < thr) ++gi;
    pts.emplace_back(static_cast<double>(i) / n_imp, static_cast<double>(gi) / n_gen);
  }
  pts.emplace_back(1.0, 1.0);
  return pts;
}

struct EvalCounts {
  int probes = 0;
  int gallery = 0;
  int counted = 0;    // probes scored in the CMC
  int confusers = 0;  // probes contributing impostor scores only
  long long genuine_pairs = 0;
  long long impostor_pairs = 0;
};

struct EvalReport {
  std::vector<double> cmc_accuracy;  // rank 1..G
  std::vector<std::pair<int, double>> rank_accuracy;     // requested ranks
  std::vector<std::pair<double, double>> tar_far;        // requested FAR levels
  std::vector<std::pair<double, double>> roc;
  EvalCounts counts;
};

inline EvalReport run_eval(const Protocol& protocol, const std::vector<int>& ranks,
                           const std::vector<double>& far_levels) {
  const MatX scores = score_matrix(protocol);
  std::map<std::string, int> column;
  for (std::size_t g = 0; g < protocol.gallery.size(); ++g)
    column[protocol.gallery[g].subject] = static_cast<int>(g);

  std::vector<int> truth(protocol.probes.size(), -1);
  std::vector<double> genuine, impostor;
  for (std::size_t p = 0; p < protocol.probes.size(); ++p) {
    const auto it = column.find(protocol.probes[p].subject);
    truth[p] = it == column.end() ? -1 : it->second;
    for (Eigen::Index g = 0; g < scores.cols(); ++g) {
      if (truth[p] == static_cast<int>(g))
        genuine.push_back(scores(static_cast<Eigen::Index>(p), g));
      else
        impostor.push_back(scores(static_cast<Eigen::Index>(p), g));
    }
  }

  const CmcResult cmc_res = cmc(scores, truth);
  EvalReport report;
  report.cmc_accuracy = cmc_res.accuracy;
  for (int k : ranks) {
    const std::size_t idx = static_cast<std::size_t>(std::min<long long>(
        std::max(1, k), static_cast<long long>(cmc_res.accuracy.size())));
    report.rank_accuracy.emplace_back(k, cmc_res.accuracy[idx - 1]);
  }
  for (double far : far_levels) report.tar_far.emplace_back(far, tar_at_far(genuine, impostor, far));
  report.roc = roc_points(genuine, impostor);
  report.counts.probes = static_cast<int>(protocol.probes.size());
  report.counts.gallery = static_cast<int>(protocol.gallery.size());
  report.counts.counted = cmc_res.counted;
  report.counts.confusers = cmc_res.excluded;
  report.counts.genuine_pairs = static_cast<long long>(genuine.size());
  report.counts.impostor_pairs = static_cast<long long>(impostor.size());
  return report;
}

}  // namespace bodyid
