#pragma once

#include <optional>
#include <vector>

#include "shade/dataset.hpp"
#include "shade/hierarchy.hpp"

namespace shade {

/// Co-occurrence counts between two labelings plus marginals.
struct ContingencyTable {
  std::vector<std::vector<long long>> cells;  // r x c
  std::vector<long long> row_sums;
  std::vector<long long> col_sums;
  long long total = 0;
};

ContingencyTable contingency_table(const std::vector<int>& labels_a,
                                   const std::vector<int>& labels_b);

/// Adjusted Rand index in [-1, 1]. Inputs must be noise-free (use
/// evaluate_with_noise for assignments that may contain the noise label).
/// When both labelings are trivial the degenerate denominator is resolved
/// to 1.0.
double ari(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

/// Normalized mutual information in [0, 1]; base-e entropies normalized by
/// their arithmetic mean, 0*log 0 := 0. Two trivial labelings give 1.0.
double nmi(const std::vector<int>& labels_a, const std::vector<int>& labels_b);

/// Noise-aware metric bundle. `nonnoise` views are computed on the points
/// that are noise in neither labeling; `after_1nn` views first reassign the
/// assignment's noise points via assign_noise_1nn on `embedding` (and then
/// restrict to points with valid ground truth). Plain `all_points` scores
/// treat detected noise as one extra cluster.
struct MetricBundle {
  std::optional<double> ari_nonnoise;
  std::optional<double> nmi_nonnoise;
  std::optional<double> ari_1nn;
  std::optional<double> nmi_1nn;
  double ari_all = 0.0;
  double nmi_all = 0.0;
  int k_detected = 0;
  double noise_ratio = 0.0;
};

MetricBundle evaluate_with_noise(const std::vector<int>& truth,
                                 const ClusterAssignment& assignment,
                                 const Matrix* embedding = nullptr);

}  // namespace shade
