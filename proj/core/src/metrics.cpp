#include "shade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace shade {

namespace {

std::vector<int> compact_ids(const std::vector<int>& labels, int& count) {
  std::unordered_map<int, int> map;
  std::vector<int> ids(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto it =
        map.try_emplace(labels[i], static_cast<int>(map.size())).first;
    ids[i] = it->second;
  }
  count = static_cast<int>(map.size());
  return ids;
}

double pairs2(double m) { return m * (m - 1.0) / 2.0; }

void check_inputs(const std::vector<int>& a, const std::vector<int>& b,
                  const char* what) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(what) +
                                ": labelings differ in length");
  }
  if (a.empty()) {
    throw std::invalid_argument(std::string(what) + ": empty labelings");
  }
  for (const auto* v : {&a, &b}) {
    if (std::find(v->begin(), v->end(), kNoiseLabel) != v->end()) {
      throw std::invalid_argument(
          std::string(what) +
          ": noise label present; resolve noise first (see evaluate_with_noise)");
    }
  }
}

}  // namespace

ContingencyTable contingency_table(const std::vector<int>& labels_a,
                                   const std::vector<int>& labels_b) {
  if (labels_a.size() != labels_b.size()) {
    throw std::invalid_argument("contingency_table: length mismatch");
  }
  int r = 0, c = 0;
  const auto ids_a = compact_ids(labels_a, r);
  const auto ids_b = compact_ids(labels_b, c);
  ContingencyTable t;
  t.cells.assign(r, std::vector<long long>(c, 0));
  t.row_sums.assign(r, 0);
  t.col_sums.assign(c, 0);
  t.total = static_cast<long long>(labels_a.size());
  for (std::size_t i = 0; i < labels_a.size(); ++i) {
    t.cells[ids_a[i]][ids_b[i]] += 1;
    t.row_sums[ids_a[i]] += 1;
    t.col_sums[ids_b[i]] += 1;
  }
  return t;
}

double ari(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  check_inputs(labels_a, labels_b, "ari");
  const ContingencyTable t = contingency_table(labels_a, labels_b);

  double index = 0.0;
  for (const auto& row : t.cells) {
    for (const long long cell : row) index += pairs2(static_cast<double>(cell));
  }
  double sum_a = 0.0, sum_b = 0.0;
  for (const long long s : t.row_sums) sum_a += pairs2(static_cast<double>(s));
  for (const long long s : t.col_sums) sum_b += pairs2(static_cast<double>(s));

  const double all_pairs = pairs2(static_cast<double>(t.total));
  const double expected = all_pairs > 0.0 ? sum_a * sum_b / all_pairs : 0.0;
  const double max_index = 0.5 * (sum_a + sum_b);
  const double denom = max_index - expected;
  // Both labelings trivial (all one cluster, or all singletons): perfect
  // agreement by convention.
  if (denom == 0.0) return 1.0;
  return (index - expected) / denom;
}

double nmi(const std::vector<int>& labels_a, const std::vector<int>& labels_b) {
  check_inputs(labels_a, labels_b, "nmi");
  const ContingencyTable t = contingency_table(labels_a, labels_b);
  const double n = static_cast<double>(t.total);

  auto entropy = [n](const std::vector<long long>& sums) {
    double h = 0.0;
    for (const long long s : sums) {
      if (s == 0) continue;
      const double p = static_cast<double>(s) / n;
      h -= p * std::log(p);
    }
    return h;
  };
  const double h_a = entropy(t.row_sums);
  const double h_b = entropy(t.col_sums);
  if (h_a == 0.0 && h_b == 0.0) return 1.0;  // two trivial labelings agree

  double mi = 0.0;
  for (std::size_t i = 0; i < t.cells.size(); ++i) {
    for (std::size_t j = 0; j < t.cells[i].size(); ++j) {
      const long long cell = t.cells[i][j];
      if (cell == 0) continue;
      const double pij = static_cast<double>(cell) / n;
      const double pi = static_cast<double>(t.row_sums[i]) / n;
      const double qj = static_cast<double>(t.col_sums[j]) / n;
      mi += pij * std::log(pij / (pi * qj));
    }
  }
  const double value = mi / (0.5 * (h_a + h_b));
  return std::clamp(value, 0.0, 1.0);
}

MetricBundle evaluate_with_noise(const std::vector<int>& truth,
                                 const ClusterAssignment& assignment,
                                 const Matrix* embedding) {
  const std::size_t n = truth.size();
  if (assignment.labels.size() != n) {
    throw std::invalid_argument("evaluate_with_noise: length mismatch");
  }
  MetricBundle out;
  out.k_detected = assignment.k;
  out.noise_ratio = assignment.noise_ratio;

  auto filtered = [&](const std::vector<int>& labels, bool need_label_valid) {
    std::pair<std::vector<int>, std::vector<int>> views;
    for (std::size_t i = 0; i < n; ++i) {
      if (truth[i] == kNoiseLabel) continue;
      if (need_label_valid && labels[i] == kNoiseLabel) continue;
      views.first.push_back(truth[i]);
      views.second.push_back(labels[i]);
    }
    return views;
  };

  // Scores over points that are noise in neither labeling.
  const auto nonnoise = filtered(assignment.labels, true);
  if (!nonnoise.first.empty()) {
    out.ari_nonnoise = ari(nonnoise.first, nonnoise.second);
    out.nmi_nonnoise = nmi(nonnoise.first, nonnoise.second);
  }

  // Scores treating detected noise as one extra cluster.
  std::vector<int> as_extra = assignment.labels;
  for (auto& l : as_extra) {
    if (l == kNoiseLabel) l = assignment.k;
  }
  const auto all_view = filtered(as_extra, false);
  if (all_view.first.empty()) {
    throw std::invalid_argument(
        "evaluate_with_noise: ground truth has no non-noise points");
  }
  out.ari_all = ari(all_view.first, all_view.second);
  out.nmi_all = nmi(all_view.first, all_view.second);

  // Scores after nearest-cluster reassignment of detected noise.
  if (embedding != nullptr) {
    const ClusterAssignment reassigned =
        assign_noise_1nn(*embedding, assignment);
    const auto view = filtered(reassigned.labels, true);
    out.ari_1nn = ari(view.first, view.second);
    out.nmi_1nn = nmi(view.first, view.second);
  }
  return out;
}

}  // namespace shade
