#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

namespace shade {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Label used for points that belong to no cluster.
inline constexpr int kNoiseLabel = -1;

/// A dataset of n points with d features, optionally carrying ground-truth
/// labels (kNoiseLabel marks true noise points in generated data).
struct Dataset {
  Matrix x;                         // n x d, row per point
  std::optional<std::vector<int>> labels;

  Eigen::Index n() const { return x.rows(); }
  Eigen::Index dim() const { return x.cols(); }
  bool has_labels() const { return labels.has_value(); }
};

}  // namespace shade
