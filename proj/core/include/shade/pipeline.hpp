#pragma once

#include <string>
#include <utility>
#include <vector>

#include "shade/dataset.hpp"
#include "shade/dc_core.hpp"
#include "shade/hierarchy.hpp"
#include "shade/neuralnet.hpp"

namespace shade {

enum class NormMode { kFeatureWise, kGlobal };

struct Normalization {
  Matrix data;    // normalized copy
  Vector means;   // per feature, or a single entry for global mode
  Vector scales;  // population standard deviations; 0 marks a constant column
  NormMode mode = NormMode::kFeatureWise;
};

/// Centers to mean 0 and scales to unit population variance, feature-wise or
/// with one global mean/scale. Zero-variance columns map to all-zeros.
Normalization znormalize(const Matrix& data, NormMode mode);

struct ShadeOptions {
  NormMode norm_mode = NormMode::kFeatureWise;
  // Scales the dc distances fed to the loss so their mean matches the mean
  // pairwise distance of the initial embedding. Off by default.
  bool rescale_ddc = false;
  // Reconstruction-only warm-up epochs before combined training. Off by
  // default; exists for parity experiments.
  int pretrain_epochs = 0;
  bool keep_trees = true;  // retain the full trees in the result for dumps
};

struct ShadeResult {
  Matrix embedding;
  ClusterAssignment assignment;
  ClusterAssignment assignment_1nn;
  DcTree input_tree;
  DcTree embedding_tree;
  StructureTree structure_tree;
  std::vector<EpochLoss> loss_history;
  AutoencoderState model;
  TrainConfig config;
  ShadeOptions options;
  std::vector<std::pair<std::string, double>> timings_s;  // per stage
};

/// Full run: znormalize -> dc tree on the input -> train -> embed -> dc tree
/// on the embedding (same mu) -> structure tree -> extract clusters -> 1nn
/// noise reassignment. A stage failure rethrows with the stage name attached.
ShadeResult shade_fit(const Matrix& data, const TrainConfig& config,
                      const ShadeOptions& options = {});

/// Persists a result directory: embedding.csv, labels.csv, labels_1nn.csv,
/// losses.csv, metrics.json, config.json and, when trees were kept,
/// input_tree.txt / embedding_tree.txt / structure_tree.txt. metrics.json
/// carries ground-truth scores only when `truth` is given.
void save_shade_result(const ShadeResult& result, const std::string& dir,
                       const std::vector<int>* truth = nullptr);

}  // namespace shade
