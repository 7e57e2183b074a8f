#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "shade/dataset.hpp"
#include "shade/dc_core.hpp"

namespace shade {

enum class Activation { kLinear, kRelu };

struct Layer {
  Matrix w;  // out x in
  Vector b;  // out
  Activation act = Activation::kLinear;
};

struct LayerGrad {
  Matrix w;
  Vector b;
};

struct AdamMoments {
  Matrix m_w, v_w;
  Vector m_b, v_b;
};

/// Symmetric feedforward autoencoder plus Adam moments. Hidden layers use a
/// rectifier; the embedding and reconstruction layers are linear.
struct AutoencoderState {
  std::vector<Layer> encoder;
  std::vector<Layer> decoder;
  std::vector<AdamMoments> moments;  // encoder layers first, then decoder
  std::int64_t step = 0;

  int input_dim() const { return static_cast<int>(encoder.front().w.cols()); }
  int embed_dim() const { return static_cast<int>(encoder.back().w.rows()); }
};

struct Gradients {
  std::vector<LayerGrad> encoder;
  std::vector<LayerGrad> decoder;
};

struct LossValues {
  double reconstruction = 0.0;
  double density = 0.0;
  double total = 0.0;
};

struct TrainConfig {
  int mu = 5;
  int batch_size = 500;
  int embed_dim = 10;
  int epochs = 100;
  double learning_rate = 1e-3;
  double lambda_rec = 1.0;
  double lambda_d = 1.0;
  std::vector<int> hidden_dims = {256, 128};
  std::uint64_t seed = 0;
  int dense_cache_threshold = 2048;
};

struct EpochLoss {
  double reconstruction = 0.0;
  double density = 0.0;
  double total = 0.0;
};

struct TrainResult {
  Matrix embedding;                // n x embed_dim, full dataset
  std::vector<EpochLoss> history;  // one entry per epoch
};

/// Weights drawn uniformly from [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases
/// zero; deterministic in `seed`. With empty hidden_dims the encoder is a
/// single linear layer input -> embed.
AutoencoderState init_autoencoder(int input_dim,
                                  const std::vector<int>& hidden_dims,
                                  int embed_dim, std::uint64_t seed);

Matrix encode(const AutoencoderState& state, const Matrix& batch);
Matrix decode(const AutoencoderState& state, const Matrix& embedding);

/// Mean squared reconstruction error: (1/|B|) sum_i ||x_i - xhat_i||^2.
double loss_reconstruction(const Matrix& batch, const Matrix& reconstruction);

/// Density-connectivity loss: (1/|B|^2) over ordered pairs i != j of
/// (ddc(i,j) - ||z_i - z_j||)^2.
double loss_density(const Matrix& embedding, const Matrix& ddc);

/// Analytic gradients of lambda_rec * L_rec + lambda_d * L_d. Coincident
/// embedded points are handled by clamping the pair distance to 1e-12 in the
/// gradient denominator.
Gradients grad_combined(const AutoencoderState& state, const Matrix& batch,
                        const Matrix& ddc, double lambda_rec, double lambda_d,
                        LossValues* losses = nullptr);

/// Bias-corrected Adam update (beta1=0.9, beta2=0.999, eps=1e-8). Throws on
/// non-finite gradients or parameters, naming the offending block.
void adam_step(AutoencoderState& state, const Gradients& grads,
               double learning_rate);

/// Trains on shuffled batches per epoch (the final short batch is kept when
/// it has >= 2 points) and returns the full-data embedding plus per-epoch
/// losses. `dctree` must be built over the same data the batches come from;
/// it is queried but never recomputed.
TrainResult train(const Matrix& data, const DcTree& dctree,
                  const TrainConfig& config, AutoencoderState& state);

/// Versioned text checkpoint: layer dims, parameters, Adam moments and step
/// counter, written with round-trip-exact decimals.
void save_model(const AutoencoderState& state, std::ostream& os);
AutoencoderState load_model(std::istream& is);

}  // namespace shade
