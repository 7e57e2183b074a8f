#include "shade/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>

#include "shade/rng.hpp"
#include "text_io.hpp"

namespace shade {

namespace {

constexpr double kAdamBeta1 = 0.9;
constexpr double kAdamBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kDistanceClamp = 1e-12;

Matrix apply_activation(Matrix z, Activation act) {
  if (act == Activation::kRelu) return z.cwiseMax(0.0);
  return z;
}

/// Forward pass keeping every activation (index 0 is the input) for backprop.
std::vector<Matrix> forward_cached(const std::vector<Layer>& layers,
                                   const Matrix& input) {
  std::vector<Matrix> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(input);
  for (const auto& layer : layers) {
    Matrix z = (acts.back() * layer.w.transpose()).rowwise() +
               layer.b.transpose();
    acts.push_back(apply_activation(std::move(z), layer.act));
  }
  return acts;
}

/// Backpropagates d(loss)/d(output) through the stack; returns
/// d(loss)/d(input) and fills per-layer gradients.
Matrix backward(const std::vector<Layer>& layers,
                const std::vector<Matrix>& acts, Matrix d_out,
                std::vector<LayerGrad>& grads) {
  grads.resize(layers.size());
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const Layer& layer = layers[l];
    // ReLU derivative from the post-activation sign (0 at clipped units).
    if (layer.act == Activation::kRelu) {
      d_out = (acts[l + 1].array() > 0.0).select(d_out, 0.0);
    }
    grads[l].w.noalias() = d_out.transpose() * acts[l];
    grads[l].b = d_out.colwise().sum().transpose();
    if (l > 0) {
      d_out = d_out * layer.w;
    } else {
      return d_out * layer.w;
    }
  }
  return {};
}

std::vector<int> layer_chain(int input_dim, const std::vector<int>& hidden,
                             int embed_dim) {
  std::vector<int> dims;
  dims.push_back(input_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(embed_dim);
  return dims;
}

std::vector<Layer> init_stack(const std::vector<int>& dims, Rng& rng) {
  std::vector<Layer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    Layer layer;
    const int in = dims[l];
    const int out = dims[l + 1];
    layer.w.resize(out, in);
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (int r = 0; r < out; ++r) {
      for (int c = 0; c < in; ++c) {
        layer.w(r, c) = rng.uniform(-bound, bound);
      }
    }
    layer.b = Vector::Zero(out);
    layer.act =
        l + 2 < dims.size() ? Activation::kRelu : Activation::kLinear;
    layers.push_back(std::move(layer));
  }
  return layers;
}

void check_finite_input(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) +
                                ": input contains non-finite values");
  }
}

std::string block_name(bool is_encoder, std::size_t layer, const char* part) {
  return std::string(is_encoder ? "encoder" : "decoder") + " layer " +
         std::to_string(layer) + " " + part;
}

}  // namespace

AutoencoderState init_autoencoder(int input_dim,
                                  const std::vector<int>& hidden_dims,
                                  int embed_dim, std::uint64_t seed) {
  if (input_dim < 1 || embed_dim < 1 ||
      std::any_of(hidden_dims.begin(), hidden_dims.end(),
                  [](int d) { return d < 1; })) {
    throw std::invalid_argument("init_autoencoder: all dims must be >= 1");
  }
  AutoencoderState state;
  Rng rng(derive_seed(seed, 0));
  state.encoder = init_stack(layer_chain(input_dim, hidden_dims, embed_dim),
                             rng);
  std::vector<int> rev(hidden_dims.rbegin(), hidden_dims.rend());
  state.decoder = init_stack(layer_chain(embed_dim, rev, input_dim), rng);

  for (const auto* stack : {&state.encoder, &state.decoder}) {
    for (const auto& layer : *stack) {
      AdamMoments m;
      m.m_w = Matrix::Zero(layer.w.rows(), layer.w.cols());
      m.v_w = Matrix::Zero(layer.w.rows(), layer.w.cols());
      m.m_b = Vector::Zero(layer.b.size());
      m.v_b = Vector::Zero(layer.b.size());
      state.moments.push_back(std::move(m));
    }
  }
  return state;
}

Matrix encode(const AutoencoderState& state, const Matrix& batch) {
  if (batch.cols() != state.input_dim()) {
    throw std::invalid_argument("encode: batch width != input dim");
  }
  check_finite_input(batch, "encode");
  Matrix h = batch;
  for (const auto& layer : state.encoder) {
    h = apply_activation(
        Matrix((h * layer.w.transpose()).rowwise() + layer.b.transpose()),
        layer.act);
  }
  return h;
}

Matrix decode(const AutoencoderState& state, const Matrix& embedding) {
  if (embedding.cols() != state.embed_dim()) {
    throw std::invalid_argument("decode: embedding width != embed dim");
  }
  check_finite_input(embedding, "decode");
  Matrix h = embedding;
  for (const auto& layer : state.decoder) {
    h = apply_activation(
        Matrix((h * layer.w.transpose()).rowwise() + layer.b.transpose()),
        layer.act);
  }
  return h;
}

double loss_reconstruction(const Matrix& batch, const Matrix& reconstruction) {
  if (batch.rows() != reconstruction.rows() ||
      batch.cols() != reconstruction.cols()) {
    throw std::invalid_argument("loss_reconstruction: shape mismatch");
  }
  const double b = static_cast<double>(batch.rows());
  return (batch - reconstruction).squaredNorm() / b;
}

double loss_density(const Matrix& embedding, const Matrix& ddc) {
  const Eigen::Index b = embedding.rows();
  if (ddc.rows() != b || ddc.cols() != b) {
    throw std::invalid_argument("loss_density: ddc must be |B| x |B|");
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < b; ++i) {
    for (Eigen::Index j = i + 1; j < b; ++j) {
      const double r = (embedding.row(i) - embedding.row(j)).norm();
      const double diff = ddc(i, j) - r;
      sum += 2.0 * diff * diff;  // ordered pairs (i,j) and (j,i)
    }
  }
  const double bb = static_cast<double>(b);
  return sum / (bb * bb);
}

Gradients grad_combined(const AutoencoderState& state, const Matrix& batch,
                        const Matrix& ddc, double lambda_rec, double lambda_d,
                        LossValues* losses) {
  const Eigen::Index b = batch.rows();
  if (ddc.rows() != b || ddc.cols() != b) {
    throw std::invalid_argument("grad_combined: ddc must be |B| x |B|");
  }
  check_finite_input(batch, "grad_combined");

  const auto enc_acts = forward_cached(state.encoder, batch);
  const Matrix& z = enc_acts.back();
  const auto dec_acts = forward_cached(state.decoder, z);
  const Matrix& xhat = dec_acts.back();

  const double rec = loss_reconstruction(batch, xhat);
  const double dens = loss_density(z, ddc);
  if (losses) {
    losses->reconstruction = rec;
    losses->density = dens;
    losses->total = lambda_rec * rec + lambda_d * dens;
  }

  Gradients grads;

  // Reconstruction path: d/dxhat of (1/|B|) sum ||x - xhat||^2.
  Matrix d_xhat = (2.0 * lambda_rec / static_cast<double>(b)) * (xhat - batch);
  Matrix d_z = backward(state.decoder, dec_acts, std::move(d_xhat),
                        grads.decoder);

  // Density path: d/dz_i = (1/|B|^2) sum_{j != i}
  //   -4 (ddc_ij - r_ij) (z_i - z_j) / max(r_ij, clamp).
  if (lambda_d != 0.0 && b > 1) {
    const double bb = static_cast<double>(b);
    Matrix coef = Matrix::Zero(b, b);
    for (Eigen::Index i = 0; i < b; ++i) {
      for (Eigen::Index j = i + 1; j < b; ++j) {
        const double r = (z.row(i) - z.row(j)).norm();
        const double c = -4.0 * (ddc(i, j) - r) /
                         (std::max(r, kDistanceClamp) * bb * bb);
        coef(i, j) = c;
        coef(j, i) = c;
      }
    }
    const Vector row_sums = coef.rowwise().sum();
    d_z.noalias() += lambda_d * (row_sums.asDiagonal() * z - coef * z);
  }

  backward(state.encoder, enc_acts, std::move(d_z), grads.encoder);
  return grads;
}

void adam_step(AutoencoderState& state, const Gradients& grads,
               double learning_rate) {
  if (grads.encoder.size() != state.encoder.size() ||
      grads.decoder.size() != state.decoder.size()) {
    throw std::invalid_argument("adam_step: gradient/layer count mismatch");
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(kAdamBeta1, t);
  const double bc2 = 1.0 - std::pow(kAdamBeta2, t);

  auto update = [&](auto& param, auto& m, auto& v, const auto& g,
                    const std::string& name) {
    if (!g.allFinite()) {
      throw std::runtime_error("adam_step: non-finite gradient in " + name);
    }
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.cwiseProduct(g);
    param.array() -=
        learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + kAdamEps);
    if (!param.allFinite()) {
      throw std::runtime_error("adam_step: parameters became non-finite in " +
                               name);
    }
  };

  for (std::size_t l = 0; l < state.encoder.size(); ++l) {
    AdamMoments& mom = state.moments[l];
    update(state.encoder[l].w, mom.m_w, mom.v_w, grads.encoder[l].w,
           block_name(true, l, "weights"));
    update(state.encoder[l].b, mom.m_b, mom.v_b, grads.encoder[l].b,
           block_name(true, l, "bias"));
  }
  const std::size_t off = state.encoder.size();
  for (std::size_t l = 0; l < state.decoder.size(); ++l) {
    AdamMoments& mom = state.moments[off + l];
    update(state.decoder[l].w, mom.m_w, mom.v_w, grads.decoder[l].w,
           block_name(false, l, "weights"));
    update(state.decoder[l].b, mom.m_b, mom.v_b, grads.decoder[l].b,
           block_name(false, l, "bias"));
  }
}

TrainResult train(const Matrix& data, const DcTree& dctree,
                  const TrainConfig& config, AutoencoderState& state) {
  const int n = static_cast<int>(data.rows());
  if (n != dctree.n_points) {
    throw std::invalid_argument("train: data rows != dc tree size");
  }
  if (data.cols() != state.input_dim()) {
    throw std::invalid_argument("train: data width != model input dim");
  }
  if (config.batch_size < 2) {
    throw std::invalid_argument("train: batch_size must be >= 2");
  }
  if (config.epochs < 0 || config.lambda_rec < 0.0 || config.lambda_d < 0.0) {
    throw std::invalid_argument("train: invalid config");
  }
  check_finite_input(data, "train");

  const DcDistanceOracle oracle(dctree, n <= config.dense_cache_threshold);
  Rng shuffle_rng(derive_seed(config.seed, 1));
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  result.history.reserve(config.epochs);
  Matrix batch;
  Matrix ddc;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    EpochLoss epoch_loss;
    int points_used = 0;
    for (int start = 0; start < n; start += config.batch_size) {
      const int bsz = std::min(config.batch_size, n - start);
      if (bsz < 2) break;  // a single point has no pairs, drop it
      const std::span<const int> idx(order.data() + start,
                                     static_cast<std::size_t>(bsz));
      batch.resize(bsz, data.cols());
      for (int r = 0; r < bsz; ++r) batch.row(r) = data.row(idx[r]);
      oracle.submatrix(idx, ddc);

      LossValues losses;
      const Gradients grads = grad_combined(state, batch, ddc,
                                            config.lambda_rec, config.lambda_d,
                                            &losses);
      adam_step(state, grads, config.learning_rate);

      epoch_loss.reconstruction += losses.reconstruction * bsz;
      epoch_loss.density += losses.density * bsz;
      epoch_loss.total += losses.total * bsz;
      points_used += bsz;
    }
    if (points_used > 0) {
      epoch_loss.reconstruction /= points_used;
      epoch_loss.density /= points_used;
      epoch_loss.total /= points_used;
    }
    result.history.push_back(epoch_loss);
  }

  result.embedding = encode(state, data);
  return result;
}

namespace {

void write_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      os << (c ? " " : "") << detail::format_double(m(r, c));
    }
    os << '\n';
  }
}

void write_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << (i ? " " : "") << detail::format_double(v[i]);
  }
  os << '\n';
}

void write_stack(std::ostream& os, const char* tag,
                 const std::vector<Layer>& layers) {
  os << tag << ' ' << layers.size() << '\n';
  for (const auto& layer : layers) {
    os << "layer " << layer.w.rows() << ' ' << layer.w.cols() << ' '
       << (layer.act == Activation::kRelu ? "relu" : "linear") << '\n';
    write_matrix(os, layer.w);
    write_vector(os, layer.b);
  }
}

void expect_token(std::istream& is, const std::string& want) {
  std::string got;
  if (!(is >> got) || got != want) {
    throw std::runtime_error("model checkpoint: expected '" + want +
                             "', got '" + got + "'");
  }
}

Matrix read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!(is >> m(r, c))) {
        throw std::runtime_error("model checkpoint: truncated matrix");
      }
    }
  }
  return m;
}

Vector read_vector(std::istream& is, Eigen::Index size) {
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) {
    if (!(is >> v[i])) {
      throw std::runtime_error("model checkpoint: truncated vector");
    }
  }
  return v;
}

std::vector<Layer> read_stack(std::istream& is, const char* tag) {
  expect_token(is, tag);
  std::size_t count = 0;
  if (!(is >> count)) {
    throw std::runtime_error("model checkpoint: missing layer count");
  }
  std::vector<Layer> layers(count);
  for (auto& layer : layers) {
    expect_token(is, "layer");
    Eigen::Index out = 0, in = 0;
    std::string act;
    if (!(is >> out >> in >> act) || out < 1 || in < 1) {
      throw std::runtime_error("model checkpoint: bad layer header");
    }
    layer.w = read_matrix(is, out, in);
    layer.b = read_vector(is, out);
    if (act == "relu") {
      layer.act = Activation::kRelu;
    } else if (act == "linear") {
      layer.act = Activation::kLinear;
    } else {
      throw std::runtime_error("model checkpoint: unknown activation '" + act +
                               "'");
    }
  }
  return layers;
}

}  // namespace

void save_model(const AutoencoderState& state, std::ostream& os) {
  os << "shade-model 1\n";
  os << "step " << state.step << '\n';
  write_stack(os, "encoder", state.encoder);
  write_stack(os, "decoder", state.decoder);
  os << "moments\n";
  for (const auto& mom : state.moments) {
    write_matrix(os, mom.m_w);
    write_matrix(os, mom.v_w);
    write_vector(os, mom.m_b);
    write_vector(os, mom.v_b);
  }
}

AutoencoderState load_model(std::istream& is) {
  expect_token(is, "shade-model");
  int version = 0;
  if (!(is >> version) || version != 1) {
    throw std::runtime_error("model checkpoint: unsupported version");
  }
  AutoencoderState state;
  expect_token(is, "step");
  if (!(is >> state.step)) {
    throw std::runtime_error("model checkpoint: missing step counter");
  }
  state.encoder = read_stack(is, "encoder");
  state.decoder = read_stack(is, "decoder");
  expect_token(is, "moments");
  for (const auto* stack : {&state.encoder, &state.decoder}) {
    for (const auto& layer : *stack) {
      AdamMoments mom;
      mom.m_w = read_matrix(is, layer.w.rows(), layer.w.cols());
      mom.v_w = read_matrix(is, layer.w.rows(), layer.w.cols());
      mom.m_b = read_vector(is, layer.b.size());
      mom.v_b = read_vector(is, layer.b.size());
      state.moments.push_back(std::move(mom));
    }
  }
  return state;
}

}  // namespace shade
