#include "shade/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "shade/metrics.hpp"
#include "shade/rng.hpp"
#include "text_io.hpp"

namespace shade {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename Fn>
auto timed_stage(std::vector<std::pair<std::string, double>>& timings,
                 const std::string& name, Fn&& fn) {
  const auto start = Clock::now();
  try {
    auto value = fn();
    timings.emplace_back(name, seconds_since(start));
    return value;
  } catch (const std::exception& e) {
    throw std::runtime_error("shade_fit stage '" + name + "': " + e.what());
  }
}

DcTree dc_tree_of(const Matrix& data, int mu) {
  const Matrix dist = pairwise_euclidean(data);
  const DistanceContext ctx = make_distance_context(dist, mu);
  auto edges = build_mutual_reachability_mst(dist, ctx);
  return build_dc_tree(ctx.n, std::move(edges));
}

/// Mean dc distance vs mean embedded distance over a deterministic pair
/// sample, used by the optional ddc rescaling.
double ddc_scale_factor(const DcTree& tree, const Matrix& embedding,
                        std::uint64_t seed) {
  const int n = tree.n_points;
  const DcDistanceOracle oracle(tree);
  Rng rng(derive_seed(seed, 2));
  const int samples = std::min(4096, n * (n - 1) / 2);
  double sum_ddc = 0.0, sum_emb = 0.0;
  for (int s = 0; s < samples; ++s) {
    const int i = static_cast<int>(rng.uniform_index(n));
    int j = static_cast<int>(rng.uniform_index(n - 1));
    if (j >= i) ++j;
    sum_ddc += oracle(i, j);
    sum_emb += (embedding.row(i) - embedding.row(j)).norm();
  }
  if (sum_ddc <= 0.0) return 1.0;
  return sum_emb / sum_ddc;
}

}  // namespace

Normalization znormalize(const Matrix& data, NormMode mode) {
  if (data.rows() < 2) throw std::invalid_argument("znormalize: need n >= 2");
  Normalization out;
  out.mode = mode;
  if (mode == NormMode::kFeatureWise) {
    const Eigen::Index d = data.cols();
    out.means = data.colwise().mean();
    out.scales.resize(d);
    out.data.resize(data.rows(), d);
    for (Eigen::Index c = 0; c < d; ++c) {
      const Vector centered = data.col(c).array() - out.means[c];
      const double var = centered.squaredNorm() / data.rows();
      const double scale = std::sqrt(var);
      out.scales[c] = scale;
      if (scale == 0.0) {
        out.data.col(c).setZero();
      } else {
        out.data.col(c) = centered / scale;
      }
    }
  } else {
    const double mean = data.mean();
    const double var =
        (data.array() - mean).square().sum() / static_cast<double>(data.size());
    const double scale = std::sqrt(var);
    out.means = Vector::Constant(1, mean);
    out.scales = Vector::Constant(1, scale);
    if (scale == 0.0) {
      out.data = Matrix::Zero(data.rows(), data.cols());
    } else {
      out.data = ((data.array() - mean) / scale).matrix();
    }
  }
  return out;
}

ShadeResult shade_fit(const Matrix& data, const TrainConfig& config,
                      const ShadeOptions& options) {
  const int n = static_cast<int>(data.rows());
  if (n < 2 * config.mu) {
    throw std::invalid_argument("shade_fit: need n >= 2*mu");
  }
  if (!data.allFinite()) {
    throw std::invalid_argument("shade_fit: data contains non-finite values");
  }

  ShadeResult result;
  result.config = config;
  result.options = options;
  const auto total_start = Clock::now();

  const Normalization norm = timed_stage(
      result.timings_s, "znormalize",
      [&] { return znormalize(data, options.norm_mode); });

  result.input_tree = timed_stage(result.timings_s, "input_tree", [&] {
    return dc_tree_of(norm.data, config.mu);
  });

  AutoencoderState state = timed_stage(result.timings_s, "init", [&] {
    return init_autoencoder(static_cast<int>(data.cols()), config.hidden_dims,
                            config.embed_dim, config.seed);
  });

  std::vector<EpochLoss> history;
  timed_stage(result.timings_s, "train", [&] {
    const DcTree* loss_tree = &result.input_tree;
    DcTree rescaled;
    if (options.rescale_ddc) {
      const Matrix z0 = encode(state, norm.data);
      const double factor =
          ddc_scale_factor(result.input_tree, z0, config.seed);
      rescaled = result.input_tree;
      for (auto& h : rescaled.height) h *= factor;
      loss_tree = &rescaled;
    }
    if (options.pretrain_epochs > 0) {
      TrainConfig pre = config;
      pre.epochs = options.pretrain_epochs;
      pre.lambda_d = 0.0;
      auto r = train(norm.data, *loss_tree, pre, state);
      history.insert(history.end(), r.history.begin(), r.history.end());
    }
    auto r = train(norm.data, *loss_tree, config, state);
    history.insert(history.end(), r.history.begin(), r.history.end());
    result.embedding = std::move(r.embedding);
    return 0;
  });
  result.loss_history = std::move(history);
  result.model = std::move(state);

  result.embedding_tree = timed_stage(result.timings_s, "embedding_tree", [&] {
    return dc_tree_of(result.embedding, config.mu);
  });

  result.structure_tree = timed_stage(result.timings_s, "structure_tree", [&] {
    return build_structure_tree(result.embedding_tree, config.mu);
  });

  result.assignment = timed_stage(result.timings_s, "extract_clusters", [&] {
    return extract_clusters(result.structure_tree);
  });

  result.assignment_1nn = timed_stage(result.timings_s, "assign_noise_1nn", [&] {
    return assign_noise_1nn(result.embedding, result.assignment);
  });

  if (!options.keep_trees) {
    result.input_tree = DcTree{};
    result.embedding_tree = DcTree{};
  }
  result.timings_s.emplace_back("total", seconds_since(total_start));
  return result;
}

namespace {

void write_embedding_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    os << (c ? "," : "") << 'z' << c;
  }
  os << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      os << (c ? "," : "") << detail::format_double(m(r, c));
    }
    os << '\n';
  }
}

void write_labels_csv(const std::vector<int>& labels,
                      const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "point_index,label\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    os << i << ',' << labels[i] << '\n';
  }
}

nlohmann::json json_or_null(const std::optional<double>& v) {
  if (v.has_value()) return *v;
  return nullptr;
}

}  // namespace

void save_shade_result(const ShadeResult& result, const std::string& dir,
                       const std::vector<int>* truth) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  fs::create_directories(base);

  write_embedding_csv(result.embedding, base / "embedding.csv");
  write_labels_csv(result.assignment.labels, base / "labels.csv");
  write_labels_csv(result.assignment_1nn.labels, base / "labels_1nn.csv");

  {
    std::ofstream os(base / "losses.csv");
    os << "epoch,loss_rec,loss_d,loss_total\n";
    for (std::size_t e = 0; e < result.loss_history.size(); ++e) {
      const auto& l = result.loss_history[e];
      os << e << ',' << detail::format_double(l.reconstruction) << ','
         << detail::format_double(l.density) << ','
         << detail::format_double(l.total) << '\n';
    }
  }

  nlohmann::json metrics;
  metrics["k_detected"] = result.assignment.k;
  metrics["noise_ratio"] = result.assignment.noise_ratio;
  if (truth != nullptr) {
    const MetricBundle bundle =
        evaluate_with_noise(*truth, result.assignment, &result.embedding);
    metrics["ari"] = bundle.ari_all;
    metrics["nmi"] = bundle.nmi_all;
    metrics["ari_nonnoise"] = json_or_null(bundle.ari_nonnoise);
    metrics["nmi_nonnoise"] = json_or_null(bundle.nmi_nonnoise);
    metrics["ari_1nn"] = json_or_null(bundle.ari_1nn);
    metrics["nmi_1nn"] = json_or_null(bundle.nmi_1nn);
  } else {
    metrics["ari"] = nullptr;
    metrics["nmi"] = nullptr;
    metrics["ari_nonnoise"] = nullptr;
    metrics["nmi_nonnoise"] = nullptr;
    metrics["ari_1nn"] = nullptr;
    metrics["nmi_1nn"] = nullptr;
  }
  std::ofstream(base / "metrics.json") << metrics.dump(2) << '\n';

  nlohmann::json cfg;
  cfg["mu"] = result.config.mu;
  cfg["batch_size"] = result.config.batch_size;
  cfg["embed_dim"] = result.config.embed_dim;
  cfg["epochs"] = result.config.epochs;
  cfg["learning_rate"] = result.config.learning_rate;
  cfg["lambda_rec"] = result.config.lambda_rec;
  cfg["lambda_d"] = result.config.lambda_d;
  cfg["hidden_dims"] = result.config.hidden_dims;
  cfg["seed"] = result.config.seed;
  cfg["dense_cache_threshold"] = result.config.dense_cache_threshold;
  cfg["znorm"] = result.options.norm_mode == NormMode::kGlobal ? "global"
                                                               : "feature";
  cfg["rescale_ddc"] = result.options.rescale_ddc;
  cfg["pretrain_epochs"] = result.options.pretrain_epochs;
  std::ofstream(base / "config.json") << cfg.dump(2) << '\n';

  if (result.options.keep_trees && result.input_tree.n_points > 0) {
    std::ofstream it(base / "input_tree.txt");
    dump_dc_tree(result.input_tree, it);
    std::ofstream et(base / "embedding_tree.txt");
    dump_dc_tree(result.embedding_tree, et);
  }
  if (!result.structure_tree.nodes.empty()) {
    std::ofstream st(base / "structure_tree.txt");
    dump_structure_tree(result.structure_tree, st);
  }
}

}  // namespace shade
