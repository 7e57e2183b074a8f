#include <exception>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shade/metrics.hpp"
#include "shade/pipeline.hpp"
#include "shade/toolkit.hpp"

namespace shade {

namespace {

ClusterAssignment to_assignment(const std::vector<int>& labels) {
  // Remap arbitrary label values to contiguous 0..k-1 by first appearance.
  ClusterAssignment out;
  out.labels.reserve(labels.size());
  std::vector<int> seen;
  int noise = 0;
  for (const int l : labels) {
    if (l == kNoiseLabel) {
      out.labels.push_back(kNoiseLabel);
      ++noise;
      continue;
    }
    auto it = std::find(seen.begin(), seen.end(), l);
    if (it == seen.end()) {
      seen.push_back(l);
      it = std::prev(seen.end());
    }
    out.labels.push_back(static_cast<int>(it - seen.begin()));
  }
  out.k = static_cast<int>(seen.size());
  out.noise_ratio = labels.empty()
                        ? 0.0
                        : static_cast<double>(noise) /
                              static_cast<double>(labels.size());
  return out;
}

struct GenerateArgs {
  std::string dataset = "rings_s";
  std::string out;
  int n = 1500;
  std::uint64_t seed = 0;
  double noise_sigma = 0.05;
  int k = 3;
  int d = 10;
  double spread = 1.0;
  double noise_ratio = 0.0;
};

int run_generate(const GenerateArgs& args) {
  Dataset data;
  if (args.dataset == "rings_s") {
    data = gen_rings_s(args.n, args.noise_sigma, args.seed);
  } else if (args.dataset == "blobs") {
    data = gen_blobs_noise(args.k, args.n, args.d, args.spread,
                           args.noise_ratio, args.seed);
  } else {
    std::cerr << "unknown dataset '" << args.dataset
              << "' (expected rings_s or blobs)\n";
    return 1;
  }
  save_csv(data, args.out);
  std::cout << "wrote " << data.n() << " points, " << data.dim()
            << " features to " << args.out << '\n';
  return 0;
}

struct FitArgs {
  std::string input;
  std::string out;
  std::optional<std::string> label_column;
  TrainConfig config;
  std::string znorm = "feature";
  bool rescale_ddc = false;
  int pretrain_epochs = 0;
  bool no_trees = false;
  std::string save_model_path;
};

int run_fit(const FitArgs& args) {
  const Dataset data = load_csv(args.input, args.label_column);
  ShadeOptions options;
  options.norm_mode =
      args.znorm == "global" ? NormMode::kGlobal : NormMode::kFeatureWise;
  options.rescale_ddc = args.rescale_ddc;
  options.pretrain_epochs = args.pretrain_epochs;
  options.keep_trees = !args.no_trees;

  const ShadeResult result = shade_fit(data.x, args.config, options);
  save_shade_result(result, args.out,
                    data.has_labels() ? &*data.labels : nullptr);
  if (!args.save_model_path.empty()) {
    std::ofstream os(args.save_model_path);
    if (!os) {
      throw std::runtime_error("cannot write " + args.save_model_path);
    }
    save_model(result.model, os);
  }

  std::cout << "n=" << data.n() << " k_detected=" << result.assignment.k
            << " noise_ratio=" << result.assignment.noise_ratio << '\n';
  for (const auto& [stage, secs] : result.timings_s) {
    std::cout << "  " << stage << ": " << secs << " s\n";
  }
  std::cout << "results in " << args.out << '\n';
  return 0;
}

struct EvaluateArgs {
  std::string labels;
  std::string truth;
  std::string embedding;
  std::string out = "metrics.json";
};

int run_evaluate(const EvaluateArgs& args) {
  const std::vector<int> predicted = load_labels_csv(args.labels);
  const std::vector<int> truth = load_labels_csv(args.truth);
  const ClusterAssignment assignment = to_assignment(predicted);

  std::optional<Matrix> embedding;
  if (!args.embedding.empty()) {
    embedding = load_csv(args.embedding).x;
  }
  const MetricBundle bundle = evaluate_with_noise(
      truth, assignment, embedding ? &*embedding : nullptr);

  nlohmann::json metrics;
  metrics["ari"] = bundle.ari_all;
  metrics["nmi"] = bundle.nmi_all;
  metrics["ari_nonnoise"] =
      bundle.ari_nonnoise ? nlohmann::json(*bundle.ari_nonnoise) : nullptr;
  metrics["nmi_nonnoise"] =
      bundle.nmi_nonnoise ? nlohmann::json(*bundle.nmi_nonnoise) : nullptr;
  metrics["ari_1nn"] =
      bundle.ari_1nn ? nlohmann::json(*bundle.ari_1nn) : nullptr;
  metrics["nmi_1nn"] =
      bundle.nmi_1nn ? nlohmann::json(*bundle.nmi_1nn) : nullptr;
  metrics["k_detected"] = bundle.k_detected;
  metrics["noise_ratio"] = bundle.noise_ratio;

  std::ofstream os(args.out);
  if (!os) throw std::runtime_error("cannot write " + args.out);
  os << metrics.dump(2) << '\n';
  std::cout << "ari=" << bundle.ari_all << " nmi=" << bundle.nmi_all
            << " -> " << args.out << '\n';
  return 0;
}

struct CutArgs {
  std::string tree;
  double epsilon = 0.0;
  int mu = 5;
  std::string out;
};

int run_cut(const CutArgs& args) {
  std::ifstream is(args.tree);
  if (!is) throw std::runtime_error("cannot open " + args.tree);
  const DcTree tree = load_dc_tree_dump(is);
  const ClusterAssignment cut = cut_at_epsilon(tree, args.epsilon, args.mu);
  save_labels_csv(cut.labels, args.out);
  std::cout << "k=" << cut.k << " noise_ratio=" << cut.noise_ratio << " -> "
            << args.out << '\n';
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"density-connectivity preserving autoencoder clustering"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate", "write a synthetic dataset");
  generate->add_option("--dataset", gen.dataset, "rings_s or blobs")
      ->capture_default_str();
  generate->add_option("--out", gen.out, "output CSV path")->required();
  generate->add_option("--n", gen.n, "number of points")->capture_default_str();
  generate->add_option("--seed", gen.seed, "RNG seed")->capture_default_str();
  generate->add_option("--noise-sigma", gen.noise_sigma,
                       "jitter sigma (rings_s)")
      ->capture_default_str();
  generate->add_option("--k", gen.k, "cluster count (blobs)")
      ->capture_default_str();
  generate->add_option("--d", gen.d, "dimensionality (blobs)")
      ->capture_default_str();
  generate->add_option("--spread", gen.spread, "cluster stddev (blobs)")
      ->capture_default_str();
  generate->add_option("--noise-ratio", gen.noise_ratio,
                       "uniform noise fraction (blobs)")
      ->capture_default_str();

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "train and cluster a CSV dataset");
  fit_cmd->add_option("--input", fit.input, "input CSV")->required();
  std::string label_column;
  auto* label_opt = fit_cmd->add_option(
      "--label-column", label_column,
      "ground-truth column (name or 0-based index), used for metrics.json");
  fit_cmd->add_option("--out", fit.out, "output directory")->required();
  fit_cmd->add_option("--mu", fit.config.mu, "neighborhood size")
      ->capture_default_str();
  fit_cmd->add_option("--batch-size", fit.config.batch_size, "batch size")
      ->capture_default_str();
  fit_cmd->add_option("--embed-dim", fit.config.embed_dim, "embedding size")
      ->capture_default_str();
  fit_cmd->add_option("--epochs", fit.config.epochs, "training epochs")
      ->capture_default_str();
  fit_cmd->add_option("--learning-rate", fit.config.learning_rate,
                      "Adam learning rate")
      ->capture_default_str();
  fit_cmd->add_option("--lambda-rec", fit.config.lambda_rec,
                      "reconstruction loss weight")
      ->capture_default_str();
  fit_cmd->add_option("--lambda-d", fit.config.lambda_d,
                      "density loss weight")
      ->capture_default_str();
  fit_cmd->add_option("--seed", fit.config.seed, "RNG seed")
      ->capture_default_str();
  fit_cmd
      ->add_option("--hidden-dims", fit.config.hidden_dims,
                   "hidden layer sizes, comma separated")
      ->delimiter(',')
      ->capture_default_str();
  fit_cmd
      ->add_option("--dense-cache-threshold", fit.config.dense_cache_threshold,
                   "max n for the dense dc-distance cache")
      ->capture_default_str();
  fit_cmd->add_option("--znorm", fit.znorm, "feature or global")
      ->capture_default_str();
  fit_cmd->add_flag("--rescale-ddc", fit.rescale_ddc,
                    "match dc distances to the initial embedding scale");
  fit_cmd->add_option("--pretrain-epochs", fit.pretrain_epochs,
                      "reconstruction-only warm-up epochs")
      ->capture_default_str();
  fit_cmd->add_flag("--no-trees", fit.no_trees, "skip tree dump files");
  fit_cmd->add_option("--save-model", fit.save_model_path,
                      "also write a model checkpoint");

  EvaluateArgs eval;
  auto* eval_cmd =
      app.add_subcommand("evaluate", "score predicted labels against truth");
  eval_cmd->add_option("--labels", eval.labels, "predicted labels CSV")
      ->required();
  eval_cmd->add_option("--truth", eval.truth, "ground-truth labels CSV")
      ->required();
  eval_cmd->add_option("--embedding", eval.embedding,
                       "embedding CSV enabling the 1nn views");
  eval_cmd->add_option("--out", eval.out, "metrics JSON path")
      ->capture_default_str();

  CutArgs cut;
  auto* cut_cmd =
      app.add_subcommand("cut", "threshold a dc-tree dump at epsilon");
  cut_cmd->add_option("--tree", cut.tree, "dc-tree dump file")->required();
  cut_cmd->add_option("--epsilon", cut.epsilon, "cut height")->required();
  cut_cmd->add_option("--mu", cut.mu, "minimum cluster size")
      ->capture_default_str();
  cut_cmd->add_option("--out", cut.out, "labels CSV path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message/usage to stderr
    return 1;
  }

  try {
    if (*generate) return run_generate(gen);
    if (*fit_cmd) {
      if (*label_opt) fit.label_column = label_column;
      return run_fit(fit);
    }
    if (*eval_cmd) return run_evaluate(eval);
    if (*cut_cmd) return run_cut(cut);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}

}  // namespace shade
