// Command-line harness: training, evaluation, ablations, loss-weight sweep
// and gradient checks for the expansion-squeeze-excitation fusion network.
//
// Exit codes: 0 success, 1 data/runtime error, 2 usage error.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "esefn/checkpoint.hpp"
#include "esefn/datagen.hpp"
#include "esefn/error.hpp"
#include "esefn/experiment.hpp"
#include "esefn/feature_io.hpp"
#include "esefn/ops.hpp"
#include "esefn/trainer.hpp"

namespace fs = std::filesystem;
using namespace esefn;

namespace {

constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct DataFlags {
  std::string synthetic;
  std::string rgb_features;
  std::string skel_features;
  double noise = 0.1;
  std::size_t samples_per_class = 100;
  double test_fraction = 0.25;
};

struct ModelFlags {
  std::size_t fused_dim = 16;
  double alpha = 0.7;
  double beta = 0.3;
};

struct Flags {
  DataFlags data;
  ModelFlags model;
  OptimConfig optim;
  std::string out = ".";
  std::string checkpoint;
  std::string variants = "all";
  std::vector<double> alphas = kDefaultSweepAlphas;
  std::vector<double> betas = kDefaultSweepBetas;
  double tolerance = 1e-4;
  double eps = 1e-6;
  std::size_t classes = 4;
  std::size_t batch = 4;
  std::string inject_fault;
};

void add_data_flags(CLI::App* cmd, Flags& f) {
  auto* syn = cmd->add_option("--synthetic", f.data.synthetic, "Generate a synthetic dataset")
                  ->check(CLI::IsMember({"xor"}));
  auto* rgb = cmd->add_option("--rgb-features", f.data.rgb_features, "RGB feature CSV");
  auto* skel = cmd->add_option("--skel-features", f.data.skel_features, "Skeleton feature CSV");
  syn->excludes(rgb)->excludes(skel);
  rgb->needs(skel);
  skel->needs(rgb);
  cmd->add_option("--noise", f.data.noise, "Synthetic noise sigma")->capture_default_str();
  cmd->add_option("--samples-per-class", f.data.samples_per_class, "Synthetic samples per class")
      ->capture_default_str();
  cmd->add_option("--test-fraction", f.data.test_fraction, "Held-out fraction per class")
      ->capture_default_str();
  cmd->add_option("--seed", f.optim.seed, "Seed for data, init and shuffling")
      ->capture_default_str();
}

void add_train_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--d", f.model.fused_dim, "Fused feature dimension")->capture_default_str();
  cmd->add_option("--epochs", f.optim.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--batch", f.optim.batch_size, "Batch size")->capture_default_str();
  cmd->add_option("--lr", f.optim.learning_rate, "Learning rate")->capture_default_str();
  cmd->add_option("--momentum", f.optim.momentum, "SGD momentum")->capture_default_str();
  cmd->add_option("--decay", f.optim.weight_decay, "Weight decay")->capture_default_str();
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
}

void add_loss_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--alpha", f.model.alpha, "Fused-loss weight")->capture_default_str();
  cmd->add_option("--beta", f.model.beta, "Min-branch weight")->capture_default_str();
}

TrainTestSplit load_data(const Flags& f) {
  FeatureSet data;
  if (!f.data.synthetic.empty()) {
    SynthSpec spec;
    spec.noise_sigma = f.data.noise;
    spec.samples_per_class = f.data.samples_per_class;
    spec.seed = f.optim.seed;
    data = generate_xor_pair(spec);
  } else if (!f.data.rgb_features.empty()) {
    data = read_features(f.data.rgb_features, f.data.skel_features);
  } else {
    throw UsageError("one of --synthetic or --rgb-features/--skel-features is required");
  }
  return split_train_test(data, f.data.test_fraction);
}

FusionConfig base_config(const Flags& f, const FeatureSet& data) {
  FusionConfig c;
  c.rgb_dim = data.rgb_dim;
  c.skeleton_dim = data.skeleton_dim;
  c.classes = data.classes;
  c.fused_dim = f.model.fused_dim;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

fs::path output_dir(const Flags& f) {
  fs::path dir(f.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void print_accuracy(const HeadAccuracy& acc) {
  std::printf("test accuracy: rgb=%.4f skeleton=%.4f fused=%.4f\n", acc.rgb, acc.skeleton,
              acc.fused);
}

int cmd_train(const Flags& f) {
  const TrainTestSplit data = load_data(f);
  const LossWeights weights(f.model.alpha, f.model.beta);
  Rng init_rng(f.optim.seed);
  EseFnParams params(base_config(f, data.train), init_rng);
  const TrainReport report = train(params, data.train, data.test, f.optim, weights);

  const fs::path dir = output_dir(f);
  write_text(dir / "report.csv", format_report_csv(report));
  save_checkpoint(params, dir / "checkpoint.bin");
  const auto& last = report.epochs.back();
  std::printf("epoch %zu: l_total=%.6f train_acc=%.4f\n", last.epoch, last.l_total,
              last.train_accuracy);
  print_accuracy(report.test);
  std::printf("wrote %s and %s\n", (dir / "report.csv").c_str(), (dir / "checkpoint.bin").c_str());
  return 0;
}

int cmd_eval(const Flags& f) {
  const EseFnParams params = load_checkpoint(f.checkpoint);
  const TrainTestSplit data = load_data(f);
  const auto& c = params.config();
  if (data.test.rgb_dim != c.rgb_dim || data.test.skeleton_dim != c.skeleton_dim ||
      data.test.classes != c.classes) {
    throw InputError("dataset dims (rgb=" + std::to_string(data.test.rgb_dim) +
                     ", skeleton=" + std::to_string(data.test.skeleton_dim) +
                     ", classes=" + std::to_string(data.test.classes) +
                     ") do not match checkpoint (rgb=" + std::to_string(c.rgb_dim) +
                     ", skeleton=" + std::to_string(c.skeleton_dim) +
                     ", classes=" + std::to_string(c.classes) + ")");
  }
  print_accuracy(evaluate(params, data.test));
  return 0;
}

int cmd_ablate(const Flags& f) {
  const TrainTestSplit data = load_data(f);
  const auto variants = parse_variant_list(f.variants);
  const FusionConfig base = base_config(f, data.train);
  const LossWeights weights(f.model.alpha, f.model.beta);
  const fs::path dir = output_dir(f);

  std::vector<VariantResult> results;
  std::printf("%-8s %4s %5s %5s %5s %3s %4s %9s\n", "variant", "rgb", "skel", "mnet", "cnet",
              "ml", "exp", "test_acc");
  for (const auto& v : variants) {
    results.push_back(run_variant(v, data, base, f.optim, weights));
    auto mark = [](bool b) { return b ? "x" : "-"; };
    std::printf("%-8s %4s %5s %5s %5s %3s %4s %9.4f\n", std::string(v.id).c_str(),
                mark(v.uses_rgb), mark(v.uses_skeleton), mark(v.uses_mnet), mark(v.uses_cnet),
                mark(v.uses_ml), mark(v.uses_expansion), results.back().accuracy);
    std::fflush(stdout);
  }
  write_text(dir / "ablation.csv", format_ablation_csv(results));
  return 0;
}

int cmd_sweep(const Flags& f) {
  const TrainTestSplit data = load_data(f);
  const FusionConfig base = base_config(f, data.train);
  const fs::path dir = output_dir(f);
  const auto cells = run_sweep(f.alphas, f.betas, data, base, f.optim);
  for (const auto& c : cells) {
    if (c.skipped) {
      std::printf("alpha=%.2f beta=%.2f skipped\n", c.alpha, c.beta);
    } else {
      std::printf("alpha=%.2f beta=%.2f test_acc=%.4f\n", c.alpha, c.beta, c.accuracy);
    }
  }
  write_text(dir / "sweep.csv", format_sweep_csv(cells));
  return 0;
}

int cmd_gradcheck(const Flags& f) {
  if (f.inject_fault == "conv-sign") testing::set_conv1d_weight_grad_sign_flip(true);
  const GradcheckProblem problem =
      make_gradcheck_problem(f.optim.seed, f.model.fused_dim, f.classes, f.batch);
  const GradcheckReport report = gradient_check(problem.params, problem.batch,
                                                LossWeights(f.model.alpha, f.model.beta), f.eps,
                                                f.tolerance);
  testing::set_conv1d_weight_grad_sign_flip(false);
  for (const auto& e : report.entries) {
    std::printf("%-4s %-28s max_rel_err=%.3e\n", e.passed ? "PASS" : "FAIL", e.name.c_str(),
                e.max_relative_error);
  }
  std::printf("worst max_rel_err=%.3e tolerance=%.1e -> %s\n", report.worst(), f.tolerance,
              report.all_passed() ? "PASS" : "FAIL");
  return report.all_passed() ? 0 : kExitData;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Expansion-squeeze-excitation fusion network experiments"};
  app.require_subcommand(1);
  Flags f;

  auto* train_cmd = app.add_subcommand("train", "Train the full model; write report.csv and checkpoint.bin");
  add_data_flags(train_cmd, f);
  add_train_flags(train_cmd, f);
  add_loss_flags(train_cmd, f);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on the held-out split");
  add_data_flags(eval_cmd, f);
  eval_cmd->add_option("--checkpoint", f.checkpoint, "Checkpoint file")->required();

  auto* ablate_cmd = app.add_subcommand("ablate", "Run ablation variants B1..B7, A1..A6");
  add_data_flags(ablate_cmd, f);
  add_train_flags(ablate_cmd, f);
  add_loss_flags(ablate_cmd, f);
  ablate_cmd->add_option("--variants", f.variants, "Comma-separated variant ids or 'all'")
      ->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "Grid over loss weights alpha, beta");
  add_data_flags(sweep_cmd, f);
  add_train_flags(sweep_cmd, f);
  sweep_cmd->add_option("--alphas", f.alphas, "Alpha grid")->delimiter(',');
  sweep_cmd->add_option("--betas", f.betas, "Beta grid")->delimiter(',');

  auto* grad_cmd = app.add_subcommand("gradcheck", "Backward vs. finite differences");
  grad_cmd->add_option("--seed", f.optim.seed, "Model/batch seed")->capture_default_str();
  grad_cmd->add_option("--d", f.model.fused_dim, "Fused feature dimension")->capture_default_str();
  grad_cmd->add_option("--classes", f.classes, "Class count")->capture_default_str();
  grad_cmd->add_option("--batch", f.batch, "Batch size")->capture_default_str();
  grad_cmd->add_option("--tolerance", f.tolerance, "Max relative error")->capture_default_str();
  grad_cmd->add_option("--eps", f.eps, "Finite-difference step")->capture_default_str();
  add_loss_flags(grad_cmd, f);
  grad_cmd->add_option("--inject-fault", f.inject_fault, "Self-test fault")
      ->check(CLI::IsMember({"conv-sign"}))
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*train_cmd) return cmd_train(f);
    if (*eval_cmd) return cmd_eval(f);
    if (*ablate_cmd) return cmd_ablate(f);
    if (*sweep_cmd) return cmd_sweep(f);
    if (*grad_cmd) return cmd_gradcheck(f);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
