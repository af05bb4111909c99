#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "esefn/datagen.hpp"
#include "esefn/fusion.hpp"
#include "esefn/trainer.hpp"

namespace esefn {

// ---------------------------------------------------------------------------
// Ablations

/// One row of the component ablation (B1..B7) or the SE-vs-ESE ablation
/// (A1..A6). `uses_mnet` / `uses_cnet` mark whether the modal / channel fusion
/// site is populated; `uses_expansion` selects expansion-squeeze-excitation
/// blocks there instead of plain squeeze-excitation.
struct AblationVariant {
  std::string_view id;
  bool uses_rgb;
  bool uses_skeleton;
  bool uses_mnet;
  bool uses_cnet;
  bool uses_ml;
  bool uses_expansion;
};

/// All variants in table order: B1..B7 then A1..A6.
std::span<const AblationVariant> ablation_variants();

/// Comma-separated ids ("B1,B3,A6") or "all". Throws InputError on unknown ids.
std::vector<AblationVariant> parse_variant_list(std::string_view list);

/// Head whose test accuracy a variant reports.
enum class ReportedHead : std::uint8_t { kRgb, kSkeleton, kFused };

struct VariantSetup {
  FusionConfig config;
  Objective objective = Objective::kMultiModal;
  LossWeights weights;
  ReportedHead head = ReportedHead::kFused;
};

/// Architecture and objective for a variant. `base` supplies dims and block
/// hyper-parameters; `ml_weights` is used when the variant has the multi-modal
/// loss, otherwise the fused head trains on plain cross-entropy (alpha=1, beta=0).
VariantSetup variant_setup(const AblationVariant& variant, const FusionConfig& base,
                           const LossWeights& ml_weights);

struct VariantResult {
  AblationVariant variant;
  TrainReport report;
  double accuracy = 0;  // reported head on the test split
};

/// Initializes a fresh model from `optim.seed` and trains it.
VariantResult run_variant(const AblationVariant& variant, const TrainTestSplit& data,
                          const FusionConfig& base, const OptimConfig& optim,
                          const LossWeights& ml_weights);

/// "variant,rgb,skeleton,mnet,cnet,ml,expansion,test_acc"
std::string format_ablation_csv(std::span<const VariantResult> results);

// ---------------------------------------------------------------------------
// Loss-weight sweep

inline const std::vector<double> kDefaultSweepAlphas{0.3, 0.5, 0.7, 0.9};
inline const std::vector<double> kDefaultSweepBetas{0.0, 0.3, 0.6, 0.9};

struct SweepCell {
  double alpha = 0;
  double beta = 0;
  bool skipped = false;  // alpha <= beta
  double accuracy = 0;
};

/// Row-major grid (alpha outer). Cells with alpha <= beta are marked skipped.
std::vector<SweepCell> sweep_grid(std::span<const double> alphas, std::span<const double> betas);

/// Trains the full model once per non-skipped cell with a shared seed.
std::vector<SweepCell> run_sweep(std::span<const double> alphas, std::span<const double> betas,
                                 const TrainTestSplit& data, const FusionConfig& base,
                                 const OptimConfig& optim);

/// "alpha,beta,status,test_acc"; skipped rows leave test_acc empty.
std::string format_sweep_csv(std::span<const SweepCell> cells);

// ---------------------------------------------------------------------------
// Gradient check

struct GradcheckEntry {
  std::string name;
  double max_relative_error = 0;
  bool passed = false;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  bool all_passed() const;
  double worst() const;
};

/// Compares backward against central differences of the batch objective for
/// every parameter tensor.
GradcheckReport gradient_check(const EseFnParams& params,
                               std::span<const MultiModalFeature> batch,
                               const LossWeights& weights, double eps, double tolerance);

struct GradcheckProblem {
  EseFnParams params;
  std::vector<MultiModalFeature> batch;
};

/// Random model (all weights and biases drawn from U(-0.5, 0.5)) and a random
/// batch of gaussian features with uniform labels. d1 = 10, d2 = 12.
GradcheckProblem make_gradcheck_problem(std::uint64_t seed, std::size_t fused_dim,
                                        std::size_t classes, std::size_t batch_size);

}  // namespace esefn
