#include "esefn/experiment.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "esefn/error.hpp"
#include "esefn/feature_io.hpp"
#include "esefn/gradcheck.hpp"

namespace esefn {

namespace {

// id, rgb, skeleton, modal site, channel site, ML, expansion
constexpr std::array<AblationVariant, 13> kVariants{{
    {"B1", true, false, false, false, false, false},
    {"B2", false, true, false, false, false, false},
    {"B3", true, true, false, false, false, false},
    {"B4", true, true, true, false, true, true},
    {"B5", true, true, false, true, true, true},
    {"B6", true, true, true, true, false, true},
    {"B7", true, true, true, true, true, true},
    {"A1", true, true, false, true, true, false},
    {"A2", true, true, true, false, true, false},
    {"A3", true, true, true, true, true, false},
    {"A4", true, true, false, true, true, true},
    {"A5", true, true, true, false, true, true},
    {"A6", true, true, true, true, true, true},
}};

}  // namespace

std::span<const AblationVariant> ablation_variants() { return kVariants; }

std::vector<AblationVariant> parse_variant_list(std::string_view list) {
  if (list == "all") return {kVariants.begin(), kVariants.end()};
  std::vector<AblationVariant> out;
  std::size_t start = 0;
  while (start <= list.size()) {
    const std::size_t comma = list.find(',', start);
    const std::string_view token =
        list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
    auto it = std::find_if(kVariants.begin(), kVariants.end(),
                           [&](const AblationVariant& v) { return v.id == token; });
    if (it == kVariants.end()) {
      throw InputError("unknown ablation variant '" + std::string(token) +
                       "', expected B1..B7, A1..A6 or all");
    }
    out.push_back(*it);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  // Table order regardless of how they were listed.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    auto pos = [](const AblationVariant& v) {
      return std::find_if(kVariants.begin(), kVariants.end(),
                          [&](const auto& k) { return k.id == v.id; }) -
             kVariants.begin();
    };
    return pos(a) < pos(b);
  });
  out.erase(std::unique(out.begin(), out.end(),
                        [](const auto& a, const auto& b) { return a.id == b.id; }),
            out.end());
  return out;
}

VariantSetup variant_setup(const AblationVariant& variant, const FusionConfig& base,
                           const LossWeights& ml_weights) {
  VariantSetup setup;
  setup.config = base;
  setup.config.modal = FusionKind::kNone;
  setup.config.channel = FusionKind::kNone;
  setup.config.readout = Readout::kModalSum;
  setup.weights = variant.uses_ml ? ml_weights : LossWeights(1.0, 0.0);

  if (variant.uses_rgb != variant.uses_skeleton) {
    setup.objective = variant.uses_rgb ? Objective::kRgbOnly : Objective::kSkeletonOnly;
    setup.head = variant.uses_rgb ? ReportedHead::kRgb : ReportedHead::kSkeleton;
    return setup;
  }
  if (!variant.uses_rgb) throw ConfigError("ablation variant uses no modality");

  const FusionKind block = variant.uses_expansion ? FusionKind::kExpansionSqueezeExcitation
                                                  : FusionKind::kSqueezeExcitation;
  if (variant.uses_mnet) setup.config.modal = block;
  if (variant.uses_cnet) setup.config.channel = block;
  if (!variant.uses_mnet && !variant.uses_cnet) setup.config.readout = Readout::kConcat;
  setup.objective = Objective::kMultiModal;
  setup.head = ReportedHead::kFused;
  return setup;
}

VariantResult run_variant(const AblationVariant& variant, const TrainTestSplit& data,
                          const FusionConfig& base, const OptimConfig& optim,
                          const LossWeights& ml_weights) {
  const VariantSetup setup = variant_setup(variant, base, ml_weights);
  Rng init_rng(optim.seed);
  EseFnParams params(setup.config, init_rng);
  VariantResult result{variant, train(params, data.train, data.test, optim, setup.weights,
                                      setup.objective),
                       0.0};
  switch (setup.head) {
    case ReportedHead::kRgb: result.accuracy = result.report.test.rgb; break;
    case ReportedHead::kSkeleton: result.accuracy = result.report.test.skeleton; break;
    case ReportedHead::kFused: result.accuracy = result.report.test.fused; break;
  }
  return result;
}

std::string format_ablation_csv(std::span<const VariantResult> results) {
  std::string out = "variant,rgb,skeleton,mnet,cnet,ml,expansion,test_acc\n";
  for (const auto& r : results) {
    const auto& v = r.variant;
    out += std::string(v.id);
    for (bool flag : {v.uses_rgb, v.uses_skeleton, v.uses_mnet, v.uses_cnet, v.uses_ml,
                      v.uses_expansion}) {
      out += flag ? ",1" : ",0";
    }
    out += ',' + format_real(r.accuracy) + '\n';
  }
  return out;
}

std::vector<SweepCell> sweep_grid(std::span<const double> alphas, std::span<const double> betas) {
  std::vector<SweepCell> cells;
  for (double a : alphas) {
    for (double b : betas) cells.push_back({a, b, !(a > b), 0.0});
  }
  return cells;
}

std::vector<SweepCell> run_sweep(std::span<const double> alphas, std::span<const double> betas,
                                 const TrainTestSplit& data, const FusionConfig& base,
                                 const OptimConfig& optim) {
  std::vector<SweepCell> cells = sweep_grid(alphas, betas);
  for (auto& cell : cells) {
    if (cell.skipped) continue;
    Rng init_rng(optim.seed);
    EseFnParams params(base, init_rng);
    const TrainReport report =
        train(params, data.train, data.test, optim, LossWeights(cell.alpha, cell.beta));
    cell.accuracy = report.test.fused;
  }
  return cells;
}

std::string format_sweep_csv(std::span<const SweepCell> cells) {
  std::string out = "alpha,beta,status,test_acc\n";
  for (const auto& c : cells) {
    out += format_real(c.alpha) + ',' + format_real(c.beta) + ',';
    out += c.skipped ? "skipped," : "ok," + format_real(c.accuracy);
    out += '\n';
  }
  return out;
}

bool GradcheckReport::all_passed() const {
  return std::all_of(entries.begin(), entries.end(), [](const auto& e) { return e.passed; });
}

double GradcheckReport::worst() const {
  double w = 0;
  for (const auto& e : entries) w = std::max(w, e.max_relative_error);
  return w;
}

GradcheckReport gradient_check(const EseFnParams& params,
                               std::span<const MultiModalFeature> batch,
                               const LossWeights& weights, double eps, double tolerance) {
  params.zero_grads();
  batch_loss(batch, params, weights);

  auto objective = [&](const Tensor&) {
    return batch_forward(batch, params, weights).objective.item();
  };
  GradcheckReport report;
  for (const auto& p : params.parameters()) {
    std::vector<double> analytic(p.tensor.grad().begin(), p.tensor.grad().end());
    const Tensor numeric = finite_diff_grad(objective, p.tensor, eps);
    const double err = max_relative_error(analytic, numeric.values());
    report.entries.push_back({p.name, err, err < tolerance});
  }
  params.zero_grads();
  return report;
}

GradcheckProblem make_gradcheck_problem(std::uint64_t seed, std::size_t fused_dim,
                                        std::size_t classes, std::size_t batch_size) {
  FusionConfig config;
  config.rgb_dim = 10;
  config.skeleton_dim = 12;
  config.fused_dim = fused_dim;
  config.classes = classes;
  Rng rng(seed);
  GradcheckProblem problem{EseFnParams(config, rng), {}};
  std::uniform_real_distribution<double> uniform(-0.5, 0.5);
  for (auto& p : problem.params.parameters()) {
    for (double& v : p.tensor.mutable_values()) v = uniform(rng);
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> label(0, static_cast<std::uint32_t>(classes - 1));
  for (std::size_t i = 0; i < batch_size; ++i) {
    MultiModalFeature s;
    s.sample_id = static_cast<std::uint32_t>(i);
    s.label = label(rng);
    s.rgb.resize(config.rgb_dim);
    s.skeleton.resize(config.skeleton_dim);
    for (double& x : s.rgb) x = normal(rng);
    for (double& x : s.skeleton) x = normal(rng);
    problem.batch.push_back(std::move(s));
  }
  return problem;
}

}  // namespace esefn
