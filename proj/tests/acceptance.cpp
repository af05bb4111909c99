// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "esefn/checkpoint.hpp"
#include "esefn/datagen.hpp"
#include "esefn/experiment.hpp"
#include "esefn/feature_io.hpp"
#include "esefn/ops.hpp"
#include "esefn/trainer.hpp"
#include "oracles.hpp"

using namespace esefn;

namespace {

using Clock = std::chrono::steady_clock;

int failures = 0;

void verdict(const char* id, bool ok, const std::string& what) {
  std::printf("%s %s %s\n", id, ok ? "PASS" : "FAIL", what.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

ref::Vec draw(std::size_t n, std::mt19937_64& rng, double scale) {
  return ref::values(ref::random_tensor(Shape{n}, rng, scale, false));
}

// The synthetic task shared by the experiment criteria.
TrainTestSplit xor_task() {
  SynthSpec spec;  // K=4, d1=d2=8, sigma 0.1, 100 per class, seed 7
  return split_train_test(generate_xor_pair(spec), 0.25);
}

OptimConfig experiment_optim() {
  OptimConfig c;  // lr 0.1, momentum 0.9, decay 1e-4, batch 32
  c.epochs = 100;
  return c;
}

void gradient_oracle() {
  const auto t0 = Clock::now();
  GradcheckProblem problem = make_gradcheck_problem(0, 16, 4, 4);
  const GradcheckReport report =
      gradient_check(problem.params, problem.batch, LossWeights(0.7, 0.3), 1e-6, 1e-4);
  const double secs = seconds_since(t0);
  verdict("AC1", report.all_passed() && secs < 60,
          fmt("gradient oracle: %.0f parameter groups, worst relative error %.3e, %.2f s",
              static_cast<double>(report.entries.size()), report.worst(), secs));
}

void attention_bounds() {
  std::mt19937_64 data(101);
  std::uniform_real_distribution<double> scale(0.1, 5.0);
  std::size_t gates = 0;
  bool ok = true;
  auto check = [&](const AttentionResult& r, const Tensor& in) {
    for (std::size_t i = 0; i < in.shape()[0]; ++i) {
      const double g = r.attention.at(i);
      ok = ok && g > 0.0 && g < 1.0;
      ++gates;
      for (std::size_t j = 0; j < in.shape()[1]; ++j) ok = ok && r.output.at(i, j) == g * in.at(i, j);
    }
  };
  for (std::uint64_t draw_id = 0; draw_id < 1000; ++draw_id) {
    Rng rng(draw_id);
    const MNet mnet({}, rng);
    const CNet cnet({}, rng);
    const Tensor f = ref::random_tensor(Shape{2, 16}, data, scale(data), false);
    const AttentionResult m = mnet.forward(f);
    check(m, f);
    const Tensor h = transpose(m.output);
    check(cnet.forward(h), h);
  }
  verdict("AC2", ok,
          fmt("attention bounds: 1000 draws, %.0f gates strictly in (0,1), row scaling exact",
              static_cast<double>(gates)));
}

void loss_identity() {
  std::mt19937_64 rng(202);
  std::uniform_real_distribution<double> loss(0.0, 5.0), w(0.0, 1.0);
  double worst = 0;
  bool degenerate_exact = true;
  for (int i = 0; i < 10000; ++i) {
    const double lr = loss(rng), ls = loss(rng), lrs = loss(rng);
    double a = w(rng), b = w(rng);
    if (a < b) std::swap(a, b);
    if (!(a > b)) continue;
    const double got = multimodal_loss(lr, ls, lrs, LossWeights(a, b)).l_total;
    worst = std::max(worst, std::abs(got - ((a - b) * lrs + b * std::min(lr, ls))));
    degenerate_exact = degenerate_exact &&
                       multimodal_loss(lr, ls, lrs, LossWeights(a, 0.0)).l_total == a * lrs;
  }
  verdict("AC3", worst <= 1e-12 && degenerate_exact,
          fmt("loss identity: max deviation %.2e over 10000 triples; beta=0 gives alpha*l_rs ",
              worst) +
              (degenerate_exact ? "exactly" : "NOT exactly"));
}

void composition_oracles() {
  std::mt19937_64 data(303);
  double worst_m = 0, worst_c = 0, worst_f = 0;
  FusionConfig wide;
  wide.rgb_dim = 10;
  wide.skeleton_dim = 12;
  for (std::uint64_t i = 0; i < 100; ++i) {
    Rng rng(1000 + i);
    const MNet mnet({}, rng);
    const CNet cnet({}, rng);
    const EseFnParams params(wide, rng);
    const Tensor f = ref::random_tensor(Shape{2, 16}, data, 1.0, false);
    const Tensor h = ref::random_tensor(Shape{16, 2}, data, 1.0, false);
    const AttentionResult m = mnet.forward(f);
    const ref::Gated em = ref::mnet(mnet, ref::map_of(f));
    worst_m = std::max({worst_m, ref::max_abs_diff(ref::values(m.output), em.output.data),
                        ref::max_abs_diff(ref::values(m.attention), em.gates)});
    const AttentionResult c = cnet.forward(h);
    const ref::Gated ec = ref::cnet(cnet, ref::map_of(h));
    worst_c = std::max({worst_c, ref::max_abs_diff(ref::values(c.output), ec.output.data),
                        ref::max_abs_diff(ref::values(c.attention), ec.gates)});
    const ref::Vec fr = draw(10, data, 1.0), fs = draw(12, data, 1.0);
    const Tensor fused = fuse_forward(Tensor::vector(fr), Tensor::vector(fs), params).fused;
    worst_f = std::max(worst_f, ref::max_abs_diff(ref::values(fused), ref::fused(params, fr, fs)));
  }
  verdict("AC4", worst_m <= 1e-12 && worst_c <= 1e-12 && worst_f <= 1e-12,
          fmt("composition oracles over 100 instances: mnet %.2e, cnet %.2e, fuse %.2e", worst_m,
              worst_c, worst_f));
}

// Returns the per-variant results so the ablation criterion can reuse B1, B2, B7.
std::vector<VariantResult> run_ablation(const TrainTestSplit& data) {
  std::vector<VariantResult> results;
  for (const auto& v : ablation_variants()) {
    results.push_back(run_variant(v, data, FusionConfig{}, experiment_optim(), LossWeights()));
  }
  return results;
}

double accuracy_of(const std::vector<VariantResult>& results, std::string_view id) {
  for (const auto& r : results)
    if (r.variant.id == id) return r.accuracy;
  return -1;
}

void fusion_superiority(const std::vector<VariantResult>& ablation, double secs) {
  const double fused = accuracy_of(ablation, "B7");
  const double b1 = accuracy_of(ablation, "B1"), b2 = accuracy_of(ablation, "B2");
  verdict("AC5", fused >= 0.95 && b1 <= 0.60 && b2 <= 0.60 && secs < 300,
          fmt("fusion superiority: fused %.3f (>= 0.95), rgb-only %.3f, skeleton-only %.3f "
              "(<= 0.60), 100 epochs each, %.1f s for the whole ablation",
              fused, b1, b2, secs));
}

void ablation_ordering(const std::vector<VariantResult>& ablation) {
  std::printf("     variant rgb skel mnet cnet ml exp  test_acc\n");
  for (const auto& r : ablation) {
    const auto& v = r.variant;
    std::printf("     %-7.*s %3d %4d %4d %4d %2d %3d  %.3f\n", static_cast<int>(v.id.size()),
                v.id.data(), v.uses_rgb, v.uses_skeleton, v.uses_mnet, v.uses_cnet, v.uses_ml,
                v.uses_expansion, r.accuracy);
  }
  const double best_single = std::max(accuracy_of(ablation, "B1"), accuracy_of(ablation, "B2"));
  double worst_fused = 1.0;
  for (const auto& r : ablation) {
    if (r.variant.uses_rgb && r.variant.uses_skeleton) worst_fused = std::min(worst_fused, r.accuracy);
  }
  const double a6 = accuracy_of(ablation, "A6"), a3 = accuracy_of(ablation, "A3");
  const double b7 = accuracy_of(ablation, "B7"), b3 = accuracy_of(ablation, "B3");
  std::printf("     trend: A6 %.3f vs A3 - 0.02 = %.3f (%s); B7 %.3f vs B3 - 0.02 = %.3f (%s)\n", a6,
              a3 - 0.02, a6 >= a3 - 0.02 ? "holds" : "does not hold", b7, b3 - 0.02,
              b7 >= b3 - 0.02 ? "holds" : "does not hold");
  verdict("AC6", worst_fused >= best_single + 0.2,
          fmt("ablation ordering: worst fused variant %.3f >= best single-modal %.3f + 0.2",
              worst_fused, best_single));
}

void training_curve(const TrainTestSplit& data) {
  Rng rng(0);
  EseFnParams params(FusionConfig{}, rng);
  const TrainReport report =
      train(params, data.train, data.test, experiment_optim(), LossWeights());
  const double first = report.epochs.front().l_total;
  const double at50 = report.epochs.at(49).l_total;
  double lo = report.epochs.back().l_total, hi = lo, mean = 0;
  for (std::size_t e = report.epochs.size() - 10; e < report.epochs.size(); ++e) {
    lo = std::min(lo, report.epochs[e].l_total);
    hi = std::max(hi, report.epochs[e].l_total);
    mean += report.epochs[e].l_total / 10;
  }
  const double spread = (hi - lo) / mean;
  verdict("AC7", at50 < 0.5 * first && spread < 0.10,
          fmt("training curve: l_total epoch 1 %.4f, epoch 50 %.4f; last-10 spread %.2f%%", first,
              at50, 100 * spread));
}

void determinism_and_persistence(const TrainTestSplit& data) {
  OptimConfig optim = experiment_optim();
  optim.epochs = 20;
  optim.seed = 5;
  auto run = [&] {
    Rng rng(optim.seed);
    EseFnParams params(FusionConfig{}, rng);
    const TrainReport report = train(params, data.train, data.test, optim, LossWeights());
    return std::make_pair(format_report_csv(report), params);
  };
  const auto [csv_a, params_a] = run();
  const auto [csv_b, params_b] = run();
  const bool csv_same = csv_a == csv_b;
  const bool params_same = encode_checkpoint(params_a) == encode_checkpoint(params_b);

  const auto path = std::filesystem::temp_directory_path() / "esefn_acceptance_ckpt.bin";
  save_checkpoint(params_a, path);
  const EseFnParams loaded = load_checkpoint(path);
  std::filesystem::remove(path);
  const bool bytes_same = encode_checkpoint(loaded) == encode_checkpoint(params_a);
  bool predictions_same = true;
  for (const auto& s : data.test.samples) {
    const Tensor fr = Tensor::vector(s.rgb), fs = Tensor::vector(s.skeleton);
    const Logits a = predict(fr, fs, params_a), b = predict(fr, fs, loaded);
    for (const auto* pair : {&a.rgb, &a.skeleton, &a.fused}) {
      const Tensor& other = pair == &a.rgb ? b.rgb : pair == &a.skeleton ? b.skeleton : b.fused;
      predictions_same = predictions_same &&
                         std::memcmp(pair->values().data(), other.values().data(),
                                     pair->numel() * sizeof(double)) == 0;
    }
  }
  verdict("AC8", csv_same && params_same && bytes_same && predictions_same,
          std::string("determinism and persistence: report CSV ") +
              (csv_same ? "identical" : "DIFFERS") + ", trained weights " +
              (params_same ? "identical" : "DIFFER") + ", checkpoint round-trip " +
              (bytes_same ? "bit-exact" : "NOT bit-exact") + ", predictions " +
              (predictions_same ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
  gradient_oracle();
  attention_bounds();
  loss_identity();
  composition_oracles();

  const TrainTestSplit data = xor_task();
  const auto t0 = Clock::now();
  const auto ablation = run_ablation(data);
  // The wall time covers all 13 variants, an upper bound on the three runs AC5 needs.
  fusion_superiority(ablation, seconds_since(t0));
  ablation_ordering(ablation);
  training_curve(data);
  determinism_and_persistence(data);

  std::printf("%s: %d criteria failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
