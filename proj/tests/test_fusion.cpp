#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "esefn/error.hpp"
#include "esefn/experiment.hpp"
#include "esefn/fusion.hpp"
#include "esefn/gradcheck.hpp"
#include "esefn/ops.hpp"
#include "oracles.hpp"

using namespace esefn;

namespace {

void zero_out(Linear& l) {
  for (double& v : l.weight.mutable_values()) v = 0;
  for (double& v : l.bias.mutable_values()) v = 0;
}

FusionConfig wide_config() {
  FusionConfig c;
  c.rgb_dim = 10;
  c.skeleton_dim = 12;
  c.fused_dim = 16;
  c.classes = 4;
  return c;
}

ref::Vec draw(std::size_t n, std::mt19937_64& rng) {
  return ref::values(ref::random_tensor(Shape{n}, rng, 1.0, false));
}

}  // namespace

TEST(FusionConfig, Validation) {
  EXPECT_NO_THROW(FusionConfig{}.validate());
  FusionConfig concat_with_blocks;
  concat_with_blocks.readout = Readout::kConcat;
  EXPECT_THROW(concat_with_blocks.validate(), ConfigError);
  FusionConfig small;
  small.fused_dim = 8;
  EXPECT_THROW(small.validate(), ConfigError);
  small.modal = FusionKind::kNone;
  EXPECT_NO_THROW(small.validate());
  FusionConfig one_class;
  one_class.classes = 1;
  EXPECT_THROW(one_class.validate(), ConfigError);
}

TEST(FuseForward, HalfGatesOnBothSitesGiveQuarterModalSum) {
  Rng rng(1);
  EseFnParams p(FusionConfig{}, rng);
  zero_out(p.mnet->fc3);
  zero_out(p.cnet->fc5);
  std::mt19937_64 data(2);
  const ref::Vec fr = draw(8, data), fs = draw(8, data);
  const FusedFeature out = fuse_forward(Tensor::vector(fr), Tensor::vector(fs), p);
  const ref::Vec pr = ref::mlp(fr, p.proj_r), ps = ref::mlp(fs, p.proj_s);
  for (std::size_t i = 0; i < 16; ++i) EXPECT_NEAR(out.fused.at(i), 0.25 * (pr[i] + ps[i]), 1e-15);
  ASSERT_TRUE(out.modal_attention && out.channel_attention);
  EXPECT_EQ(out.modal_attention->shape(), (Shape{2}));
  EXPECT_EQ(out.channel_attention->shape(), (Shape{16}));
}

TEST(FuseForward, MatchesCompositionOracle) {
  std::mt19937_64 data(3);
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    EseFnParams p(wide_config(), rng);
    const ref::Vec fr = draw(10, data), fs = draw(12, data);
    const FusedFeature out = fuse_forward(Tensor::vector(fr), Tensor::vector(fs), p);
    EXPECT_LT(ref::max_abs_diff(ref::values(out.fused), ref::fused(p, fr, fs)), 1e-12);
  }
}

TEST(FuseForward, EveryVariantMatchesOracle) {
  std::mt19937_64 data(4);
  for (const auto& v : ablation_variants()) {
    const VariantSetup setup = variant_setup(v, wide_config(), LossWeights());
    Rng rng(5);
    EseFnParams p(setup.config, rng);
    const ref::Vec fr = draw(10, data), fs = draw(12, data);
    const FusedFeature out = fuse_forward(Tensor::vector(fr), Tensor::vector(fs), p);
    EXPECT_EQ(out.fused.numel(), setup.config.fused_feature_dim()) << v.id;
    EXPECT_LT(ref::max_abs_diff(ref::values(out.fused), ref::fused(p, fr, fs)), 1e-12) << v.id;
  }
}

TEST(FuseForward, RejectsWrongFeatureSize) {
  Rng rng(6);
  EseFnParams p(FusionConfig{}, rng);
  try {
    fuse_forward(Tensor::zeros(Shape{9}), Tensor::zeros(Shape{8}), p);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_NE(std::string(e.what()).find("[9]"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("[8]"), std::string::npos);
  }
}

TEST(Predict, ZeroHeadsReturnBias) {
  Rng rng(7);
  EseFnParams p(FusionConfig{}, rng);
  for (Linear* head : {&p.head_r, &p.head_s, &p.head_rs}) {
    zero_out(*head);
    head->bias.mutable_values()[2] = 1.5;
  }
  std::mt19937_64 data(8);
  const Logits l = predict(Tensor::vector(draw(8, data)), Tensor::vector(draw(8, data)), p);
  for (const Tensor* t : {&l.rgb, &l.skeleton, &l.fused}) {
    EXPECT_EQ(ref::values(*t), (ref::Vec{0, 0, 1.5, 0}));
    EXPECT_EQ(argmax(t->values()), 2u);
  }
}

TEST(Predict, PermutingHeadRowsPermutesLogits) {
  Rng rng(9);
  EseFnParams p(FusionConfig{}, rng);
  std::mt19937_64 data(10);
  const Tensor fr = Tensor::vector(draw(8, data)), fs = Tensor::vector(draw(8, data));
  const Logits before = predict(fr, fs, p);
  const std::size_t perm[] = {2, 0, 3, 1};
  EseFnParams q = p.clone();
  const std::size_t in = q.head_rs.in_features();
  for (std::size_t k = 0; k < 4; ++k) {
    for (std::size_t j = 0; j < in; ++j)
      q.head_rs.weight.mutable_values()[k * in + j] = p.head_rs.weight.at(perm[k], j);
    q.head_rs.bias.mutable_values()[k] = p.head_rs.bias.at(perm[k]);
  }
  const Logits after = predict(fr, fs, q);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_EQ(after.fused.at(k), before.fused.at(perm[k]));
}

TEST(Predict, HeadsAreIndependent) {
  Rng rng(11);
  EseFnParams p(FusionConfig{}, rng);
  std::mt19937_64 data(12);
  const Tensor fr = Tensor::vector(draw(8, data)), fs = Tensor::vector(draw(8, data));
  const Logits before = predict(fr, fs, p);
  for (double& v : p.head_s.weight.mutable_values()) v += 1.0;
  const Logits after = predict(fr, fs, p);
  EXPECT_EQ(ref::values(after.rgb), ref::values(before.rgb));
  EXPECT_EQ(ref::values(after.fused), ref::values(before.fused));
  EXPECT_NE(ref::values(after.skeleton), ref::values(before.skeleton));
}

TEST(Argmax, LowestIndexWinsTies) {
  const double v[] = {1, 3, 3, 2};
  EXPECT_EQ(argmax(v), 1u);
  EXPECT_THROW(argmax(std::span<const double>()), InputError);
}

TEST(MultimodalLoss, Examples) {
  const LossBreakdown b = multimodal_loss(1.0, 2.0, 0.5, LossWeights(0.7, 0.3));
  EXPECT_NEAR(b.l_total, 0.5, 1e-15);
  EXPECT_EQ(b.min_branch, Branch::kRgb);

  const LossBreakdown s = multimodal_loss(2.0, 1.0, 0.5, LossWeights(0.7, 0.3));
  EXPECT_EQ(s.min_branch, Branch::kSkeleton);

  EXPECT_EQ(multimodal_loss(1.0, 2.0, 0.5, LossWeights(0.7, 0.0)).l_total, 0.7 * 0.5);
  EXPECT_EQ(multimodal_loss(1.0, 1.0, 0.5, LossWeights()).min_branch, Branch::kRgb);
}

TEST(MultimodalLoss, WeightValidation) {
  EXPECT_THROW(LossWeights(0.3, 0.3), ConfigError);
  EXPECT_THROW(LossWeights(0.3, 0.5), ConfigError);
  EXPECT_THROW(LossWeights(0.5, -0.1), ConfigError);
  EXPECT_THROW(LossWeights(NAN, 0.0), ConfigError);
  EXPECT_NO_THROW(LossWeights(1.0, 0.0));
  EXPECT_EQ(LossWeights().alpha(), 0.7);
  EXPECT_EQ(LossWeights().beta(), 0.3);
}

TEST(MultimodalLoss, IdentityProperty) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> loss(0.0, 5.0), w(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double lr = loss(rng), ls = loss(rng), lrs = loss(rng);
    double a = w(rng), b = w(rng);
    if (a <= b) std::swap(a, b);
    if (a == b) continue;
    const LossBreakdown out = multimodal_loss(lr, ls, lrs, LossWeights(a, b));
    EXPECT_NEAR(out.l_total, (a - b) * lrs + b * std::min(lr, ls), 1e-12);
  }
}

TEST(MultimodalLoss, GradientFlowsOnlyToSelectedBranch) {
  Tensor lr = Tensor::scalar(1.0, true), ls = Tensor::scalar(2.0, true),
         lrs = Tensor::scalar(0.5, true);
  const MultimodalObjective obj = multimodal_loss(lr, ls, lrs, LossWeights(0.7, 0.3));
  EXPECT_NEAR(obj.total.item(), 0.5, 1e-15);
  backward(obj.total);
  EXPECT_NEAR(lrs.grad()[0], 0.4, 1e-15);
  EXPECT_EQ(lr.grad()[0], 0.3);
  EXPECT_EQ(ls.grad()[0], 0.0);
}

TEST(BatchForward, SingleSampleMatchesDirectComputation) {
  Rng rng(14);
  EseFnParams p(wide_config(), rng);
  std::mt19937_64 data(15);
  MultiModalFeature s{0, 3, draw(10, data), draw(12, data)};
  const BatchForward fwd = batch_forward(std::span(&s, 1), p, LossWeights());
  const ref::Vec fused = ref::fused(p, s.rgb, s.skeleton);
  const double l_r = static_cast<double>(ref::cross_entropy(ref::linear(s.rgb, p.head_r), 3));
  const double l_s = static_cast<double>(ref::cross_entropy(ref::linear(s.skeleton, p.head_s), 3));
  const double l_rs = static_cast<double>(ref::cross_entropy(ref::linear(fused, p.head_rs), 3));
  EXPECT_NEAR(fwd.losses.l_r, l_r, 1e-12);
  EXPECT_NEAR(fwd.losses.l_s, l_s, 1e-12);
  EXPECT_NEAR(fwd.losses.l_rs, l_rs, 1e-12);
  EXPECT_NEAR(fwd.objective.item(), 0.4 * l_rs + 0.3 * std::min(l_r, l_s), 1e-12);
  EXPECT_THROW(batch_forward(std::span<const MultiModalFeature>(), p, LossWeights()), InputError);
}

TEST(BatchForward, DuplicatingTheBatchKeepsTheMean) {
  Rng rng(16);
  EseFnParams p(FusionConfig{}, rng);
  std::mt19937_64 data(17);
  std::vector<MultiModalFeature> batch;
  for (std::uint32_t i = 0; i < 3; ++i) batch.push_back({i, i, draw(8, data), draw(8, data)});
  std::vector<MultiModalFeature> twice = batch;
  twice.insert(twice.end(), batch.begin(), batch.end());
  const double a = batch_forward(batch, p, LossWeights()).objective.item();
  const double b = batch_forward(twice, p, LossWeights()).objective.item();
  EXPECT_NEAR(a, b, 1e-14);
}

TEST(BatchLoss, MatchesFiniteDifferences) {
  GradcheckProblem problem = make_gradcheck_problem(3, 16, 4, 4);
  const GradcheckReport report =
      gradient_check(problem.params, problem.batch, LossWeights(), 1e-6, 1e-4);
  EXPECT_TRUE(report.all_passed()) << "worst " << report.worst();
  EXPECT_EQ(report.entries.size(), problem.params.parameters().size());
}

TEST(BatchLoss, UnselectedBranchGetsNoGradient) {
  Rng rng(18);
  EseFnParams p(FusionConfig{}, rng);
  std::mt19937_64 data(19);
  std::vector<MultiModalFeature> batch;
  for (std::uint32_t i = 0; i < 4; ++i) batch.push_back({i, i, draw(8, data), draw(8, data)});
  // Make the RGB head confidently right so l_r < l_s.
  zero_out(p.head_r);
  zero_out(p.head_s);
  for (auto& s : batch) {
    std::fill(s.rgb.begin(), s.rgb.end(), 0.0);
    s.rgb[s.label] = 1.0;
  }
  for (std::size_t k = 0; k < 4; ++k) p.head_r.weight.mutable_values()[k * 8 + k] = 5.0;
  p.zero_grads();
  const LossBreakdown b = batch_loss(batch, p, LossWeights());
  ASSERT_EQ(b.min_branch, Branch::kRgb);
  for (double g : p.head_s.weight.grad()) EXPECT_EQ(g, 0.0);
  for (double g : p.head_s.bias.grad()) EXPECT_EQ(g, 0.0);
  double norm = 0;
  for (double g : p.head_r.weight.grad()) norm += std::abs(g);
  EXPECT_GT(norm, 0.0);
}

TEST(BatchLoss, SingleModalObjectivesTouchOnlyTheirHead) {
  Rng rng(20);
  EseFnParams p(FusionConfig{}, rng);
  std::mt19937_64 data(21);
  std::vector<MultiModalFeature> batch{{0, 1, draw(8, data), draw(8, data)}};
  p.zero_grads();
  batch_loss(batch, p, LossWeights(1.0, 0.0), Objective::kRgbOnly);
  for (const auto& np : p.parameters()) {
    double norm = 0;
    for (double g : np.tensor.grad()) norm += std::abs(g);
    if (np.name.rfind("head_r.", 0) == 0) {
      EXPECT_GT(norm, 0.0) << np.name;
    } else {
      EXPECT_EQ(norm, 0.0) << np.name;
    }
  }
}
