#include <gtest/gtest.h>

#include <algorithm>

#include "esefn/error.hpp"
#include "esefn/experiment.hpp"
#include "esefn/ops.hpp"

using namespace esefn;

TEST(AblationTable, StaticAudit) {
  const auto variants = ablation_variants();
  ASSERT_EQ(variants.size(), 13u);
  const char* ids[] = {"B1", "B2", "B3", "B4", "B5", "B6", "B7",
                       "A1", "A2", "A3", "A4", "A5", "A6"};
  for (std::size_t i = 0; i < 13; ++i) EXPECT_EQ(variants[i].id, ids[i]);
  const auto& b = variants;
  // Single-modal baselines.
  EXPECT_TRUE(b[0].uses_rgb && !b[0].uses_skeleton);
  EXPECT_TRUE(!b[1].uses_rgb && b[1].uses_skeleton);
  // B4..B7 add components one at a time on top of B3.
  EXPECT_TRUE(b[3].uses_mnet && !b[3].uses_cnet && b[3].uses_ml);
  EXPECT_TRUE(!b[4].uses_mnet && b[4].uses_cnet && b[4].uses_ml);
  EXPECT_TRUE(b[5].uses_mnet && b[5].uses_cnet && !b[5].uses_ml);
  EXPECT_TRUE(b[6].uses_mnet && b[6].uses_cnet && b[6].uses_ml && b[6].uses_expansion);
  // A1..A3 mirror A4..A6 without expansion.
  for (std::size_t i = 7; i < 10; ++i) {
    const auto& se = b[i];
    const auto& ese = b[i + 3];
    EXPECT_FALSE(se.uses_expansion);
    EXPECT_TRUE(ese.uses_expansion);
    EXPECT_EQ(se.uses_mnet, ese.uses_mnet);
    EXPECT_EQ(se.uses_cnet, ese.uses_cnet);
    EXPECT_TRUE(se.uses_ml && ese.uses_ml);
  }
}

TEST(AblationTable, ParseVariantList) {
  EXPECT_EQ(parse_variant_list("all").size(), 13u);
  const auto some = parse_variant_list("A6,B1,B1,B7");
  ASSERT_EQ(some.size(), 3u);
  EXPECT_EQ(some[0].id, "B1");
  EXPECT_EQ(some[1].id, "B7");
  EXPECT_EQ(some[2].id, "A6");
  EXPECT_THROW(parse_variant_list("B8"), InputError);
  EXPECT_THROW(parse_variant_list("B1,"), InputError);
}

TEST(AblationTable, VariantSetups) {
  const FusionConfig base;
  const LossWeights ml(0.7, 0.3);
  auto setup = [&](const char* id) { return variant_setup(parse_variant_list(id)[0], base, ml); };

  EXPECT_EQ(setup("B1").objective, Objective::kRgbOnly);
  EXPECT_EQ(setup("B1").head, ReportedHead::kRgb);
  EXPECT_EQ(setup("B2").objective, Objective::kSkeletonOnly);

  const VariantSetup b3 = setup("B3");
  EXPECT_EQ(b3.config.readout, Readout::kConcat);
  EXPECT_EQ(b3.weights.alpha(), 1.0);
  EXPECT_EQ(b3.weights.beta(), 0.0);

  const VariantSetup b6 = setup("B6");
  EXPECT_EQ(b6.config.modal, FusionKind::kExpansionSqueezeExcitation);
  EXPECT_EQ(b6.weights.beta(), 0.0);

  const VariantSetup a1 = setup("A1");
  EXPECT_EQ(a1.config.modal, FusionKind::kNone);
  EXPECT_EQ(a1.config.channel, FusionKind::kSqueezeExcitation);
  EXPECT_EQ(a1.weights.alpha(), 0.7);

  const VariantSetup a6 = setup("A6");
  const VariantSetup b7 = setup("B7");
  EXPECT_EQ(a6.config, b7.config);

  for (const auto& v : ablation_variants()) {
    EXPECT_NO_THROW(variant_setup(v, base, ml).config.validate()) << v.id;
  }
}

TEST(Sweep, DefaultGrid) {
  const auto cells = sweep_grid(kDefaultSweepAlphas, kDefaultSweepBetas);
  ASSERT_EQ(cells.size(), 16u);
  EXPECT_EQ(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.skipped; }), 7);
  EXPECT_TRUE(std::any_of(cells.begin(), cells.end(), [](const auto& c) {
    return c.alpha == 0.7 && c.beta == 0.3 && !c.skipped;
  }));
  for (const auto& c : cells) EXPECT_EQ(c.skipped, !(c.alpha > c.beta));
  // Row-major, alpha outer.
  EXPECT_EQ(cells[1].alpha, 0.3);
  EXPECT_EQ(cells[1].beta, 0.3);
}

TEST(Sweep, CsvMarksSkippedCells) {
  std::vector<SweepCell> cells{{0.7, 0.3, false, 0.75}, {0.3, 0.6, true, 0}};
  EXPECT_EQ(format_sweep_csv(cells),
            "alpha,beta,status,test_acc\n0.69999999999999996,0.29999999999999999,ok,0.75\n"
            "0.29999999999999999,0.59999999999999998,skipped,\n");
}

TEST(Gradcheck, FullModelPasses) {
  GradcheckProblem problem = make_gradcheck_problem(0, 16, 4, 4);
  const GradcheckReport report =
      gradient_check(problem.params, problem.batch, LossWeights(0.7, 0.3), 1e-6, 1e-4);
  EXPECT_TRUE(report.all_passed()) << "worst " << report.worst();
  EXPECT_LT(report.worst(), 1e-4);
}

TEST(Gradcheck, InjectedSignFlipIsCaught) {
  GradcheckProblem problem = make_gradcheck_problem(0, 16, 4, 4);
  esefn::testing::set_conv1d_weight_grad_sign_flip(true);
  const GradcheckReport report =
      gradient_check(problem.params, problem.batch, LossWeights(0.7, 0.3), 1e-6, 1e-4);
  esefn::testing::set_conv1d_weight_grad_sign_flip(false);
  EXPECT_FALSE(report.all_passed());
  for (const auto& e : report.entries) {
    const bool conv_weight = e.name.rfind("mnet.conv", 0) == 0 &&
                             e.name.find(".weight") != std::string::npos;
    EXPECT_EQ(e.passed, !conv_weight) << e.name << " " << e.max_relative_error;
  }
}

TEST(Gradcheck, ImpossibleToleranceFails) {
  GradcheckProblem problem = make_gradcheck_problem(1, 16, 4, 4);
  const GradcheckReport report =
      gradient_check(problem.params, problem.batch, LossWeights(), 1e-6, 1e-12);
  EXPECT_FALSE(report.all_passed());
}
