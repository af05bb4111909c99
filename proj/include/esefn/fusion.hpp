#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>

#include "esefn/attention.hpp"
#include "esefn/layers.hpp"
#include "esefn/sample.hpp"
#include "esefn/tensor.hpp"

namespace esefn {

/// Which block performs a fusion step.
enum class FusionKind : std::uint8_t {
  kNone = 0,
  kSqueezeExcitation = 1,           // plain SE, no expansion
  kExpansionSqueezeExcitation = 2,  // M-Net / C-Net
};

/// How the fused [d x n] map becomes the fused head's input.
enum class Readout : std::uint8_t {
  kModalSum = 0,  // sum over modalities -> [d]
  kConcat = 1,    // [H_r(f_r); H_s(f_s)] -> [2d], only without fusion blocks
};

struct FusionConfig {
  std::size_t rgb_dim = 8;        // d1
  std::size_t skeleton_dim = 8;   // d2
  std::size_t fused_dim = 16;     // d
  std::size_t classes = 4;        // K
  FusionKind modal = FusionKind::kExpansionSqueezeExcitation;
  FusionKind channel = FusionKind::kExpansionSqueezeExcitation;
  Readout readout = Readout::kModalSum;
  std::array<std::size_t, 3> mnet_kernels{3, 5, 7};
  std::size_t mnet_reduction = 2;
  std::size_t cnet_kernel = 3;
  std::size_t cnet_stride = 1;
  std::size_t cnet_padding = 0;
  std::size_t cnet_reduction = 4;
  std::size_t se_reduction = 2;

  static constexpr std::size_t kModalities = 2;

  void validate() const;
  std::size_t fused_feature_dim() const;
  MNetConfig mnet_config() const;
  CNetConfig cnet_config() const;

  friend bool operator==(const FusionConfig&, const FusionConfig&) = default;
};

/// The full trainable parameter set: projection MLPs, fusion blocks and the
/// three classifier heads. Copies share parameter storage; use clone() for an
/// independent copy.
class EseFnParams {
 public:
  EseFnParams(const FusionConfig& config, Rng& rng);

  const FusionConfig& config() const { return config_; }

  /// Every trainable tensor, named "<component>.<layer>.<weight|bias>".
  ParamList parameters() const;
  EseFnParams clone() const;
  void zero_grads() const;

  Mlp proj_r;  // d1 -> d -> relu -> d
  Mlp proj_s;  // d2 -> d -> relu -> d
  std::optional<MNet> mnet;
  std::optional<SeBlock> modal_se;
  std::optional<CNet> cnet;
  std::optional<SeBlock> channel_se;
  Linear head_r;   // d1 -> K
  Linear head_s;   // d2 -> K
  Linear head_rs;  // d (or 2d) -> K

 private:
  FusionConfig config_;
};

struct FusedFeature {
  Tensor fused;                              // f_rs
  std::optional<Tensor> modal_attention;     // W_m [n], when a modal block is present
  std::optional<Tensor> channel_attention;   // W_c [d], when a channel block is present
};

/// Projects both modalities to d, stacks them as [d x n], applies modal-wise
/// then channel-wise fusion and reads out f_rs.
FusedFeature fuse_forward(const Tensor& f_r, const Tensor& f_s, const EseFnParams& params);

struct Logits {
  Tensor rgb;       // head_r on the raw RGB feature
  Tensor skeleton;  // head_s on the raw skeleton feature
  Tensor fused;     // head_rs on f_rs
};

Logits predict(const Tensor& f_r, const Tensor& f_s, const EseFnParams& params);

/// Index of the largest entry, lowest index on ties.
std::size_t argmax(std::span<const double> values);

/// Combination weights of the multi-modal loss. Requires alpha > beta >= 0 so
/// the fused-loss coefficient alpha - beta stays positive.
class LossWeights {
 public:
  LossWeights() = default;
  LossWeights(double alpha, double beta);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }

 private:
  double alpha_ = 0.7;
  double beta_ = 0.3;
};

enum class Branch : std::uint8_t { kRgb = 0, kSkeleton = 1 };

struct LossBreakdown {
  double l_r = 0;
  double l_s = 0;
  double l_rs = 0;
  double l_total = 0;
  Branch min_branch = Branch::kRgb;
};

/// alpha * l_rs + beta * (min(l_r, l_s) - l_rs); ties select RGB.
LossBreakdown multimodal_loss(double l_r, double l_s, double l_rs, const LossWeights& weights);

struct MultimodalObjective {
  Tensor total;  // differentiable scalar
  LossBreakdown breakdown;
};

/// Differentiable form. Gradient reaches l_rs with coefficient alpha - beta and
/// the selected single-modal loss with coefficient beta; the other branch gets
/// nothing.
MultimodalObjective multimodal_loss(const Tensor& l_r, const Tensor& l_s, const Tensor& l_rs,
                                    const LossWeights& weights);

/// What a training step minimizes.
enum class Objective : std::uint8_t {
  kMultiModal = 0,    // the weighted min-branch loss
  kRgbOnly = 1,       // cross-entropy of head_r alone
  kSkeletonOnly = 2,  // cross-entropy of head_s alone
};

struct BatchForward {
  Tensor objective;  // scalar the optimizer descends
  LossBreakdown losses;
  std::size_t correct_rgb = 0;
  std::size_t correct_skeleton = 0;
  std::size_t correct_fused = 0;
};

/// Batch-mean cross-entropies of the three heads combined per `objective`.
/// Builds the graph but does not differentiate.
BatchForward batch_forward(std::span<const MultiModalFeature> batch, const EseFnParams& params,
                           const LossWeights& weights,
                           Objective objective = Objective::kMultiModal);

/// batch_forward followed by one backward pass; parameter gradients
/// accumulate.
LossBreakdown batch_loss(std::span<const MultiModalFeature> batch, const EseFnParams& params,
                         const LossWeights& weights, Objective objective = Objective::kMultiModal);

}  // namespace esefn
