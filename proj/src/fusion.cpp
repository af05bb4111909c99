#include "esefn/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "esefn/error.hpp"
#include "esefn/ops.hpp"

namespace esefn {

namespace {

std::string num(std::size_t v) { return std::to_string(v); }

void require_vector(const Tensor& t, std::size_t dim, const char* what) {
  if (t.shape().rank() != 1 || t.shape()[0] != dim) {
    throw InputError(std::string(what) + " feature has shape " + t.shape().str() +
                     ", model expects [" + num(dim) + "]");
  }
}

}  // namespace

void FusionConfig::validate() const {
  if (rgb_dim == 0 || skeleton_dim == 0 || fused_dim == 0) {
    throw ConfigError("fusion: feature dimensions must be positive");
  }
  if (classes < 2) throw ConfigError("fusion: need at least 2 classes, got " + num(classes));
  if (readout == Readout::kConcat &&
      (modal != FusionKind::kNone || channel != FusionKind::kNone)) {
    throw ConfigError("fusion: concatenation readout is only defined without fusion blocks");
  }
  switch (modal) {
    case FusionKind::kNone: break;
    case FusionKind::kSqueezeExcitation:
      SeBlockConfig{kModalities, se_reduction}.validate();
      break;
    case FusionKind::kExpansionSqueezeExcitation: mnet_config().validate(); break;
    default: throw ConfigError("fusion: unknown modal fusion kind");
  }
  switch (channel) {
    case FusionKind::kNone: break;
    case FusionKind::kSqueezeExcitation:
      SeBlockConfig{fused_dim, se_reduction}.validate();
      break;
    case FusionKind::kExpansionSqueezeExcitation: cnet_config().validate(); break;
    default: throw ConfigError("fusion: unknown channel fusion kind");
  }
}

std::size_t FusionConfig::fused_feature_dim() const {
  return readout == Readout::kConcat ? kModalities * fused_dim : fused_dim;
}

MNetConfig FusionConfig::mnet_config() const {
  MNetConfig c;
  c.modalities = kModalities;
  c.length = fused_dim;
  c.kernels = mnet_kernels;
  c.reduction = mnet_reduction;
  return c.resolved();
}

CNetConfig FusionConfig::cnet_config() const {
  CNetConfig c;
  c.channels = fused_dim;
  c.modalities = kModalities;
  c.kernel = cnet_kernel;
  c.stride = cnet_stride;
  c.padding = cnet_padding;
  c.reduction = cnet_reduction;
  return c;
}

EseFnParams::EseFnParams(const FusionConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const auto& c = config_;
  proj_r = Mlp(c.rgb_dim, c.fused_dim, c.fused_dim, rng);
  proj_s = Mlp(c.skeleton_dim, c.fused_dim, c.fused_dim, rng);
  if (c.modal == FusionKind::kExpansionSqueezeExcitation) {
    mnet.emplace(c.mnet_config(), rng);
  } else if (c.modal == FusionKind::kSqueezeExcitation) {
    modal_se.emplace(SeBlockConfig{FusionConfig::kModalities, c.se_reduction}, rng);
  }
  if (c.channel == FusionKind::kExpansionSqueezeExcitation) {
    cnet.emplace(c.cnet_config(), rng);
  } else if (c.channel == FusionKind::kSqueezeExcitation) {
    channel_se.emplace(SeBlockConfig{c.fused_dim, c.se_reduction}, rng);
  }
  head_r = Linear(c.rgb_dim, c.classes, rng);
  head_s = Linear(c.skeleton_dim, c.classes, rng);
  head_rs = Linear(c.fused_feature_dim(), c.classes, rng);
}

ParamList EseFnParams::parameters() const {
  ParamList out;
  proj_r.collect("proj_r", out);
  proj_s.collect("proj_s", out);
  if (mnet) mnet->collect("mnet", out);
  if (modal_se) modal_se->collect("modal_se", out);
  if (cnet) cnet->collect("cnet", out);
  if (channel_se) channel_se->collect("channel_se", out);
  head_r.collect("head_r", out);
  head_s.collect("head_s", out);
  head_rs.collect("head_rs", out);
  return out;
}

EseFnParams EseFnParams::clone() const {
  Rng scratch(0);
  EseFnParams copy(config_, scratch);
  const ParamList src = parameters();
  ParamList dst = copy.parameters();
  for (std::size_t i = 0; i < src.size(); ++i) {
    auto from = src[i].tensor.values();
    auto to = dst[i].tensor.mutable_values();
    std::copy(from.begin(), from.end(), to.begin());
  }
  return copy;
}

void EseFnParams::zero_grads() const {
  for (auto& p : parameters()) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
}

FusedFeature fuse_forward(const Tensor& f_r, const Tensor& f_s, const EseFnParams& params) {
  const auto& c = params.config();
  require_vector(f_r, c.rgb_dim, "RGB");
  require_vector(f_s, c.skeleton_dim, "skeleton");

  const Tensor projected[] = {params.proj_r(f_r), params.proj_s(f_s)};
  if (c.readout == Readout::kConcat) return {concat(projected), std::nullopt, std::nullopt};

  FusedFeature out;
  Tensor h = stack_columns(projected);  // [d x n]
  if (params.mnet || params.modal_se) {
    const Tensor rows = transpose(h);  // [n x d]
    AttentionResult r = params.mnet ? params.mnet->forward(rows) : params.modal_se->forward(rows);
    h = transpose(r.output);
    out.modal_attention = r.attention;
  }
  if (params.cnet || params.channel_se) {
    AttentionResult r = params.cnet ? params.cnet->forward(h) : params.channel_se->forward(h);
    h = r.output;
    out.channel_attention = r.attention;
  }
  out.fused = sum_rows(h);
  return out;
}

Logits predict(const Tensor& f_r, const Tensor& f_s, const EseFnParams& params) {
  Tensor fused = fuse_forward(f_r, f_s, params).fused;
  return {params.head_r(f_r), params.head_s(f_s), params.head_rs(fused)};
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw InputError("argmax of an empty vector");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

LossWeights::LossWeights(double alpha, double beta) : alpha_(alpha), beta_(beta) {
  if (!std::isfinite(alpha) || !std::isfinite(beta) || !(beta >= 0) || !(alpha > beta)) {
    throw ConfigError("loss weights need alpha > beta >= 0, got alpha=" + std::to_string(alpha) +
                      " beta=" + std::to_string(beta));
  }
}

LossBreakdown multimodal_loss(double l_r, double l_s, double l_rs, const LossWeights& weights) {
  if (!(l_r >= 0) || !(l_s >= 0) || !(l_rs >= 0)) {
    throw InputError("multimodal_loss: component losses must be non-negative");
  }
  LossBreakdown b;
  b.l_r = l_r;
  b.l_s = l_s;
  b.l_rs = l_rs;
  b.min_branch = l_r <= l_s ? Branch::kRgb : Branch::kSkeleton;
  const double best_single = b.min_branch == Branch::kRgb ? l_r : l_s;
  b.l_total = weights.alpha() * l_rs + weights.beta() * (best_single - l_rs);
  return b;
}

MultimodalObjective multimodal_loss(const Tensor& l_r, const Tensor& l_s, const Tensor& l_rs,
                                    const LossWeights& weights) {
  LossBreakdown b = multimodal_loss(l_r.item(), l_s.item(), l_rs.item(), weights);
  const Tensor terms[] = {l_rs, b.min_branch == Branch::kRgb ? l_r : l_s};
  const double coeffs[] = {weights.alpha() - weights.beta(), weights.beta()};
  return {weighted_sum(terms, coeffs), b};
}

BatchForward batch_forward(std::span<const MultiModalFeature> batch, const EseFnParams& params,
                           const LossWeights& weights, Objective objective) {
  if (batch.empty()) throw InputError("batch_loss: empty batch");
  std::vector<Tensor> ce_r, ce_s, ce_rs;
  ce_r.reserve(batch.size());
  ce_s.reserve(batch.size());
  ce_rs.reserve(batch.size());
  BatchForward out;
  for (const auto& sample : batch) {
    const Logits logits =
        predict(Tensor::vector(sample.rgb), Tensor::vector(sample.skeleton), params);
    ce_r.push_back(softmax_cross_entropy(logits.rgb, sample.label));
    ce_s.push_back(softmax_cross_entropy(logits.skeleton, sample.label));
    ce_rs.push_back(softmax_cross_entropy(logits.fused, sample.label));
    out.correct_rgb += argmax(logits.rgb.values()) == sample.label;
    out.correct_skeleton += argmax(logits.skeleton.values()) == sample.label;
    out.correct_fused += argmax(logits.fused.values()) == sample.label;
  }
  const Tensor l_r = mean(ce_r), l_s = mean(ce_s), l_rs = mean(ce_rs);
  switch (objective) {
    case Objective::kMultiModal: {
      MultimodalObjective mm = multimodal_loss(l_r, l_s, l_rs, weights);
      out.objective = mm.total;
      out.losses = mm.breakdown;
      break;
    }
    case Objective::kRgbOnly:
    case Objective::kSkeletonOnly: {
      const bool rgb = objective == Objective::kRgbOnly;
      out.objective = rgb ? l_r : l_s;
      out.losses = {l_r.item(), l_s.item(), l_rs.item(), out.objective.item(),
                    rgb ? Branch::kRgb : Branch::kSkeleton};
      break;
    }
    default: throw ConfigError("batch_loss: unknown objective");
  }
  return out;
}

LossBreakdown batch_loss(std::span<const MultiModalFeature> batch, const EseFnParams& params,
                         const LossWeights& weights, Objective objective) {
  BatchForward fwd = batch_forward(batch, params, weights, objective);
  backward(fwd.objective);
  return fwd.losses;
}

}  // namespace esefn
