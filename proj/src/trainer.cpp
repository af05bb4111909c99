#include "esefn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "esefn/error.hpp"
#include "esefn/feature_io.hpp"

namespace esefn {

void OptimConfig::validate() const {
  if (!std::isfinite(learning_rate) || learning_rate < 0) {
    throw ConfigError("learning rate must be finite and >= 0");
  }
  if (!(momentum >= 0 && momentum < 1)) throw ConfigError("momentum must lie in [0, 1)");
  if (!std::isfinite(weight_decay) || weight_decay < 0) {
    throw ConfigError("weight decay must be finite and >= 0");
  }
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (!std::isfinite(lr_step_gamma) || lr_step_gamma <= 0) {
    throw ConfigError("lr step gamma must be positive");
  }
}

Sgd::Sgd(ParamList params, const OptimConfig& config)
    : params_(std::move(params)),
      learning_rate_(config.learning_rate),
      momentum_(config.momentum),
      weight_decay_(config.weight_decay) {
  config.validate();
  velocity_.reserve(params_.size());
  for (const auto& p : params_) velocity_.emplace_back(p.tensor.numel(), 0.0);
}

void Sgd::step() {
  for (auto& p : params_) {
    if (!p.tensor.requires_grad()) {
      throw UsageError("sgd step: parameter " + p.name + " carries no gradient");
    }
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto w = params_[i].tensor.mutable_values();
    auto g = params_[i].tensor.mutable_grad();
    auto& v = velocity_[i];
    for (std::size_t j = 0; j < w.size(); ++j) {
      v[j] = momentum_ * v[j] + g[j] + weight_decay_ * w[j];
      w[j] -= learning_rate_ * v[j];
      g[j] = 0.0;
    }
    require_finite(w, "parameter " + params_[i].name + " after sgd step");
  }
}

HeadAccuracy evaluate(const EseFnParams& params, const FeatureSet& data) {
  data.validate();
  if (data.samples.empty()) return {};
  std::size_t rgb = 0, skel = 0, fused = 0;
  for (const auto& s : data.samples) {
    const Logits l = predict(Tensor::vector(s.rgb), Tensor::vector(s.skeleton), params);
    rgb += argmax(l.rgb.values()) == s.label;
    skel += argmax(l.skeleton.values()) == s.label;
    fused += argmax(l.fused.values()) == s.label;
  }
  const double n = static_cast<double>(data.samples.size());
  return {static_cast<double>(rgb) / n, static_cast<double>(skel) / n,
          static_cast<double>(fused) / n};
}

namespace {

void check_geometry(const EseFnParams& params, const FeatureSet& data, const char* which) {
  const auto& c = params.config();
  if (data.rgb_dim != c.rgb_dim || data.skeleton_dim != c.skeleton_dim ||
      data.classes != c.classes) {
    throw InputError(std::string(which) + " set has dims (rgb=" + std::to_string(data.rgb_dim) +
                     ", skeleton=" + std::to_string(data.skeleton_dim) +
                     ", classes=" + std::to_string(data.classes) + "), model expects (rgb=" +
                     std::to_string(c.rgb_dim) + ", skeleton=" + std::to_string(c.skeleton_dim) +
                     ", classes=" + std::to_string(c.classes) + ")");
  }
  data.validate();
}

}  // namespace

TrainReport train(EseFnParams& params, const FeatureSet& train_set, const FeatureSet& test_set,
                  const OptimConfig& optim, const LossWeights& weights, Objective objective) {
  optim.validate();
  check_geometry(params, train_set, "training");
  check_geometry(params, test_set, "test");
  if (train_set.samples.empty()) throw InputError("training set is empty");

  Sgd sgd(params.parameters(), optim);
  params.zero_grads();
  Rng shuffle_rng(optim.seed);
  std::vector<std::size_t> order(train_set.samples.size());
  std::vector<MultiModalFeature> batch;
  batch.reserve(optim.batch_size);

  TrainReport report;
  for (std::size_t epoch = 1; epoch <= optim.epochs; ++epoch) {
    if (optim.lr_step_every > 0 && epoch > 1 && (epoch - 1) % optim.lr_step_every == 0) {
      sgd.set_learning_rate(sgd.learning_rate() * optim.lr_step_gamma);
    }
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochStats stats;
    stats.epoch = epoch;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += optim.batch_size) {
      const std::size_t end = std::min(order.size(), start + optim.batch_size);
      batch.clear();
      for (std::size_t i = start; i < end; ++i) batch.push_back(train_set.samples[order[i]]);

      BatchForward fwd = batch_forward(batch, params, weights, objective);
      backward(fwd.objective);
      sgd.step();

      const auto n = static_cast<double>(batch.size());
      stats.l_total += fwd.losses.l_total * n;
      stats.l_r += fwd.losses.l_r * n;
      stats.l_s += fwd.losses.l_s * n;
      stats.l_rs += fwd.losses.l_rs * n;
      switch (objective) {
        case Objective::kRgbOnly: correct += fwd.correct_rgb; break;
        case Objective::kSkeletonOnly: correct += fwd.correct_skeleton; break;
        default: correct += fwd.correct_fused; break;
      }
    }
    const auto total = static_cast<double>(order.size());
    stats.l_total /= total;
    stats.l_r /= total;
    stats.l_s /= total;
    stats.l_rs /= total;
    stats.train_accuracy = static_cast<double>(correct) / total;
    report.epochs.push_back(stats);
  }
  report.test = evaluate(params, test_set);
  return report;
}

std::string format_report_csv(const TrainReport& report) {
  std::string out = "epoch,l_total,l_r,l_s,l_rs,train_acc\n";
  for (const auto& e : report.epochs) {
    out += std::to_string(e.epoch);
    for (double v : {e.l_total, e.l_r, e.l_s, e.l_rs, e.train_accuracy}) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

}  // namespace esefn
