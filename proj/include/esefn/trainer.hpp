#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "esefn/fusion.hpp"
#include "esefn/layers.hpp"
#include "esefn/sample.hpp"

namespace esefn {

struct OptimConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  std::size_t batch_size = 32;
  std::size_t epochs = 30;
  std::uint64_t seed = 0;
  // Step decay: multiply the rate by lr_step_gamma every lr_step_every epochs.
  // 0 disables it.
  std::size_t lr_step_every = 0;
  double lr_step_gamma = 0.1;

  /// ConfigError on any out-of-range field.
  void validate() const;
};

/// SGD with classical momentum and coupled weight decay:
///   v <- momentum * v + grad + weight_decay * w
///   w <- w - lr * v
/// Velocities start at zero.
class Sgd {
 public:
  Sgd(ParamList params, const OptimConfig& config);

  /// Applies one update from the accumulated gradients, then zeroes them.
  void step();

  double learning_rate() const { return learning_rate_; }
  void set_learning_rate(double lr) { learning_rate_ = lr; }
  const ParamList& params() const { return params_; }

 private:
  ParamList params_;
  std::vector<std::vector<double>> velocity_;
  double learning_rate_;
  double momentum_;
  double weight_decay_;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double l_total = 0;
  double l_r = 0;
  double l_s = 0;
  double l_rs = 0;
  double train_accuracy = 0;
};

struct HeadAccuracy {
  double rgb = 0;
  double skeleton = 0;
  double fused = 0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  HeadAccuracy test;
};

/// Accuracy of each head, argmax with ties to the lowest class.
HeadAccuracy evaluate(const EseFnParams& params, const FeatureSet& data);

/// Minibatch training. Each epoch draws a fresh permutation from a generator
/// seeded with `optim.seed`; the last partial batch is kept. Per-epoch losses
/// are sample-weighted means of the batch losses, and train accuracy is that
/// of the head `objective` optimizes. Parameters are updated in place.
TrainReport train(EseFnParams& params, const FeatureSet& train_set, const FeatureSet& test_set,
                  const OptimConfig& optim, const LossWeights& weights,
                  Objective objective = Objective::kMultiModal);

/// "epoch,l_total,l_r,l_s,l_rs,train_acc" followed by one row per epoch.
std::string format_report_csv(const TrainReport& report);

}  // namespace esefn
