#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "esefn/sample.hpp"

namespace esefn {

/// Two latent factors z_A in [0, A) and z_B in [0, B) determine the label
/// z_A * B + z_B. The RGB modality sees only z_A and the skeleton modality only
/// z_B, so neither modality alone can beat 1/B (resp. 1/A) accuracy while the
/// pair identifies the class.
struct SynthSpec {
  std::size_t factor_a = 2;  // A
  std::size_t factor_b = 2;  // B
  std::size_t rgb_dim = 8;
  std::size_t skeleton_dim = 8;
  double noise_sigma = 0.1;
  std::size_t samples_per_class = 100;
  std::uint64_t seed = 7;

  std::size_t classes() const { return factor_a * factor_b; }
  /// Amplitude of the one-hot prototypes: max(1, 4 * noise_sigma).
  double prototype_scale() const;
  void validate() const;
};

/// Class-balanced, seed-deterministic jointly separable dataset. Samples are
/// shuffled and numbered 0..N-1 in their final order.
FeatureSet generate_xor_pair(const SynthSpec& spec);

/// Noise-free RGB feature for z_A = a (scaled one-hot on coordinate a).
std::vector<double> rgb_prototype(const SynthSpec& spec, std::size_t a);
/// Noise-free skeleton feature for z_B = b.
std::vector<double> skeleton_prototype(const SynthSpec& spec, std::size_t b);

struct TrainTestSplit {
  FeatureSet train;
  FeatureSet test;
};

/// Stratified split keeping sample order: within each class the last
/// round(count * test_fraction) samples go to the test set.
TrainTestSplit split_train_test(const FeatureSet& data, double test_fraction);

}  // namespace esefn
