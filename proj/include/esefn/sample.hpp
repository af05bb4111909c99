#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace esefn {

/// One paired observation: an RGB feature vector and a skeleton feature
/// vector describing the same sample, with its class label.
struct MultiModalFeature {
  std::uint32_t sample_id = 0;
  std::uint32_t label = 0;
  std::vector<double> rgb;       // d1
  std::vector<double> skeleton;  // d2

  friend bool operator==(const MultiModalFeature&, const MultiModalFeature&) = default;
};

/// A dataset with its declared geometry.
struct FeatureSet {
  std::size_t rgb_dim = 0;
  std::size_t skeleton_dim = 0;
  std::size_t classes = 0;
  std::vector<MultiModalFeature> samples;

  /// Throws InputError if any sample disagrees with the declared geometry or
  /// holds a non-finite value.
  void validate() const;
};

}  // namespace esefn
