#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "esefn/tensor.hpp"

namespace esefn {

using Rng = std::mt19937_64;

struct NamedTensor {
  std::string name;
  Tensor tensor;
};

/// Parameters in a fixed, documented order. Checkpoints, optimizers and
/// gradient checks all iterate in this order.
using ParamList = std::vector<NamedTensor>;

/// Weight tensor drawn uniformly from +/- sqrt(6 / (fan_in + fan_out)).
Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// y = W x + b
struct Linear {
  Tensor weight;  // [out x in]
  Tensor bias;    // [out]

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);

  std::size_t in_features() const { return weight.shape()[1]; }
  std::size_t out_features() const { return weight.shape()[0]; }
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

/// Cross-correlation layer; weight [out x in x k].
struct Conv1d {
  Tensor weight;
  Tensor bias;
  std::size_t stride = 1;
  std::size_t padding = 0;

  Conv1d() = default;
  Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
         std::size_t stride, std::size_t padding, Rng& rng);

  std::size_t kernel() const { return weight.shape()[2]; }
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

/// Spatially expanding transposed convolution; weight [in x out x k].
struct ConvTranspose1d {
  Tensor weight;
  Tensor bias;
  std::size_t stride = 1;
  std::size_t padding = 0;

  ConvTranspose1d() = default;
  ConvTranspose1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
                  std::size_t stride, std::size_t padding, Rng& rng);

  std::size_t kernel() const { return weight.shape()[2]; }
  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

/// in -> hidden -> relu -> out
struct Mlp {
  Linear fc1;
  Linear fc2;

  Mlp() = default;
  Mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng);

  Tensor operator()(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;
};

}  // namespace esefn
