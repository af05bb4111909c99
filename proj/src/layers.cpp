#include "esefn/layers.hpp"

#include <cmath>

#include "esefn/ops.hpp"

namespace esefn {

Tensor glorot_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  std::vector<double> values(shape.numel());
  for (double& v : values) v = dist(rng);
  return Tensor(shape, std::move(values), true);
}

Linear::Linear(std::size_t in, std::size_t out, Rng& rng)
    : weight(glorot_uniform(Shape{out, in}, in, out, rng)), bias(Tensor::zeros(Shape{out}, true)) {}

Tensor Linear::operator()(const Tensor& x) const { return fully_connected(x, weight, bias); }

void Linear::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Conv1d::Conv1d(std::size_t in_channels, std::size_t out_channels, std::size_t kernel,
               std::size_t stride_, std::size_t padding_, Rng& rng)
    : weight(glorot_uniform(Shape{out_channels, in_channels, kernel}, in_channels * kernel,
                            out_channels * kernel, rng)),
      bias(Tensor::zeros(Shape{out_channels}, true)),
      stride(stride_),
      padding(padding_) {}

Tensor Conv1d::operator()(const Tensor& x) const { return conv1d(x, weight, bias, stride, padding); }

void Conv1d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

ConvTranspose1d::ConvTranspose1d(std::size_t in_channels, std::size_t out_channels,
                                 std::size_t kernel, std::size_t stride_, std::size_t padding_,
                                 Rng& rng)
    : weight(glorot_uniform(Shape{in_channels, out_channels, kernel}, in_channels * kernel,
                            out_channels * kernel, rng)),
      bias(Tensor::zeros(Shape{out_channels}, true)),
      stride(stride_),
      padding(padding_) {}

Tensor ConvTranspose1d::operator()(const Tensor& x) const {
  return conv1d_transposed(x, weight, bias, stride, padding);
}

void ConvTranspose1d::collect(const std::string& prefix, ParamList& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Mlp::Mlp(std::size_t in, std::size_t hidden, std::size_t out, Rng& rng)
    : fc1(in, hidden, rng), fc2(hidden, out, rng) {}

Tensor Mlp::operator()(const Tensor& x) const { return fc2(relu(fc1(x))); }

void Mlp::collect(const std::string& prefix, ParamList& out) const {
  fc1.collect(prefix + ".fc1", out);
  fc2.collect(prefix + ".fc2", out);
}

}  // namespace esefn
