#include "esefn/attention.hpp"

#include "esefn/error.hpp"
#include "esefn/ops.hpp"

namespace esefn {

namespace {

std::string num(std::size_t v) { return std::to_string(v); }

AttentionResult excite_and_gate(const Tensor& x, const Tensor& pooled, const Linear& reduce,
                                const Linear& expand) {
  Tensor gates = sigmoid(expand(relu(reduce(pooled))));
  return {scale_rows(x, gates), gates};
}

}  // namespace

void SeBlockConfig::validate() const {
  if (channels == 0) throw ConfigError("SE block: channel count must be positive");
  if (reduction == 0 || channels % reduction != 0) {
    throw ConfigError("SE block: channels " + num(channels) + " not divisible by reduction " +
                      num(reduction));
  }
}

SeBlock::SeBlock(const SeBlockConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const std::size_t hidden = config_.channels / config_.reduction;
  fc_reduce = Linear(config_.channels, hidden, rng);
  fc_expand = Linear(hidden, config_.channels, rng);
}

AttentionResult SeBlock::forward(const Tensor& x) const {
  if (x.shape().rank() != 2 || x.shape()[0] != config_.channels) {
    throw DimensionError("SE block expects [" + num(config_.channels) + " x L] input, got " +
                         x.shape().str());
  }
  return excite_and_gate(x, global_avg_pool(x), fc_reduce, fc_expand);
}

void SeBlock::collect(const std::string& prefix, ParamList& out) const {
  fc_reduce.collect(prefix + ".fc_reduce", out);
  fc_expand.collect(prefix + ".fc_expand", out);
}

MNetConfig MNetConfig::resolved() const {
  MNetConfig c = *this;
  const std::array<std::size_t, 3> defaults{2 * modalities, 4 * modalities, 8 * modalities};
  for (std::size_t i = 0; i < 3; ++i) {
    if (c.widths[i] == 0) c.widths[i] = defaults[i];
  }
  return c;
}

void MNetConfig::validate() const {
  const MNetConfig c = resolved();
  const std::size_t n = c.modalities, d = c.length, m = c.widths[2];
  if (n < 2) throw ConfigError("M-Net: needs at least 2 modalities, got " + num(n));
  if (d == 0) throw ConfigError("M-Net: feature length must be positive");
  for (std::size_t i = 0; i < 3; ++i) {
    if (c.kernels[i] == 0 || c.kernels[i] % 2 == 0) {
      throw ConfigError("M-Net: kernel sizes must be odd for length-preserving padding, got " +
                        num(c.kernels[i]));
    }
  }
  if (m % n != 0) {
    throw ConfigError("M-Net: expanded channels m=" + num(m) + " not divisible by n=" + num(n));
  }
  // The expanded map keeps length d, so m*d > n*d reduces to m > n.
  if (!(m * d > n * d)) {
    throw ConfigError("M-Net: expansion must grow the map, m*d_m=" + num(m * d) +
                      " <= n*d=" + num(n * d));
  }
  if (!(m < n * d)) {
    throw ConfigError("M-Net: squeeze must shrink the map, m=" + num(m) + " >= n*d=" + num(n * d));
  }
  if (c.reduction == 0 || m % c.reduction != 0) {
    throw ConfigError("M-Net: m=" + num(m) + " not divisible by reduction " + num(c.reduction));
  }
}

MNet::MNet(const MNetConfig& config, Rng& rng) : config_(config.resolved()) {
  config_.validate();
  const auto& c = config_;
  const auto& k = c.kernels;
  conv3 = Conv1d(c.modalities, c.widths[0], k[0], 1, (k[0] - 1) / 2, rng);
  conv2 = Conv1d(c.widths[0], c.widths[1], k[1], 1, (k[1] - 1) / 2, rng);
  conv1 = Conv1d(c.widths[1], c.widths[2], k[2], 1, (k[2] - 1) / 2, rng);
  fc4 = Linear(c.widths[2], c.widths[2] / c.reduction, rng);
  fc3 = Linear(c.widths[2] / c.reduction, c.modalities, rng);
}

Tensor MNet::expand(const Tensor& f) const {
  if (f.shape().rank() != 2 || f.shape()[0] != config_.modalities ||
      f.shape()[1] != config_.length) {
    throw DimensionError("M-Net expects [" + num(config_.modalities) + " x " +
                         num(config_.length) + "] input, got " + f.shape().str());
  }
  return conv1(conv2(conv3(f)));
}

AttentionResult MNet::forward(const Tensor& f) const {
  const Tensor expanded = expand(f);
  return excite_and_gate(f, global_avg_pool(expanded), fc4, fc3);
}

void MNet::collect(const std::string& prefix, ParamList& out) const {
  conv3.collect(prefix + ".conv3", out);
  conv2.collect(prefix + ".conv2", out);
  conv1.collect(prefix + ".conv1", out);
  fc4.collect(prefix + ".fc4", out);
  fc3.collect(prefix + ".fc3", out);
}

void CNetConfig::validate() const {
  if (channels == 0) throw ConfigError("C-Net: channel count must be positive");
  if (modalities == 0) throw ConfigError("C-Net: modal count must be positive");
  if (reduction == 0 || channels % reduction != 0) {
    throw ConfigError("C-Net: channels " + num(channels) + " not divisible by reduction " +
                      num(reduction));
  }
  (void)expanded_length();
}

std::size_t CNetConfig::expanded_length() const {
  return conv1d_transposed_length(modalities, kernel, stride, padding);
}

CNet::CNet(const CNetConfig& config, Rng& rng) : config_(config) {
  config_.validate();
  const auto& c = config_;
  conv4 = ConvTranspose1d(c.channels, c.channels, c.kernel, c.stride, c.padding, rng);
  fc6 = Linear(c.channels, c.channels / c.reduction, rng);
  fc5 = Linear(c.channels / c.reduction, c.channels, rng);
}

Tensor CNet::expand(const Tensor& h) const {
  if (h.shape().rank() != 2 || h.shape()[0] != config_.channels ||
      h.shape()[1] != config_.modalities) {
    throw DimensionError("C-Net expects [" + num(config_.channels) + " x " +
                         num(config_.modalities) + "] input, got " + h.shape().str());
  }
  return conv4(h);
}

AttentionResult CNet::forward(const Tensor& h) const {
  const Tensor expanded = expand(h);
  return excite_and_gate(h, global_avg_pool(expanded), fc6, fc5);
}

void CNet::collect(const std::string& prefix, ParamList& out) const {
  conv4.collect(prefix + ".conv4", out);
  fc6.collect(prefix + ".fc6", out);
  fc5.collect(prefix + ".fc5", out);
}

}  // namespace esefn
