#pragma once

#include <array>
#include <cstddef>
#include <string>

#include "esefn/layers.hpp"
#include "esefn/tensor.hpp"

namespace esefn {

/// Output of an attention block: the gated feature map and the gate vector.
/// Every gate entry is a sigmoid output and lies strictly inside (0, 1).
struct AttentionResult {
  Tensor output;
  Tensor attention;
};

struct SeBlockConfig {
  std::size_t channels = 0;
  std::size_t reduction = 2;

  void validate() const;
};

/// Squeeze-and-excitation over a [C x L] map: pool each channel, pass the
/// C-vector through C -> C/r -> relu -> C -> sigmoid, and gate each channel.
class SeBlock {
 public:
  SeBlock(const SeBlockConfig& config, Rng& rng);

  const SeBlockConfig& config() const { return config_; }
  AttentionResult forward(const Tensor& x) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Linear fc_reduce;  // C -> C/r
  Linear fc_expand;  // C/r -> C

 private:
  SeBlockConfig config_;
};

/// Modal-fusion block geometry. The three expansion convolutions run in the
/// order conv3 -> conv2 -> conv1 with same-padding, so the spatial length stays
/// `length` throughout and the channel count grows n -> widths[0] -> widths[1]
/// -> widths[2] = m.
struct MNetConfig {
  std::size_t modalities = 2;  // n
  std::size_t length = 16;     // d
  std::array<std::size_t, 3> kernels{3, 5, 7};
  std::array<std::size_t, 3> widths{0, 0, 0};  // 0 => 2n, 4n, 8n
  std::size_t reduction = 2;                   // r_m

  /// Copy with default widths filled in.
  MNetConfig resolved() const;
  /// Throws ConfigError on any violated structural constraint.
  void validate() const;
  std::size_t expanded_channels() const { return resolved().widths[2]; }
};

/// Modal-wise expansion-squeeze-excitation. Input [n x d], one row per
/// modality; output rows are the input rows scaled by one gate each.
class MNet {
 public:
  MNet(const MNetConfig& config, Rng& rng);

  const MNetConfig& config() const { return config_; }
  /// The [m x d] expanded map, before squeezing.
  Tensor expand(const Tensor& f) const;
  AttentionResult forward(const Tensor& f) const;
  void collect(const std::string& prefix, ParamList& out) const;

  Conv1d conv3;  // n -> 2n
  Conv1d conv2;  // 2n -> 4n
  Conv1d conv1;  // 4n -> m
  Linear fc4;    // m -> m / r_m
  Linear fc3;    // m / r_m -> n

 private:
  MNetConfig config_;
};

/// Channel-fusion block geometry: a single transposed convolution expands the
/// modal axis from n to n1 = (n-1)*stride - 2*padding + kernel > n.
struct CNetConfig {
  std::size_t channels = 16;   // d
  std::size_t modalities = 2;  // n
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 0;
  std::size_t reduction = 4;  // r_c

  void validate() const;
  std::size_t expanded_length() const;
};

/// Channel-wise expansion-squeeze-excitation. Input [d x n], one row per
/// feature channel; each row is scaled by one gate.
class CNet {
 public:
  CNet(const CNetConfig& config, Rng& rng);

  const CNetConfig& config() const { return config_; }
  /// The [d x n1] expanded map, before squeezing.
  Tensor expand(const Tensor& h) const;
  AttentionResult forward(const Tensor& h) const;
  void collect(const std::string& prefix, ParamList& out) const;

  ConvTranspose1d conv4;  // d -> d channels, n -> n1 positions
  Linear fc6;             // d -> d / r_c
  Linear fc5;             // d / r_c -> d

 private:
  CNetConfig config_;
};

}  // namespace esefn
