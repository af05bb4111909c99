#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "esefn/fusion.hpp"
#include "esefn/layers.hpp"

namespace esefn {

// Binary checkpoint layout, little-endian, no padding:
//
//   magic     8 bytes  "ESEFNCKP"
//   version   u32      1
//   count     u32      number of tensors
//   per tensor:
//     name_len  u16, name bytes
//     rank      u8,  dims u32 x rank
//     payload   f64 x product(dims)
//
// Model checkpoints store the architecture as an extra rank-1 tensor named
// "meta.fusion_config" ahead of the parameters.

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::vector<std::uint8_t> encode_tensors(const ParamList& tensors);
/// Throws FormatError naming the byte offset of the first problem.
ParamList decode_tensors(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_checkpoint(const EseFnParams& params);
EseFnParams decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const EseFnParams& params, const std::filesystem::path& path);
EseFnParams load_checkpoint(const std::filesystem::path& path);

}  // namespace esefn
