#include "esefn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <optional>
#include <string>

#include "esefn/error.hpp"

namespace esefn {

namespace {

constexpr char kMagic[8] = {'E', 'S', 'E', 'F', 'N', 'C', 'K', 'P'};
constexpr const char* kConfigName = "meta.fusion_config";

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  std::uint8_t bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(bytes[i], bytes[sizeof(T) - 1 - i]);
  }
  out.insert(out.end(), bytes, bytes + sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + offset_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) {
      for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
    T value;
    std::memcpy(&value, raw, sizeof(T));
    offset_ += sizeof(T);
    return value;
  }

  std::span<const std::uint8_t> take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.subspan(offset_, n);
    offset_ += n;
    return s;
  }

  std::size_t offset() const { return offset_; }
  bool done() const { return offset_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError("checkpoint offset " + std::to_string(offset_) + ": " + what);
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - offset_ < n) {
      fail(std::string("truncated while reading ") + what + " (need " + std::to_string(n) +
           " bytes, " + std::to_string(bytes_.size() - offset_) + " left)");
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t offset_ = 0;
};

std::vector<double> config_to_values(const FusionConfig& c) {
  return {static_cast<double>(c.rgb_dim),        static_cast<double>(c.skeleton_dim),
          static_cast<double>(c.fused_dim),      static_cast<double>(c.classes),
          static_cast<double>(c.modal),          static_cast<double>(c.channel),
          static_cast<double>(c.readout),        static_cast<double>(c.mnet_kernels[0]),
          static_cast<double>(c.mnet_kernels[1]), static_cast<double>(c.mnet_kernels[2]),
          static_cast<double>(c.mnet_reduction), static_cast<double>(c.cnet_kernel),
          static_cast<double>(c.cnet_stride),    static_cast<double>(c.cnet_padding),
          static_cast<double>(c.cnet_reduction), static_cast<double>(c.se_reduction)};
}

FusionConfig config_from_values(std::span<const double> v) {
  constexpr std::size_t kFields = 16;
  if (v.size() != kFields) {
    throw FormatError(std::string(kConfigName) + " holds " + std::to_string(v.size()) +
                      " values, expected " + std::to_string(kFields));
  }
  auto field = [&](std::size_t i) {
    const double x = v[i];
    if (!(x >= 0) || x != std::floor(x) || x > 1e9) {
      throw FormatError(std::string(kConfigName) + " field " + std::to_string(i) +
                        " is not a small non-negative integer");
    }
    return static_cast<std::size_t>(x);
  };
  auto kind = [&](std::size_t i) {
    const std::size_t k = field(i);
    if (k > 2) throw FormatError(std::string(kConfigName) + ": unknown fusion kind");
    return static_cast<FusionKind>(k);
  };
  FusionConfig c;
  c.rgb_dim = field(0);
  c.skeleton_dim = field(1);
  c.fused_dim = field(2);
  c.classes = field(3);
  c.modal = kind(4);
  c.channel = kind(5);
  if (field(6) > 1) throw FormatError(std::string(kConfigName) + ": unknown readout");
  c.readout = static_cast<Readout>(field(6));
  c.mnet_kernels = {field(7), field(8), field(9)};
  c.mnet_reduction = field(10);
  c.cnet_kernel = field(11);
  c.cnet_stride = field(12);
  c.cnet_padding = field(13);
  c.cnet_reduction = field(14);
  c.se_reduction = field(15);
  return c;
}

}  // namespace

std::vector<std::uint8_t> encode_tensors(const ParamList& tensors) {
  if (tensors.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw InputError("too many tensors for a checkpoint");
  }
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, tensor] : tensors) {
    if (name.size() > std::numeric_limits<std::uint16_t>::max()) {
      throw InputError("tensor name too long: " + name.substr(0, 32) + "...");
    }
    put<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.insert(out.end(), name.begin(), name.end());
    const Shape& shape = tensor.shape();
    put<std::uint8_t>(out, static_cast<std::uint8_t>(shape.rank()));
    for (std::size_t d : shape.dims()) {
      if (d > std::numeric_limits<std::uint32_t>::max()) {
        throw InputError("tensor " + name + " extent exceeds u32");
      }
      put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    }
    for (double v : tensor.values()) put<double>(out, v);
  }
  return out;
}

ParamList decode_tensors(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  auto magic = in.take(sizeof kMagic, "magic");
  if (std::memcmp(magic.data(), kMagic, sizeof kMagic) != 0) {
    throw FormatError("checkpoint offset 0: bad magic, expected \"ESEFNCKP\"");
  }
  const auto version = in.get<std::uint32_t>("version");
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint offset 8: unsupported version " + std::to_string(version));
  }
  const auto count = in.get<std::uint32_t>("tensor count");
  ParamList out;
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::size_t entry_offset = in.offset();
    const auto name_len = in.get<std::uint16_t>("name length");
    auto name_bytes = in.take(name_len, "name");
    std::string name(name_bytes.begin(), name_bytes.end());
    const auto rank = in.get<std::uint8_t>("rank");
    if (rank > Shape::kMaxRank) in.fail("tensor " + name + " has rank " + std::to_string(rank));
    std::vector<std::size_t> dims(rank);
    std::size_t count_values = 1;
    for (auto& d : dims) {
      d = in.get<std::uint32_t>("dims");
      if (d == 0) in.fail("tensor " + name + " has a zero extent");
      if (count_values > (bytes.size() / sizeof(double)) / d) {
        in.fail("tensor " + name + " is larger than the file");
      }
      count_values *= d;
    }
    std::vector<double> values(count_values);
    for (auto& v : values) {
      v = in.get<double>("payload");
      if (!std::isfinite(v)) in.fail("tensor " + name + " holds a non-finite value");
    }
    try {
      out.push_back({std::move(name), Tensor(Shape(std::span<const std::size_t>(dims)),
                                             std::move(values), true)});
    } catch (const Error& e) {
      throw FormatError("checkpoint offset " + std::to_string(entry_offset) + ": " + e.what());
    }
  }
  if (!in.done()) in.fail("trailing bytes after last tensor");
  return out;
}

std::vector<std::uint8_t> encode_checkpoint(const EseFnParams& params) {
  ParamList all;
  all.push_back({kConfigName, Tensor::vector(config_to_values(params.config()))});
  for (auto& p : params.parameters()) all.push_back(std::move(p));
  return encode_tensors(all);
}

EseFnParams decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ParamList stored = decode_tensors(bytes);
  if (stored.empty() || stored[0].name != kConfigName) {
    throw FormatError("checkpoint does not start with " + std::string(kConfigName));
  }
  FusionConfig config = config_from_values(stored[0].tensor.values());
  Rng scratch(0);
  std::optional<EseFnParams> params;
  try {
    params.emplace(config, scratch);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("checkpoint architecture is invalid: ") + e.what());
  }
  ParamList expected = params->parameters();
  if (expected.size() + 1 != stored.size()) {
    throw FormatError("checkpoint holds " + std::to_string(stored.size() - 1) +
                      " parameters, architecture needs " + std::to_string(expected.size()));
  }
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const auto& src = stored[i + 1];
    auto& dst = expected[i];
    if (src.name != dst.name || !(src.tensor.shape() == dst.tensor.shape())) {
      throw FormatError("checkpoint tensor " + std::to_string(i + 1) + " is " + src.name + " " +
                        src.tensor.shape().str() + ", expected " + dst.name + " " +
                        dst.tensor.shape().str());
    }
    auto from = src.tensor.values();
    auto to = dst.tensor.mutable_values();
    std::copy(from.begin(), from.end(), to.begin());
  }
  return std::move(*params);
}

void save_checkpoint(const EseFnParams& params, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("write failed for checkpoint " + path.string());
}

EseFnParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace esefn
