#include "esefn/feature_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string_view>

#include "esefn/error.hpp"

namespace esefn {

namespace {

constexpr std::string_view kMagic = "#esef v1";

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw ParseError("line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (field.empty() || ec != std::errc() || ptr != last) {
    fail(line, std::string("non-numeric ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

// "key=<unsigned>" -> value
std::size_t parse_header_field(std::string_view token, std::string_view key, std::size_t line) {
  if (token.substr(0, key.size()) != key || token.size() == key.size() ||
      token[key.size()] != '=') {
    fail(line, "malformed header, expected '" + std::string(key) + "=<int>'");
  }
  return parse_number<std::size_t>(token.substr(key.size() + 1), line, "header value");
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed for " + path.string());
}

}  // namespace

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_modality_csv(const ModalityFile& file) {
  std::string out = std::string(kMagic) + " dim=" + std::to_string(file.dim) +
                    " classes=" + std::to_string(file.classes) + "\n";
  for (const auto& row : file.rows) {
    if (row.values.size() != file.dim) {
      throw InputError("sample " + std::to_string(row.sample_id) + " has " +
                       std::to_string(row.values.size()) + " values, header says " +
                       std::to_string(file.dim));
    }
    out += std::to_string(row.sample_id);
    out += ',';
    out += std::to_string(row.label);
    for (double v : row.values) {
      out += ',';
      out += format_real(v);
    }
    out += '\n';
  }
  return out;
}

ModalityFile parse_modality_csv(const std::string& text) {
  ModalityFile file;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (!header_seen) {
      // "#esef v1 dim=<D> classes=<K>"
      if (line.substr(0, kMagic.size()) != kMagic || line.size() <= kMagic.size() ||
          line[kMagic.size()] != ' ') {
        fail(line_no, "malformed header, expected '#esef v1 dim=<D> classes=<K>'");
      }
      const std::string_view rest = line.substr(kMagic.size() + 1);
      const std::size_t space = rest.find(' ');
      if (space == std::string_view::npos) fail(line_no, "malformed header, missing classes=");
      file.dim = parse_header_field(rest.substr(0, space), "dim", line_no);
      file.classes = parse_header_field(rest.substr(space + 1), "classes", line_no);
      if (file.dim == 0) fail(line_no, "header dim must be positive");
      if (file.classes < 2) fail(line_no, "header classes must be >= 2");
      header_seen = true;
      continue;
    }

    if (line.empty()) fail(line_no, "empty row");
    ModalityRow row;
    row.values.reserve(file.dim);
    std::size_t field_index = 0;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const std::string_view field =
          line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (field_index == 0) {
        row.sample_id = parse_number<std::uint32_t>(field, line_no, "sample_id");
      } else if (field_index == 1) {
        row.label = parse_number<std::uint32_t>(field, line_no, "label");
        if (row.label >= file.classes) {
          fail(line_no, "label " + std::to_string(row.label) + " >= classes " +
                            std::to_string(file.classes));
        }
      } else {
        const double v = parse_number<double>(field, line_no, "feature value");
        if (!std::isfinite(v)) fail(line_no, "non-finite feature value");
        row.values.push_back(v);
      }
      ++field_index;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (row.values.size() != file.dim) {
      fail(line_no, "expected " + std::to_string(file.dim) + " features, found " +
                        std::to_string(row.values.size()));
    }
    file.rows.push_back(std::move(row));
  }
  if (!header_seen) fail(1, "missing header");
  return file;
}

void write_modality_file(const std::filesystem::path& path, const ModalityFile& file) {
  write_file(path, format_modality_csv(file));
}

ModalityFile read_modality_file(const std::filesystem::path& path) {
  try {
    return parse_modality_csv(read_file(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_features(const std::filesystem::path& rgb_path,
                    const std::filesystem::path& skeleton_path, const FeatureSet& data) {
  data.validate();
  ModalityFile rgb{data.rgb_dim, data.classes, {}};
  ModalityFile skel{data.skeleton_dim, data.classes, {}};
  for (const auto& s : data.samples) {
    rgb.rows.push_back({s.sample_id, s.label, s.rgb});
    skel.rows.push_back({s.sample_id, s.label, s.skeleton});
  }
  write_modality_file(rgb_path, rgb);
  write_modality_file(skeleton_path, skel);
}

FeatureSet read_features(const std::filesystem::path& rgb_path,
                         const std::filesystem::path& skeleton_path) {
  ModalityFile rgb = read_modality_file(rgb_path);
  ModalityFile skel = read_modality_file(skeleton_path);
  if (rgb.classes != skel.classes) {
    throw PairingError("class counts differ: " + std::to_string(rgb.classes) + " in " +
                       rgb_path.string() + ", " + std::to_string(skel.classes) + " in " +
                       skeleton_path.string());
  }
  FeatureSet out;
  out.rgb_dim = rgb.dim;
  out.skeleton_dim = skel.dim;
  out.classes = rgb.classes;
  const std::size_t n = std::min(rgb.rows.size(), skel.rows.size());
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rgb.rows[i];
    auto& s = skel.rows[i];
    if (r.sample_id != s.sample_id) {
      throw PairingError("row " + std::to_string(i + 1) + ": sample id " +
                         std::to_string(r.sample_id) + " in RGB file pairs with id " +
                         std::to_string(s.sample_id) + " in skeleton file");
    }
    if (r.label != s.label) {
      throw PairingError("sample id " + std::to_string(r.sample_id) + ": labels differ (" +
                         std::to_string(r.label) + " vs " + std::to_string(s.label) + ")");
    }
    out.samples.push_back({r.sample_id, r.label, std::move(r.values), std::move(s.values)});
  }
  if (rgb.rows.size() != skel.rows.size()) {
    const auto& longer = rgb.rows.size() > skel.rows.size() ? rgb.rows : skel.rows;
    throw PairingError("sample id " + std::to_string(longer[n].sample_id) +
                       " has no partner: RGB file has " + std::to_string(rgb.rows.size()) +
                       " rows, skeleton file has " + std::to_string(skel.rows.size()));
  }
  return out;
}

}  // namespace esefn
