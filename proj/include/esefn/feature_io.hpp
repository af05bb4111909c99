#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "esefn/sample.hpp"

namespace esefn {

// Precomputed-feature CSV, one file per modality:
//
//   #esef v1 dim=<D> classes=<K>
//   sample_id,label,x1,...,xD
//   ...
//
// UTF-8, "\n" line endings, "." decimal separator, values printed with 17
// significant digits so they read back bit-exactly.

struct ModalityRow {
  std::uint32_t sample_id = 0;
  std::uint32_t label = 0;
  std::vector<double> values;
};

struct ModalityFile {
  std::size_t dim = 0;
  std::size_t classes = 0;
  std::vector<ModalityRow> rows;
};

std::string format_modality_csv(const ModalityFile& file);
/// Throws ParseError naming the 1-based line number.
ModalityFile parse_modality_csv(const std::string& text);

void write_modality_file(const std::filesystem::path& path, const ModalityFile& file);
ModalityFile read_modality_file(const std::filesystem::path& path);

void write_features(const std::filesystem::path& rgb_path,
                    const std::filesystem::path& skeleton_path, const FeatureSet& data);

/// Reads and pairs the two modality files. Throws PairingError naming the
/// first sample id at which the files disagree.
FeatureSet read_features(const std::filesystem::path& rgb_path,
                         const std::filesystem::path& skeleton_path);

/// %.17g rendering shared by every text output.
std::string format_real(double value);

}  // namespace esefn
