#pragma once

// Record-file formats: CSV with header `x1,theta1,x2,theta2` (17 significant
// digits) and the "QHD1" binary layout (magic, little-endian u64 count, then
// 4 x f64 per record). Plus the JSON metadata side-file written next to
// simulation outputs.

#include <filesystem>
#include <string>
#include <vector>

#include "qht/sim.hpp"

namespace qht {

enum class RecordFormat { csv, binary };

// Writes records; binary round-trips bit-exactly, CSV value-exactly (17 digits).
// Throws io_error on filesystem failure.
void write_records(const std::vector<QuadratureRecord>& records,
                   const std::filesystem::path& path, RecordFormat format);

// Reads either format (auto-detected from the magic bytes). Throws io_error with
// line/offset context for malformed headers, truncation, or non-finite values.
std::vector<QuadratureRecord> read_records(const std::filesystem::path& path);

struct SimMetadata {
  std::uint64_t seed = 0;
  std::uint64_t n_records = 0;
  int relative_steps = 12;
  std::string state;      // e.g. "model_state(eta=0.61)" or a source path
  std::string generator;  // kGeneratorName
};

// JSON side-file "<records path>.meta.json".
void write_sim_metadata(const std::filesystem::path& records_path, const SimMetadata& meta);

}  // namespace qht
