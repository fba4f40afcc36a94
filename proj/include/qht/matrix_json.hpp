#pragma once

// Density-matrix JSON document, shared by every tool:
//   { "dim": d,
//     "entries": [[re, im], ...],   // length d^4, flat index ((k*d+l)*d+m)*d+n
//     "meta": { ... } }             // free-form provenance strings

#include <filesystem>
#include <map>
#include <string>

#include "qht/fock.hpp"

namespace qht {

void write_density_matrix(const std::filesystem::path& path, const TwoModeDensityMatrix& rho,
                          const std::map<std::string, std::string>& meta = {});

struct DensityMatrixFile {
  TwoModeDensityMatrix rho;
  std::map<std::string, std::string> meta;
};

// Throws io_error for unreadable files, malformed JSON, wrong entry count, or
// non-finite values.
DensityMatrixFile read_density_matrix(const std::filesystem::path& path);

}  // namespace qht
