#include "qht/matrix_json.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace qht {

void write_density_matrix(const std::filesystem::path& path, const TwoModeDensityMatrix& rho,
                          const std::map<std::string, std::string>& meta) {
  const int d = rho.d();
  nlohmann::json entries = nlohmann::json::array();
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
          const Complex v = rho(k, l, m, n);
          entries.push_back({v.real(), v.imag()});
        }
  nlohmann::json j{{"dim", d}, {"entries", std::move(entries)}, {"meta", meta}};
  std::ofstream os(path);
  if (!os) throw io_error(path.string() + ": cannot open for writing");
  os << j.dump(2) << "\n";
  if (!os) throw io_error(path.string() + ": write failed");
}

DensityMatrixFile read_density_matrix(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw io_error(path.string() + ": cannot open for reading");
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  }
  try {
    const int d = j.at("dim").get<int>();
    if (d < 2 || d - 1 > kMaxPhoton)
      throw io_error(path.string() + ": dim out of range");
    const auto& entries = j.at("entries");
    const std::size_t want = std::size_t(d) * std::size_t(d) * std::size_t(d) * std::size_t(d);
    if (!entries.is_array() || entries.size() != want)
      throw io_error(path.string() + ": entries must be an array of length dim^4");
    DensityMatrixFile out{TwoModeDensityMatrix(ModeDim(d)), {}};
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int m = 0; m < d; ++m)
          for (int n = 0; n < d; ++n, ++idx) {
            const auto& e = entries[idx];
            if (!e.is_array() || e.size() != 2)
              throw io_error(path.string() + ": entry " + std::to_string(idx) +
                             " is not a [re, im] pair");
            const double re = e[0].get<double>();
            const double im = e[1].get<double>();
            if (!std::isfinite(re) || !std::isfinite(im))
              throw io_error(path.string() + ": non-finite entry " + std::to_string(idx));
            out.rho(k, l, m, n) = Complex(re, im);
          }
    if (j.contains("meta") && j["meta"].is_object())
      for (const auto& [key, value] : j["meta"].items())
        out.meta[key] = value.is_string() ? value.get<std::string>() : value.dump();
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw io_error(path.string() + ": " + e.what());
  }
}

}  // namespace qht
