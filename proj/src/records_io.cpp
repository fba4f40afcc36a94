#include "qht/records_io.hpp"

#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace qht {

namespace {

constexpr char kMagic[4] = {'Q', 'H', 'D', '1'};

[[noreturn]] void fail(const std::filesystem::path& path, const std::string& what) {
  throw io_error(path.string() + ": " + what);
}

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t r = 0;
  for (int i = 0; i < 8; ++i) r = (r << 8) | ((v >> (8 * i)) & 0xFF);
  return r;
}

void put_f64(std::ostream& os, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, 8);
  bits = to_le(bits);
  os.write(reinterpret_cast<const char*>(&bits), 8);
}

double get_f64(std::istream& is) {
  std::uint64_t bits = 0;
  is.read(reinterpret_cast<char*>(&bits), 8);
  bits = to_le(bits);
  double x;
  std::memcpy(&x, &bits, 8);
  return x;
}

void write_csv(const std::vector<QuadratureRecord>& records, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) fail(path, "cannot open for writing");
  os << "x1,theta1,x2,theta2\n";
  std::array<char, 128> buf{};
  for (const auto& r : records) {
    std::snprintf(buf.data(), buf.size(), "%.17g,%.17g,%.17g,%.17g\n", r.x1, r.theta1, r.x2,
                  r.theta2);
    os << buf.data();
  }
  os.flush();
  if (!os) fail(path, "write failed");
}

void write_binary(const std::vector<QuadratureRecord>& records, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(path, "cannot open for writing");
  os.write(kMagic, 4);
  const std::uint64_t count = to_le(records.size());
  os.write(reinterpret_cast<const char*>(&count), 8);
  for (const auto& r : records) {
    put_f64(os, r.x1);
    put_f64(os, r.theta1);
    put_f64(os, r.x2);
    put_f64(os, r.theta2);
  }
  os.flush();
  if (!os) fail(path, "write failed");
}

std::vector<QuadratureRecord> read_csv(std::ifstream& is, const std::filesystem::path& path) {
  std::string line;
  if (!std::getline(is, line)) fail(path, "empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "x1,theta1,x2,theta2")
    fail(path, "line 1: expected header `x1,theta1,x2,theta2`, got `" + line + "`");
  std::vector<QuadratureRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    double v[4];
    std::size_t pos = 0;
    for (int f = 0; f < 4; ++f) {
      const std::size_t end = f < 3 ? line.find(',', pos) : line.size();
      if (end == std::string::npos)
        fail(path, "line " + std::to_string(lineno) + ": expected 4 comma-separated fields");
      const std::string field = line.substr(pos, end - pos);
      // strtod, not stod: stod throws on subnormals, which are legitimate values
      char* endp = nullptr;
      v[f] = std::strtod(field.c_str(), &endp);
      if (endp == field.c_str() || *endp != '\0')
        fail(path, "line " + std::to_string(lineno) + ": bad number `" + field + "`");
      if (!std::isfinite(v[f]))
        fail(path, "line " + std::to_string(lineno) + ": non-finite value");
      pos = end + 1;
    }
    out.push_back({v[0], v[1], v[2], v[3]});
  }
  return out;
}

std::vector<QuadratureRecord> read_binary(std::ifstream& is, const std::filesystem::path& path) {
  std::uint64_t count = 0;
  is.read(reinterpret_cast<char*>(&count), 8);
  if (!is) fail(path, "truncated header (missing record count)");
  count = to_le(count);
  std::vector<QuadratureRecord> out;
  out.reserve(count < (1ULL << 32) ? count : 0);
  for (std::uint64_t i = 0; i < count; ++i) {
    QuadratureRecord r;
    r.x1 = get_f64(is);
    r.theta1 = get_f64(is);
    r.x2 = get_f64(is);
    r.theta2 = get_f64(is);
    if (!is)
      fail(path, "truncated at record " + std::to_string(i) + " of " + std::to_string(count) +
                     " (offset " + std::to_string(12 + 32 * i) + ")");
    if (!(std::isfinite(r.x1) && std::isfinite(r.theta1) && std::isfinite(r.x2) &&
          std::isfinite(r.theta2)))
      fail(path, "non-finite value in record " + std::to_string(i));
    out.push_back(r);
  }
  char extra;
  if (is.read(&extra, 1)) fail(path, "trailing bytes after " + std::to_string(count) + " records");
  return out;
}

}  // namespace

void write_records(const std::vector<QuadratureRecord>& records,
                   const std::filesystem::path& path, RecordFormat format) {
  if (format == RecordFormat::csv)
    write_csv(records, path);
  else
    write_binary(records, path);
}

std::vector<QuadratureRecord> read_records(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(path, "cannot open for reading");
  char head[4] = {0, 0, 0, 0};
  is.read(head, 4);
  if (is.gcount() >= 3 && head[0] == 'Q' && head[1] == 'H' && head[2] == 'D') {
    if (is.gcount() == 4 && head[3] == '1') return read_binary(is, path);
    fail(path, std::string("unsupported binary version `") +
                   std::string(head, std::size_t(is.gcount())) + "` (expected QHD1)");
  }
  is.clear();
  is.seekg(0);
  std::ifstream text(path);
  if (!text) fail(path, "cannot open for reading");
  return read_csv(text, path);
}

void write_sim_metadata(const std::filesystem::path& records_path, const SimMetadata& meta) {
  nlohmann::json j{{"seed", meta.seed},
                   {"n_records", meta.n_records},
                   {"relative_steps", meta.relative_steps},
                   {"state", meta.state},
                   {"generator", meta.generator}};
  const std::filesystem::path out = records_path.string() + ".meta.json";
  std::ofstream os(out);
  if (!os) fail(out, "cannot open for writing");
  os << j.dump(2) << "\n";
  if (!os) fail(out, "write failed");
}

}  // namespace qht
