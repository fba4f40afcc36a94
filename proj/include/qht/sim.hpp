#pragma once

// Monte Carlo generation of two-mode quadrature records from a density matrix,
// under the experiment's phase schedule: the relative phase theta2-theta1 cycles
// through equally spaced steps while the global phase theta2+theta1 is uniform
// random per record.

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qht/fock.hpp"

namespace qht {

// Recorded in metadata side-files for reproducibility.
inline constexpr const char* kGeneratorName = "mt19937_64/splitmix64-shards/box-muller";

struct QuadratureRecord {
  double x1 = 0.0;
  double theta1 = 0.0;
  double x2 = 0.0;
  double theta2 = 0.0;
};

struct PhaseSchedule {
  int relative_steps = 12;  // equally spaced theta2-theta1 values over [0, 2pi)
};

struct SimConfig {
  TwoModeDensityMatrix state;
  std::optional<double> model_eta;  // set => exact fast path for model_state(eta)
  std::uint64_t n_records = 0;
  PhaseSchedule schedule;
  std::uint64_t seed = 0;

  static SimConfig model(double eta, std::uint64_t n, std::uint64_t seed,
                         PhaseSchedule schedule = {});
  static SimConfig from_state(TwoModeDensityMatrix rho, std::uint64_t n, std::uint64_t seed,
                              PhaseSchedule schedule = {});
};

// Draws n_records i.i.d. samples of (x1, x2) from quadrature_pdf at scheduled
// phases. Reproducible: identical config => identical records. The stream is
// organized in fixed-size shards with SplitMix64-derived sub-seeds, shard-major
// order, so the output does not depend on how shards are executed.
// Throws std::invalid_argument for non-PSD / non-unit-trace states.
std::vector<QuadratureRecord> sample_records(const SimConfig& config);

// Acceptance rate of the last general-path rejection run (diagnostic; the fast
// model path reports the rate of its excited-branch rejection step).
double last_acceptance_rate();

// SplitMix64 mix function; used to derive per-shard sub-seeds.
std::uint64_t splitmix64(std::uint64_t z);

// Deterministic RNG with transforms written out explicitly so streams are
// bit-identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : _gen(seed) {}
  std::uint64_t next_u64() { return _gen(); }
  // uniform double in [0, 1) with 53-bit resolution
  double uniform() { return static_cast<double>(_gen() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  // standard normal via Box-Muller (pairs cached)
  double normal();
  // uniform integer in [0, n) by rejection (unbiased)
  std::uint64_t below(std::uint64_t n);

 private:
  std::mt19937_64 _gen;
  double _spare = 0.0;
  bool _has_spare = false;
};

}  // namespace qht
