#include "qht/sim.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qht {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::uint64_t kShardSize = 1 << 16;

double g_last_acceptance = 1.0;

double mod_two_pi(double t) {
  t = std::fmod(t, kTwoPi);
  return t < 0.0 ? t + kTwoPi : t;
}

// Unvalidated joint density at fixed phases (state checked once upfront).
double pdf_at(const TwoModeDensityMatrix& rho, const std::vector<double>& p1,
              const std::vector<double>& p2, double theta1, double theta2) {
  const int d = rho.d();
  Complex acc(0.0, 0.0);
  for (int k = 0; k < d; ++k)
    for (int m = 0; m < d; ++m) {
      const Complex a = p1[std::size_t(k)] * p1[std::size_t(m)] * std::polar(1.0, (m - k) * theta1);
      for (int l = 0; l < d; ++l)
        for (int n = 0; n < d; ++n)
          acc += rho(k, l, m, n) * a * p2[std::size_t(l)] * p2[std::size_t(n)] *
                 std::polar(1.0, (n - l) * theta2);
    }
  return acc.real();
}

// sup over a grid of p_hat(x1,x2) * e^{x1^2+x2^2}, where p_hat majorizes the joint
// density over all phases: p_hat = sum |rho_klmn| |psi_k psi_m|(x1) |psi_l psi_n|(x2).
// The widened-Gaussian proposal e^{-(x1^2+x2^2)}/pi then dominates p/M with
// M = pi * sup * 1.2 (20% safety margin).
// Gaussian proposal q(x1, x2) = e^{-r^2 / (2 s2)} / (2 pi s2) per record with the
// envelope constant m such that m q >= p for every phase pair.
struct Envelope {
  double sigma = 0.0;        // proposal standard deviation per mode
  double inv_two_s2 = 0.0;   // 1 / (2 sigma^2)
  double norm = 0.0;         // 1 / (2 pi sigma^2)
  double m = 0.0;
};

// Bounds sup over x1, x2 and all phases of p / q by grouping elements into
// phase harmonics:
//   p = sum_{q1 q2} C_{q1 q2}(x1, x2) e^{i(q1 theta1 + q2 theta2)} <= sum |C_{q1 q2}|,
// C_{q1 q2} = sum_{k l} rho_{k,l,k+q1,l+q2} psi_k psi_{k+q1}(x1) psi_l psi_{l+q2}(x2).
// Evaluated on a grid for two candidate proposal widths (sigma^2 = 1/2 and 1,
// both wider than the vacuum's 1/4 so the ratio stays bounded); the width with
// the smaller envelope constant wins. A 20% safety margin absorbs grid slack.
Envelope choose_envelope(const TwoModeDensityMatrix& rho) {
  const int d = rho.d();
  const double lim = 7.0, step = 0.02;
  const int npts = static_cast<int>(2 * lim / step) + 1;
  const auto npts_z = static_cast<std::size_t>(npts);
  const auto d_z = static_cast<std::size_t>(d);
  const int nq = 2 * d - 1;  // harmonic index q + d - 1 in [0, 2d-2]
  // pair products psi_k(x) psi_{k+q}(x) per grid point, indexed (q + d - 1) * d + k
  std::vector<std::vector<double>> prod(npts_z);
  std::vector<double> psi(d_z);
  for (int ix = 0; ix < npts; ++ix) {
    const double x = -lim + step * ix;
    fill_wavefunctions(d - 1, x, psi.data());
    auto& row = prod[std::size_t(ix)];
    row.assign(std::size_t(nq * d), 0.0);
    for (int q = -(d - 1); q <= d - 1; ++q)
      for (int k = std::max(0, -q); k < d - std::max(0, q); ++k)
        row[std::size_t((q + d - 1) * d + k)] =
            psi[std::size_t(k)] * psi[std::size_t(k + q)];
  }
  double sup_half = 0.0, sup_one = 0.0;  // weights e^{r^2} and e^{r^2/2}
  for (int ix = 0; ix < npts; ++ix) {
    const double x1 = -lim + step * ix;
    const auto& row1 = prod[std::size_t(ix)];
    for (int iy = 0; iy < npts; ++iy) {
      const double x2 = -lim + step * iy;
      const auto& row2 = prod[std::size_t(iy)];
      double phat = 0.0;
      for (int q1 = -(d - 1); q1 <= d - 1; ++q1)
        for (int q2 = -(d - 1); q2 <= d - 1; ++q2) {
          Complex c = 0.0;
          for (int k = std::max(0, -q1); k < d - std::max(0, q1); ++k) {
            const double p1 = row1[std::size_t((q1 + d - 1) * d + k)];
            if (p1 == 0.0) continue;
            for (int l = std::max(0, -q2); l < d - std::max(0, q2); ++l)
              c += rho(k, l, k + q1, l + q2) * (p1 * row2[std::size_t((q2 + d - 1) * d + l)]);
          }
          phat += std::abs(c);
        }
      const double r2 = x1 * x1 + x2 * x2;
      sup_half = std::max(sup_half, phat * std::exp(r2));
      sup_one = std::max(sup_one, phat * std::exp(0.5 * r2));
    }
  }
  const double pi = std::numbers::pi;
  const double m_half = pi * sup_half * 1.2;
  const double m_one = 2.0 * pi * sup_one * 1.2;
  if (m_half <= m_one) return {1.0 / std::sqrt(2.0), 1.0, 1.0 / pi, m_half};
  return {1.0, 0.5, 1.0 / (2.0 * pi), m_one};
}

struct PhaseDraw {
  double theta1, theta2, delta;
};

PhaseDraw draw_phases(Rng& rng, std::uint64_t global_index, int steps) {
  const double delta = kTwoPi * double(global_index % std::uint64_t(steps)) / double(steps);
  const double sum = rng.uniform(0.0, 2.0 * kTwoPi);  // theta1+theta2
  return {mod_two_pi((sum - delta) / 2.0), mod_two_pi((sum + delta) / 2.0), delta};
}

}  // namespace

double Rng::normal() {
  if (_has_spare) {
    _has_spare = false;
    return _spare;
  }
  // Box-Muller on (0,1] x [0,1)
  double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  _spare = r * std::sin(kTwoPi * u2);
  _has_spare = true;
  return r * std::cos(kTwoPi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("Rng::below: n must be positive");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

SimConfig SimConfig::model(double eta, std::uint64_t n, std::uint64_t seed,
                           PhaseSchedule schedule) {
  SimConfig c{model_state(eta), eta, n, schedule, seed};
  return c;
}

SimConfig SimConfig::from_state(TwoModeDensityMatrix rho, std::uint64_t n, std::uint64_t seed,
                                PhaseSchedule schedule) {
  SimConfig c{std::move(rho), std::nullopt, n, schedule, seed};
  return c;
}

double last_acceptance_rate() { return g_last_acceptance; }

std::vector<QuadratureRecord> sample_records(const SimConfig& config) {
  if (config.n_records < 1) throw std::invalid_argument("sample_records: n_records must be >= 1");
  if (config.schedule.relative_steps < 1)
    throw std::invalid_argument("sample_records: relative_steps must be >= 1");
  if (config.model_eta && !(*config.model_eta >= 0.0 && *config.model_eta <= 1.0))
    throw std::invalid_argument("sample_records: model eta must lie in [0,1]");

  const TwoModeDensityMatrix& rho = config.state;
  if (!rho.is_hermitian())
    throw std::invalid_argument("sample_records: state is not Hermitian");
  if (std::abs(rho.trace().real() - 1.0) > 1e-6 || std::abs(rho.trace().imag()) > 1e-9)
    throw std::invalid_argument("sample_records: state trace must be 1");
  if (min_eigenvalue(rho) < -kPsdTol)
    throw std::invalid_argument("sample_records: state is not PSD (cannot sample)");

  const int steps = config.schedule.relative_steps;
  std::vector<QuadratureRecord> out(config.n_records);

  Envelope env;
  if (!config.model_eta) env = choose_envelope(rho);

  std::uint64_t accepted = 0, proposed = 0;
  const std::uint64_t n_shards = (config.n_records + kShardSize - 1) / kShardSize;
  std::vector<double> w1(std::size_t(rho.d())), w2(std::size_t(rho.d()));

  for (std::uint64_t s = 0; s < n_shards; ++s) {
    Rng rng(splitmix64(config.seed ^ (0x9E3779B97F4A7C15ULL * (s + 1))));
    const std::uint64_t lo = s * kShardSize;
    const std::uint64_t hi = std::min(lo + kShardSize, config.n_records);
    for (std::uint64_t i = lo; i < hi; ++i) {
      const PhaseDraw ph = draw_phases(rng, i, steps);
      double x1 = 0.0, x2 = 0.0;
      if (config.model_eta) {
        // exact model path: vacuum branch with prob 1-eta, else the delocalized
        // single-photon joint density via rejection from its no-interference part
        if (rng.uniform() >= *config.model_eta) {
          x1 = 0.5 * rng.normal();
          x2 = 0.5 * rng.normal();
        } else {
          const double cd = std::cos(ph.delta);
          for (;;) {
            ++proposed;
            // one mode carries the photon marginal psi_1^2 (|x| ~ chi_3 / 2)
            const double n1 = rng.normal(), n2 = rng.normal(), n3 = rng.normal();
            double xe = 0.5 * std::sqrt(n1 * n1 + n2 * n2 + n3 * n3);
            if (rng.uniform() < 0.5) xe = -xe;
            const double xv = 0.5 * rng.normal();
            const bool photon_in_1 = rng.uniform() < 0.5;
            const double a = photon_in_1 ? xe : xv;
            const double b = photon_in_1 ? xv : xe;
            const double r2 = a * a + b * b;
            const double h = r2 > 0.0 ? 2.0 * a * b / r2 : 0.0;
            if (rng.uniform() < 0.5 * (1.0 + cd * h)) {
              ++accepted;
              x1 = a;
              x2 = b;
              break;
            }
          }
        }
      } else {
        // general path: widened-Gaussian rejection sampling
        for (;;) {
          ++proposed;
          const double a = env.sigma * rng.normal();
          const double b = env.sigma * rng.normal();
          fill_wavefunctions(rho.d() - 1, a, w1.data());
          fill_wavefunctions(rho.d() - 1, b, w2.data());
          const double p = std::max(0.0, pdf_at(rho, w1, w2, ph.theta1, ph.theta2));
          const double q = env.norm * std::exp(-env.inv_two_s2 * (a * a + b * b));
          if (rng.uniform() * env.m * q < p) {
            ++accepted;
            x1 = a;
            x2 = b;
            break;
          }
        }
      }
      out[std::size_t(i)] = {x1, ph.theta1, x2, ph.theta2};
    }
  }
  g_last_acceptance = proposed > 0 ? double(accepted) / double(proposed) : 1.0;
  return out;
}

}  // namespace qht
