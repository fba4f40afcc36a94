// Acceptance gate: one [PASS]/[FAIL] line per criterion; exit 0 only if all pass.
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "qht/tomo.hpp"
#include "qht/wigner.hpp"

using namespace qht;

namespace {

int failures = 0;

void report(int idx, const char* name, bool pass, const char* fmt, ...) {
  char detail[240];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(detail, sizeof detail, fmt, args);
  va_end(args);
  std::printf("[%s] %2d %-28s %s\n", pass ? "PASS" : "FAIL", idx, name, detail);
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> linspace(double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = hi * i / (n - 1);
  return g;
}

TwoModeDensityMatrix random_state(int d, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> nd;
  const int p = d * d;
  CMat g(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) g(i, j) = Complex(nd(gen), nd(gen));
  CMat rho = g * g.adjoint();
  rho /= rho.trace();
  TwoModeDensityMatrix out{ModeDim(d)};
  out.matrix() = rho;
  return out;
}

template <typename F>
double integrate(F f, double lo, double hi, int n) {
  const double h = (hi - lo) / (n - 1);
  double acc = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n - 1; ++i) acc += f(lo + h * i);
  return acc * h;
}

double fidelity_to_psi(const TwoModeDensityMatrix& rho) {
  return 0.5 * (rho(1, 0, 1, 0) + rho(0, 1, 0, 1) + rho(1, 0, 0, 1) + rho(0, 1, 1, 0)).real();
}

// expectation of the pattern-function estimator under the exact pdf: factorized
// quadrature integrals, exact discrete phase average (the kernels select the
// co-diagonal c - a = m - k in each mode)
double oracle_worst_deviation(const TwoModeDensityMatrix& rho) {
  const int d = rho.d();
  std::vector<double> xi(std::size_t(d * d) * std::size_t(d * d));
  for (int a = 0; a < d; ++a)
    for (int c = 0; c < d; ++c)
      for (int k = 0; k < d; ++k)
        for (int m = 0; m < d; ++m)
          xi[std::size_t((a * d + c) * d * d + k * d + m)] = integrate(
              [&](double x) {
                return regular_wavefunction(a, x) * regular_wavefunction(c, x) *
                       pattern_function_value(k, m, x);
              },
              -8.0, 8.0, 1601);
  double worst = 0.0;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
          Complex acc = 0.0;
          for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
              const int c = a + m - k, e = b + n - l;
              if (c < 0 || c >= d || e < 0 || e >= d) continue;
              acc += rho(a, b, c, e) * xi[std::size_t((a * d + c) * d * d + k * d + m)] *
                     xi[std::size_t((b * d + e) * d * d + l * d + n)];
            }
          worst = std::max(worst, std::abs(acc - rho(k, l, m, n)));
        }
  return worst;
}

}  // namespace

int main() {
  // 1 -- closed-form Bell curve against the assembled Wigner four-point value
  {
    double worst = 0.0;
    for (double eta : {0.0, 0.3, 0.61, 1.0}) {
      const auto state = model_state(eta);
      for (double j : linspace(1.0, 201)) {
        const PhasePoint a{std::sqrt(j), 0.0};
        worst = std::max(worst, std::abs(analytic_bell_curve(eta, j) -
                                         bell_parameter(state, a, a)));
      }
    }
    report(1, "analytic Bell identity", worst < 1e-12,
           "max |closed form - assembled| = %.3e over 4 x 201 points (< 1e-12)", worst);
  }

  // 2 -- location and depth of the ideal-state maximal violation
  {
    const auto scan = bell_scan_analytic(1.0, linspace(0.5, 2001));
    const bool pass =
        std::abs(scan.min_b + 2.1745) <= 0.001 && std::abs(scan.argmin_j - 0.090) <= 0.002;
    report(2, "maximal violation", pass,
           "min B = %.6f at J = %.6f (required -2.1745 +- 0.001 at J = 0.090 +- 0.002)",
           scan.min_b, scan.argmin_j);
  }

  // 3 -- efficiency threshold for any violation
  {
    const ThresholdResult t = violation_threshold();
    const bool pass =
        t.eta_star > 0.95 && t.eta_star < 0.97 && std::abs(t.min_b_at_star + 2.0) <= 1e-6;
    report(3, "violation threshold", pass,
           "eta* = %.6f (in (0.95, 0.97)), min B at eta* = %.9f (-2 +- 1e-6)", t.eta_star,
           t.min_b_at_star);
  }

  // 4-6 share one desk-scale pipeline: 1e6 records -> PF -> bootstrap -> IBT -> ML
  const ModeDim dim(3);
  const auto t4 = std::chrono::steady_clock::now();
  const auto records = sample_records(SimConfig::model(0.61, 1000000, 42));
  const PfResult pf = pf_estimate(records, dim);
  const double e_n = log_negativity(pf.rho);
  const BootstrapResult bs = bootstrap_uncertainty(
      records,
      [dim](const std::vector<QuadratureRecord>& r) { return pf_estimate(r, dim).rho; }, 32,
      42);
  const double pipeline_secs = seconds_since(t4);
  {
    const double vac = pf.rho(0, 0, 0, 0).real();
    double psi_dev = 0.0;
    for (double p : {pf.rho(1, 0, 1, 0).real(), pf.rho(0, 1, 0, 1).real(),
                     pf.rho(1, 0, 0, 1).real(), pf.rho(0, 1, 1, 0).real()})
      psi_dev = std::max(psi_dev, std::abs(p - 0.305));
    double multi = 0.0;
    for (int k = 0; k < 3; ++k)
      for (int l = 0; l < 3; ++l)
        for (int m = 0; m < 3; ++m)
          for (int n = 0; n < 3; ++n)
            if (k + l >= 2 || m + n >= 2)
              multi = std::max(multi, std::abs(pf.rho(k, l, m, n)));
    const bool pass = std::abs(vac - 0.39) <= 0.01 && psi_dev <= 0.01 && multi < 0.01 &&
                      std::abs(e_n - 0.416) <= 0.02 && bs.log_negativity_err <= 0.005 &&
                      pipeline_secs < 300.0;
    report(4, "desk-scale reconstruction", pass,
           "rho_0000 = %.4f, max |Psi - 0.305| = %.4f, multi-photon max = %.4f, "
           "E_N = %.4f (0.416 +- 0.02), err = %.4f (<= 0.005), %.0f s",
           vac, psi_dev, multi, e_n, bs.log_negativity_err, pipeline_secs);
  }

  const auto grid = default_j_grid();
  const BellScanResult scan_raw = bell_scan(pf.rho, grid);
  const BellScanResult theory = bell_scan_analytic(0.61, grid);
  {
    double track = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i)
      track = std::max(track,
                       std::abs(scan_raw.points[i].second - theory.points[i].second));
    const bool pass = scan_raw.min_b >= -2.0 && track <= 0.05;
    report(5, "raw Bell scan", pass,
           "min B = %.4f (>= -2), max |B - theory(0.61)| = %.4f (<= 0.05)", scan_raw.min_b,
           track);
  }

  {
    const double eta_auto = 1.0 - pf.rho(0, 0, 0, 0).real();
    const IbtResult ibt = inverse_bernoulli(pf.rho, eta_auto);
    const double vac_ibt = ibt.rho(0, 0, 0, 0).real();
    double psi_dev = 0.0;
    for (double p : {ibt.rho(1, 0, 1, 0).real(), ibt.rho(0, 1, 0, 1).real(),
                     ibt.rho(1, 0, 0, 1).real(), ibt.rho(0, 1, 1, 0).real()})
      psi_dev = std::max(psi_dev, std::abs(p - 0.5));
    const BellScanResult scan_ibt = bell_scan(ibt.rho, grid);

    MLConfig ml_config;
    ml_config.dim = dim;
    ml_config.eta = 0.61;
    ml_config.max_iters = 500;
    ml_config.enforce_global_phase_blocks = true;
    const MlResult ml = ml_estimate(records, ml_config);
    const double fid = fidelity_to_psi(ml.rho);

    const bool pass = psi_dev <= 0.02 && vac_ibt < 0.02 && scan_ibt.min_b < -2.0 &&
                      std::abs(scan_ibt.min_b + 2.17) <= 0.05 &&
                      std::abs(scan_ibt.argmin_j - 0.09) <= 0.05 && fid > 0.95;
    report(6, "vacuum cleaning + ml", pass,
           "cleaned: max |Psi - 0.5| = %.4f, vacuum = %.4f, min B = %.4f at J = %.3f; "
           "ml fidelity = %.4f (> 0.95, %d iters)",
           psi_dev, vac_ibt, scan_ibt.min_b, scan_ibt.argmin_j, fid, ml.iterations);
  }

  // 7 -- estimator unbiasedness against numeric integration
  {
    const auto t7 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (unsigned seed = 1; seed <= 10; ++seed)
      worst = std::max(worst, oracle_worst_deviation(random_state(3, seed)));
    const double secs = seconds_since(t7);
    report(7, "estimator unbiasedness", worst < 1e-6 && secs < 120.0,
           "max element deviation = %.3e over 10 random states (< 1e-6), %.1f s", worst,
           secs);
  }

  // 8 -- loss-channel algebra
  {
    double map_dev = 0.0, round_dev = 0.0;
    const auto probe = random_state(3, 2026);
    for (double eta : {0.3, 0.475, 0.61, 0.825, 1.0}) {
      map_dev = std::max(map_dev, (bernoulli_map(model_state(1.0), eta).matrix() -
                                   model_state(eta).matrix())
                                      .cwiseAbs()
                                      .maxCoeff());
      round_dev = std::max(round_dev, (inverse_bernoulli(bernoulli_map(probe, eta), eta)
                                           .rho.matrix() -
                                       probe.matrix())
                                          .cwiseAbs()
                                          .maxCoeff());
    }
    report(8, "loss-channel algebra", map_dev < 1e-14 && round_dev < 1e-12,
           "model map deviation = %.3e (< 1e-14), inverse round-trip = %.3e (< 1e-12)",
           map_dev, round_dev);
  }

  // 9 -- entanglement survives every nonzero efficiency
  {
    double dev = 0.0, min_e = 1e300;
    for (int i = 0; i <= 10; ++i) {
      const double eta = (i == 0) ? 0.01 : 0.1 * i;
      const double e = log_negativity(model_state(eta));
      const double closed = std::log2(eta + std::sqrt((1 - eta) * (1 - eta) + eta * eta));
      dev = std::max(dev, std::abs(e - closed));
      min_e = std::min(min_e, e);
    }
    report(9, "entanglement robustness", dev < 1e-12 && min_e > 0.0,
           "max |E_N - closed form| = %.3e (< 1e-12), min E_N = %.4f (> 0)", dev, min_e);
  }

  // 10 -- normalizations of the Wigner kernels and the sampling pdf
  {
    double wig_dev = 0.0;
    for (int n = 0; n < 3; ++n) {
      const int g = 401;
      const double lim = 5.0, h = 2.0 * lim / (g - 1);
      double total = 0.0;
      for (int ix = 0; ix < g; ++ix)
        for (int iy = 0; iy < g; ++iy) {
          const double wx = (ix == 0 || ix == g - 1) ? 0.5 : 1.0;
          const double wy = (iy == 0 || iy == g - 1) ? 0.5 : 1.0;
          total += wx * wy *
                   wigner_projector(n, n, {-lim + h * ix, -lim + h * iy}).real();
        }
      wig_dev = std::max(wig_dev, std::abs(total * h * h - 1.0));
    }

    const auto probe = random_state(3, 77);
    double pdf_dev = 0.0;
    for (const auto [t1, t2] : {std::pair{0.0, 0.0}, {0.7, 2.1}, {4.0, 5.5}}) {
      const int g = 641;
      const double lim = 8.0, h = 2.0 * lim / (g - 1);
      double total = 0.0;
      for (int i1 = 0; i1 < g; ++i1) {
        const double w1 = (i1 == 0 || i1 == g - 1) ? 0.5 : 1.0;
        for (int i2 = 0; i2 < g; ++i2) {
          const double w2 = (i2 == 0 || i2 == g - 1) ? 0.5 : 1.0;
          total += w1 * w2 * quadrature_pdf(probe, -lim + h * i1, t1, -lim + h * i2, t2);
        }
      }
      pdf_dev = std::max(pdf_dev, std::abs(total * h * h - 1.0));
    }

    double imag_res = 0.0;
    for (unsigned seed : {5u, 6u}) {
      const auto state = random_state(3, seed);
      for (double x1 : {-1.2, 0.0, 0.8})
        for (double y1 : {-0.5, 0.6})
          for (double x2 : {-0.9, 0.4}) {
            Complex acc = 0.0;
            for (int k = 0; k < 3; ++k)
              for (int l = 0; l < 3; ++l)
                for (int m = 0; m < 3; ++m)
                  for (int n = 0; n < 3; ++n)
                    acc += state(k, l, m, n) * wigner_projector(k, m, {x1, y1}) *
                           wigner_projector(l, n, {x2, 0.3});
            imag_res = std::max(imag_res, std::abs(acc.imag()));
          }
    }

    report(10, "normalizations", wig_dev < 1e-6 && pdf_dev < 1e-9 && imag_res < 1e-10,
           "int W_nn dev = %.3e (< 1e-6), pdf marginal dev = %.3e (< 1e-9), "
           "Wigner imag residue = %.3e (< 1e-10)",
           wig_dev, pdf_dev, imag_res);
  }

  std::printf("%d/10 criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
