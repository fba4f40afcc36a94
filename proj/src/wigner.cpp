#include "qht/wigner.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>

namespace qht {

namespace {

constexpr double kPi = std::numbers::pi;

// Associated Laguerre L_m^a(z) by the stable three-term forward recurrence.
double laguerre(int m, int a, double z) {
  if (m == 0) return 1.0;
  double lm1 = 1.0;
  double l = 1.0 + a - z;
  for (int k = 1; k < m; ++k) {
    const double lp = ((2 * k + 1 + a - z) * l - (k + a) * lm1) / (k + 1);
    lm1 = l;
    l = lp;
  }
  return l;
}

double falling_ratio(int n, int m) {
  // sqrt(m!/n!) for n >= m without factorial overflow
  double r = 1.0;
  for (int k = m + 1; k <= n; ++k) r /= std::sqrt(double(k));
  return r;
}

}  // namespace

Complex wigner_projector(int n, int m, PhasePoint a) {
  if (n < 0 || m < 0 || n > kMaxPhoton || m > kMaxPhoton)
    throw std::out_of_range("wigner_projector: photon index out of range");
  if (n < m) return std::conj(wigner_projector(m, n, a));
  const double r2 = a.j();
  const Complex two_conj_alpha(2.0 * a.x, -2.0 * a.y);
  Complex pref(1.0, 0.0);
  for (int k = 0; k < n - m; ++k) pref *= two_conj_alpha;
  const double sign = (m % 2 == 0) ? 1.0 : -1.0;
  return (2.0 / kPi) * sign * falling_ratio(n, m) * pref * std::exp(-2.0 * r2) *
         laguerre(m, n - m, 4.0 * r2);
}

double wigner_state(const TwoModeDensityMatrix& rho, PhasePoint a1, PhasePoint a2) {
  if (!rho.is_hermitian())
    throw std::invalid_argument("wigner_state: input matrix is not Hermitian");
  const int d = rho.d();
  std::vector<Complex> w1(static_cast<std::size_t>(d * d)), w2(w1.size());
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      w1[static_cast<std::size_t>(i * d + j)] = wigner_projector(i, j, a1);
      w2[static_cast<std::size_t>(i * d + j)] = wigner_projector(i, j, a2);
    }
  Complex acc(0.0, 0.0);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n)
          acc += rho(k, l, m, n) * w1[static_cast<std::size_t>(k * d + m)] *
                 w2[static_cast<std::size_t>(l * d + n)];
  if (std::abs(acc.imag()) >= 1e-10)
    throw numerical_error("wigner_state: imaginary residue exceeds 1e-10");
  return acc.real();
}

double bell_parameter(const TwoModeDensityMatrix& rho, PhasePoint a1, PhasePoint a2) {
  const PhasePoint origin;
  const double w00 = wigner_state(rho, origin, origin);
  const double w10 = wigner_state(rho, a1, origin);
  const double w01 = wigner_state(rho, origin, a2);
  const double w11 = wigner_state(rho, a1, a2);
  return (kPi * kPi / 4.0) * (w00 + w10 + w01 - w11);
}

double analytic_lossy_wigner(double eta, PhasePoint a1, PhasePoint a2) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("analytic_lossy_wigner: eta must lie in [0,1]");
  const double sx = a1.x + a2.x, sy = a1.y + a2.y;
  const double sum2 = sx * sx + sy * sy;
  return (4.0 / (kPi * kPi)) * (1.0 + 2.0 * eta * (sum2 - 1.0)) *
         std::exp(-2.0 * a1.j() - 2.0 * a2.j());
}

double analytic_bell_curve(double eta, double j) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("analytic_bell_curve: eta must lie in [0,1]");
  if (!(j >= 0.0)) throw std::invalid_argument("analytic_bell_curve: J must be >= 0");
  return 1.0 - 2.0 * eta + std::exp(-2.0 * j) * (4.0 * eta * (j - 1.0) + 2.0) -
         std::exp(-4.0 * j) * (8.0 * j * eta - 2.0 * eta + 1.0);
}

std::vector<double> default_j_grid() {
  std::vector<double> g;
  for (int i = 0; i <= 100; ++i) g.push_back(0.005 * i);
  return g;
}

namespace {

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("bell_scan: empty J grid");
  if (grid.front() < 0.0) throw std::invalid_argument("bell_scan: J must be >= 0");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] <= grid[i - 1])
      throw std::invalid_argument("bell_scan: J grid must be strictly increasing");
}

template <typename F>
BellScanResult scan_impl(std::string label, std::span<const double> grid, F&& b_of_j) {
  check_grid(grid);
  BellScanResult res;
  res.label = std::move(label);
  res.points.reserve(grid.size());
  std::size_t imin = 0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double b = b_of_j(grid[i]);
    res.points.emplace_back(grid[i], b);
    if (b < res.points[imin].second) imin = i;
  }
  // golden-section refinement inside the cells bracketing the grid minimum
  double lo = grid[imin > 0 ? imin - 1 : 0];
  double hi = grid[std::min(imin + 1, grid.size() - 1)];
  if (lo == hi) {
    res.argmin_j = grid[imin];
    res.min_b = res.points[imin].second;
    return res;
  }
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = b_of_j(c), fd = b_of_j(d);
  while (b - a > 1e-8) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - gr * (b - a);
      fc = b_of_j(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + gr * (b - a);
      fd = b_of_j(d);
    }
  }
  res.argmin_j = (a + b) / 2.0;
  res.min_b = std::min({b_of_j(res.argmin_j), res.points[imin].second});
  if (res.min_b == res.points[imin].second) res.argmin_j = grid[imin];
  return res;
}

}  // namespace

BellScanResult bell_scan(const TwoModeDensityMatrix& rho, std::span<const double> j_grid) {
  return scan_impl("reconstructed", j_grid, [&rho](double j) {
    const double a = std::sqrt(j);
    return bell_parameter(rho, PhasePoint{a, 0.0}, PhasePoint{a, 0.0});
  });
}

BellScanResult bell_scan_analytic(double eta, std::span<const double> j_grid) {
  std::array<char, 32> label{};
  std::snprintf(label.data(), label.size(), "eta=%g", eta);
  return scan_impl(label.data(), j_grid,
                   [eta](double j) { return analytic_bell_curve(eta, j); });
}

ThresholdResult violation_threshold() {
  const auto grid = default_j_grid();
  const auto min_b = [&grid](double eta) { return bell_scan_analytic(eta, grid).min_b; };
  double lo = 0.90, hi = 1.0;
  if (!(min_b(lo) > -2.0 && min_b(hi) < -2.0))
    throw numerical_error("violation_threshold: bisection bracket does not straddle -2");
  ThresholdResult res;
  res.tolerance = 1e-6;
  double mid = 0.0, bmid = 0.0;
  for (int it = 0; it < 200; ++it) {
    mid = (lo + hi) / 2.0;
    bmid = min_b(mid);
    if (std::abs(bmid + 2.0) <= res.tolerance) break;
    (bmid > -2.0 ? lo : hi) = mid;
  }
  if (std::abs(bmid + 2.0) > res.tolerance)
    throw numerical_error("violation_threshold: bisection failed to reach tolerance");
  res.eta_star = mid;
  res.min_b_at_star = bmid;
  return res;
}

}  // namespace qht
