#include "qht/fock.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

namespace qht {

namespace {

constexpr double kQuarterRoot2OverPi = 0.8932438417380002;  // (2/pi)^{1/4}

void check_photon_index(int n) {
  if (n < 0 || n > kMaxPhoton) throw std::out_of_range("photon number out of range");
}

void check_hermitian(const TwoModeDensityMatrix& rho, const char* who) {
  if (!rho.is_hermitian())
    throw std::invalid_argument(std::string(who) + ": input matrix is not Hermitian");
}

// Evaluates phi_n and phi_n' in one pass from the power series about x = 0.
// phi_n solves
//   phi'' + (2(2n+1) - 4x^2) phi = 0
// (same equation as psi_n in the vacuum-variance-1/4 convention), so the
// coefficients obey (j+2)(j+1) a_{j+2} = 4 a_{j-2} - 2(2n+1) a_j. Parity
// opposite to psi_n plus the Wronskian pin the single nonzero chain:
//   n even: a_0 = 0, a_1 = kWronskian / psi_n(0)
//   n odd:  a_1 = 0, a_0 = -kWronskian / psi_n'(0).
// The terms t_j = a_j x^j are advanced directly,
//   (j+2)(j+1) t_{j+2} = 4 x^4 t_{j-2} - 2(2n+1) x^2 t_j,
// so every intermediate stays near the term magnitudes, which peak around
// e^{x^2} -- inside double range for |x| <= 16. (Evaluating a_j and x^j
// separately would overflow x^j long before the terms become negligible.)
constexpr int kPhiSeriesTerms = 1700;

void phi_eval(int n, double x, double* value, double* deriv) {
  const bool even_chain = (n % 2 == 1);  // phi_n has parity opposite to psi_n
  int j = even_chain ? 0 : 1;
  double t = even_chain ? -kWronskian / regular_wavefunction_deriv(n, 0.0)
                        : kWronskian / regular_wavefunction(n, 0.0) * x;
  double tm2 = 0.0;  // t_{j-2}
  double v = 0.0, dvx = 0.0;  // sum t_j, sum j t_j = x * phi'
  double scale = 0.0;
  int tiny_run = 0;
  const double x2 = x * x;
  const double en = 2.0 * (2 * n + 1);
  const double jmin = 4.0 * x2 + 24.0;  // past the growth hump of the terms
  for (; j < kPhiSeriesTerms; j += 2) {
    v += t;
    dvx += static_cast<double>(j) * t;
    scale = std::max(scale, std::abs(t));
    tiny_run = (std::abs(t) <= 1e-18 * scale) ? tiny_run + 1 : 0;
    if (tiny_run > 8 && static_cast<double>(j) > jmin) break;
    const double tp2 = (4.0 * x2 * x2 * tm2 - en * x2 * t) /
                       (static_cast<double>(j + 2) * static_cast<double>(j + 1));
    tm2 = t;
    t = tp2;
  }
  if (value) *value = v;
  if (deriv == nullptr) return;
  if (x != 0.0)
    *deriv = dvx / x;
  else  // phi'(0) is a_1: zero on the even chain, the seed itself on the odd one
    *deriv = even_chain ? 0.0 : kWronskian / regular_wavefunction(n, 0.0);
}

}  // namespace

EfficiencyModel::EfficiencyModel(double p, double pd, double mm, double extra)
    : eta_p(p), eta_pd(pd), eta_mm(mm), eta_extra(extra) {
  for (double v : {p, pd, mm, extra})
    if (!(v >= 0.0 && v <= 1.0))
      throw std::invalid_argument("EfficiencyModel: components must lie in [0,1]");
}

EfficiencyModel EfficiencyModel::overall(double eta) {
  EfficiencyModel m;
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("EfficiencyModel: eta must lie in [0,1]");
  m.eta_p = eta;  // fold everything into one factor
  return m;
}

void TwoModeDensityMatrix::renormalize_trace() {
  const double tr = _mat.trace().real();
  if (std::abs(tr) < 1e-300)
    throw numerical_error("renormalize_trace: trace is numerically zero");
  _mat /= tr;
}

double min_eigenvalue(const TwoModeDensityMatrix& rho) {
  CMat h = (rho.matrix() + rho.matrix().adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw numerical_error("min_eigenvalue: eigensolver failed to converge");
  return es.eigenvalues().minCoeff();
}

void apply_global_phase_mask(TwoModeDensityMatrix& rho) {
  const int d = rho.d();
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n)
          if (k + l != m + n) rho(k, l, m, n) = Complex(0.0, 0.0);
  rho.global_phase_blocks = true;
}

bool satisfies_global_phase_blocks(const TwoModeDensityMatrix& rho, double tol) {
  const int d = rho.d();
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n)
          if (k + l != m + n && std::abs(rho(k, l, m, n)) > tol) return false;
  return true;
}

CMat partial_trace_mode2(const TwoModeDensityMatrix& rho) {
  const int d = rho.d();
  CMat out = CMat::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int m = 0; m < d; ++m)
      for (int l = 0; l < d; ++l) out(k, m) += rho(k, l, m, l);
  return out;
}

CMat partial_trace_mode1(const TwoModeDensityMatrix& rho) {
  const int d = rho.d();
  CMat out = CMat::Zero(d, d);
  for (int l = 0; l < d; ++l)
    for (int n = 0; n < d; ++n)
      for (int k = 0; k < d; ++k) out(l, n) += rho(k, l, k, n);
  return out;
}

double regular_wavefunction(int n, double x) {
  check_photon_index(n);
  const double u = std::sqrt(2.0) * x;
  double pm1 = kQuarterRoot2OverPi * std::exp(-x * x);  // psi_0
  if (n == 0) return pm1;
  double p = std::sqrt(2.0) * u * pm1;  // psi_1
  for (int k = 1; k < n; ++k) {
    const double pp = std::sqrt(2.0 / (k + 1)) * u * p - std::sqrt(double(k) / (k + 1)) * pm1;
    pm1 = p;
    p = pp;
  }
  return p;
}

void fill_wavefunctions(int nmax, double x, double* out) {
  if (nmax < 0 || nmax > kMaxPhoton) throw std::out_of_range("photon number out of range");
  const double u = std::sqrt(2.0) * x;
  out[0] = kQuarterRoot2OverPi * std::exp(-x * x);
  if (nmax == 0) return;
  out[1] = std::sqrt(2.0) * u * out[0];
  for (int k = 1; k < nmax; ++k)
    out[k + 1] = std::sqrt(2.0 / (k + 1)) * u * out[k] - std::sqrt(double(k) / (k + 1)) * out[k - 1];
}

double regular_wavefunction_deriv(int n, double x) {
  check_photon_index(n);
  const double lo = (n > 0) ? std::sqrt(double(n)) * regular_wavefunction(n - 1, x) : 0.0;
  return lo - std::sqrt(double(n + 1)) * regular_wavefunction(n + 1, x);
}

double irregular_wavefunction(int n, double x) {
  check_photon_index(n);
  double v;
  phi_eval(n, x, &v, nullptr);
  return v;
}

double irregular_wavefunction_deriv(int n, double x) {
  check_photon_index(n);
  double dv;
  phi_eval(n, x, nullptr, &dv);
  return dv;
}

double quadrature_pdf(const TwoModeDensityMatrix& rho, double x1, double theta1, double x2,
                      double theta2) {
  check_hermitian(rho, "quadrature_pdf");
  const int d = rho.d();
  std::vector<double> p1(static_cast<std::size_t>(d)), p2(static_cast<std::size_t>(d));
  fill_wavefunctions(d - 1, x1, p1.data());
  fill_wavefunctions(d - 1, x2, p2.data());
  std::vector<Complex> e1(static_cast<std::size_t>(2 * d - 1)), e2(e1.size());
  for (int q = -(d - 1); q <= d - 1; ++q) {
    e1[static_cast<std::size_t>(q + d - 1)] = std::polar(1.0, q * theta1);
    e2[static_cast<std::size_t>(q + d - 1)] = std::polar(1.0, q * theta2);
  }
  Complex acc(0.0, 0.0);
  for (int k = 0; k < d; ++k)
    for (int m = 0; m < d; ++m) {
      const Complex a = p1[k] * p1[m] * e1[static_cast<std::size_t>(m - k + d - 1)];
      for (int l = 0; l < d; ++l)
        for (int n = 0; n < d; ++n)
          acc += rho(k, l, m, n) * a * p2[l] * p2[n] * e2[static_cast<std::size_t>(n - l + d - 1)];
    }
  return acc.real();
}

TwoModeDensityMatrix partial_transpose(const TwoModeDensityMatrix& rho) {
  check_hermitian(rho, "partial_transpose");
  const int d = rho.d();
  TwoModeDensityMatrix out(rho.dim());
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) out(k, l, m, n) = rho(m, l, k, n);
  return out;
}

double log_negativity(const TwoModeDensityMatrix& rho) {
  TwoModeDensityMatrix pt = partial_transpose(rho);
  CMat h = (pt.matrix() + pt.matrix().adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<CMat> es(h, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw numerical_error("log_negativity: eigensolver failed to converge");
  double sum = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double lam = es.eigenvalues()(i);
    if (std::abs(lam) >= kEigZeroTol) sum += std::abs(lam);
  }
  double en = std::log2(sum);
  if (en < 0.0 && en > -1e-9) en = 0.0;  // rounding on PSD inputs
  return en;
}

TwoModeDensityMatrix model_state(double eta, ModeDim dim) {
  if (!(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("model_state: eta must lie in [0,1]");
  TwoModeDensityMatrix rho(dim);
  rho(0, 0, 0, 0) = 1.0 - eta;
  rho(0, 1, 0, 1) = eta / 2.0;
  rho(1, 0, 1, 0) = eta / 2.0;
  rho(0, 1, 1, 0) = eta / 2.0;
  rho(1, 0, 0, 1) = eta / 2.0;
  rho.global_phase_blocks = true;
  return rho;
}

}  // namespace qht
