#pragma once

// Fock-space fundamentals for two-mode optical homodyne tomography.
//
// Quadrature convention used throughout: x_theta = (a e^{-i theta} + a^dag e^{i theta})/2,
// so the vacuum quadrature variance is 1/4 and alpha = x + i y in phase space.

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qht {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;

// File/parse failures (CLI exit code 3).
struct io_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical failures: eigensolver breakdown, non-bracketing bisection, ... (CLI exit code 4).
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Wronskian normalization of the irregular wavefunction:
//   psi_n(x) phi_n'(x) - psi_n'(x) phi_n(x) = kWronskian  for every n and x.
// This value is pinned by the unbiasedness contract of the pattern-function
// estimator (see tests); with it, int psi_a psi_b d(psi_k phi_m) = delta_ak delta_bm.
inline constexpr double kWronskian = 2.0;

// Largest photon number the wavefunction evaluators accept.
inline constexpr int kMaxPhoton = 31;

// Tolerances shared across modules.
inline constexpr double kHermitianTol = 1e-8;  // max |rho - rho^dag| accepted as Hermitian
inline constexpr double kPsdTol = 1e-8;        // eigenvalues above -kPsdTol count as physical
inline constexpr double kEigZeroTol = 1e-10;   // |lambda| below this is treated as 0

// Truncation dimension per mode: photon numbers run 0..d-1.
struct ModeDim {
  explicit ModeDim(int dim = 3) : d(dim) {
    if (d < 2) throw std::invalid_argument("ModeDim: d must be >= 2");
  }
  int d;
  int pair() const { return d * d; }  // two-mode Hilbert dimension
  friend bool operator==(ModeDim a, ModeDim b) { return a.d == b.d; }
};

// Phase-space point alpha = x + i y; J = |alpha|^2.
struct PhasePoint {
  double x = 0.0;
  double y = 0.0;
  Complex alpha() const { return {x, y}; }
  double j() const { return x * x + y * y; }
};

// Detection-efficiency budget: eta = eta_p * eta_d, eta_d = eta_pd * eta_mm * eta_extra.
// An overall eta may also be set directly (components default to 1).
struct EfficiencyModel {
  double eta_p = 1.0;
  double eta_pd = 1.0;
  double eta_mm = 1.0;
  double eta_extra = 1.0;  // residual propagation losses folded into eta_d

  EfficiencyModel() = default;
  EfficiencyModel(double p, double pd, double mm, double extra = 1.0);
  static EfficiencyModel overall(double eta);

  double eta_d() const { return eta_pd * eta_mm * eta_extra; }
  double eta() const { return eta_p * eta_d(); }
};

// Two-mode density matrix on the truncated Fock space, rho_klmn = <k,l|rho|m,n>.
// Storage is a d^2 x d^2 matrix with row index k*d+l and column index m*d+n, so the
// serialization flat index ((k*d+l)*d+m)*d+n enumerates entries row-major.
class TwoModeDensityMatrix {
 public:
  explicit TwoModeDensityMatrix(ModeDim dim)
      : _dim(dim), _mat(CMat::Zero(dim.pair(), dim.pair())) {}

  ModeDim dim() const { return _dim; }
  int d() const { return _dim.d; }

  Complex operator()(int k, int l, int m, int n) const { return _mat(row(k, l), row(m, n)); }
  Complex& operator()(int k, int l, int m, int n) { return _mat(row(k, l), row(m, n)); }

  const CMat& matrix() const { return _mat; }
  CMat& matrix() { return _mat; }

  std::size_t flat_index(int k, int l, int m, int n) const {
    return static_cast<std::size_t>(((k * d() + l) * d() + m) * d() + n);
  }

  Complex trace() const { return _mat.trace(); }
  // max_{ij} |rho_ij - conj(rho_ji)|
  double hermiticity_error() const { return (_mat - _mat.adjoint()).cwiseAbs().maxCoeff(); }
  bool is_hermitian(double tol = kHermitianTol) const { return hermiticity_error() <= tol; }

  void hermitize() { _mat = ((_mat + _mat.adjoint()) / 2.0).eval(); }
  void renormalize_trace();

  // Informational: set when a producer enforced rho_klmn = 0 unless k+l = m+n.
  bool global_phase_blocks = false;

 private:
  int row(int k, int l) const {
    if (k < 0 || l < 0 || k >= d() || l >= d())
      throw std::out_of_range("TwoModeDensityMatrix: index out of range");
    return k * d() + l;
  }
  ModeDim _dim;
  CMat _mat;
};

// Smallest eigenvalue of the Hermitian part (diagnostic for PSD checks).
double min_eigenvalue(const TwoModeDensityMatrix& rho);

// Zeroes every element with k+l != m+n (global-phase invariance of the state).
void apply_global_phase_mask(TwoModeDensityMatrix& rho);
bool satisfies_global_phase_blocks(const TwoModeDensityMatrix& rho, double tol = 1e-12);

// Trace over mode 2 / mode 1; returns the d x d reduced matrix.
CMat partial_trace_mode2(const TwoModeDensityMatrix& rho);
CMat partial_trace_mode1(const TwoModeDensityMatrix& rho);

// Oscillator eigenfunction psi_n(x) = (2/pi)^{1/4} (2^n n!)^{-1/2} H_n(sqrt2 x) e^{-x^2}
// (physicists' Hermite), orthonormal on the line. Throws std::out_of_range for
// n < 0 or n > kMaxPhoton.
double regular_wavefunction(int n, double x);

// d/dx psi_n(x) via the ladder identity psi_n' = sqrt(n) psi_{n-1} - sqrt(n+1) psi_{n+1}.
double regular_wavefunction_deriv(int n, double x);

// Fills out[0..nmax] with psi_n(x) by the stable normalized recurrence (hot-path helper).
void fill_wavefunctions(int nmax, double x, double* out);

// Irregular (second, non-normalizable) solution phi_n of the same oscillator
// equation, with Wronskian psi_n phi_n' - psi_n' phi_n = kWronskian and parity
// opposite to psi_n. Evaluated by power series about the origin (entire function).
double irregular_wavefunction(int n, double x);
double irregular_wavefunction_deriv(int n, double x);

// Joint quadrature density at phases (theta1, theta2):
//   p = sum_klmn rho_klmn psi_k(x1) psi_m(x1) psi_l(x2) psi_n(x2)
//                e^{i(m-k)theta1} e^{i(n-l)theta2}.
// Requires Hermitian input (validation error otherwise); the result is real.
double quadrature_pdf(const TwoModeDensityMatrix& rho, double x1, double theta1, double x2,
                      double theta2);

// Partial transpose on mode 1: (rho^{T1})_klmn = rho_mlkn. Involution; preserves
// trace and Hermiticity; requires Hermitian input.
TwoModeDensityMatrix partial_transpose(const TwoModeDensityMatrix& rho);

// Logarithmic negativity E_N = log2 sum_i |lambda_i| over the partial-transpose
// spectrum; eigenvalues within kEigZeroTol of zero are treated as zero.
double log_negativity(const TwoModeDensityMatrix& rho);

// Lossy delocalized-single-photon model:
//   rho = (1-eta)|0,0><0,0| + eta |Psi><Psi|,  |Psi> = (|1,0>+|0,1>)/sqrt2.
// eta in [0,1]; handled exactly at both endpoints.
TwoModeDensityMatrix model_state(double eta, ModeDim dim = ModeDim(3));

}  // namespace qht
