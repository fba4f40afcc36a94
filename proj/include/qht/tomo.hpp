#pragma once

// State reconstruction from quadrature records: the pattern-function estimator,
// iterative maximum-likelihood estimation with an efficiency-corrected POVM,
// Bernoulli loss maps with their exact inverse on the truncated space, and
// bootstrap error bars.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qht/sim.hpp"

namespace qht {

// F_km(x) sampled on |x| <= x_max with `step` spacing and 4-point (cubic)
// interpolation in between; direct series evaluation on (x_max, 12], leading
// asymptotics (F_km ~ (k-m-1) a_k/(2 a_m) x^{k-m-2} for m >= k) beyond.
// F_km is real and symmetric in (k, m); interpolation error stays below 1e-7.
class PatternFunctionTable {
 public:
  explicit PatternFunctionTable(ModeDim dim, double x_max = 6.0, double step = 1e-4);
  int d() const { return _dim.d; }
  double x_max() const { return _x_max; }
  double step() const { return _step; }

  // F_km(x)
  double value(int k, int m, double x) const;
  // f_km(x, theta) = F_km(x) e^{-i(m-k) theta}
  Complex evaluate(int k, int m, double x, double theta) const;

  // process-wide table for a dimension, built on first use
  static const PatternFunctionTable& shared(ModeDim dim);

 private:
  ModeDim _dim;
  double _x_max;
  double _step;
  std::vector<std::vector<double>> _samples;  // index k * d + m for k <= m
};

// Direct (table-free) evaluation: F_km = d/dx [psi_min phi_max], f_km adds the
// e^{-i(m-k) theta} factor. Indices must lie in [0, kMaxPhoton].
double pattern_function_value(int k, int m, double x);
Complex pattern_function(int k, int m, double x, double theta);

struct PfResult {
  TwoModeDensityMatrix rho;  // hermitized; trace reported, not enforced
  RMat std_err;              // per-element standard error sqrt(Var(f)/N)
  double raw_trace = 0.0;    // trace of the raw average (== trace after hermitizing)
};

// rho_klmn = mean over records of f_km(x1, theta1) f_ln(x2, theta2).
// Throws std::invalid_argument on empty input or non-finite record values.
PfResult pf_estimate(const std::vector<QuadratureRecord>& records, ModeDim dim);

// Single-mode homodyne POVM element on the truncated space.
//   eta = 1:  <m|Pi|n> = psi_m(x) psi_n(x) e^{i(m-n) theta}
//   eta < 1:  the adjoint loss map applied to Pi_1,
//             <m|Pi_eta|n> = sum_k sqrt(C(m,k) C(n,k)) eta^{(m+n)/2-k} (1-eta)^k
//                            psi_{m-k} psi_{n-k} e^{i(m-n) theta}.
// Always PSD; integrates to the identity over x. Throws std::invalid_argument
// for eta outside (0, 1] (eta = 0 is a degenerate POVM: it no longer
// distinguishes states).
CMat povm_element(double x, double theta, double eta, ModeDim dim);

// Binned speed variant for ml_estimate: records are merged onto bin centers of
// an (x, theta) product grid per mode before iterating. Widths are reported in
// the result; the unbinned estimator is exact and remains the default.
struct MlBinning {
  int x_bins = 121;     // per axis, over [-x_max, x_max] (outliers clamp to edge bins)
  int phase_bins = 12;  // per mode, over [0, 2 pi)
  double x_max = 6.0;
};

struct MLConfig {
  ModeDim dim{3};
  std::optional<double> eta;  // POVM efficiency correction; none => eta = 1
  int max_iters = 2000;
  double convergence_tol = 1e-8;  // trace distance between successive iterates
  bool enforce_global_phase_blocks = false;
  std::optional<MlBinning> binning;
};

struct MlResult {
  TwoModeDensityMatrix rho;          // PSD, unit trace
  int iterations = 0;
  bool converged = false;
  std::vector<double> log_likelihood;  // mean log-likelihood of each iterate
  std::uint64_t down_weighted = 0;   // records clamped for Tr[Pi rho] underflow
  std::string warning;               // empty when converged and clean
  double bin_width_x = 0.0;          // 0 when unbinned
  double bin_width_phase = 0.0;
};

// Expectation-maximization fixed point rho <- N[R rho R], R = (1/N) sum_j Pi_j /
// Tr[Pi_j rho], with per-iteration hermitization, PSD projection (negative
// eigenvalues clipped), trace renormalization, and (optionally) the global-phase
// block pinch that zeroes every element with k+l != m+n. Stops at
// convergence_tol or max_iters (the latter sets a warning and returns the last
// iterate). Records whose probability under the current iterate underflows are
// down-weighted (denominator clamped) and counted.
MlResult ml_estimate(const std::vector<QuadratureRecord>& records, const MLConfig& config);

// Photon-loss (Bernoulli) channel of transmissivity eta applied to both modes:
//   <m|B(sigma)|n> = sum_k sqrt(C(m+k,k) C(n+k,k)) eta^{(m+n)/2} (1-eta)^k
//                    <m+k|sigma|n+k>,
// truncated at the space dimension. Trace-preserving for states without support
// loss above d-1; positivity-preserving. Throws for eta outside (0, 1].
TwoModeDensityMatrix bernoulli_map(const TwoModeDensityMatrix& rho, double eta);

struct IbtResult {
  TwoModeDensityMatrix rho;     // hermitized, trace-renormalized
  double min_eigenvalue = 0.0;  // most negative eigenvalue before any clipping
  bool psd = true;              // min_eigenvalue >= -kPsdTol
  bool clipped = false;         // negative eigenvalues were clipped (opt-in)
};

// Inverse Bernoulli transformation: the same series with eta -> 1/eta, the exact
// inverse of bernoulli_map on the truncated space. Noise amplification can make
// the output non-PSD; by default this is only reported, clipping is opt-in.
IbtResult inverse_bernoulli(const TwoModeDensityMatrix& rho, double eta,
                            bool clip_negative = false);

using Estimator =
    std::function<TwoModeDensityMatrix(const std::vector<QuadratureRecord>&)>;

struct BootstrapResult {
  RMat element_err;                  // std dev of each element across resamples
  double log_negativity_err = 0.0;
  std::vector<std::pair<double, double>> bell_err;  // (J, std dev of B at sqrt(J))
  int skipped = 0;                   // resamples where the estimator threw
  int n_resamples = 0;
};

// Resamples the records with replacement n_resamples times, re-runs the
// estimator, and returns sample standard deviations of the elements, the
// logarithmic negativity, and (optionally) the Bell parameter at the given J
// values. Deterministic for a fixed seed. Throws std::invalid_argument for
// n_resamples < 2 and numerical_error when fewer than two resamples succeed.
BootstrapResult bootstrap_uncertainty(const std::vector<QuadratureRecord>& records,
                                      const Estimator& estimator, int n_resamples,
                                      std::uint64_t seed,
                                      std::span<const double> bell_j = {});

}  // namespace qht
