#pragma once

// Wigner functions on the truncated Fock space and the Wigner-value Bell test:
// assembling W(alpha1, alpha2) from density-matrix elements, the four-point Bell
// combination, the analytic lossy-photon expressions, scans, and the efficiency
// threshold for violation.

#include <span>
#include <utility>
#include <vector>

#include "qht/fock.hpp"

namespace qht {

// Fock-basis Wigner kernel W_nm(alpha) with conventions fixed by the requirement
// that the assembled model-state Wigner function equals the analytic lossy form:
//   n >= m: W_nm = (2/pi)(-1)^m sqrt(m!/n!) (2 conj(alpha))^{n-m} e^{-2|alpha|^2}
//                  L_m^{n-m}(4|alpha|^2),     W_mn = conj(W_nm).
Complex wigner_projector(int n, int m, PhasePoint a);

// Two-mode Wigner value W(alpha1, alpha2) = sum_klmn rho_klmn W_km(a1) W_ln(a2).
// Requires Hermitian rho; the imaginary residue of the sum must stay below 1e-10.
double wigner_state(const TwoModeDensityMatrix& rho, PhasePoint a1, PhasePoint a2);

// Wigner-value Bell combination
//   B = (pi^2/4) [W(0,0) + W(a1,0) + W(0,a2) - W(a1,a2)];  |B| <= 2 classically.
double bell_parameter(const TwoModeDensityMatrix& rho, PhasePoint a1, PhasePoint a2);

// Closed-form Wigner function of the lossy delocalized single photon:
//   (4/pi^2) [1 + 2 eta (|a1+a2|^2 - 1)] e^{-2|a1|^2 - 2|a2|^2}.
double analytic_lossy_wigner(double eta, PhasePoint a1, PhasePoint a2);

// Closed-form Bell curve along alpha1 = alpha2 = sqrt(J):
//   B_eta(J) = 1 - 2 eta + e^{-2J}[4 eta (J-1) + 2] - e^{-4J}(8 J eta - 2 eta + 1).
double analytic_bell_curve(double eta, double j);

struct BellScanResult {
  std::string label;                            // "eta=<value>" or "reconstructed"
  std::vector<std::pair<double, double>> points;  // (J, B) on the requested grid
  double min_b = 0.0;                           // golden-section refined minimum
  double argmin_j = 0.0;
};

// J grid [0, 0.5] in steps of 0.005 (the default scan range).
std::vector<double> default_j_grid();

// Scans B along alpha1 = alpha2 = sqrt(J) and refines the grid minimum by
// golden-section search (1e-8 bracket width). Grid must be non-empty, strictly
// increasing, and non-negative.
BellScanResult bell_scan(const TwoModeDensityMatrix& rho, std::span<const double> j_grid);
BellScanResult bell_scan_analytic(double eta, std::span<const double> j_grid);

struct ThresholdResult {
  double eta_star = 0.0;     // efficiency above which min_J B_eta(J) < -2
  double min_b_at_star = 0.0;
  double tolerance = 0.0;    // |min_b_at_star + 2| guaranteed by the bisection
};

// Bisects eta in [0.9, 1] for min_J B_eta(J) = -2 (tolerance 1e-6 on the minimum).
ThresholdResult violation_threshold();

}  // namespace qht
