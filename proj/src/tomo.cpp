#include "qht/tomo.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "qht/wigner.hpp"

namespace qht {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kSeriesLimit = 12.0;  // direct phi series trusted to here
constexpr double kMlPFloor = 1e-250;   // Tr[Pi rho] underflow clamp

void check_pair(int k, int m) {
  if (k < 0 || m < 0 || k > kMaxPhoton || m > kMaxPhoton)
    throw std::out_of_range("pattern_function: photon index out of range");
}

double binom(int n, int k) {
  double v = 1.0;
  for (int i = 1; i <= k; ++i) v = v * double(n - k + i) / double(i);
  return v;
}

// ratio a_lo / a_hi of leading psi coefficients a_n = (2/pi)^{1/4} (2^n n!)^{-1/2} (2 sqrt2)^n
double leading_ratio(int lo, int hi) {
  double r = 1.0;
  for (int j = lo + 1; j <= hi; ++j) r *= std::sqrt(2.0 * j) / (2.0 * std::sqrt(2.0));
  return r;
}

// F_km for |x| beyond the series range: products of the wavefunction tails,
// psi_lo ~ a_lo x^lo e^{-x^2} and phi_hi ~ x^{-(hi+1)} e^{x^2} / (2 a_hi).
double pattern_tail(int lo, int hi, double x) {
  const double coef = double(lo - hi - 1) * leading_ratio(lo, hi) / 2.0;
  return coef * std::pow(x, lo - hi - 2);
}

double pattern_direct(int lo, int hi, double x) {
  if (std::abs(x) > kSeriesLimit) return pattern_tail(lo, hi, x);
  return regular_wavefunction_deriv(lo, x) * irregular_wavefunction(hi, x) +
         regular_wavefunction(lo, x) * irregular_wavefunction_deriv(hi, x);
}

// packed index for the upper triangle of a symmetric d x d matrix
int packed(int i, int j, int d) {
  if (i > j) std::swap(i, j);
  return i * d - i * (i - 1) / 2 + (j - i);
}

}  // namespace

double pattern_function_value(int k, int m, double x) {
  check_pair(k, m);
  if (!std::isfinite(x)) throw std::invalid_argument("pattern_function: non-finite x");
  return pattern_direct(std::min(k, m), std::max(k, m), x);
}

Complex pattern_function(int k, int m, double x, double theta) {
  return pattern_function_value(k, m, x) * std::polar(1.0, -double(m - k) * theta);
}

PatternFunctionTable::PatternFunctionTable(ModeDim dim, double x_max, double step)
    : _dim(dim), _x_max(x_max), _step(step) {
  if (!(x_max > 0.0) || x_max > kSeriesLimit)
    throw std::invalid_argument("PatternFunctionTable: x_max must lie in (0, 12]");
  if (!(step > 0.0) || step > x_max)
    throw std::invalid_argument("PatternFunctionTable: bad step");
  const int d = _dim.d;
  if (d - 1 > kMaxPhoton)
    throw std::out_of_range("PatternFunctionTable: dimension exceeds kMaxPhoton");
  const auto npts = static_cast<std::size_t>(std::llround(2.0 * x_max / step)) + 1;
  _samples.assign(std::size_t(d * d), {});
  for (int k = 0; k < d; ++k)
    for (int m = k; m < d; ++m) _samples[std::size_t(k * d + m)].resize(npts);
  std::vector<double> psi(std::size_t(d + 1));
  for (std::size_t i = 0; i < npts; ++i) {
    const double x = -x_max + double(i) * step;
    fill_wavefunctions(d, x, psi.data());
    for (int m = 0; m < d; ++m) {
      const double phi = irregular_wavefunction(m, x);
      const double dphi = irregular_wavefunction_deriv(m, x);
      for (int k = 0; k <= m; ++k) {
        const double dpsi =
            std::sqrt(double(k)) * (k > 0 ? psi[std::size_t(k - 1)] : 0.0) -
            std::sqrt(double(k + 1)) * psi[std::size_t(k + 1)];
        _samples[std::size_t(k * d + m)][i] = dpsi * phi + psi[std::size_t(k)] * dphi;
      }
    }
  }
}

double PatternFunctionTable::value(int k, int m, double x) const {
  const int d = _dim.d;
  if (k < 0 || m < 0 || k >= d || m >= d)
    throw std::out_of_range("PatternFunctionTable: photon index out of range");
  if (!std::isfinite(x)) throw std::invalid_argument("PatternFunctionTable: non-finite x");
  const int lo = std::min(k, m), hi = std::max(k, m);
  if (std::abs(x) > _x_max) return pattern_direct(lo, hi, x);
  const auto& s = _samples[std::size_t(lo * d + hi)];
  const double t = (x + _x_max) / _step;
  const auto ib = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(t), 1,
                                             std::ptrdiff_t(s.size()) - 3);
  const double u = t - double(ib);
  // 4-point Lagrange on nodes at offsets -1, 0, 1, 2
  const double wm = -u * (u - 1.0) * (u - 2.0) / 6.0;
  const double w0 = (u + 1.0) * (u - 1.0) * (u - 2.0) / 2.0;
  const double w1 = -(u + 1.0) * u * (u - 2.0) / 2.0;
  const double w2 = (u + 1.0) * u * (u - 1.0) / 6.0;
  const auto i = std::size_t(ib);
  return wm * s[i - 1] + w0 * s[i] + w1 * s[i + 1] + w2 * s[i + 2];
}

Complex PatternFunctionTable::evaluate(int k, int m, double x, double theta) const {
  return value(k, m, x) * std::polar(1.0, -double(m - k) * theta);
}

const PatternFunctionTable& PatternFunctionTable::shared(ModeDim dim) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<PatternFunctionTable>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[dim.d];
  if (!slot) slot = std::make_unique<PatternFunctionTable>(dim);
  return *slot;
}

namespace {

void check_records(const std::vector<QuadratureRecord>& records, const char* who) {
  if (records.empty()) throw std::invalid_argument(std::string(who) + ": no records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!(std::isfinite(r.x1) && std::isfinite(r.theta1) && std::isfinite(r.x2) &&
          std::isfinite(r.theta2)))
      throw std::invalid_argument(std::string(who) + ": non-finite value in record " +
                                  std::to_string(i));
  }
}

}  // namespace

PfResult pf_estimate(const std::vector<QuadratureRecord>& records, ModeDim dim) {
  check_records(records, "pf_estimate");
  const auto& table = PatternFunctionTable::shared(dim);
  const int d = dim.d;
  const int D = dim.pair();
  const auto dz = std::size_t(d);
  const auto ddz = dz * dz;
  std::vector<Complex> acc(ddz * ddz, Complex(0, 0));
  std::vector<double> acc2(acc.size(), 0.0);
  std::vector<double> f1r(ddz), f2r(ddz);
  std::vector<Complex> e1(dz), e2(dz), f1(ddz), f2(ddz);
  for (const auto& r : records) {
    for (int lo = 0; lo < d; ++lo)
      for (int hi = lo; hi < d; ++hi) {
        const double v1 = table.value(lo, hi, r.x1);
        const double v2 = table.value(lo, hi, r.x2);
        f1r[std::size_t(lo * d + hi)] = f1r[std::size_t(hi * d + lo)] = v1;
        f2r[std::size_t(lo * d + hi)] = f2r[std::size_t(hi * d + lo)] = v2;
      }
    e1[0] = e2[0] = Complex(1, 0);
    const Complex u1(std::cos(r.theta1), -std::sin(r.theta1));
    const Complex u2(std::cos(r.theta2), -std::sin(r.theta2));
    for (int q = 1; q < d; ++q) {
      e1[std::size_t(q)] = e1[std::size_t(q - 1)] * u1;
      e2[std::size_t(q)] = e2[std::size_t(q - 1)] * u2;
    }
    // f_km = F_km e^{-i(m-k)theta}
    for (int k = 0; k < d; ++k)
      for (int m = 0; m < d; ++m) {
        const Complex ph1 = m >= k ? e1[std::size_t(m - k)] : std::conj(e1[std::size_t(k - m)]);
        const Complex ph2 = m >= k ? e2[std::size_t(m - k)] : std::conj(e2[std::size_t(k - m)]);
        f1[std::size_t(k * d + m)] = f1r[std::size_t(k * d + m)] * ph1;
        f2[std::size_t(k * d + m)] = f2r[std::size_t(k * d + m)] * ph2;
      }
    std::size_t idx = 0;
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        for (int m = 0; m < d; ++m) {
          const Complex a = f1[std::size_t(k * d + m)];
          for (int n = 0; n < d; ++n, ++idx) {
            const Complex v = a * f2[std::size_t(l * d + n)];
            acc[idx] += v;
            acc2[idx] += std::norm(v);
          }
        }
  }
  const double n = double(records.size());
  PfResult out{TwoModeDensityMatrix(dim), RMat::Zero(D, D), 0.0};
  for (int row = 0; row < D; ++row)
    for (int col = 0; col < D; ++col) {
      const std::size_t idx = std::size_t(row) * std::size_t(D) + std::size_t(col);
      const Complex mean = acc[idx] / n;
      out.rho.matrix()(row, col) = mean;
      const double var = std::max(0.0, acc2[idx] / n - std::norm(mean));
      out.std_err(row, col) = std::sqrt(var / n);
    }
  out.raw_trace = out.rho.trace().real();
  out.rho.hermitize();
  return out;
}

namespace {

// Real symmetric core of the efficiency-corrected POVM:
//   S_mn(x) = sum_k sqrt(C(m,k) C(n,k)) eta^{(m+n)/2-k} (1-eta)^k psi_{m-k} psi_{n-k};
// the full element adds the phase e^{i(m-n)theta}. coeffs holds the k-sums'
// weights, indexed [m][n][k] flattened; psi holds psi_0..psi_{d-1}(x).
struct PovmCoeffs {
  int d;
  bool corrected;
  std::vector<double> w;  // (m * d + n) * d + k
};

PovmCoeffs make_povm_coeffs(double eta, ModeDim dim) {
  if (!(eta > 0.0) || eta > 1.0)
    throw std::invalid_argument(
        "povm_element: eta must lie in (0, 1] (eta = 0 is a degenerate POVM)");
  PovmCoeffs c{dim.d, eta < 1.0, {}};
  if (!c.corrected) return c;
  const int d = dim.d;
  c.w.assign(std::size_t(d * d * d), 0.0);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n)
      for (int k = 0; k <= std::min(m, n); ++k)
        c.w[std::size_t((m * d + n) * d + k)] = std::sqrt(binom(m, k) * binom(n, k)) *
                                                std::pow(eta, 0.5 * (m + n) - k) *
                                                std::pow(1.0 - eta, k);
  return c;
}

void povm_core(const PovmCoeffs& c, const double* psi, double* s_packed) {
  const int d = c.d;
  for (int m = 0; m < d; ++m)
    for (int n = m; n < d; ++n) {
      double v = 0.0;
      if (c.corrected) {
        for (int k = 0; k <= m; ++k)
          v += c.w[std::size_t((m * d + n) * d + k)] * psi[m - k] * psi[n - k];
      } else {
        v = psi[m] * psi[n];
      }
      s_packed[packed(m, n, d)] = v;
    }
}

}  // namespace

CMat povm_element(double x, double theta, double eta, ModeDim dim) {
  if (!std::isfinite(x) || !std::isfinite(theta))
    throw std::invalid_argument("povm_element: non-finite argument");
  const auto coeffs = make_povm_coeffs(eta, dim);
  const int d = dim.d;
  const auto dz = std::size_t(d);
  std::vector<double> psi(dz);
  fill_wavefunctions(d - 1, x, psi.data());
  std::vector<double> s(dz * (dz + 1) / 2);
  povm_core(coeffs, psi.data(), s.data());
  CMat out(d, d);
  for (int m = 0; m < d; ++m)
    for (int n = 0; n < d; ++n)
      out(m, n) = s[std::size_t(packed(m, n, d))] * std::polar(1.0, double(m - n) * theta);
  return out;
}

namespace {

// Per-record (or per-bin) precomputed data for the ML iteration: packed POVM
// cores for both modes, phase cosines/sines, and weights.
struct MlData {
  int d = 0;
  std::size_t n = 0;
  std::vector<double> s1, s2;  // n * pd, packed symmetric
  std::vector<double> ph;      // n * 4: cos t1, sin t1, cos t2, sin t2
  std::vector<double> w;       // n
  double total_weight = 0.0;
};

MlData precompute_ml(const std::vector<QuadratureRecord>& records, const MLConfig& config) {
  const int d = config.dim.d;
  const int pd = d * (d + 1) / 2;
  const auto coeffs = make_povm_coeffs(config.eta.value_or(1.0), config.dim);

  std::vector<QuadratureRecord> binned;
  std::vector<double> weights;
  const std::vector<QuadratureRecord>* src = &records;
  if (config.binning) {
    const auto& b = *config.binning;
    if (b.x_bins < 1 || b.phase_bins < 1 || !(b.x_max > 0.0))
      throw std::invalid_argument("ml_estimate: bad binning");
    const double wx = 2.0 * b.x_max / b.x_bins;
    const double wp = kTwoPi / b.phase_bins;
    auto xbin = [&](double x) {
      return std::clamp(int(std::floor((x + b.x_max) / wx)), 0, b.x_bins - 1);
    };
    auto pbin = [&](double t) {
      t = std::fmod(t, kTwoPi);
      if (t < 0) t += kTwoPi;
      return std::clamp(int(t / wp), 0, b.phase_bins - 1);
    };
    std::map<std::uint64_t, std::uint64_t> counts;
    for (const auto& r : records) {
      std::uint64_t key = std::uint64_t(xbin(r.x1));
      key = key * std::uint64_t(b.phase_bins) + std::uint64_t(pbin(r.theta1));
      key = key * std::uint64_t(b.x_bins) + std::uint64_t(xbin(r.x2));
      key = key * std::uint64_t(b.phase_bins) + std::uint64_t(pbin(r.theta2));
      ++counts[key];
    }
    for (const auto& [key, count] : counts) {
      std::uint64_t k = key;
      const auto it2 = k % std::uint64_t(b.phase_bins);
      k /= std::uint64_t(b.phase_bins);
      const auto ix2 = k % std::uint64_t(b.x_bins);
      k /= std::uint64_t(b.x_bins);
      const auto it1 = k % std::uint64_t(b.phase_bins);
      k /= std::uint64_t(b.phase_bins);
      const auto ix1 = k;
      binned.push_back({-b.x_max + (double(ix1) + 0.5) * wx, (double(it1) + 0.5) * wp,
                        -b.x_max + (double(ix2) + 0.5) * wx, (double(it2) + 0.5) * wp});
      weights.push_back(double(count));
    }
    src = &binned;
  }

  MlData data;
  data.d = d;
  data.n = src->size();
  data.s1.resize(data.n * std::size_t(pd));
  data.s2.resize(data.n * std::size_t(pd));
  data.ph.resize(data.n * 4);
  data.w.resize(data.n);
  const auto dz = std::size_t(d);
  std::vector<double> psi(dz);
  for (std::size_t i = 0; i < data.n; ++i) {
    const auto& r = (*src)[i];
    fill_wavefunctions(d - 1, r.x1, psi.data());
    povm_core(coeffs, psi.data(), &data.s1[i * std::size_t(pd)]);
    fill_wavefunctions(d - 1, r.x2, psi.data());
    povm_core(coeffs, psi.data(), &data.s2[i * std::size_t(pd)]);
    data.ph[i * 4 + 0] = std::cos(r.theta1);
    data.ph[i * 4 + 1] = std::sin(r.theta1);
    data.ph[i * 4 + 2] = std::cos(r.theta2);
    data.ph[i * 4 + 3] = std::sin(r.theta2);
    data.w[i] = config.binning ? weights[i] : 1.0;
    data.total_weight += data.w[i];
  }
  return data;
}

// hermitize, clip negative eigenvalues, renormalize; optional global-phase pinch
void project_physical(TwoModeDensityMatrix& rho, bool blocks) {
  rho.hermitize();
  Eigen::SelfAdjointEigenSolver<CMat> es(rho.matrix());
  if (es.info() != Eigen::Success)
    throw numerical_error("ml_estimate: eigendecomposition failed");
  Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  rho.matrix() = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
  rho.renormalize_trace();
  if (blocks) apply_global_phase_mask(rho);
}

double trace_distance(const CMat& a, const CMat& b) {
  Eigen::SelfAdjointEigenSolver<CMat> es(a - b);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

}  // namespace

MlResult ml_estimate(const std::vector<QuadratureRecord>& records, const MLConfig& config) {
  check_records(records, "ml_estimate");
  if (config.max_iters < 1) throw std::invalid_argument("ml_estimate: max_iters must be >= 1");
  if (!(config.convergence_tol > 0.0))
    throw std::invalid_argument("ml_estimate: convergence_tol must be > 0");

  const MlData data = precompute_ml(records, config);
  const int d = data.d;
  const int D = d * d;

  MlResult result{TwoModeDensityMatrix(config.dim), 0, false, {}, 0, "", 0.0, 0.0};
  if (config.binning) {
    result.bin_width_x = 2.0 * config.binning->x_max / config.binning->x_bins;
    result.bin_width_phase = kTwoPi / config.binning->phase_bins;
  }

  TwoModeDensityMatrix rho(config.dim);
  rho.matrix() = CMat::Identity(D, D) / double(D);

  CMat r_op(D, D);
  const auto dz = std::size_t(d);
  std::vector<Complex> p1(dz), p2(dz), a(dz * dz), b(dz * dz);
  const int pd = d * (d + 1) / 2;

  for (int iter = 1; iter <= config.max_iters; ++iter) {
    r_op.setZero();
    Complex* rop = r_op.data();  // column-major, D x D
    const Complex* rhobuf = rho.matrix().data();
    double ll = 0.0;
    for (std::size_t j = 0; j < data.n; ++j) {
      const double* s1 = &data.s1[j * std::size_t(pd)];
      const double* s2 = &data.s2[j * std::size_t(pd)];
      const Complex u1(data.ph[j * 4 + 0], data.ph[j * 4 + 1]);
      const Complex u2(data.ph[j * 4 + 2], data.ph[j * 4 + 3]);
      p1[0] = p2[0] = Complex(1, 0);
      for (int q = 1; q < d; ++q) {
        p1[std::size_t(q)] = p1[std::size_t(q - 1)] * u1;
        p2[std::size_t(q)] = p2[std::size_t(q - 1)] * u2;
      }
      // Hermitian POVM factors A_km = S1_km e^{i(k-m)theta1}, B likewise
      for (int k = 0; k < d; ++k)
        for (int m = k; m < d; ++m) {
          const Complex v1 = s1[packed(k, m, d)] * std::conj(p1[std::size_t(m - k)]);
          const Complex v2 = s2[packed(k, m, d)] * std::conj(p2[std::size_t(m - k)]);
          a[std::size_t(k * d + m)] = v1;
          a[std::size_t(m * d + k)] = std::conj(v1);
          b[std::size_t(k * d + m)] = v2;
          b[std::size_t(m * d + k)] = std::conj(v2);
        }
      // p = Tr[(Pi1 x Pi2) rho] = sum_km A_km sum_ln B_ln rho_{(m n),(k l)}
      Complex psum(0, 0);
      for (int k = 0; k < d; ++k)
        for (int m = 0; m < d; ++m) {
          Complex c(0, 0);
          for (int l = 0; l < d; ++l) {
            const Complex* col = rhobuf + std::size_t(k * d + l) * std::size_t(D) +
                                 std::size_t(m * d);
            for (int n = 0; n < d; ++n) c += b[std::size_t(l * d + n)] * col[n];
          }
          psum += a[std::size_t(k * d + m)] * c;
        }
      double p = psum.real();
      if (!(p > kMlPFloor)) {
        p = kMlPFloor;
        ++result.down_weighted;
      }
      ll += data.w[j] * std::log(p);
      const double inv = data.w[j] / p;
      for (int k = 0; k < d; ++k)
        for (int m = 0; m < d; ++m) {
          const Complex g = a[std::size_t(k * d + m)] * inv;
          for (int n = 0; n < d; ++n) {
            Complex* col = rop + std::size_t(m * d + n) * std::size_t(D) + std::size_t(k * d);
            for (int l = 0; l < d; ++l) col[l] += g * b[std::size_t(l * d + n)];
          }
        }
    }
    r_op /= data.total_weight;
    result.log_likelihood.push_back(ll / data.total_weight);

    TwoModeDensityMatrix next(config.dim);
    next.matrix() = r_op * rho.matrix() * r_op;
    project_physical(next, config.enforce_global_phase_blocks);
    const double delta = trace_distance(next.matrix(), rho.matrix());
    rho = next;
    result.iterations = iter;
    if (delta <= config.convergence_tol) {
      result.converged = true;
      break;
    }
  }
  rho.global_phase_blocks = config.enforce_global_phase_blocks;
  result.rho = rho;
  if (!result.converged)
    result.warning = "no convergence within " + std::to_string(config.max_iters) +
                     " iterations; returning the last iterate";
  else if (result.down_weighted > 0)
    result.warning = std::to_string(result.down_weighted) +
                     " record evaluations down-weighted for probability underflow";
  return result;
}

namespace {

// single-mode loss kernel with transmissivity-like parameter z (eta, or 1/eta
// for the inverse); mode selects which index pair of the two-mode matrix moves
TwoModeDensityMatrix apply_loss_mode(const TwoModeDensityMatrix& in, double z, int mode) {
  const int d = in.d();
  TwoModeDensityMatrix out(in.dim());
  const double y = 1.0 - z;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      for (int m = 0; m < d; ++m)
        for (int n = 0; n < d; ++n) {
          const int i1 = mode == 1 ? k : l;
          const int i2 = mode == 1 ? m : n;
          const int amax = d - 1 - std::max(i1, i2);
          Complex acc(0, 0);
          double zp = std::pow(z, 0.5 * (i1 + i2));
          double ya = 1.0;
          for (int aa = 0; aa <= amax; ++aa) {
            const double wgt = std::sqrt(binom(i1 + aa, aa) * binom(i2 + aa, aa)) * zp * ya;
            acc += wgt * (mode == 1 ? in(k + aa, l, m + aa, n) : in(k, l + aa, m, n + aa));
            ya *= y;
          }
          out(k, l, m, n) = acc;
        }
  return out;
}

void check_eta_channel(double eta, const char* who) {
  if (!(eta > 0.0) || eta > 1.0)
    throw std::invalid_argument(std::string(who) + ": eta must lie in (0, 1]");
}

}  // namespace

TwoModeDensityMatrix bernoulli_map(const TwoModeDensityMatrix& rho, double eta) {
  check_eta_channel(eta, "bernoulli_map");
  return apply_loss_mode(apply_loss_mode(rho, eta, 1), eta, 2);
}

IbtResult inverse_bernoulli(const TwoModeDensityMatrix& rho, double eta, bool clip_negative) {
  check_eta_channel(eta, "inverse_bernoulli");
  IbtResult out{apply_loss_mode(apply_loss_mode(rho, 1.0 / eta, 1), 1.0 / eta, 2), 0.0, true,
                false};
  out.rho.hermitize();
  out.rho.renormalize_trace();
  out.min_eigenvalue = min_eigenvalue(out.rho);
  out.psd = out.min_eigenvalue >= -kPsdTol;
  if (clip_negative && out.min_eigenvalue < 0.0) {
    Eigen::SelfAdjointEigenSolver<CMat> es(out.rho.matrix());
    if (es.info() != Eigen::Success)
      throw numerical_error("inverse_bernoulli: eigendecomposition failed");
    Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
    out.rho.matrix() = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    out.rho.renormalize_trace();
    out.clipped = true;
  }
  return out;
}

BootstrapResult bootstrap_uncertainty(const std::vector<QuadratureRecord>& records,
                                      const Estimator& estimator, int n_resamples,
                                      std::uint64_t seed, std::span<const double> bell_j) {
  if (n_resamples < 2)
    throw std::invalid_argument("bootstrap_uncertainty: n_resamples must be >= 2");
  check_records(records, "bootstrap_uncertainty");
  const std::size_t n = records.size();
  Rng rng(splitmix64(seed ^ 0xB007AB1E5EEDULL));

  std::vector<CMat> rhos;
  std::vector<double> ens;
  std::vector<std::vector<double>> bells(bell_j.size());
  int skipped = 0;
  std::vector<QuadratureRecord> resample(n);
  for (int b = 0; b < n_resamples; ++b) {
    for (std::size_t i = 0; i < n; ++i) resample[i] = records[rng.below(n)];
    try {
      const TwoModeDensityMatrix rho = estimator(resample);
      ens.push_back(log_negativity(rho));
      for (std::size_t q = 0; q < bell_j.size(); ++q) {
        const PhasePoint alpha{std::sqrt(bell_j[q]), 0.0};
        bells[q].push_back(bell_parameter(rho, alpha, alpha));
      }
      rhos.push_back(rho.matrix());
    } catch (const std::exception&) {
      ++skipped;
    }
  }
  const auto nb = rhos.size();
  if (nb < 2)
    throw numerical_error("bootstrap_uncertainty: fewer than two resamples succeeded");

  auto std_dev = [&](const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= double(v.size());
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return std::sqrt(sq / double(v.size() - 1));
  };

  BootstrapResult out;
  out.n_resamples = n_resamples;
  out.skipped = skipped;
  const auto D = rhos.front().rows();
  out.element_err = RMat::Zero(D, D);
  for (Eigen::Index r = 0; r < D; ++r)
    for (Eigen::Index c = 0; c < D; ++c) {
      Complex mean(0, 0);
      for (const auto& m : rhos) mean += m(r, c);
      mean /= double(nb);
      double sq = 0.0;
      for (const auto& m : rhos) sq += std::norm(m(r, c) - mean);
      out.element_err(r, c) = std::sqrt(sq / double(nb - 1));
    }
  out.log_negativity_err = std_dev(ens);
  for (std::size_t q = 0; q < bell_j.size(); ++q)
    out.bell_err.emplace_back(bell_j[q], std_dev(bells[q]));
  return out;
}

}  // namespace qht
