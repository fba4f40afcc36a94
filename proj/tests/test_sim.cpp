#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "qht/sim.hpp"

using namespace qht;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

TwoModeDensityMatrix vacuum_state(int d = 2) {
  TwoModeDensityMatrix rho{ModeDim(d)};
  rho(0, 0, 0, 0) = 1.0;
  return rho;
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

// closed-form model joint density (same expansion as the pdf tests)
double model_pdf(double eta, double x1, double x2, double delta) {
  auto g = [](int n, double x) {
    const double p = regular_wavefunction(n, x);
    return p * p;
  };
  const double h1 = regular_wavefunction(0, x1) * regular_wavefunction(1, x1);
  const double h2 = regular_wavefunction(0, x2) * regular_wavefunction(1, x2);
  return (1 - eta) * g(0, x1) * g(0, x2) +
         eta / 2 * (g(1, x1) * g(0, x2) + g(0, x1) * g(1, x2)) +
         eta * std::cos(delta) * h1 * h2;
}

// chi-square distance of a fixed-relative-phase slice against the model pdf
double slice_distance(const std::vector<QuadratureRecord>& records, double eta, int steps) {
  const int nb = 10;
  const double lo = -1.6, hi = 1.6, w = (hi - lo) / nb;
  std::vector<double> counts(nb * nb, 0.0);
  std::size_t n_sel = 0;
  for (std::size_t i = 0; i < records.size(); i += std::size_t(steps)) {  // delta = 0 slice
    const auto& r = records[i];
    ++n_sel;
    const int bx = int((r.x1 - lo) / w), by = int((r.x2 - lo) / w);
    if (bx >= 0 && bx < nb && by >= 0 && by < nb) counts[std::size_t(bx * nb + by)] += 1.0;
  }
  double dist = 0.0;
  for (int bx = 0; bx < nb; ++bx)
    for (int by = 0; by < nb; ++by) {
      double expect = 0.0;  // 5x5 midpoint rule per bin
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
          expect += model_pdf(eta, lo + w * (bx + (i + 0.5) / 5), lo + w * (by + (j + 0.5) / 5),
                              0.0);
      expect *= (w / 5) * (w / 5);
      const double obs = counts[std::size_t(bx * nb + by)] / double(n_sel);
      dist += (obs - expect) * (obs - expect) / expect;
    }
  return dist;
}

}  // namespace

TEST_CASE("splitmix64 reference values") {
  CHECK(splitmix64(0) == 16294208416658607535ULL);
  CHECK(splitmix64(1) == 10451216379200822465ULL);
  CHECK(splitmix64(42) == 13679457532755275413ULL);
}

TEST_CASE("rng produces calibrated uniforms and normals") {
  Rng rng(987);
  const int n = 200000;
  double su = 0.0, sn = 0.0, sn2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  CHECK(std::abs(su / n - 0.5) < 0.005);
  CHECK(std::abs(sn / n) < 0.01);
  CHECK(std::abs(sn2 / n - 1.0) < 0.02);
  const double v = rng.uniform(2.0, 5.0);
  CHECK(v >= 2.0);
  CHECK(v < 5.0);
  for (int i = 0; i < 1000; ++i) CHECK(rng.below(7) < 7);
}

TEST_CASE("identical configs give identical records") {
  const auto a = sample_records(SimConfig::model(0.61, 500, 123));
  const auto b = sample_records(SimConfig::model(0.61, 500, 123));
  REQUIRE(a.size() == 500);
  REQUIRE(b.size() == 500);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x1 == b[i].x1);
    CHECK(a[i].theta1 == b[i].theta1);
    CHECK(a[i].x2 == b[i].x2);
    CHECK(a[i].theta2 == b[i].theta2);
  }
  const auto c = sample_records(SimConfig::model(0.61, 500, 124));
  bool differ = false;
  for (std::size_t i = 0; i < c.size(); ++i) differ = differ || c[i].x1 != a[i].x1;
  CHECK(differ);
}

TEST_CASE("prefix stability across record counts") {
  // shard-major streams: the first records do not depend on the total count
  const auto small = sample_records(SimConfig::model(0.5, 300, 7));
  const auto large = sample_records(SimConfig::model(0.5, 2000, 7));
  for (std::size_t i = 0; i < small.size(); ++i) {
    CHECK(small[i].x1 == large[i].x1);
    CHECK(small[i].x2 == large[i].x2);
  }
}

TEST_CASE("state validation rejects unphysical inputs") {
  auto bad_trace = vacuum_state();
  bad_trace(0, 0, 0, 0) = 0.7;
  CHECK_THROWS_AS(sample_records(SimConfig::from_state(bad_trace, 10, 1)),
                  std::invalid_argument);

  TwoModeDensityMatrix neg{ModeDim(2)};
  neg(0, 0, 0, 0) = 1.3;
  neg(1, 1, 1, 1) = -0.3;
  CHECK_THROWS_AS(sample_records(SimConfig::from_state(neg, 10, 1)), std::invalid_argument);

  TwoModeDensityMatrix nh{ModeDim(2)};
  nh(0, 0, 0, 0) = 1.0;
  nh(0, 0, 1, 1) = 0.4;  // missing the conjugate partner
  CHECK_THROWS_AS(sample_records(SimConfig::from_state(nh, 10, 1)), std::invalid_argument);

  CHECK_THROWS_AS(SimConfig::model(1.2, 10, 1), std::invalid_argument);
  CHECK_THROWS_AS(SimConfig::model(-0.1, 10, 1), std::invalid_argument);
}

TEST_CASE("phase schedule cycles the relative phase") {
  const int steps = 12;
  const auto records = sample_records(SimConfig::model(0.61, 360, 99));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    CHECK(r.theta1 >= 0.0);
    CHECK(r.theta1 < kTwoPi);
    CHECK(r.theta2 >= 0.0);
    CHECK(r.theta2 < kTwoPi);
    const double want = kTwoPi * double(i % steps) / steps;
    double diff = std::fmod(r.theta2 - r.theta1 - want, kTwoPi);
    if (diff < -1e-9) diff += kTwoPi;
    if (diff > kTwoPi - 1e-9) diff -= kTwoPi;
    CHECK(std::abs(diff) < 1e-9);
  }
  // custom step count is honored
  PhaseSchedule sched{5};
  const auto r5 = sample_records(SimConfig::model(0.3, 20, 4, sched));
  const double d0 = std::fmod(r5[1].theta2 - r5[1].theta1 + kTwoPi, kTwoPi);
  CHECK(d0 == doctest::Approx(kTwoPi / 5).epsilon(1e-9));
}

TEST_CASE("vacuum sampling through the general path is calibrated") {
  const auto records = sample_records(SimConfig::from_state(vacuum_state(), 50000, 11));
  CHECK(last_acceptance_rate() > 0.1);
  double m1 = 0.0, v1 = 0.0;
  for (const auto& r : records) {
    m1 += r.x1;
    v1 += r.x1 * r.x1;
  }
  m1 /= double(records.size());
  v1 = v1 / double(records.size()) - m1 * m1;
  CHECK(std::abs(m1) < 0.01);
  CHECK(std::abs(v1 - 0.25) < 0.006);  // vacuum quadrature variance 1/4
}

TEST_CASE("model fast path reproduces closed-form moments") {
  const double eta = 0.61;
  const int steps = 12;
  const auto records = sample_records(SimConfig::model(eta, 240000, 2024));
  // per-mode variance 1/4 + eta/4
  double v = 0.0;
  for (const auto& r : records) v += r.x1 * r.x1 + r.x2 * r.x2;
  v /= 2.0 * double(records.size());
  CHECK(std::abs(v - 0.25 * (1 + eta)) < 0.005);
  // interference term: E[x1 x2 | delta] = eta cos(delta) / 4
  for (int j : {0, 3, 6}) {
    double c = 0.0;
    std::size_t n = 0;
    for (std::size_t i = std::size_t(j); i < records.size(); i += steps) {
      c += records[i].x1 * records[i].x2;
      ++n;
    }
    c /= double(n);
    const double delta = kTwoPi * j / steps;
    CHECK(std::abs(c - eta * std::cos(delta) / 4.0) < 0.012);
  }
}

TEST_CASE("general path agrees with the fast path for the model state") {
  const double eta = 0.61;
  const auto fast = sample_records(SimConfig::model(eta, 100000, 55));
  const auto general = sample_records(SimConfig::from_state(model_state(eta), 100000, 55));
  CHECK(last_acceptance_rate() > 0.1);
  auto corr0 = [&](const std::vector<QuadratureRecord>& rs) {
    double c = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < rs.size(); i += 12) {
      c += rs[i].x1 * rs[i].x2;
      ++n;
    }
    return c / double(n);
  };
  auto var1 = [](const std::vector<QuadratureRecord>& rs) {
    double v = 0.0;
    for (const auto& r : rs) v += r.x1 * r.x1;
    return v / double(rs.size());
  };
  CHECK(std::abs(var1(fast) - var1(general)) < 0.01);
  CHECK(std::abs(corr0(fast) - corr0(general)) < 0.02);
}

TEST_CASE("empirical fixed-phase distribution converges to the pdf") {
  const double eta = 0.61;
  const auto small = sample_records(SimConfig::model(eta, 10000, 31));
  const auto large = sample_records(SimConfig::model(eta, 1000000, 31));
  const double d_small = slice_distance(small, eta, 12);
  const double d_large = slice_distance(large, eta, 12);
  CHECK(d_large < d_small / 5.0);
  CHECK(d_large < 5e-3);
}

TEST_CASE("sampling a random state stays within the declared acceptance") {
  const auto rho = random_state(3, 77);
  const auto records = sample_records(SimConfig::from_state(rho, 20000, 13));
  CHECK(records.size() == 20000);
  CHECK(last_acceptance_rate() > 0.1);
  for (const auto& r : records) {
    CHECK(std::isfinite(r.x1));
    CHECK(std::isfinite(r.x2));
  }
}
