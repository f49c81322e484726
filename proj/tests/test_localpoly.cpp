#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "rdlasso/data.hpp"
#include "rdlasso/errors.hpp"
#include "rdlasso/localpoly.hpp"
#include "rdlasso/sim.hpp"
#include "rdlasso/stats.hpp"

using namespace rdlasso;

namespace {

Sample seeded_sample(Eigen::Index n, std::uint64_t seed, double curvature,
                     double noise_sd) {
  std::mt19937_64 eng = replication_engine(seed, 0);
  Sample s;
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.x(i) = 2.0 * draw_uniform(eng) - 1.0;
    const double t = s.x(i) >= 0.0 ? 1.0 : 0.0;
    s.y(i) = 0.4 + 0.5 * t + 0.3 * s.x(i) + curvature * s.x(i) * s.x(i) +
             noise_sd * draw_normal(eng);
  }
  return s;
}

}  // namespace

TEST_CASE("local_poly_fit recovers exact polynomials") {
  const Eigen::Index n = 50;
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = -1.0 + 2.0 * static_cast<double>(i) / (n - 1);
    y(i) = 2.0 + 3.0 * x(i);
  }
  const KernelSpec kern(KernelFamily::triangular, 1.0);
  for (Side side : {Side::left, Side::right}) {
    const Eigen::VectorXd c = local_poly_fit(x, y, side, 1, 1.0, kern);
    CHECK(c(0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(c(1) == doctest::Approx(3.0).epsilon(1e-10));
  }
  const Eigen::VectorXd quad =
      local_poly_fit(x, x.cwiseAbs2(), Side::right, 2, 1.0, kern);
  CHECK(quad(2) == doctest::Approx(1.0).epsilon(1e-9));  // second derivative 2 c2 = 2
}

TEST_CASE("local_poly_fit estimates the curvature of sin near zero") {
  const Eigen::Index n = 10000;
  std::mt19937_64 eng = replication_engine(31, 0);
  Eigen::VectorXd x(n), y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i) = 2.0 * draw_uniform(eng) - 1.0;
    y(i) = std::sin(x(i)) + 0.05 * draw_normal(eng);
  }
  const Eigen::VectorXd c = local_poly_fit(x, y, Side::right, 2, 0.5,
                                           KernelSpec(KernelFamily::triangular, 0.5));
  CHECK(std::abs(2.0 * c(2) - 0.0) < 0.1);  // sin''(0) = 0
  CHECK(c(1) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("local_poly_fit requires enough observations") {
  Eigen::VectorXd x(3), y(3);
  x << -0.5, -0.2, 0.3;
  y << 1.0, 2.0, 3.0;
  CHECK_THROWS_AS(local_poly_fit(x, y, Side::right, 2, 1.0,
                                 KernelSpec(KernelFamily::triangular, 1.0)),
                  InsufficientDataError);
}

TEST_CASE("nn_variance hand examples") {
  Sample s;
  s.x.resize(8);
  s.x << -0.4, -0.3, -0.2, -0.1, 0.1, 0.2, 0.3, 0.4;
  s.y.resize(8);
  s.y << 0.0, 1.0, 0.0, 1.0, 7.0, 7.0, 7.0, 7.0;
  s.z.resize(8, 0);
  const Eigen::VectorXd v = nn_variance(s, 3);
  // Left side, J = 3: each observation's neighbor mean covers the other
  // three, so sigma2 = (3/4) (y_i - mean)^2; for y = (0,1,0,1) every entry
  // is (3/4)(2/3)^2 = 1/3.
  for (int i = 0; i < 4; ++i) CHECK(v(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  // Constant side has zero dispersion.
  for (int i = 4; i < 8; ++i) CHECK(v(i) == 0.0);
}

TEST_CASE("nn_variance is consistent for iid noise") {
  const Eigen::Index n = 10000;
  std::mt19937_64 eng = replication_engine(33, 0);
  Sample s;
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n, 0);
  const double sigma = 0.7;
  for (Eigen::Index i = 0; i < n; ++i) {
    s.x(i) = 2.0 * draw_uniform(eng) - 1.0;
    s.y(i) = sigma * draw_normal(eng);
  }
  const Eigen::VectorXd v = nn_variance(s, 3);
  CHECK(std::abs(v.mean() - sigma * sigma) < 0.05 * sigma * sigma);
}

TEST_CASE("nn_variance needs J+1 points per side") {
  Sample s;
  s.x.resize(4);
  s.x << -0.5, 0.1, 0.2, 0.3;
  s.y.resize(4);
  s.y.setZero();
  s.z.resize(4, 0);
  CHECK_THROWS_AS(nn_variance(s, 3), InsufficientDataError);
}

TEST_CASE("bias estimate vanishes for a linear outcome") {
  Sample s = seeded_sample(200, 41, 0.0, 0.0);
  const BandwidthPair bw{0.5, 0.5, false};
  const BiasVariance bv = bias_variance_estimates(
      s, {}, Eigen::VectorXd(), bw, KernelSpec(KernelFamily::triangular, 0.5));
  CHECK(std::abs(bv.bias) < 1e-6);
  CHECK(bv.variance >= 0.0);
}

TEST_CASE("bias and variance obey their homogeneity degrees") {
  Sample s = seeded_sample(300, 43, 1.5, 0.3);
  const BandwidthPair bw{0.4, 0.6, false};
  const KernelSpec kern(KernelFamily::triangular, 0.4);
  const BiasVariance base = bias_variance_estimates(s, {}, Eigen::VectorXd(), bw, kern);
  Sample doubled = s;
  doubled.y *= 2.0;
  const BiasVariance twice =
      bias_variance_estimates(doubled, {}, Eigen::VectorXd(), bw, kern);
  CHECK(twice.bias == doctest::Approx(2.0 * base.bias).epsilon(1e-9));
  CHECK(twice.variance == doctest::Approx(4.0 * base.variance).epsilon(1e-9));
}

TEST_CASE("bias_variance_estimates is invariant to observation order") {
  Sample s = seeded_sample(150, 47, 1.0, 0.4);
  const BandwidthPair bw{0.5, 0.5, false};
  const KernelSpec kern(KernelFamily::epanechnikov, 0.5);
  const BiasVariance a = bias_variance_estimates(s, {}, Eigen::VectorXd(), bw, kern);

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(s.n()));
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 eng(99);
  std::shuffle(perm.begin(), perm.end(), eng);
  Sample shuffled = s;
  for (Eigen::Index i = 0; i < s.n(); ++i) {
    shuffled.x(i) = s.x(perm[static_cast<std::size_t>(i)]);
    shuffled.y(i) = s.y(perm[static_cast<std::size_t>(i)]);
  }
  const BiasVariance b =
      bias_variance_estimates(shuffled, {}, Eigen::VectorXd(), bw, kern);
  CHECK(a.bias == doctest::Approx(b.bias).epsilon(1e-10));
  CHECK(a.variance == doctest::Approx(b.variance).epsilon(1e-10));
}

TEST_CASE("h^2 times the bias equals the exact quadratic leakage") {
  // For y = x^2 with no noise and b = h, the quadratic pilot recovers the
  // curvature exactly, so the estimated correction h^2 Bbar must equal the
  // jump the local linear contrast reads off the pure quadratic.
  std::mt19937_64 eng = replication_engine(51, 0);
  Sample s;
  const Eigen::Index n = 400;
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n, 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.x(i) = 2.0 * draw_uniform(eng) - 1.0;
    s.y(i) = s.x(i) * s.x(i);
  }
  const double h = 0.5;
  const KernelSpec kern(KernelFamily::triangular, h);
  const BandwidthPair bw{h, h, true};
  const BiasVariance bv =
      bias_variance_estimates(s, {}, Eigen::VectorXd(), bw, kern);
  const Eigen::VectorXd right = local_poly_fit(s.x, s.y, Side::right, 1, h, kern);
  const Eigen::VectorXd left = local_poly_fit(s.x, s.y, Side::left, 1, h, kern);
  const double leakage = right(0) - left(0);
  CHECK(h * h * bv.bias == doctest::Approx(leakage).epsilon(1e-8));
}

TEST_CASE("closed-form bandwidth and its first-order condition") {
  const double h = mse_bandwidth_from_components(1.0, 1.0, 500);
  CHECK(h == doctest::Approx(std::pow(1.0 / 2000.0, 0.2)).epsilon(1e-12));
  CHECK(h == doctest::Approx(0.2187).epsilon(2e-4));
  // d/dh [h^4 B^2 + V/(n h)] = 4 h^3 B^2 - V/(n h^2) = 0 at the minimizer.
  const double b2 = 2.3, v = 0.7;
  const Eigen::Index n = 777;
  const double hs = mse_bandwidth_from_components(std::sqrt(b2), v, n);
  const double foc = 4.0 * std::pow(hs, 3.0) * b2 -
                     v / (static_cast<double>(n) * hs * hs);
  CHECK(std::abs(foc) < 1e-6);
}

TEST_CASE("degenerate curvature caps the bandwidth at the side range") {
  // Constant outcome: zero curvature and zero variance. The selector must
  // return the range cap instead of diverging or dividing by zero.
  Sample s = seeded_sample(200, 53, 0.0, 0.0);
  s.y.setConstant(2.0);
  const BandwidthPair bw = mse_optimal_bandwidth(
      s, {}, Eigen::VectorXd(), KernelSpec(KernelFamily::triangular, 1.0), {});
  const double cap = std::min(-s.x.minCoeff(), s.x.maxCoeff());
  CHECK(bw.h == doctest::Approx(cap).epsilon(1e-12));
  CHECK(std::isfinite(bw.b));
}

TEST_CASE("bandwidth selection is scale equivariant") {
  Sample s = seeded_sample(300, 57, 2.0, 0.3);
  const KernelSpec kern(KernelFamily::triangular, 1.0);
  const BandwidthPair base = mse_optimal_bandwidth(s, {}, Eigen::VectorXd(), kern, {});
  const double c = 3.0;
  Sample scaled = s;
  scaled.x *= c;
  const BandwidthPair wide =
      mse_optimal_bandwidth(scaled, {}, Eigen::VectorXd(), kern, {});
  CHECK(wide.h == doctest::Approx(c * base.h).epsilon(1e-6));
  CHECK(wide.b == doctest::Approx(c * base.b).epsilon(1e-6));
}

TEST_CASE("restricted selection forces h equal to b") {
  Sample s = seeded_sample(300, 59, 2.0, 0.3);
  BandwidthOptions opts;
  opts.restricted = true;
  const BandwidthPair bw = mse_optimal_bandwidth(
      s, {}, Eigen::VectorXd(), KernelSpec(KernelFamily::triangular, 1.0), opts);
  CHECK(bw.restricted);
  CHECK(bw.h == bw.b);
}

TEST_CASE("selected bandwidth on the benchmark design sits in the published range") {
  DgpSpec spec;
  spec.dgp = Dgp::dgp1;
  spec.p = 0;
  spec.seed = 42;
  double sum = 0.0;
  const int reps = 200;
  for (int rep = 0; rep < reps; ++rep) {
    const Sample s = draw_sample(spec, static_cast<std::uint64_t>(rep));
    const BandwidthPair bw = mse_optimal_bandwidth(
        s, {}, Eigen::VectorXd(), KernelSpec(KernelFamily::triangular, 1.0), {});
    sum += bw.h;
  }
  const double mean_h = sum / reps;
  CHECK(mean_h > 0.185);
  CHECK(mean_h < 0.205);
}
