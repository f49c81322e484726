#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

#include "rdlasso/sim.hpp"
#include "rdlasso/stats.hpp"

namespace rdlasso {

namespace {

// Quintic coefficient sets (constant term first). Each conditional mean is a
// two-sided polynomial switching branches at zero.
using Quintic = std::array<double, 6>;

constexpr Quintic kMuZLeft = {0.49, 1.06, 5.74, 17.14, 19.75, 7.47};
constexpr Quintic kMuZRight = {0.49, 0.61, 0.23, -3.46, 6.43, -3.48};

constexpr Quintic kMu1Dgp1Left = {0.48, 1.27, 7.18, 20.21, 21.54, 7.33};
constexpr Quintic kMu1Dgp1Right = {0.52, 0.84, -3.00, 7.99, -9.01, 3.56};

constexpr Quintic kMu1Dgp23Left = {0.36, 0.96, 5.47, 15.28, 15.87, 5.14};
constexpr Quintic kMu1Dgp23Right = {0.38, 0.62, -2.84, 8.42, -10.24, 4.31};

constexpr double kSigmaY = 0.1295;
constexpr double kSigmaZ = 0.1353;
constexpr double kRho = 0.2692;
constexpr double kMu2Left = 0.22;
constexpr double kMu2Right = 0.28;

double eval_quintic(const Quintic& c, double x) {
  double acc = 0.0;
  for (int k = 5; k >= 0; --k) acc = acc * x + c[static_cast<std::size_t>(k)];
  return acc;
}

double mu_z(double x) {
  return eval_quintic(x < 0.0 ? kMuZLeft : kMuZRight, x);
}

double mu_1(Dgp dgp, double x) {
  if (dgp == Dgp::dgp1) {
    return eval_quintic(x < 0.0 ? kMu1Dgp1Left : kMu1Dgp1Right, x);
  }
  return eval_quintic(x < 0.0 ? kMu1Dgp23Left : kMu1Dgp23Right, x);
}

double pi_base(Dgp dgp) { return dgp == Dgp::dgp2 ? 0.2 : 0.5; }

void validate_spec(const DgpSpec& spec) {
  if (spec.n < 50) throw std::invalid_argument("DgpSpec: n must be >= 50");
  if (spec.p < 0 || (spec.dgp != Dgp::dgp1 && spec.p < 1)) {
    throw std::invalid_argument("DgpSpec: p must be >= 1 when covariates enter the outcome");
  }
}

}  // namespace

Sample draw_sample(const DgpSpec& spec, std::uint64_t replication) {
  validate_spec(spec);
  std::mt19937_64 eng = replication_engine(spec.seed, replication);

  const Eigen::Index n = spec.n;
  const Eigen::Index p = spec.p;
  const Eigen::Index pw = std::max<Eigen::Index>(0, p - 1);  // block is (Z, W_1..W_{p-1})
  const double pi0 = pi_base(spec.dgp);
  const bool with_covariate_effects = spec.dgp != Dgp::dgp1;

  Sample s;
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n, p);
  s.cutoff = 0.0;
  s.covariate_names.clear();
  if (p >= 1) s.covariate_names.push_back("Z");
  for (Eigen::Index j = 1; j < p; ++j) {
    s.covariate_names.push_back("W" + std::to_string(j));
  }

  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = 2.0 * draw_beta_2_4(eng) - 1.0;
    const double n1 = draw_normal(eng);
    const double n2 = draw_normal(eng);
    const double eps_y = kSigmaY * n1;
    const double eps_z = kSigmaZ * (kRho * n1 + std::sqrt(1.0 - kRho * kRho) * n2);
    const double z = mu_z(x) + eps_z;

    double mu3 = 0.0;
    double prev = 0.0;
    double pi = 1.0;
    for (Eigen::Index j = 0; j < pw; ++j) {
      // Unit-variance AR(1) with lag-one correlation 0.5.
      const double w = j == 0 ? draw_normal(eng)
                              : 0.5 * prev + std::sqrt(0.75) * draw_normal(eng);
      prev = w;
      pi *= pi0;
      if (with_covariate_effects) mu3 += pi * w;
      s.z(i, 1 + j) = w;
    }

    double mu2 = 0.0;
    if (with_covariate_effects) mu2 = (x < 0.0 ? kMu2Left : kMu2Right) * z;

    s.x(i) = x;
    if (p >= 1) s.z(i, 0) = z;
    s.y(i) = mu_1(spec.dgp, x) + mu2 + mu3 + eps_y;
  }
  return s;
}

double true_tau(const DgpSpec& spec) {
  validate_spec(spec);
  if (spec.dgp == Dgp::dgp1) {
    return kMu1Dgp1Right[0] - kMu1Dgp1Left[0];
  }
  // Intercept jump plus the covariate-coefficient jump times mu_z(0); the W
  // block has continuous coefficients and contributes no jump.
  return (kMu1Dgp23Right[0] - kMu1Dgp23Left[0]) +
         (kMu2Right - kMu2Left) * eval_quintic(kMuZRight, 0.0);
}

double reference_tau(const DgpSpec& spec) {
  validate_spec(spec);
  if (spec.dgp == Dgp::dgp1) {
    return kMu1Dgp1Right[0] - kMu1Dgp1Left[0];
  }
  return kMu1Dgp23Right[0] - kMu1Dgp23Left[0];
}

std::string to_string(Dgp dgp) {
  switch (dgp) {
    case Dgp::dgp1: return "dgp1";
    case Dgp::dgp2: return "dgp2";
    case Dgp::dgp3: return "dgp3";
  }
  return "unknown";
}

Dgp dgp_from_string(const std::string& name) {
  if (name == "dgp1" || name == "1") return Dgp::dgp1;
  if (name == "dgp2" || name == "2") return Dgp::dgp2;
  if (name == "dgp3" || name == "3") return Dgp::dgp3;
  throw std::invalid_argument("unknown dgp: " + name);
}

}  // namespace rdlasso
