#include "rdlasso/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace rdlasso {

namespace {

// Acklam's rational approximation to the standard normal quantile.
double acklam_quantile(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;

  if (p < plow) {
    double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_cdf(double value) {
  return 0.5 * std::erfc(-value / std::sqrt(2.0));
}

double normal_quantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) {
    throw std::invalid_argument("normal_quantile: prob must be in (0, 1)");
  }
  double x = acklam_quantile(prob);
  // One Halley refinement step against the exact CDF.
  const double sqrt_2pi = std::sqrt(2.0 * 3.14159265358979323846);
  double e = normal_cdf(x) - prob;
  double u = e * sqrt_2pi * std::exp(0.5 * x * x);
  x = x - u / (1.0 + 0.5 * x * u);
  return x;
}

std::uint64_t splitmix64(std::uint64_t state) {
  std::uint64_t z = state + 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::mt19937_64 replication_engine(std::uint64_t seed, std::uint64_t replication) {
  return std::mt19937_64(splitmix64(seed ^ (0x632BE59BD9B4E019ULL * (replication + 1))));
}

double draw_uniform(std::mt19937_64& eng) {
  // 53-bit mantissa draw in (0, 1); never returns an exact endpoint.
  const std::uint64_t bits = eng() >> 11;
  return (static_cast<double>(bits) + 0.5) * (1.0 / 9007199254740992.0);
}

double draw_normal(std::mt19937_64& eng) {
  // Box-Muller; one value per call keeps the draw order explicit.
  double u1 = draw_uniform(eng);
  double u2 = draw_uniform(eng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

double draw_beta_2_4(std::mt19937_64& eng) {
  // Beta(2, 4) = G2 / (G2 + G4) with Gk a sum of k Exp(1) draws.
  double g2 = 0.0, g4 = 0.0;
  for (int k = 0; k < 2; ++k) g2 += -std::log(draw_uniform(eng));
  for (int k = 0; k < 4; ++k) g4 += -std::log(draw_uniform(eng));
  return g2 / (g2 + g4);
}

}  // namespace rdlasso
