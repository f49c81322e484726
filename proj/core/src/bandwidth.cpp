#include <algorithm>
#include <cmath>

#include "inference.hpp"
#include "rdlasso/errors.hpp"
#include "rdlasso/localpoly.hpp"

namespace rdlasso {

namespace {

// Range of centered x on the shorter side; the cap for degenerate-curvature
// cases so the selector never returns an unbounded bandwidth.
double side_range_cap(const Eigen::VectorXd& xc) {
  double lo = 0.0, hi = 0.0;
  for (Eigen::Index i = 0; i < xc.size(); ++i) {
    lo = std::min(lo, xc(i));
    hi = std::max(hi, xc(i));
  }
  return std::min(-lo, hi);
}

double sd(const Eigen::VectorXd& v) {
  const double mean = v.mean();
  return std::sqrt((v.array() - mean).square().sum() / std::max<Eigen::Index>(1, v.size() - 1));
}

struct PilotState {
  Eigen::VectorXd xc;
  Eigen::VectorXd xi;
  Eigen::VectorXd sigma2;
  double b0 = 0.0;
  double cap = 0.0;
  Eigen::Index n = 0;
};

PilotState pilot_state(const Sample& sample, const std::vector<Eigen::Index>& selected,
                       const Eigen::VectorXd& gamma_bar, const BandwidthOptions& opts,
                       double pilot_exponent) {
  PilotState st;
  st.xc = sample.x.array() - sample.cutoff;
  st.xi = detail::composite_outcome(sample, selected, gamma_bar);
  st.sigma2 =
      detail::composite_nn_variance(sample, selected, gamma_bar, opts.nn_neighbors);
  st.n = sample.n();
  st.cap = side_range_cap(st.xc);
  st.b0 = opts.pilot_constant * sd(st.xc) *
          std::pow(static_cast<double>(st.n), pilot_exponent);
  st.b0 = std::min(std::max(st.b0, 1e-12), st.cap);
  return st;
}

// Pilot bandwidth for the curvature (or next-derivative) target: minimize the
// MSE of the between-side contrast of the next-order coefficients, which has
// bias O(b) and variance O(1/(n b^{2k+1})) for coefficient order k.
double derivative_pilot(const PilotState& st, const KernelSpec& kernel,
                        int point_degree) {
  const int k = point_degree + 1;  // coefficient order being targeted
  const detail::SideProjection cm = detail::side_projection(
      st.xc, Side::left, k, k, st.b0, kernel);
  const detail::SideProjection cp = detail::side_projection(
      st.xc, Side::right, k, k, st.b0, kernel);
  const detail::SideProjection dm = detail::side_projection(
      st.xc, Side::left, k + 1, k + 1, st.b0, kernel);
  const detail::SideProjection dp = detail::side_projection(
      st.xc, Side::right, k + 1, k + 1, st.b0, kernel);

  // Bias of the contrast at b0 is (leakage factor) x (next coefficient);
  // leakage scales linearly in b, so divide by b0 to get the slope.
  const double bias_slope = (cp.next_order_factor * dp.weights.dot(st.xi) -
                             cm.next_order_factor * dm.weights.dot(st.xi)) /
                            st.b0;
  const Eigen::VectorXd w = cp.weights - cm.weights;
  const double var_raw = w.cwiseAbs2().dot(st.sigma2);
  const double power = 2.0 * k + 1.0;  // variance exponent of b
  const double v_const = static_cast<double>(st.n) * std::pow(st.b0, power) * var_raw;

  if (!(v_const > 0.0) || bias_slope * bias_slope < 1e-12 * v_const) {
    return st.cap;
  }
  // MSE(b) = bias_slope^2 b^2 + v_const / (n b^power).
  const double b = std::pow(power * v_const /
                                (2.0 * static_cast<double>(st.n) * bias_slope * bias_slope),
                            1.0 / (power + 2.0));
  return std::min(std::max(b, 1e-12), st.cap);
}

// Shrinks h when covariates enter the fit: a level factor driven by the share
// of outcome variance the covariates explain near the cutoff, a decay in the
// number of covariates relative to the local sample, and a floor at a fixed
// fraction of the pilot bandwidth.
double covariate_attenuated_h(double h, const Sample& sample,
                              const std::vector<Eigen::Index>& selected,
                              const PilotState& st, const KernelSpec& kernel,
                              const BandwidthOptions& opts) {
  if (selected.empty()) return h;
  const BandwidthPair pilot{st.b0, st.b0, false};
  const Eigen::VectorXd sigma2_raw =
      detail::composite_nn_variance(sample, {}, Eigen::VectorXd(), opts.nn_neighbors);
  const detail::ContrastComponents raw =
      detail::jump_components(st.xc, sample.y, sigma2_raw, pilot, kernel);
  const detail::ContrastComponents comp =
      detail::jump_components(st.xc, st.xi, st.sigma2, pilot, kernel);
  double r2 = 0.0;
  if (raw.var_point_raw > 0.0) {
    r2 = std::clamp(1.0 - comp.var_point_raw / raw.var_point_raw, 0.0,
                    opts.covariate_r2_cap);
  }
  Eigen::Index m = 0;
  for (Eigen::Index i = 0; i < st.xc.size(); ++i) {
    if (std::abs(st.xc(i)) <= st.b0) ++m;
  }
  m = std::max<Eigen::Index>(m, 1);
  const double q = static_cast<double>(
      std::min<Eigen::Index>(static_cast<Eigen::Index>(selected.size()), m));
  const double level = 1.0 - opts.covariate_level_shrink * r2;
  const double count =
      std::exp(-opts.covariate_count_decay * q / static_cast<double>(m));
  const double floor = opts.covariate_floor_fraction * st.b0;
  return std::min(std::max(h * level * count, floor), st.cap);
}

}  // namespace

double mse_bandwidth_from_components(double bias, double variance, Eigen::Index n) {
  return std::pow(variance / (4.0 * static_cast<double>(n) * bias * bias), 0.2);
}

BandwidthPair mse_optimal_bandwidth(const Sample& sample,
                                    const std::vector<Eigen::Index>& selected,
                                    const Eigen::VectorXd& gamma_bar,
                                    const KernelSpec& kernel,
                                    const BandwidthOptions& opts) {
  const PilotState st = pilot_state(sample, selected, gamma_bar, opts, -0.2);
  const BandwidthPair pilot{st.b0, st.b0, false};
  const detail::ContrastComponents comp =
      detail::jump_components(st.xc, st.xi, st.sigma2, pilot, kernel);

  const double v_hat = static_cast<double>(st.n) * st.b0 * comp.var_point_raw;
  const double b2_eff = comp.bias * comp.bias +
                        opts.regularization_scale * comp.var_bias_raw;

  BandwidthPair out;
  out.restricted = opts.restricted;
  if (!(v_hat > 0.0) || b2_eff < 1e-12 * v_hat) {
    out.h = st.cap;
  } else {
    out.h = std::min(mse_bandwidth_from_components(std::sqrt(b2_eff), v_hat, st.n),
                     st.cap);
  }
  out.h = covariate_attenuated_h(out.h, sample, selected, st, kernel, opts);
  out.b = opts.restricted ? out.h : derivative_pilot(st, kernel, 1);
  return out;
}

BandwidthPair mse_optimal_bandwidth_kink(const Sample& sample,
                                         const std::vector<Eigen::Index>& selected,
                                         const Eigen::VectorXd& gamma_bar,
                                         const KernelSpec& kernel,
                                         const BandwidthOptions& opts) {
  const PilotState st = pilot_state(sample, selected, gamma_bar, opts, -1.0 / 7.0);
  const BandwidthPair pilot{st.b0, st.b0, false};
  const detail::ContrastComponents comp =
      detail::kink_components(st.xc, st.xi, st.sigma2, pilot, kernel);

  // Slope contrast: variance scales as 1/(n h^3), bias as h^2, so
  // h* = (3 V / (4 n B^2))^{1/7}.
  const double v_hat =
      static_cast<double>(st.n) * std::pow(st.b0, 3.0) * comp.var_point_raw;
  const double b2_eff = comp.bias * comp.bias +
                        opts.regularization_scale * comp.var_bias_raw;

  BandwidthPair out;
  out.restricted = opts.restricted;
  if (!(v_hat > 0.0) || b2_eff < 1e-12 * v_hat) {
    out.h = st.cap;
  } else {
    out.h = std::min(
        std::pow(3.0 * v_hat / (4.0 * static_cast<double>(st.n) * b2_eff), 1.0 / 7.0),
        st.cap);
  }
  out.h = covariate_attenuated_h(out.h, sample, selected, st, kernel, opts);
  out.b = opts.restricted ? out.h : derivative_pilot(st, kernel, 2);
  return out;
}

}  // namespace rdlasso
