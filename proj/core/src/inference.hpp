#pragma once

// Internal inference machinery shared by the bias/variance estimators, the
// bandwidth selector, and the estimators. Everything here works with
// per-observation weight vectors so that robust variances of composite
// (point minus h^2 * bias) estimators are exact.

#include <Eigen/Dense>
#include <vector>

#include "rdlasso/data.hpp"
#include "rdlasso/kernel.hpp"
#include "rdlasso/localpoly.hpp"

namespace rdlasso::detail {

// One-sided polynomial projection row for a single coefficient: returns the
// full-length weight vector w (zeros off the side or off kernel support) such
// that the fitted coefficient c_{coef_index} equals w'y, together with
// w' x^{degree+1}, the leakage factor of the next polynomial order into that
// coefficient (drives the bias terms).
struct SideProjection {
  Eigen::VectorXd weights;
  double next_order_factor = 0.0;
  Eigen::Index count = 0;
};

SideProjection side_projection(const Eigen::VectorXd& xc, Side side, int degree,
                               int coef_index, double bandwidth,
                               const KernelSpec& kernel);

// Composite outcome xi_i = y_i - z_sel_i' gamma.
Eigen::VectorXd composite_outcome(const Sample& sample,
                                  const std::vector<Eigen::Index>& selected,
                                  const Eigen::VectorXd& gamma_bar);

// Per-observation variance of the composite outcome, (q' d_i)^2 with d_i the
// nearest-neighbor co-deviation row of (y, z_sel) and q = (1, -gamma').
Eigen::VectorXd composite_nn_variance(const Sample& sample,
                                      const std::vector<Eigen::Index>& selected,
                                      const Eigen::VectorXd& gamma_bar,
                                      int j_neighbors);

// Linear-estimator decomposition of a boundary-contrast estimator:
//   point     = w_point' xi
//   bias Bbar = w_bias'  xi   (already scaled so the correction is h^2 Bbar)
struct ContrastComponents {
  Eigen::VectorXd w_point;
  Eigen::VectorXd w_bias;
  double point = 0.0;
  double bias = 0.0;
  double var_point_raw = 0.0;  // sum w_point_i^2 sigma2_i = Var(point)
  double var_bias_raw = 0.0;   // sum w_bias_i^2 sigma2_i  = Var(Bbar)
};

// Jump estimator: local-linear intercept contrast at bandwidth h, curvature
// from one-sided local quadratics at bandwidth b.
ContrastComponents jump_components(const Eigen::VectorXd& xc,
                                   const Eigen::VectorXd& xi,
                                   const Eigen::VectorXd& sigma2,
                                   const BandwidthPair& bw,
                                   const KernelSpec& kernel);

// Slope-change (kink) estimator: local-quadratic slope contrast at h, third
// derivatives from one-sided local cubics at b.
ContrastComponents kink_components(const Eigen::VectorXd& xc,
                                   const Eigen::VectorXd& xi,
                                   const Eigen::VectorXd& sigma2,
                                   const BandwidthPair& bw,
                                   const KernelSpec& kernel);

// Robust variance of the bias-corrected estimator point - h^2 * Bbar,
// computed from the combined weight vector.
double robust_variance_raw(const ContrastComponents& c, double h,
                           const Eigen::VectorXd& sigma2);

}  // namespace rdlasso::detail
