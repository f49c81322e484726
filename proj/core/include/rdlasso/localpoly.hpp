#pragma once

#include <Eigen/Dense>
#include <vector>

#include "rdlasso/data.hpp"
#include "rdlasso/kernel.hpp"

namespace rdlasso {

enum class Side { left, right };

/// Main bandwidth h and pilot bandwidth b for derivative estimation.
struct BandwidthPair {
  double h = 0.0;
  double b = 0.0;
  bool restricted = false;  // true enforces h == b
};

/// One-sided weighted polynomial fit around 0: returns (c_0, ..., c_degree)
/// minimizing sum K(x_i / bandwidth) (y_i - sum_k c_k x_i^k)^2 over
/// observations on `side`. The k-th derivative at 0 is k! c_k.
/// x must already be centered at the cutoff.
Eigen::VectorXd local_poly_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               Side side, int degree, double bandwidth,
                               const KernelSpec& kernel);

/// Nearest-neighbor conditional variance estimates
///   sigma2_i = (J/(J+1)) (y_i - mean of J nearest same-side neighbors)^2.
/// Neighbors are ranked by |x_i - x_j| with ties broken by lower index.
Eigen::VectorXd nn_variance(const Sample& sample, int j_neighbors = 3);

/// Per-observation nearest-neighbor deviations for a multi-column outcome
/// matrix v (n x m): row i holds sqrt(J/(J+1)) * (v_i - NN mean). The outer
/// product of a row estimates that observation's conditional covariance.
Eigen::MatrixXd nn_codeviations(const Eigen::VectorXd& x, double cutoff,
                                const Eigen::MatrixXd& v, int j_neighbors = 3);

/// Pre-asymptotic bias and variance of the covariate-adjusted jump estimator.
struct BiasVariance {
  double bias = 0.0;      // Bbar; tau_bc = tau - h^2 * Bbar
  double variance = 0.0;  // Vbar; se = sqrt(Vbar / (n h))
  Eigen::VectorXd q_bar;  // (1, -gamma_bar')'
  Eigen::VectorXd mu2_minus, mu2_plus;  // second derivatives: outcome first
  Eigen::MatrixXd sigma_minus, sigma_plus;  // side-averaged covariance estimates
};

struct BiasVarianceOptions {
  int nn_neighbors = 3;
};

/// Estimates Bbar and Vbar for the jump at the cutoff: curvature of the
/// composite outcome (y, z_sel) q_bar from one-sided local quadratics at
/// bandwidth b, sandwich variance from nearest-neighbor co-deviations at
/// bandwidth h.
BiasVariance bias_variance_estimates(const Sample& sample,
                                     const std::vector<Eigen::Index>& selected,
                                     const Eigen::VectorXd& gamma_bar,
                                     const BandwidthPair& bandwidths,
                                     const KernelSpec& kernel,
                                     const BiasVarianceOptions& opts = {});

struct BandwidthOptions {
  double pilot_constant = 2.58;       // b0 = pilot_constant * sd(x) * n^{-1/5}
  double regularization_scale = 0.9;  // weight on Var(Bhat) in the h denominator
  int nn_neighbors = 3;
  bool restricted = false;
  // Attenuation applied when covariates enter the fit, calibrated so the
  // selector shrinks with the explained-variance share and the number of
  // covariates carried, with a floor proportional to the pilot bandwidth.
  double covariate_level_shrink = 0.6;     // h *= 1 - shrink * min(R^2, cap)
  double covariate_r2_cap = 0.85;          // saturation point of the shrink
  double covariate_count_decay = 0.0;      // h *= exp(-decay * min(q, m) / m)
  double covariate_floor_fraction = 0.24;  // h >= fraction * b0
};

/// Closed-form MSE minimizer h* = (V / (4 n B^2))^{1/5}; exposed for tests.
double mse_bandwidth_from_components(double bias, double variance, Eigen::Index n);

/// Plug-in MSE-optimal bandwidth pair for the jump estimator. The pilot
/// bandwidth of the pair targets the second-derivative estimation problem
/// (exponent -1/7). Near-zero curvature caps h at the x-range of the
/// shorter side instead of diverging.
BandwidthPair mse_optimal_bandwidth(const Sample& sample,
                                    const std::vector<Eigen::Index>& selected,
                                    const Eigen::VectorXd& gamma_bar,
                                    const KernelSpec& kernel,
                                    const BandwidthOptions& opts = {});

/// Analogous selector for the slope-change (kink) estimator, where the
/// variance scales as 1/(n h^3) and the bias comes from third derivatives.
BandwidthPair mse_optimal_bandwidth_kink(const Sample& sample,
                                         const std::vector<Eigen::Index>& selected,
                                         const Eigen::VectorXd& gamma_bar,
                                         const KernelSpec& kernel,
                                         const BandwidthOptions& opts = {});

}  // namespace rdlasso
