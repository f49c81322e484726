#pragma once

#include <Eigen/Dense>
#include <set>
#include <vector>

#include "rdlasso/data.hpp"

namespace rdlasso {

enum class LambdaRule { fixed, plugin, cross_validation };
enum class ThresholdRule { support, scaled_threshold };

/// Penalty configuration for the kernel-weighted l1 problem. Columns listed
/// in `unpenalized` are exempt from the penalty; by default that is the
/// (1, T, X, TX) block, i.e. the partially penalized estimator.
struct PenaltyConfig {
  double lambda = 0.0;
  std::set<Eigen::Index> unpenalized = {0, 1, 2, 3};
  Eigen::VectorXd loadings;  // per-column psi_j; empty means kernel-weighted sd
  LambdaRule lambda_rule = LambdaRule::plugin;
  ThresholdRule threshold_rule = ThresholdRule::support;
};

struct LassoFit {
  Eigen::VectorXd theta;
  std::vector<Eigen::Index> support;  // nonzero coefficients, all columns
  double lambda_used = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Kernel-weighted std for each design column, used as the default penalty
/// loading so a single lambda is meaningful across covariate scales.
Eigen::VectorXd default_loadings(const Design& design);

/// Cyclic coordinate descent on the objective
///   (1/(nh)) sum K_i (y_i - G_i'theta)^2 + lambda sum_{j penalized} psi_j |theta_j|.
/// `warm_start` (optional) seeds the coefficients.
LassoFit fit_local_lasso(const Design& design, const PenaltyConfig& penalty,
                         const Eigen::VectorXd* warm_start = nullptr);

/// Smallest lambda for which every penalized coefficient is exactly zero,
/// computed from the residual of the unpenalized-block fit.
double lambda_max(const Design& design, const PenaltyConfig& penalty);

/// Worst KKT violation of a fit, for property checks.
double kkt_violation(const Design& design, const PenaltyConfig& penalty,
                     const LassoFit& fit);

struct LambdaSelection {
  double lambda = 0.0;
  Eigen::VectorXd loadings;
};

/// The lambda core of the plugin rule: 2 c Phi^{-1}(1 - alpha/(2p)) / sqrt(n_loc)
/// with c = 1.1, alpha = 0.1. Exposed separately for verification.
double plugin_lambda_core(Eigen::Index p, Eigen::Index n_loc);

/// Data-driven lambda: plugin rule with iterated penalty loadings
/// psi_j = sqrt((1/(nh)) sum K_i G_ij^2 e_i^2), or 10-fold CV over a
/// 50-point log grid (folds stratified by side of the cutoff).
/// Throws DegenerateResidualsError when the pilot residual variance is zero.
LambdaSelection select_lambda(const Design& design,
                              const PenaltyConfig& penalty_template);

/// Weighted OLS restricted to `support`; coefficients outside the support are
/// exact zeros. The support must contain columns 0-3.
Eigen::VectorXd post_lasso(const Design& design,
                           const std::vector<Eigen::Index>& support);

/// Covariate selection from a fitted gamma-block. Returned indices refer to
/// covariates (0-based positions within the design's covariate columns).
/// scaled_threshold keeps j with |gamma_j| > lambda * rho_n * #nonzero,
/// rho_n = log log log n (requires n >= 16).
std::vector<Eigen::Index> selection_set(const Eigen::VectorXd& gamma,
                                        ThresholdRule rule, Eigen::Index n,
                                        double lambda);

}  // namespace rdlasso
