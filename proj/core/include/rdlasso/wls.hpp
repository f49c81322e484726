#pragma once

#include <Eigen/Dense>

#include "rdlasso/data.hpp"

namespace rdlasso {

struct WlsFit {
  Eigen::VectorXd coef;
  Eigen::MatrixXd gram_inv;  // ((1/(nh)) sum K_i G_i G_i')^{-1}
};

/// Reciprocal-condition threshold below which the weighted Gram matrix is
/// treated as singular.
inline constexpr double kRcondThreshold = 1e-12;

/// Kernel-weighted least squares: argmin sum K_i (y_i - G_i'theta)^2.
/// Throws SingularDesignError when rcond of the weighted Gram falls below
/// kRcondThreshold.
WlsFit weighted_ols(const Design& design);

/// Minimum-norm weighted least squares via complete orthogonal
/// decomposition. Never throws on rank deficiency; used by the
/// covariate-adjusted estimator where p can exceed the local sample size.
Eigen::VectorXd weighted_ols_minnorm(const Design& design);

}  // namespace rdlasso
