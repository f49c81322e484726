#include "rdlasso/wls.hpp"

#include <Eigen/Eigenvalues>

#include "rdlasso/errors.hpp"

namespace rdlasso {

WlsFit weighted_ols(const Design& design) {
  const double inv_nh = design.inv_nh();
  const Eigen::MatrixXd wg = design.weights.asDiagonal() * design.g;
  const Eigen::MatrixXd gram = inv_nh * (design.g.transpose() * wg);
  const Eigen::VectorXd rhs = inv_nh * (wg.transpose() * design.response);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double emax = ev.cwiseAbs().maxCoeff();
  const double emin = ev.cwiseAbs().minCoeff();
  if (!(emax > 0.0) || emin < kRcondThreshold * emax || ev.minCoeff() <= 0.0) {
    throw SingularDesignError("weighted_ols: weighted Gram matrix is singular");
  }
  WlsFit fit;
  fit.gram_inv = es.eigenvectors() * ev.cwiseInverse().asDiagonal() *
                 es.eigenvectors().transpose();
  fit.coef = fit.gram_inv * rhs;
  return fit;
}

Eigen::VectorXd weighted_ols_minnorm(const Design& design) {
  const Eigen::VectorXd s = design.weights.cwiseSqrt();
  const Eigen::MatrixXd a = s.asDiagonal() * design.g;
  const Eigen::VectorXd b = s.cwiseProduct(design.response);
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  return cod.solve(b);
}

}  // namespace rdlasso
