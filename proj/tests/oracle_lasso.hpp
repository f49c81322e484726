#pragma once

// Exact reference solver for the kernel-weighted partially penalized l1
// objective on tiny problems. Enumerates every sign pattern of the penalized
// coefficients, solves the corresponding stationarity system, keeps patterns
// whose signs and subgradient bounds are consistent, and returns the best
// objective value. Independent of the coordinate-descent solver under test.

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "rdlasso/data.hpp"
#include "rdlasso/lasso.hpp"

namespace rdlasso_test {

inline double oracle_objective(const rdlasso::Design& d,
                               const rdlasso::PenaltyConfig& pen) {
  const Eigen::Index k = d.cols();
  const Eigen::Index base = 4;
  const Eigen::Index p = k - base;
  const double inv_nh = d.inv_nh();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd gy = Eigen::VectorXd::Zero(k);
  for (Eigen::Index i = 0; i < d.rows(); ++i) {
    gram += d.weights(i) * d.g.row(i).transpose() * d.g.row(i);
    gy += d.weights(i) * d.g.row(i).transpose() * d.response(i);
  }
  gram *= inv_nh;
  gy *= inv_nh;

  auto objective = [&](const Eigen::VectorXd& th) {
    const Eigen::VectorXd r = d.response - d.g * th;
    double obj = inv_nh * (d.weights.array() * r.array().square()).sum();
    for (Eigen::Index j = 0; j < p; ++j) {
      obj += pen.lambda * pen.loadings(base + j) * std::abs(th(base + j));
    }
    return obj;
  };

  double best = std::numeric_limits<double>::infinity();
  std::vector<int> sign(static_cast<std::size_t>(p), 0);
  Eigen::Index patterns = 1;
  for (Eigen::Index j = 0; j < p; ++j) patterns *= 3;

  for (Eigen::Index code = 0; code < patterns; ++code) {
    Eigen::Index c = code;
    for (Eigen::Index j = 0; j < p; ++j) {
      sign[static_cast<std::size_t>(j)] = static_cast<int>(c % 3) - 1;
      c /= 3;
    }
    std::vector<Eigen::Index> act;
    for (Eigen::Index j = 0; j < base; ++j) act.push_back(j);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (sign[static_cast<std::size_t>(j)] != 0) act.push_back(base + j);
    }
    const Eigen::Index m = static_cast<Eigen::Index>(act.size());
    Eigen::MatrixXd a(m, m);
    Eigen::VectorXd rhs(m);
    for (Eigen::Index r = 0; r < m; ++r) {
      for (Eigen::Index cc = 0; cc < m; ++cc) {
        a(r, cc) = 2.0 * gram(act[static_cast<std::size_t>(r)],
                              act[static_cast<std::size_t>(cc)]);
      }
      const Eigen::Index col = act[static_cast<std::size_t>(r)];
      rhs(r) = 2.0 * gy(col);
      if (col >= base) {
        rhs(r) -= pen.lambda * pen.loadings(col) *
                  sign[static_cast<std::size_t>(col - base)];
      }
    }
    const Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
    if (!sol.allFinite()) continue;
    Eigen::VectorXd th = Eigen::VectorXd::Zero(k);
    bool ok = true;
    for (Eigen::Index r = 0; r < m; ++r) {
      const Eigen::Index col = act[static_cast<std::size_t>(r)];
      th(col) = sol(r);
      if (col >= base &&
          sol(r) * sign[static_cast<std::size_t>(col - base)] <= 0.0) {
        ok = false;
      }
    }
    if (!ok) continue;
    const Eigen::VectorXd grad = 2.0 * (gram * th - gy);
    for (Eigen::Index j = 0; j < p; ++j) {
      if (sign[static_cast<std::size_t>(j)] == 0 &&
          std::abs(grad(base + j)) >
              pen.lambda * pen.loadings(base + j) + 1e-10) {
        ok = false;
      }
    }
    if (!ok) continue;
    best = std::min(best, objective(th));
  }
  return best;
}

}  // namespace rdlasso_test
