#include "rdlasso/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rdlasso/errors.hpp"
#include "rdlasso/stats.hpp"
#include "rdlasso/wls.hpp"

namespace rdlasso {

namespace {

constexpr int kMaxSweeps = 100000;
constexpr double kCoefTol = 1e-8;

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

// Effective per-column penalty: 0 for unpenalized columns, lambda * psi_j
// otherwise (psi = 1 when no loading is supplied for the column).
Eigen::VectorXd effective_penalty(const Design& design, const PenaltyConfig& penalty) {
  const Eigen::Index k = design.cols();
  Eigen::VectorXd loadings = penalty.loadings;
  if (loadings.size() == 0) loadings = default_loadings(design);
  Eigen::VectorXd pen(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    if (penalty.unpenalized.count(j)) {
      pen(j) = 0.0;
    } else {
      double psi = j < loadings.size() ? loadings(j) : 1.0;
      pen(j) = penalty.lambda * psi;
    }
  }
  return pen;
}

double objective_value(const Design& design, const Eigen::VectorXd& pen,
                       const Eigen::VectorXd& theta, const Eigen::VectorXd& residual) {
  double fit = design.inv_nh() *
               residual.cwiseProduct(design.weights.cwiseProduct(residual)).sum();
  double l1 = 0.0;
  for (Eigen::Index j = 0; j < theta.size(); ++j) l1 += pen(j) * std::abs(theta(j));
  return fit + l1;
}

}  // namespace

Eigen::VectorXd default_loadings(const Design& design) {
  const Eigen::Index k = design.cols();
  const double wsum = design.weights.sum();
  Eigen::VectorXd out(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double mean = design.weights.dot(design.g.col(j)) / wsum;
    const double var =
        design.weights.dot((design.g.col(j).array() - mean).square().matrix()) / wsum;
    const double sd = std::sqrt(std::max(var, 0.0));
    out(j) = sd > 0.0 ? sd : 1.0;
  }
  return out;
}

LassoFit fit_local_lasso(const Design& design, const PenaltyConfig& penalty,
                         const Eigen::VectorXd* warm_start) {
  const Eigen::Index k = design.cols();
  const double inv_nh = design.inv_nh();
  const Eigen::VectorXd pen = effective_penalty(design, penalty);

  // a_j = 2/(nh) sum K G_ij^2; constant across sweeps.
  Eigen::VectorXd a(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    a(j) = 2.0 * inv_nh * design.weights.dot(design.g.col(j).cwiseAbs2());
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(k);
  if (warm_start && warm_start->size() == k) theta = *warm_start;
  Eigen::VectorXd residual = design.response - design.g * theta;

  LassoFit fit;
  fit.lambda_used = penalty.lambda;
  fit.converged = false;

  auto sweep = [&](const std::vector<Eigen::Index>& cols) {
    double max_delta = 0.0;
    for (Eigen::Index j : cols) {
      if (a(j) <= 0.0) continue;
      const double old = theta(j);
      // c_j = 2/(nh) sum K G_ij (r_i + G_ij theta_j)
      const double c = 2.0 * inv_nh *
                           design.weights.dot(design.g.col(j).cwiseProduct(residual)) +
                       a(j) * old;
      const double next = pen(j) > 0.0 ? soft_threshold(c, pen(j)) / a(j) : c / a(j);
      if (next != old) {
        residual += design.g.col(j) * (old - next);
        theta(j) = next;
        max_delta = std::max(max_delta, std::abs(next - old));
      }
    }
    return max_delta;
  };

  std::vector<Eigen::Index> all_cols(static_cast<std::size_t>(k));
  std::iota(all_cols.begin(), all_cols.end(), Eigen::Index{0});

  int sweeps = 0;
  while (sweeps < kMaxSweeps) {
    const double delta_full = sweep(all_cols);
    ++sweeps;
    if (delta_full < kCoefTol * (1.0 + theta.cwiseAbs().maxCoeff())) {
      fit.converged = true;
      break;
    }
    // Iterate on the current active set until stable, then re-verify with a
    // full sweep; standard active-set strategy for coordinate descent.
    std::vector<Eigen::Index> active;
    for (Eigen::Index j = 0; j < k; ++j) {
      if (theta(j) != 0.0 || penalty.unpenalized.count(j)) active.push_back(j);
    }
    while (sweeps < kMaxSweeps) {
      const double delta = sweep(active);
      ++sweeps;
      if (delta < kCoefTol * (1.0 + theta.cwiseAbs().maxCoeff())) break;
    }
  }

  fit.theta = theta;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (theta(j) != 0.0) fit.support.push_back(j);
  }
  fit.iterations = sweeps;
  fit.objective = objective_value(design, pen, theta, residual);
  return fit;
}

double lambda_max(const Design& design, const PenaltyConfig& penalty) {
  const Eigen::Index k = design.cols();
  Eigen::VectorXd loadings = penalty.loadings;
  if (loadings.size() == 0) loadings = default_loadings(design);

  // Residual after fitting the unpenalized block alone.
  std::vector<Eigen::Index> unpen(penalty.unpenalized.begin(), penalty.unpenalized.end());
  Design sub = design;
  sub.g.resize(design.rows(), static_cast<Eigen::Index>(unpen.size()));
  for (std::size_t j = 0; j < unpen.size(); ++j) {
    sub.g.col(static_cast<Eigen::Index>(j)) = design.g.col(unpen[j]);
  }
  const WlsFit base = weighted_ols(sub);
  const Eigen::VectorXd residual = design.response - sub.g * base.coef;

  const double inv_nh = design.inv_nh();
  double lmax = 0.0;
  for (Eigen::Index j = 0; j < k; ++j) {
    if (penalty.unpenalized.count(j)) continue;
    const double grad =
        std::abs(2.0 * inv_nh * design.weights.dot(design.g.col(j).cwiseProduct(residual)));
    const double psi = j < loadings.size() && loadings(j) > 0.0 ? loadings(j) : 1.0;
    lmax = std::max(lmax, grad / psi);
  }
  // Small safety factor so "lambda >= lambda_max implies an empty penalized
  // support" holds through the solver's finite convergence tolerance.
  return lmax * (1.0 + 1e-6);
}

double kkt_violation(const Design& design, const PenaltyConfig& penalty,
                     const LassoFit& fit) {
  const Eigen::VectorXd pen = effective_penalty(design, penalty);
  const Eigen::VectorXd residual = design.response - design.g * fit.theta;
  const double inv_nh = design.inv_nh();
  double worst = 0.0;
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    const double grad =
        2.0 * inv_nh * design.weights.dot(design.g.col(j).cwiseProduct(residual));
    double v;
    if (pen(j) == 0.0) {
      v = std::abs(grad);
    } else if (fit.theta(j) != 0.0) {
      v = std::abs(grad - pen(j) * (fit.theta(j) > 0.0 ? 1.0 : -1.0));
    } else {
      v = std::max(0.0, std::abs(grad) - pen(j));
    }
    worst = std::max(worst, v);
  }
  return worst;
}

double plugin_lambda_core(Eigen::Index p, Eigen::Index n_loc) {
  const double c = 1.1;
  const double alpha = 0.1;
  return 2.0 * c * normal_quantile(1.0 - alpha / (2.0 * static_cast<double>(p))) /
         std::sqrt(static_cast<double>(n_loc));
}

namespace {

Eigen::VectorXd residual_loadings(const Design& design, const Eigen::VectorXd& residual,
                                  const PenaltyConfig& penalty) {
  const double inv_nh = design.inv_nh();
  const Eigen::VectorXd e2 = residual.cwiseAbs2();
  Eigen::VectorXd psi(design.cols());
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    if (penalty.unpenalized.count(j)) {
      psi(j) = 0.0;
      continue;
    }
    const double v = inv_nh * design.weights.dot(design.g.col(j).cwiseAbs2().cwiseProduct(e2));
    psi(j) = std::sqrt(std::max(v, 0.0));
    if (psi(j) <= 0.0) psi(j) = 1.0;
  }
  return psi;
}

LambdaSelection select_lambda_plugin(const Design& design,
                                     const PenaltyConfig& penalty_template) {
  Eigen::Index p_pen = 0;
  for (Eigen::Index j = 0; j < design.cols(); ++j) {
    if (!penalty_template.unpenalized.count(j)) ++p_pen;
  }

  // Pilot residuals from the unpenalized-block fit.
  std::vector<Eigen::Index> unpen(penalty_template.unpenalized.begin(),
                                  penalty_template.unpenalized.end());
  Design sub = design;
  sub.g.resize(design.rows(), static_cast<Eigen::Index>(unpen.size()));
  for (std::size_t j = 0; j < unpen.size(); ++j) {
    sub.g.col(static_cast<Eigen::Index>(j)) = design.g.col(unpen[j]);
  }
  const WlsFit base = weighted_ols(sub);
  Eigen::VectorXd residual = design.response - sub.g * base.coef;
  // Relative test: an exactly representable outcome (e.g. a constant) leaves
  // round-off residuals of order 1e-16 times the outcome scale.
  if (design.weights.dot(residual.cwiseAbs2()) <=
      1e-24 * design.weights.dot(design.response.cwiseAbs2())) {
    throw DegenerateResidualsError("select_lambda: pilot residual variance is zero");
  }

  LambdaSelection sel;
  sel.lambda = plugin_lambda_core(p_pen, design.rows());
  sel.loadings = residual_loadings(design, residual, penalty_template);

  PenaltyConfig penalty = penalty_template;
  penalty.lambda = sel.lambda;
  Eigen::VectorXd warm;
  for (int iter = 0; iter < 15; ++iter) {
    penalty.loadings = sel.loadings;
    const LassoFit fit = fit_local_lasso(design, penalty,
                                         warm.size() ? &warm : nullptr);
    warm = fit.theta;
    residual = design.response - design.g * fit.theta;
    const Eigen::VectorXd next = residual_loadings(design, residual, penalty_template);
    double rel = 0.0;
    for (Eigen::Index j = 0; j < next.size(); ++j) {
      if (penalty_template.unpenalized.count(j)) continue;
      const double base_psi = std::max(std::abs(sel.loadings(j)), 1e-300);
      rel = std::max(rel, std::abs(next(j) - sel.loadings(j)) / base_psi);
    }
    sel.loadings = next;
    if (rel < 0.01) break;
  }
  return sel;
}

LambdaSelection select_lambda_cv(const Design& design,
                                 const PenaltyConfig& penalty_template) {
  PenaltyConfig penalty = penalty_template;
  penalty.loadings = default_loadings(design);
  const double lmax = lambda_max(design, penalty);
  if (!(lmax > 0.0)) {
    throw DegenerateResidualsError("select_lambda: degenerate cross-validation grid");
  }

  constexpr int kFolds = 10;
  constexpr int kGrid = 50;
  Eigen::VectorXd grid(kGrid);
  const double lmin = 1e-4 * lmax;
  for (int g = 0; g < kGrid; ++g) {
    grid(g) = lmax * std::pow(lmin / lmax, static_cast<double>(g) / (kGrid - 1));
  }

  // Fold assignment round-robin within each side of the cutoff.
  const Eigen::Index m = design.rows();
  std::vector<int> fold(static_cast<std::size_t>(m));
  int c_minus = 0, c_plus = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    fold[static_cast<std::size_t>(i)] =
        design.g(i, 1) >= 0.5 ? (c_plus++ % kFolds) : (c_minus++ % kFolds);
  }

  Eigen::VectorXd cv_error = Eigen::VectorXd::Zero(kGrid);
  for (int f = 0; f < kFolds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (Eigen::Index i = 0; i < m; ++i) {
      (fold[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    if (test.empty() || train.empty()) continue;

    Design tr;
    tr.g.resize(static_cast<Eigen::Index>(train.size()), design.cols());
    tr.weights.resize(static_cast<Eigen::Index>(train.size()));
    tr.response.resize(static_cast<Eigen::Index>(train.size()));
    tr.h = design.h;
    tr.n_total = std::max<Eigen::Index>(1, design.n_total * static_cast<Eigen::Index>(train.size()) / m);
    for (std::size_t r = 0; r < train.size(); ++r) {
      tr.g.row(static_cast<Eigen::Index>(r)) = design.g.row(train[r]);
      tr.weights(static_cast<Eigen::Index>(r)) = design.weights(train[r]);
      tr.response(static_cast<Eigen::Index>(r)) = design.response(train[r]);
    }

    Eigen::VectorXd warm;
    for (int g = 0; g < kGrid; ++g) {
      penalty.lambda = grid(g);
      const LassoFit fit = fit_local_lasso(tr, penalty, warm.size() ? &warm : nullptr);
      warm = fit.theta;
      double err = 0.0;
      for (Eigen::Index i : test) {
        const double r = design.response(i) - design.g.row(i).dot(fit.theta);
        err += design.weights(i) * r * r;
      }
      cv_error(g) += err;
    }
  }

  // Ties within 1e-10 resolve to the larger lambda (earlier grid point).
  int best = 0;
  for (int g = 1; g < kGrid; ++g) {
    if (cv_error(g) < cv_error(best) - 1e-10) best = g;
  }
  LambdaSelection sel;
  sel.lambda = grid(best);
  sel.loadings = penalty.loadings;
  return sel;
}

}  // namespace

LambdaSelection select_lambda(const Design& design,
                              const PenaltyConfig& penalty_template) {
  switch (penalty_template.lambda_rule) {
    case LambdaRule::fixed: {
      LambdaSelection sel;
      sel.lambda = penalty_template.lambda;
      sel.loadings = penalty_template.loadings.size() ? penalty_template.loadings
                                                      : default_loadings(design);
      return sel;
    }
    case LambdaRule::plugin:
      return select_lambda_plugin(design, penalty_template);
    case LambdaRule::cross_validation:
      return select_lambda_cv(design, penalty_template);
  }
  throw std::invalid_argument("select_lambda: unknown lambda rule");
}

Eigen::VectorXd post_lasso(const Design& design, const std::vector<Eigen::Index>& support) {
  for (Eigen::Index j = 0; j < 4 && j < design.cols(); ++j) {
    if (std::find(support.begin(), support.end(), j) == support.end()) {
      throw std::invalid_argument("post_lasso: support must contain the base block");
    }
  }
  Design sub = design;
  sub.g.resize(design.rows(), static_cast<Eigen::Index>(support.size()));
  for (std::size_t j = 0; j < support.size(); ++j) {
    sub.g.col(static_cast<Eigen::Index>(j)) = design.g.col(support[j]);
  }
  const WlsFit fit = weighted_ols(sub);
  Eigen::VectorXd full = Eigen::VectorXd::Zero(design.cols());
  for (std::size_t j = 0; j < support.size(); ++j) {
    full(support[j]) = fit.coef(static_cast<Eigen::Index>(j));
  }
  return full;
}

std::vector<Eigen::Index> selection_set(const Eigen::VectorXd& gamma, ThresholdRule rule,
                                        Eigen::Index n, double lambda) {
  std::vector<Eigen::Index> out;
  if (rule == ThresholdRule::support) {
    for (Eigen::Index j = 0; j < gamma.size(); ++j) {
      if (gamma(j) != 0.0) out.push_back(j);
    }
    return out;
  }
  if (n < 16) {
    throw std::invalid_argument("selection_set: scaled_threshold requires n >= 16");
  }
  Eigen::Index nonzero = 0;
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    if (gamma(j) != 0.0) ++nonzero;
  }
  const double rho = std::log(std::log(std::log(static_cast<double>(n))));
  const double threshold = lambda * rho * static_cast<double>(nonzero);
  for (Eigen::Index j = 0; j < gamma.size(); ++j) {
    if (std::abs(gamma(j)) > threshold) out.push_back(j);
  }
  return out;
}

}  // namespace rdlasso
