#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracle_lasso.hpp"
#include "rdlasso/data.hpp"
#include "rdlasso/errors.hpp"
#include "rdlasso/lasso.hpp"
#include "rdlasso/stats.hpp"
#include "rdlasso/wls.hpp"

using namespace rdlasso;

namespace {

// Sparse synthetic sample: first `s_true` covariates carry signal `beta`.
Sample sparse_sample(Eigen::Index n, Eigen::Index p, int s_true, double beta,
                     double noise_sd, std::uint64_t seed, std::uint64_t rep) {
  std::mt19937_64 eng = replication_engine(seed, rep);
  Sample s;
  s.x.resize(n);
  s.y.resize(n);
  s.z.resize(n, p);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.x(i) = 2.0 * draw_uniform(eng) - 1.0;
    for (Eigen::Index j = 0; j < p; ++j) s.z(i, j) = draw_normal(eng);
    const double t = s.x(i) >= 0.0 ? 1.0 : 0.0;
    double y = 0.5 + 0.3 * t + 0.2 * s.x(i) + 0.1 * t * s.x(i);
    for (int j = 0; j < s_true; ++j) y += beta * s.z(i, j);
    s.y(i) = y + noise_sd * draw_normal(eng);
  }
  return s;
}

Design sparse_design(const Sample& s, double h, KernelFamily fam) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(s.p()));
  for (Eigen::Index j = 0; j < s.p(); ++j) all[static_cast<std::size_t>(j)] = j;
  return build_design(s, h, KernelSpec(fam, h), all);
}

double penalized_objective(const Design& d, const PenaltyConfig& pen,
                           const Eigen::VectorXd& theta) {
  const Eigen::VectorXd r = d.response - d.g * theta;
  double obj = d.inv_nh() * (d.weights.array() * r.array().square()).sum();
  for (Eigen::Index j = 4; j < d.cols(); ++j) {
    obj += pen.lambda * pen.loadings(j) * std::abs(theta(j));
  }
  return obj;
}

}  // namespace

TEST_CASE("lambda = 0 reproduces weighted OLS") {
  const Sample s = sparse_sample(80, 3, 2, 0.8, 0.3, 1, 0);
  const Design d = sparse_design(s, 1.0, KernelFamily::triangular);
  PenaltyConfig pen;
  pen.lambda = 0.0;
  pen.loadings = default_loadings(d);
  pen.lambda_rule = LambdaRule::fixed;
  const LassoFit fit = fit_local_lasso(d, pen);
  const WlsFit ols = weighted_ols(d);
  CHECK(fit.converged);
  CHECK((fit.theta - ols.coef).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("lambda at or above lambda_max zeroes the penalized block") {
  const Sample s = sparse_sample(80, 4, 2, 0.8, 0.3, 2, 0);
  const Design d = sparse_design(s, 1.0, KernelFamily::triangular);
  PenaltyConfig pen;
  pen.loadings = default_loadings(d);
  pen.lambda_rule = LambdaRule::fixed;
  const double lmax = lambda_max(d, pen);
  CHECK(lmax > 0.0);
  for (double mult : {1.0, 1.5, 10.0}) {
    pen.lambda = mult * lmax;
    const LassoFit fit = fit_local_lasso(d, pen);
    for (Eigen::Index j = 4; j < d.cols(); ++j) CHECK(fit.theta(j) == 0.0);
    // Unpenalized block stays active.
    CHECK(std::abs(fit.theta(0)) > 0.0);
  }
  // Just below lambda_max at least one penalized coefficient activates.
  pen.lambda = 0.99 * lmax;
  const LassoFit fit = fit_local_lasso(d, pen);
  double max_pen = 0.0;
  for (Eigen::Index j = 4; j < d.cols(); ++j) {
    max_pen = std::max(max_pen, std::abs(fit.theta(j)));
  }
  CHECK(max_pen > 0.0);
}

TEST_CASE("coordinate descent matches the exact enumeration oracle") {
  const Sample s = sparse_sample(12, 3, 1, 1.0, 0.5, 4, 0);
  const Design d = sparse_design(s, 1.0, KernelFamily::triangular);
  PenaltyConfig pen;
  pen.lambda = 0.1;
  pen.loadings = default_loadings(d);
  pen.lambda_rule = LambdaRule::fixed;
  const LassoFit fit = fit_local_lasso(d, pen);
  CHECK(fit.converged);
  const double oracle = rdlasso_test::oracle_objective(d, pen);
  CHECK(std::abs(fit.objective - oracle) < 1e-4);
  CHECK(std::abs(penalized_objective(d, pen, fit.theta) - fit.objective) < 1e-10);
}

TEST_CASE("KKT conditions hold across a random corpus") {
  for (int run = 0; run < 50; ++run) {
    std::mt19937_64 eng = replication_engine(100, static_cast<std::uint64_t>(run));
    const Eigen::Index n = 20 + static_cast<Eigen::Index>(draw_uniform(eng) * 60);
    const Eigen::Index p = 1 + static_cast<Eigen::Index>(draw_uniform(eng) * 6);
    const Sample s = sparse_sample(n, p, std::min<int>(2, static_cast<int>(p)), 0.7,
                                   0.4, 200, static_cast<std::uint64_t>(run));
    const Design d = sparse_design(s, 1.0, KernelFamily::triangular);
    PenaltyConfig pen;
    pen.loadings = default_loadings(d);
    pen.lambda = (0.02 + 0.4 * draw_uniform(eng));
    pen.lambda_rule = LambdaRule::fixed;
    const LassoFit fit = fit_local_lasso(d, pen);
    CHECK(fit.converged);
    CHECK(kkt_violation(d, pen, fit) < 1e-6);
  }
}

TEST_CASE("objective dominates the zero and base-only reference points") {
  const Sample s = sparse_sample(60, 5, 3, 0.6, 0.5, 7, 0);
  const Design d = sparse_design(s, 1.0, KernelFamily::epanechnikov);
  PenaltyConfig pen;
  pen.lambda = 0.05;
  pen.loadings = default_loadings(d);
  pen.lambda_rule = LambdaRule::fixed;
  const LassoFit fit = fit_local_lasso(d, pen);
  CHECK(fit.objective <=
        penalized_objective(d, pen, Eigen::VectorXd::Zero(d.cols())) + 1e-12);
  const Eigen::VectorXd base = post_lasso(d, {0, 1, 2, 3});
  CHECK(fit.objective <= penalized_objective(d, pen, base) + 1e-12);
}

TEST_CASE("plugin lambda core matches the closed form") {
  // 2 * 1.1 * quantile(0.95) / sqrt(100) = 0.22 * 1.6448536... = 0.361868.
  CHECK(plugin_lambda_core(1, 100) == doctest::Approx(0.3619).epsilon(2e-4));
  CHECK(plugin_lambda_core(500, 500) ==
        doctest::Approx(2.0 * 1.1 * normal_quantile(1.0 - 0.1 / 1000.0) /
                        std::sqrt(500.0))
            .epsilon(1e-12));
}

TEST_CASE("plugin rule returns positive lambda and loadings") {
  const Sample s = sparse_sample(200, 5, 3, 0.6, 0.4, 8, 0);
  const Design d = sparse_design(s, 1.0, KernelFamily::triangular);
  PenaltyConfig pen;
  pen.lambda_rule = LambdaRule::plugin;
  const LambdaSelection sel = select_lambda(d, pen);
  CHECK(sel.lambda > 0.0);
  REQUIRE(sel.loadings.size() == d.cols());
  for (Eigen::Index j = 4; j < d.cols(); ++j) CHECK(sel.loadings(j) > 0.0);
}

TEST_CASE("constant outcome raises DegenerateResiduals") {
  Sample s = sparse_sample(60, 2, 0, 0.0, 0.1, 9, 0);
  s.y.setConstant(3.0);
  const Design d = sparse_design(s, 1.0, KernelFamily::triangular);
  PenaltyConfig pen;
  pen.lambda_rule = LambdaRule::plugin;
  CHECK_THROWS_AS(select_lambda(d, pen), DegenerateResidualsError);
}

TEST_CASE("cross-validation picks a large lambda on pure-noise covariates") {
  int upper = 0;
  const int reps = 20;
  for (int rep = 0; rep < reps; ++rep) {
    const Sample s = sparse_sample(150, 4, 0, 0.0, 0.5, 10,
                                   static_cast<std::uint64_t>(rep));
    const Design d = sparse_design(s, 1.0, KernelFamily::triangular);
    PenaltyConfig pen;
    pen.lambda_rule = LambdaRule::cross_validation;
    const LambdaSelection sel = select_lambda(d, pen);
    PenaltyConfig probe;
    probe.loadings = default_loadings(d);
    const double lmax = lambda_max(d, probe);
    // Upper half of the log grid from lambda_max down to 1e-4 lambda_max.
    if (sel.lambda >= lmax * 1e-2) ++upper;
  }
  CHECK(upper >= 16);
}

TEST_CASE("post_lasso on the full support equals weighted OLS") {
  const Sample s = sparse_sample(70, 3, 2, 0.8, 0.3, 12, 0);
  const Design d = sparse_design(s, 1.0, KernelFamily::triangular);
  std::vector<Eigen::Index> all_cols;
  for (Eigen::Index j = 0; j < d.cols(); ++j) all_cols.push_back(j);
  const Eigen::VectorXd refit = post_lasso(d, all_cols);
  const WlsFit ols = weighted_ols(d);
  CHECK((refit - ols.coef).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("post_lasso on the base block equals the covariate-free fit") {
  const Sample s = sparse_sample(70, 3, 2, 0.8, 0.3, 13, 0);
  const Design with_cov = sparse_design(s, 1.0, KernelFamily::triangular);
  const Design no_cov = build_design(s, 1.0, KernelSpec(KernelFamily::triangular, 1.0), {});
  const Eigen::VectorXd refit = post_lasso(with_cov, {0, 1, 2, 3});
  const WlsFit base = weighted_ols(no_cov);
  for (int j = 0; j < 4; ++j) {
    CHECK(refit(j) == doctest::Approx(base.coef(j)).epsilon(1e-10));
  }
  for (Eigen::Index j = 4; j < with_cov.cols(); ++j) CHECK(refit(j) == 0.0);
}

TEST_CASE("post_lasso recovers a unit covariate coefficient") {
  const Sample s = sparse_sample(400, 3, 1, 1.0, 0.2, 14, 0);
  const Design d = sparse_design(s, 1.0, KernelFamily::uniform);
  const Eigen::VectorXd refit = post_lasso(d, {0, 1, 2, 3, 4});
  // Independent normal-equation solve on the same restricted columns.
  Eigen::MatrixXd g(d.rows(), 5);
  g << d.g.col(0), d.g.col(1), d.g.col(2), d.g.col(3), d.g.col(4);
  const Eigen::MatrixXd wg = d.weights.asDiagonal() * g;
  const Eigen::VectorXd ref =
      (g.transpose() * wg).ldlt().solve(wg.transpose() * d.response);
  CHECK(refit(4) == doctest::Approx(ref(4)).epsilon(1e-9));
  CHECK(std::abs(refit(4) - 1.0) < 0.05);
}

TEST_CASE("selection_set implements both threshold rules") {
  CHECK(selection_set(Eigen::VectorXd::Zero(4), ThresholdRule::support, 500, 0.1)
            .empty());
  CHECK(selection_set(Eigen::VectorXd::Zero(4), ThresholdRule::scaled_threshold,
                      500, 0.1)
            .empty());

  Eigen::VectorXd gamma(2);
  gamma << 5.0, 0.0001;
  // lambda * rho_500 * 2 = 0.01 with rho_500 = logloglog 500 = 0.6027.
  const double rho500 = std::log(std::log(std::log(500.0)));
  CHECK(rho500 == doctest::Approx(0.6027).epsilon(2e-4));
  const double lambda = 0.01 / (2.0 * rho500);
  CHECK(selection_set(gamma, ThresholdRule::scaled_threshold, 500, lambda) ==
        std::vector<Eigen::Index>{0});
  CHECK(selection_set(gamma, ThresholdRule::support, 500, lambda) ==
        std::vector<Eigen::Index>{0, 1});

  // Threshold boundary pins rho numerically: with lambda = 1 and two nonzero
  // entries the cut sits at 2 rho.
  Eigen::VectorXd near(2);
  near << 2.0 * rho500 * 0.99, 2.0 * rho500 * 1.01;
  CHECK(selection_set(near, ThresholdRule::scaled_threshold, 500, 1.0) ==
        std::vector<Eigen::Index>{1});
}

TEST_CASE("l1 error shrinks as the local sample grows") {
  // Trend check on sparse designs with 3 true nonzeros at fixed
  // lambda proportional to sqrt(log p / (n h)).
  const Eigen::Index p = 10;
  Eigen::VectorXd theta_star = Eigen::VectorXd::Zero(4 + p);
  theta_star << 0.5, 0.3, 0.2, 0.1, 0.6, 0.6, 0.6,
      Eigen::VectorXd::Zero(p - 3);
  std::vector<double> medians;
  for (Eigen::Index n : {100, 400, 1600}) {
    std::vector<double> errs;
    for (int rep = 0; rep < 200; ++rep) {
      const Sample s = sparse_sample(n, p, 3, 0.6, 0.5, 21,
                                     static_cast<std::uint64_t>(rep));
      const Design d = sparse_design(s, 1.0, KernelFamily::uniform);
      PenaltyConfig pen;
      pen.loadings = default_loadings(d);
      pen.lambda = 0.5 * std::sqrt(std::log(static_cast<double>(p)) /
                                   static_cast<double>(n));
      pen.lambda_rule = LambdaRule::fixed;
      const LassoFit fit = fit_local_lasso(d, pen);
      errs.push_back((fit.theta - theta_star).lpNorm<1>());
    }
    std::nth_element(errs.begin(), errs.begin() + 100, errs.end());
    medians.push_back(errs[100]);
  }
  CHECK(medians[1] < medians[0]);
  CHECK(medians[2] < medians[1]);
}

TEST_CASE("scaled threshold recovers the true support under a beta-min gap") {
  const Eigen::Index n = 1600, p = 20;
  const double lam_core = plugin_lambda_core(p, n);
  const double rho = std::log(std::log(std::log(static_cast<double>(n))));
  const double beta_min = 10.0 * lam_core * rho * 3.0;
  int exact = 0;
  const int runs = 50;
  for (int run = 0; run < runs; ++run) {
    const Sample s = sparse_sample(n, p, 3, beta_min, 0.5, 42,
                                   static_cast<std::uint64_t>(run));
    const Design d = sparse_design(s, 1.0 + 1e-9, KernelFamily::uniform);
    PenaltyConfig pen;
    const LambdaSelection sel = select_lambda(d, pen);
    pen.lambda = sel.lambda;
    pen.loadings = sel.loadings;
    pen.lambda_rule = LambdaRule::fixed;
    const LassoFit fit = fit_local_lasso(d, pen);
    const std::vector<Eigen::Index> chosen = selection_set(
        fit.theta.segment(4, p), ThresholdRule::scaled_threshold, n, pen.lambda);
    if (chosen == std::vector<Eigen::Index>{0, 1, 2}) ++exact;
  }
  CHECK(exact >= static_cast<int>(0.95 * runs));
}
