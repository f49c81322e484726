#include "rdlasso/rdd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "inference.hpp"
#include "rdlasso/errors.hpp"
#include "rdlasso/stats.hpp"
#include "rdlasso/wls.hpp"

namespace rdlasso {

ConfidenceInterval robust_ci(double point, double bias, double variance,
                             double n_loc_scale, double level) {
  if (variance < 0.0) throw std::invalid_argument("robust_ci: negative variance");
  if (!(level > 0.0 && level < 1.0)) {
    throw std::invalid_argument("robust_ci: level must be in (0, 1)");
  }
  const double center = point - bias;
  const double se = std::sqrt(variance / n_loc_scale);
  ConfidenceInterval ci;
  if (se == 0.0) {
    ci.lower = ci.upper = center;
    ci.p_value = center == 0.0 ? 1.0 : 0.0;
    return ci;
  }
  const double z = normal_quantile(1.0 - (1.0 - level) / 2.0);
  ci.lower = center - z * se;
  ci.upper = center + z * se;
  ci.p_value = 2.0 * (1.0 - normal_cdf(std::abs(center / se)));
  return ci;
}

namespace {

std::vector<Eigen::Index> all_covariates(const Sample& sample) {
  std::vector<Eigen::Index> all(static_cast<std::size_t>(sample.p()));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  return all;
}

BandwidthOptions effective_bw_options(const RddRequest& request) {
  BandwidthOptions opts = request.bandwidth_options;
  opts.restricted = request.hb_restricted;
  return opts;
}

BandwidthPair fixed_pair(const RddRequest& request) {
  if (!(request.fixed_h > 0.0)) {
    throw std::invalid_argument("estimate: fixed bandwidth mode requires h > 0");
  }
  BandwidthPair bw;
  bw.h = request.fixed_h;
  bw.b = request.fixed_b > 0.0 ? request.fixed_b : request.fixed_h;
  bw.restricted = request.hb_restricted;
  if (bw.restricted) bw.b = bw.h;
  return bw;
}

void fill_selection_labels(RddEstimate& est, const Sample& sample) {
  est.selected_labels.clear();
  for (Eigen::Index j : est.selected) {
    est.selected_labels.push_back(sample.covariate_label(j));
  }
}

// Sharp-jump fit plus robust bias-corrected inference at fixed bandwidths.
// Standard estimation is this function with an empty selection, so the
// empty-selection fallback is the identical code path.
RddEstimate sharp_at_bandwidth(const RddRequest& request,
                               const std::vector<Eigen::Index>& selected,
                               const BandwidthPair& bw, bool minimum_norm) {
  const Sample& sample = request.sample;
  const KernelSpec kernel(request.kernel, bw.h);
  const Design design = build_design(sample, bw.h, kernel, selected);

  Eigen::VectorXd coef;
  if (minimum_norm) {
    coef = weighted_ols_minnorm(design);
  } else {
    coef = weighted_ols(design).coef;
  }
  const Eigen::Index m = static_cast<Eigen::Index>(selected.size());
  const Eigen::VectorXd gamma = coef.tail(m);

  const Eigen::VectorXd xc = sample.x.array() - sample.cutoff;
  const Eigen::VectorXd xi = detail::composite_outcome(sample, selected, gamma);
  const Eigen::VectorXd sigma2 = detail::composite_nn_variance(
      sample, selected, gamma, request.bandwidth_options.nn_neighbors);
  const detail::ContrastComponents comp =
      detail::jump_components(xc, xi, sigma2, bw, kernel);

  RddEstimate est;
  est.tau_hat = coef(1);
  est.bias_estimate = comp.bias;
  est.tau_bc = est.tau_hat - bw.h * bw.h * comp.bias;
  const double var_rob_raw = detail::robust_variance_raw(comp, bw.h, sigma2);
  const double nh = static_cast<double>(sample.n()) * bw.h;
  est.variance_estimate = nh * var_rob_raw;
  est.se_robust = std::sqrt(var_rob_raw);
  est.confidence_level = request.confidence_level;
  const ConfidenceInterval ci =
      robust_ci(est.tau_hat, bw.h * bw.h * comp.bias, est.variance_estimate, nh,
                request.confidence_level);
  est.ci_lower = ci.lower;
  est.ci_upper = ci.upper;
  est.p_value = ci.p_value;
  est.bandwidths = bw;
  est.n_minus = design.n_minus;
  est.n_plus = design.n_plus;
  est.selected = selected;
  fill_selection_labels(est, sample);
  est.method_used = request.method;
  return est;
}

// Penalty loadings on covariate columns residualized against the unpenalized
// base block in the weighted metric; keeps the penalty on a covariate's
// partial signal rather than its raw scale.
Eigen::VectorXd residualized_loadings(const Design& design,
                                      const Eigen::VectorXd& ehat) {
  const Eigen::Index q = design.cols();
  const Eigen::MatrixXd base = design.g.leftCols(4);
  const Eigen::MatrixXd base_w =
      base.array().colwise() * design.weights.array();
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(base.transpose() * base_w);
  Eigen::VectorXd psi = Eigen::VectorXd::Ones(q);
  for (Eigen::Index j = 4; j < q; ++j) {
    const Eigen::VectorXd coef = ldlt.solve(base_w.transpose() * design.g.col(j));
    const Eigen::VectorXd res = design.g.col(j) - base * coef;
    const double s = (design.weights.array() * res.array().square() *
                      ehat.array().square())
                         .sum() *
                     design.inv_nh();
    psi(j) = std::sqrt(std::max(s, 0.0));
    if (psi(j) <= 0.0) psi(j) = 1.0;
  }
  return psi;
}

// Screening step: partially penalized lasso on the full sample (uniform
// weights) with a data-driven lambda; returns covariate indices plus the
// lambda actually used. Localizing this step discards too much of the
// covariate signal at realistic bandwidths, so it runs unlocalized and the
// selected set is handed to the localized post-selection fit.
struct SelectionResult {
  std::vector<Eigen::Index> selected;
  double lambda = 0.0;
};

SelectionResult select_covariates(const RddRequest& request,
                                  const Eigen::VectorXd& response_override,
                                  bool use_override) {
  const Sample& sample = request.sample;
  const Eigen::VectorXd xc = sample.x.array() - sample.cutoff;
  const double h_full = xc.array().abs().maxCoeff() * (1.0 + 1e-12);
  const KernelSpec kernel(KernelFamily::uniform, h_full);
  Design design = build_design(sample, h_full, kernel, all_covariates(sample));
  if (use_override) {
    // Re-localize the override (take-up) response to the retained rows.
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sample.n(); ++i) {
      if (kernel_weight(kernel, (sample.x(i) - sample.cutoff) / h_full) > 0.0) {
        design.response(r++) = response_override(i);
      }
    }
  }

  PenaltyConfig penalty;
  penalty.lambda = request.fixed_lambda;
  penalty.lambda_rule = request.lambda_rule;
  penalty.threshold_rule = request.selection_rule;

  SelectionResult result;
  LambdaSelection sel;
  try {
    sel = select_lambda(design, penalty);
  } catch (const DegenerateResidualsError&) {
    if (!use_override) throw;
    // Exactly explained take-up (e.g. sharp compliance): nothing to select.
    return result;
  }
  penalty.lambda = sel.lambda;
  if (request.lambda_rule == LambdaRule::plugin) {
    penalty.lambda *= request.selection_lambda_scale;
  }
  penalty.loadings = sel.loadings;
  penalty.lambda_rule = LambdaRule::fixed;
  const LassoFit first_pass = fit_local_lasso(design, penalty);
  const Eigen::VectorXd ehat = design.response - design.g * first_pass.theta;
  penalty.loadings = residualized_loadings(design, ehat);
  const LassoFit fit = fit_local_lasso(design, penalty);
  const Eigen::VectorXd gamma = fit.theta.tail(sample.p());
  result.selected =
      selection_set(gamma, request.selection_rule, sample.n(), penalty.lambda);
  result.lambda = penalty.lambda;
  return result;
}

// Pilot covariate coefficients for bandwidth re-selection: weighted OLS of the
// outcome on the base block and the selected covariates at bandwidth h.
Eigen::VectorXd pilot_gamma(const Sample& sample, KernelFamily family, double h,
                            const std::vector<Eigen::Index>& selected) {
  const KernelSpec kernel(family, h);
  const Design design = build_design(sample, h, kernel, selected);
  return weighted_ols(design).coef.tail(static_cast<Eigen::Index>(selected.size()));
}

}  // namespace

RddEstimate estimate_sharp(const RddRequest& request) {
  const Sample& sample = request.sample;
  sample.validate();
  const KernelSpec kernel0(request.kernel, 1.0);
  const BandwidthOptions bw_opts = effective_bw_options(request);
  const Eigen::VectorXd empty;

  if (request.method == Method::standard ||
      (request.method == Method::covariate_selection && sample.p() == 0)) {
    const BandwidthPair bw =
        request.bandwidth_mode == BandwidthMode::fixed
            ? fixed_pair(request)
            : mse_optimal_bandwidth(sample, {}, empty, kernel0, bw_opts);
    return sharp_at_bandwidth(request, {}, bw, false);
  }

  if (request.method == Method::covariate_adjusted) {
    const std::vector<Eigen::Index> all = all_covariates(sample);
    BandwidthPair bw;
    if (request.bandwidth_mode == BandwidthMode::fixed) {
      bw = fixed_pair(request);
    } else if (request.bandwidth_mode == BandwidthMode::auto_without_covariates) {
      bw = mse_optimal_bandwidth(sample, {}, empty, kernel0, bw_opts);
    } else {
      // With-covariates bandwidth: pilot coefficients at the covariate-free
      // bandwidth, then re-select with all covariates.
      const BandwidthPair h_tilde =
          mse_optimal_bandwidth(sample, {}, empty, kernel0, bw_opts);
      const KernelSpec kt(request.kernel, h_tilde.h);
      const Design pilot_design = build_design(sample, h_tilde.h, kt, all);
      const Eigen::VectorXd pilot = weighted_ols_minnorm(pilot_design).tail(sample.p());
      bw = mse_optimal_bandwidth(sample, all, pilot, kernel0, bw_opts);
    }
    return sharp_at_bandwidth(request, all, bw, true);
  }

  // Covariate selection: covariate-free bandwidth, selection, then the RD fit
  // at a bandwidth re-selected with the selected covariates.
  const BandwidthPair h_tilde =
      request.bandwidth_mode == BandwidthMode::fixed
          ? fixed_pair(request)
          : mse_optimal_bandwidth(sample, {}, empty, kernel0, bw_opts);
  const SelectionResult sel =
      select_covariates(request, Eigen::VectorXd(), false);
  if (sel.selected.empty()) {
    return sharp_at_bandwidth(request, {}, h_tilde, false);
  }

  BandwidthPair bw = h_tilde;
  if (request.bandwidth_mode == BandwidthMode::adaptive ||
      request.bandwidth_mode == BandwidthMode::auto_with_covariates) {
    const Eigen::VectorXd pilot =
        pilot_gamma(sample, request.kernel, h_tilde.h, sel.selected);
    bw = mse_optimal_bandwidth(sample, sel.selected, pilot, kernel0, bw_opts);
  }
  return sharp_at_bandwidth(request, sel.selected, bw, false);
}

RddEstimate estimate_fuzzy(const RddRequest& request) {
  const Sample& sample = request.sample;
  sample.validate();
  if (!sample.w) {
    throw std::invalid_argument("estimate_fuzzy: take-up vector is required");
  }
  const KernelSpec kernel0(request.kernel, 1.0);
  const BandwidthOptions bw_opts = effective_bw_options(request);
  const Eigen::VectorXd empty;

  const BandwidthPair h_tilde =
      request.bandwidth_mode == BandwidthMode::fixed
          ? fixed_pair(request)
          : mse_optimal_bandwidth(sample, {}, empty, kernel0, bw_opts);

  // Selection on both equations at the common bandwidth; the penalty level of
  // the plugin rule depends only on (p, n_loc), so it is shared.
  std::vector<Eigen::Index> selected;
  if (sample.p() > 0) {
    const SelectionResult sel_y =
        select_covariates(request, Eigen::VectorXd(), false);
    const SelectionResult sel_w = select_covariates(request, *sample.w, true);
    selected = sel_y.selected;
    for (Eigen::Index j : sel_w.selected) {
      if (std::find(selected.begin(), selected.end(), j) == selected.end()) {
        selected.push_back(j);
      }
    }
    std::sort(selected.begin(), selected.end());
  }

  BandwidthPair bw = h_tilde;
  if (!selected.empty() &&
      (request.bandwidth_mode == BandwidthMode::adaptive ||
       request.bandwidth_mode == BandwidthMode::auto_with_covariates)) {
    const Eigen::VectorXd pilot =
        pilot_gamma(sample, request.kernel, h_tilde.h, selected);
    bw = mse_optimal_bandwidth(sample, selected, pilot, kernel0, bw_opts);
  }

  const KernelSpec kernel(request.kernel, bw.h);
  Design design_y = build_design(sample, bw.h, kernel, selected);
  Design design_w = design_y;
  {
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sample.n(); ++i) {
      const double xc = sample.x(i) - sample.cutoff;
      if (kernel_weight(kernel, xc / bw.h) > 0.0) {
        design_w.response(r++) = (*sample.w)(i);
      }
    }
  }
  const Eigen::VectorXd coef_y = weighted_ols(design_y).coef;
  const Eigen::VectorXd coef_w = weighted_ols(design_w).coef;
  const double tau_y = coef_y(1);
  const double tau_w = coef_w(1);
  if (std::abs(tau_w) <= 1e-6) {
    throw WeakDiscontinuityError("estimate_fuzzy: take-up jump is indistinguishable from zero");
  }
  const double tau_f = tau_y / tau_w;

  // Delta-method influence outcome: eta_i = (xi_Y - tau_f xi_W) / tau_W.
  const Eigen::Index m = static_cast<Eigen::Index>(selected.size());
  const Eigen::VectorXd gamma_y = coef_y.tail(m);
  const Eigen::VectorXd gamma_w = coef_w.tail(m);
  const Eigen::VectorXd xi_y = detail::composite_outcome(sample, selected, gamma_y);
  Sample w_sample = sample;
  w_sample.y = *sample.w;
  const Eigen::VectorXd xi_w = detail::composite_outcome(w_sample, selected, gamma_w);
  const Eigen::VectorXd eta = (xi_y - tau_f * xi_w) / tau_w;

  const Eigen::VectorXd xc = sample.x.array() - sample.cutoff;
  const Eigen::MatrixXd dev = nn_codeviations(
      sample.x, sample.cutoff, eta, request.bandwidth_options.nn_neighbors);
  const Eigen::VectorXd sigma2 = dev.col(0).cwiseAbs2();
  const detail::ContrastComponents comp =
      detail::jump_components(xc, eta, sigma2, bw, kernel);

  RddEstimate est;
  est.tau_hat = tau_f;
  est.bias_estimate = comp.bias;
  est.tau_bc = tau_f - bw.h * bw.h * comp.bias;
  const double var_rob_raw = detail::robust_variance_raw(comp, bw.h, sigma2);
  const double nh = static_cast<double>(sample.n()) * bw.h;
  est.variance_estimate = nh * var_rob_raw;
  est.se_robust = std::sqrt(var_rob_raw);
  est.confidence_level = request.confidence_level;
  const ConfidenceInterval ci =
      robust_ci(tau_f, bw.h * bw.h * comp.bias, est.variance_estimate, nh,
                request.confidence_level);
  est.ci_lower = ci.lower;
  est.ci_upper = ci.upper;
  est.p_value = ci.p_value;
  est.bandwidths = bw;
  est.n_minus = design_y.n_minus;
  est.n_plus = design_y.n_plus;
  est.selected = selected;
  fill_selection_labels(est, sample);
  est.method_used = request.method;
  return est;
}

namespace {

// Kink design: columns (1, T x, x, T x^2, x^2, Z_sel); the slope-change
// coefficient sits in column 1 to mirror the jump layout.
Design build_kink_design(const Sample& sample, double h, const KernelSpec& kernel,
                         const std::vector<Eigen::Index>& covariate_subset) {
  Design base = build_design(sample, h, kernel, covariate_subset);
  const Eigen::Index m = base.rows();
  const Eigen::Index q = static_cast<Eigen::Index>(covariate_subset.size());
  Design d = base;
  d.g.resize(m, 5 + q);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double t = base.g(r, 1);
    const double xc = base.g(r, 2);
    d.g(r, 0) = 1.0;
    d.g(r, 1) = t * xc;
    d.g(r, 2) = xc;
    d.g(r, 3) = t * xc * xc;
    d.g(r, 4) = xc * xc;
    for (Eigen::Index j = 0; j < q; ++j) d.g(r, 5 + j) = base.g(r, 4 + j);
  }
  d.column_labels = {"const", "slope_change", "slope", "curvature_change", "curvature"};
  for (Eigen::Index j = 0; j < q; ++j) {
    d.column_labels.push_back(sample.covariate_label(covariate_subset[static_cast<std::size_t>(j)]));
  }
  return d;
}

}  // namespace

RddEstimate estimate_kink(const RddRequest& request) {
  const Sample& sample = request.sample;
  sample.validate();
  if (request.kink_denominator == 0.0) {
    throw std::invalid_argument("estimate_kink: the policy slope change must be nonzero");
  }
  const double b0 = request.kink_denominator;
  const KernelSpec kernel0(request.kernel, 1.0);
  const BandwidthOptions bw_opts = effective_bw_options(request);
  const Eigen::VectorXd empty;

  const BandwidthPair h_tilde =
      request.bandwidth_mode == BandwidthMode::fixed
          ? fixed_pair(request)
          : mse_optimal_bandwidth_kink(sample, {}, empty, kernel0, bw_opts);

  std::vector<Eigen::Index> selected;
  double lambda_used = 0.0;
  if (sample.p() > 0 && request.method == Method::covariate_selection) {
    const KernelSpec kt(request.kernel, h_tilde.h);
    const Design design = build_kink_design(sample, h_tilde.h, kt, all_covariates(sample));
    PenaltyConfig penalty;
    penalty.lambda = request.fixed_lambda;
    penalty.lambda_rule = request.lambda_rule;
    penalty.unpenalized = {0, 1, 2, 3, 4};
    const LambdaSelection sel = select_lambda(design, penalty);
    penalty.lambda = sel.lambda;
    penalty.loadings = sel.loadings;
    const LassoFit fit = fit_local_lasso(design, penalty);
    const Eigen::VectorXd gamma = fit.theta.tail(sample.p());
    selected = selection_set(gamma, request.selection_rule, sample.n(), sel.lambda);
    lambda_used = sel.lambda;
  } else if (request.method == Method::covariate_adjusted) {
    selected = all_covariates(sample);
  }
  (void)lambda_used;

  BandwidthPair bw = h_tilde;
  if (!selected.empty() && request.bandwidth_mode != BandwidthMode::fixed &&
      request.bandwidth_mode != BandwidthMode::auto_without_covariates) {
    const KernelSpec kt(request.kernel, h_tilde.h);
    const Design pd = build_kink_design(sample, h_tilde.h, kt, selected);
    const Eigen::VectorXd pilot = weighted_ols(pd).coef.tail(
        static_cast<Eigen::Index>(selected.size()));
    bw = mse_optimal_bandwidth_kink(sample, selected, pilot, kernel0, bw_opts);
  }

  const KernelSpec kernel(request.kernel, bw.h);
  const Design design = build_kink_design(sample, bw.h, kernel, selected);
  const Eigen::VectorXd coef = weighted_ols(design).coef;
  const double delta = coef(1);
  const Eigen::VectorXd gamma = coef.tail(static_cast<Eigen::Index>(selected.size()));

  const Eigen::VectorXd xc = sample.x.array() - sample.cutoff;
  const Eigen::VectorXd xi = detail::composite_outcome(sample, selected, gamma);
  const Eigen::VectorXd sigma2 = detail::composite_nn_variance(
      sample, selected, gamma, request.bandwidth_options.nn_neighbors);
  const detail::ContrastComponents comp =
      detail::kink_components(xc, xi, sigma2, bw, kernel);

  RddEstimate est;
  est.tau_hat = delta / b0;
  est.bias_estimate = comp.bias / b0;
  est.tau_bc = est.tau_hat - bw.h * bw.h * est.bias_estimate;
  const double var_rob_raw =
      detail::robust_variance_raw(comp, bw.h, sigma2) / (b0 * b0);
  const double nh = static_cast<double>(sample.n()) * bw.h;
  est.variance_estimate = nh * var_rob_raw;
  est.se_robust = std::sqrt(var_rob_raw);
  est.confidence_level = request.confidence_level;
  const ConfidenceInterval ci =
      robust_ci(est.tau_hat, bw.h * bw.h * est.bias_estimate, est.variance_estimate,
                nh, request.confidence_level);
  est.ci_lower = ci.lower;
  est.ci_upper = ci.upper;
  est.p_value = ci.p_value;
  est.bandwidths = bw;
  est.n_minus = design.n_minus;
  est.n_plus = design.n_plus;
  est.selected = selected;
  fill_selection_labels(est, sample);
  est.method_used = request.method;
  return est;
}

RddEstimate estimate(const RddRequest& request) {
  switch (request.design_kind) {
    case DesignKind::sharp: return estimate_sharp(request);
    case DesignKind::fuzzy: return estimate_fuzzy(request);
    case DesignKind::kink: return estimate_kink(request);
  }
  throw std::invalid_argument("estimate: unknown design kind");
}

double relative_efficiency(const RddEstimate& adjusted, const RddEstimate& unadjusted) {
  return adjusted.variance_estimate / unadjusted.variance_estimate;
}

}  // namespace rdlasso
