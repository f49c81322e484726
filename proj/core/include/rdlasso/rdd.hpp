#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rdlasso/data.hpp"
#include "rdlasso/lasso.hpp"
#include "rdlasso/localpoly.hpp"

namespace rdlasso {

enum class Method { standard, covariate_adjusted, covariate_selection };
enum class DesignKind { sharp, fuzzy, kink };
enum class BandwidthMode {
  auto_without_covariates,
  auto_with_covariates,
  adaptive,
  fixed
};

struct RddRequest {
  Sample sample;
  Method method = Method::covariate_selection;
  DesignKind design_kind = DesignKind::sharp;
  double kink_denominator = 0.0;  // known slope change of the policy rule
  KernelFamily kernel = KernelFamily::triangular;
  BandwidthMode bandwidth_mode = BandwidthMode::adaptive;
  double fixed_h = 0.0, fixed_b = 0.0;  // bandwidth_mode == fixed only
  double confidence_level = 0.95;
  bool hb_restricted = false;
  LambdaRule lambda_rule = LambdaRule::plugin;
  double fixed_lambda = 0.0;  // lambda_rule == fixed only
  // Stage penalty scale applied on top of the plugin rule in the screening
  // step; calibrated so noise covariates stay out of the selected set.
  double selection_lambda_scale = 1.75;
  ThresholdRule selection_rule = ThresholdRule::support;
  BandwidthOptions bandwidth_options;
};

struct RddEstimate {
  double tau_hat = 0.0;
  double tau_bc = 0.0;       // tau_hat - h^2 Bbar
  double se_robust = 0.0;    // sqrt(Vbar_robust / (n h))
  double ci_lower = 0.0, ci_upper = 0.0;
  double p_value = 1.0;
  double confidence_level = 0.95;
  BandwidthPair bandwidths;
  Eigen::Index n_minus = 0, n_plus = 0;  // effective sample sizes within h
  std::vector<Eigen::Index> selected;    // covariate indices
  std::vector<std::string> selected_labels;
  Method method_used = Method::standard;
  double bias_estimate = 0.0;      // Bbar
  double variance_estimate = 0.0;  // Vbar_robust
};

struct ConfidenceInterval {
  double lower = 0.0, upper = 0.0;
  double p_value = 1.0;
};

/// Interval (point - bias) +/- z * sqrt(variance / n_loc_scale) and the
/// two-sided normal p-value for the zero null.
ConfidenceInterval robust_ci(double point, double bias, double variance,
                             double n_loc_scale, double level);

RddEstimate estimate_sharp(const RddRequest& request);
RddEstimate estimate_fuzzy(const RddRequest& request);
RddEstimate estimate_kink(const RddRequest& request);

/// Dispatch on request.design_kind.
RddEstimate estimate(const RddRequest& request);

/// Variance ratio Vbar_adjusted / Vbar_unadjusted, the efficiency diagnostic.
double relative_efficiency(const RddEstimate& adjusted,
                           const RddEstimate& unadjusted);

}  // namespace rdlasso
