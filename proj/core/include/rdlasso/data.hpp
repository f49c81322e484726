#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "rdlasso/kernel.hpp"

namespace rdlasso {

/// Raw dataset for one RD problem. The treatment indicator is derived from
/// the running variable and the cutoff, never stored.
struct Sample {
  Eigen::VectorXd x;             // running variable
  Eigen::VectorXd y;             // outcome
  Eigen::MatrixXd z;             // n x p covariates (p may be 0)
  std::optional<Eigen::VectorXd> w;  // treatment take-up, fuzzy designs only
  double cutoff = 0.0;
  std::vector<std::string> covariate_names;  // optional, size p when present

  Eigen::Index n() const { return x.size(); }
  Eigen::Index p() const { return z.cols(); }

  /// Throws std::invalid_argument on shape mismatches or non-finite values.
  void validate() const;

  std::string covariate_label(Eigen::Index j) const;
};

/// Kernel-weighted local regression design. Rows are restricted to
/// observations with positive kernel weight. Column 0 is the constant,
/// columns 1-3 are (T, X-cutoff, T*(X-cutoff)), then the selected covariates.
struct Design {
  Eigen::MatrixXd g;
  Eigen::VectorXd weights;   // strictly positive kernel weights
  Eigen::VectorXd response;
  std::vector<std::string> column_labels;
  std::vector<Eigen::Index> covariate_columns;  // covariate index housed by column 4+j
  double h = 0.0;
  Eigen::Index n_total = 0;  // size of the originating sample (the n in 1/(nh))
  Eigen::Index n_minus = 0;
  Eigen::Index n_plus = 0;

  Eigen::Index rows() const { return g.rows(); }
  Eigen::Index cols() const { return g.cols(); }
  /// The 1/(n h) normalizer used throughout the objectives.
  double inv_nh() const { return 1.0 / (static_cast<double>(n_total) * h); }
};

/// Builds the localized design at bandwidth h with the given covariate
/// subset (indices into sample.z columns). Throws EmptySideError when either
/// side of the cutoff has no retained observations.
Design build_design(const Sample& sample, double h, const KernelSpec& kernel,
                    const std::vector<Eigen::Index>& covariate_subset);

}  // namespace rdlasso
