#include "rdlasso/data.hpp"

#include <cmath>
#include <stdexcept>

#include "rdlasso/errors.hpp"

namespace rdlasso {

void Sample::validate() const {
  const Eigen::Index m = x.size();
  if (m < 1) throw std::invalid_argument("Sample: empty running variable");
  if (y.size() != m) throw std::invalid_argument("Sample: x/y length mismatch");
  if (z.rows() != 0 && z.rows() != m) {
    throw std::invalid_argument("Sample: covariate row count mismatch");
  }
  if (w && w->size() != m) throw std::invalid_argument("Sample: take-up length mismatch");
  if (!covariate_names.empty() &&
      static_cast<Eigen::Index>(covariate_names.size()) != z.cols()) {
    throw std::invalid_argument("Sample: covariate name count mismatch");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!x.unaryExpr([&](double v) { return finite(v) ? 0.0 : 1.0; }).isZero() ||
      !y.unaryExpr([&](double v) { return finite(v) ? 0.0 : 1.0; }).isZero()) {
    throw std::invalid_argument("Sample: non-finite values in x or y");
  }
  if (z.size() > 0 && !z.allFinite()) {
    throw std::invalid_argument("Sample: non-finite covariate values");
  }
  if (w && !w->allFinite()) {
    throw std::invalid_argument("Sample: non-finite take-up values");
  }
  if (!std::isfinite(cutoff)) throw std::invalid_argument("Sample: non-finite cutoff");
}

std::string Sample::covariate_label(Eigen::Index j) const {
  if (j >= 0 && j < static_cast<Eigen::Index>(covariate_names.size())) {
    return covariate_names[static_cast<std::size_t>(j)];
  }
  return "z" + std::to_string(j + 1);
}

Design build_design(const Sample& sample, double h, const KernelSpec& kernel,
                    const std::vector<Eigen::Index>& covariate_subset) {
  if (!(h > 0.0)) throw std::invalid_argument("build_design: h must be positive");
  const Eigen::Index n = sample.n();
  const Eigen::Index q = static_cast<Eigen::Index>(covariate_subset.size());

  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(n));
  Eigen::Index n_minus = 0, n_plus = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double xc = sample.x(i) - sample.cutoff;
    if (kernel_weight(kernel, xc / h) > 0.0) {
      keep.push_back(i);
      (xc >= 0.0 ? n_plus : n_minus)++;
    }
  }
  if (n_minus == 0 || n_plus == 0) {
    throw EmptySideError("build_design: no retained observations on the " +
                         std::string(n_minus == 0 ? "left" : "right") +
                         " side of the cutoff");
  }

  Design d;
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  d.g.resize(m, 4 + q);
  d.weights.resize(m);
  d.response.resize(m);
  d.h = h;
  d.n_total = n;
  d.n_minus = n_minus;
  d.n_plus = n_plus;
  d.covariate_columns = covariate_subset;
  d.column_labels = {"const", "jump", "slope", "slope_change"};
  for (Eigen::Index j = 0; j < q; ++j) {
    d.column_labels.push_back(sample.covariate_label(covariate_subset[static_cast<std::size_t>(j)]));
  }

  for (Eigen::Index r = 0; r < m; ++r) {
    const Eigen::Index i = keep[static_cast<std::size_t>(r)];
    const double xc = sample.x(i) - sample.cutoff;
    const double t = xc >= 0.0 ? 1.0 : 0.0;
    d.g(r, 0) = 1.0;
    d.g(r, 1) = t;
    d.g(r, 2) = xc;
    d.g(r, 3) = t * xc;
    for (Eigen::Index j = 0; j < q; ++j) {
      d.g(r, 4 + j) = sample.z(i, covariate_subset[static_cast<std::size_t>(j)]);
    }
    d.weights(r) = kernel_weight(kernel, xc / h);
    d.response(r) = sample.y(i);
  }
  return d;
}

}  // namespace rdlasso
