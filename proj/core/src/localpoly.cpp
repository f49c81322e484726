#include "rdlasso/localpoly.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "inference.hpp"
#include "rdlasso/errors.hpp"
#include "rdlasso/wls.hpp"

namespace rdlasso {

namespace {

bool on_side(double xc, Side side) { return side == Side::left ? xc < 0.0 : xc >= 0.0; }

// Weighted Gram inverse for a one-sided Vandermonde fit; throws on rank loss.
Eigen::MatrixXd poly_gram_inverse(const Eigen::MatrixXd& xk, const Eigen::VectorXd& w,
                                  const char* who) {
  const Eigen::MatrixXd gram = xk.transpose() * w.asDiagonal() * xk;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  const Eigen::VectorXd ev = es.eigenvalues();
  const double emax = ev.cwiseAbs().maxCoeff();
  if (!(emax > 0.0) || ev.minCoeff() <= kRcondThreshold * emax) {
    throw SingularDesignError(std::string(who) + ": singular local polynomial design");
  }
  return es.eigenvectors() * ev.cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

Eigen::VectorXd local_poly_fit(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                               Side side, int degree, double bandwidth,
                               const KernelSpec& kernel) {
  if (degree < 1 || degree > 3) {
    throw std::invalid_argument("local_poly_fit: degree must be 1, 2, or 3");
  }
  if (!(bandwidth > 0.0)) {
    throw std::invalid_argument("local_poly_fit: bandwidth must be positive");
  }
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (on_side(x(i), side) && kernel_weight(kernel, x(i) / bandwidth) > 0.0) {
      keep.push_back(i);
    }
  }
  if (static_cast<int>(keep.size()) < degree + 1) {
    throw InsufficientDataError("local_poly_fit: fewer than degree+1 observations in window");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd xk(m, degree + 1);
  Eigen::VectorXd w(m), ys(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double xi = x(keep[static_cast<std::size_t>(r)]);
    double pw = 1.0;
    for (int k = 0; k <= degree; ++k) {
      xk(r, k) = pw;
      pw *= xi;
    }
    w(r) = kernel_weight(kernel, xi / bandwidth);
    ys(r) = y(keep[static_cast<std::size_t>(r)]);
  }
  const Eigen::MatrixXd gram_inv = poly_gram_inverse(xk, w, "local_poly_fit");
  return gram_inv * (xk.transpose() * w.cwiseProduct(ys));
}

Eigen::MatrixXd nn_codeviations(const Eigen::VectorXd& x, double cutoff,
                                const Eigen::MatrixXd& v, int j_neighbors) {
  const Eigen::Index n = x.size();
  const int J = j_neighbors;
  if (J < 1) throw std::invalid_argument("nn_codeviations: j_neighbors must be >= 1");

  // Per side: indices sorted by position; neighbors found by two-pointer
  // expansion, distance ties broken by lower original index.
  std::vector<Eigen::Index> left, right;
  for (Eigen::Index i = 0; i < n; ++i) {
    (x(i) - cutoff >= 0.0 ? right : left).push_back(i);
  }
  auto by_position = [&](Eigen::Index a, Eigen::Index b) {
    return x(a) != x(b) ? x(a) < x(b) : a < b;
  };
  std::sort(left.begin(), left.end(), by_position);
  std::sort(right.begin(), right.end(), by_position);

  Eigen::MatrixXd out(n, v.cols());
  const double scale = std::sqrt(static_cast<double>(J) / (J + 1.0));

  for (const auto& side : {left, right}) {
    const int m = static_cast<int>(side.size());
    if (m < J + 1) {
      throw InsufficientDataError("nn_codeviations: a side has fewer than J+1 observations");
    }
    for (int s = 0; s < m; ++s) {
      const Eigen::Index i = side[static_cast<std::size_t>(s)];
      int lo = s - 1, hi = s + 1;
      Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(v.cols());
      for (int picked = 0; picked < J; ++picked) {
        bool take_lo;
        if (lo < 0) {
          take_lo = false;
        } else if (hi >= m) {
          take_lo = true;
        } else {
          const Eigen::Index a = side[static_cast<std::size_t>(lo)];
          const Eigen::Index b = side[static_cast<std::size_t>(hi)];
          const double da = std::abs(x(a) - x(i));
          const double db = std::abs(x(b) - x(i));
          take_lo = da != db ? da < db : a < b;
        }
        const Eigen::Index pick = take_lo ? side[static_cast<std::size_t>(lo--)]
                                          : side[static_cast<std::size_t>(hi++)];
        acc += v.row(pick);
      }
      out.row(i) = scale * (v.row(i) - acc / static_cast<double>(J));
    }
  }
  return out;
}

Eigen::VectorXd nn_variance(const Sample& sample, int j_neighbors) {
  const Eigen::MatrixXd dev =
      nn_codeviations(sample.x, sample.cutoff, sample.y, j_neighbors);
  return dev.col(0).cwiseAbs2();
}

namespace detail {

SideProjection side_projection(const Eigen::VectorXd& xc, Side side, int degree,
                               int coef_index, double bandwidth,
                               const KernelSpec& kernel) {
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < xc.size(); ++i) {
    if (on_side(xc(i), side) && kernel_weight(kernel, xc(i) / bandwidth) > 0.0) {
      keep.push_back(i);
    }
  }
  if (static_cast<int>(keep.size()) < degree + 1) {
    throw InsufficientDataError("side_projection: fewer than degree+1 observations in window");
  }
  const Eigen::Index m = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd xk(m, degree + 1);
  Eigen::VectorXd w(m), xnext(m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double xi = xc(keep[static_cast<std::size_t>(r)]);
    double pw = 1.0;
    for (int k = 0; k <= degree; ++k) {
      xk(r, k) = pw;
      pw *= xi;
    }
    xnext(r) = pw;
    w(r) = kernel_weight(kernel, xi / bandwidth);
  }
  const Eigen::MatrixXd gram_inv = poly_gram_inverse(xk, w, "side_projection");
  const Eigen::VectorXd row = gram_inv.row(coef_index);

  SideProjection p;
  p.weights = Eigen::VectorXd::Zero(xc.size());
  p.count = m;
  for (Eigen::Index r = 0; r < m; ++r) {
    const double wr = w(r) * xk.row(r).dot(row);
    p.weights(keep[static_cast<std::size_t>(r)]) = wr;
    p.next_order_factor += wr * xnext(r);
  }
  return p;
}

Eigen::VectorXd composite_outcome(const Sample& sample,
                                  const std::vector<Eigen::Index>& selected,
                                  const Eigen::VectorXd& gamma_bar) {
  Eigen::VectorXd xi = sample.y;
  for (std::size_t j = 0; j < selected.size(); ++j) {
    xi -= gamma_bar(static_cast<Eigen::Index>(j)) * sample.z.col(selected[j]);
  }
  return xi;
}

Eigen::VectorXd composite_nn_variance(const Sample& sample,
                                      const std::vector<Eigen::Index>& selected,
                                      const Eigen::VectorXd& gamma_bar,
                                      int j_neighbors) {
  const Eigen::VectorXd xi = composite_outcome(sample, selected, gamma_bar);
  const Eigen::MatrixXd dev = nn_codeviations(sample.x, sample.cutoff, xi, j_neighbors);
  return dev.col(0).cwiseAbs2();
}

namespace {

ContrastComponents contrast_components(const Eigen::VectorXd& xc,
                                       const Eigen::VectorXd& xi,
                                       const Eigen::VectorXd& sigma2,
                                       const BandwidthPair& bw,
                                       const KernelSpec& kernel, int point_degree,
                                       int point_coef) {
  const SideProjection pm =
      side_projection(xc, Side::left, point_degree, point_coef, bw.h, kernel);
  const SideProjection pp =
      side_projection(xc, Side::right, point_degree, point_coef, bw.h, kernel);
  // Next-order coefficient rows at the pilot bandwidth b: the estimated
  // (degree+1)-th derivative over (degree+1)! of the composite outcome.
  const SideProjection cm =
      side_projection(xc, Side::left, point_degree + 1, point_degree + 1, bw.b, kernel);
  const SideProjection cp =
      side_projection(xc, Side::right, point_degree + 1, point_degree + 1, bw.b, kernel);

  ContrastComponents c;
  c.w_point = pp.weights - pm.weights;
  const double h2 = bw.h * bw.h;
  // Bias of the contrast: leakage factor times the next-order coefficient on
  // each side; the correction convention is point - h^2 * bias, so divide the
  // raw (bandwidth-scaled) factors by h^2.
  c.w_bias = (pp.next_order_factor / h2) * cp.weights -
             (pm.next_order_factor / h2) * cm.weights;
  c.point = c.w_point.dot(xi);
  c.bias = c.w_bias.dot(xi);
  c.var_point_raw = c.w_point.cwiseAbs2().dot(sigma2);
  c.var_bias_raw = c.w_bias.cwiseAbs2().dot(sigma2);
  return c;
}

}  // namespace

ContrastComponents jump_components(const Eigen::VectorXd& xc, const Eigen::VectorXd& xi,
                                   const Eigen::VectorXd& sigma2,
                                   const BandwidthPair& bw, const KernelSpec& kernel) {
  return contrast_components(xc, xi, sigma2, bw, kernel, 1, 0);
}

ContrastComponents kink_components(const Eigen::VectorXd& xc, const Eigen::VectorXd& xi,
                                   const Eigen::VectorXd& sigma2,
                                   const BandwidthPair& bw, const KernelSpec& kernel) {
  return contrast_components(xc, xi, sigma2, bw, kernel, 2, 1);
}

double robust_variance_raw(const ContrastComponents& c, double h,
                           const Eigen::VectorXd& sigma2) {
  const Eigen::VectorXd combined = c.w_point - h * h * c.w_bias;
  return combined.cwiseAbs2().dot(sigma2);
}

}  // namespace detail

BiasVariance bias_variance_estimates(const Sample& sample,
                                     const std::vector<Eigen::Index>& selected,
                                     const Eigen::VectorXd& gamma_bar,
                                     const BandwidthPair& bandwidths,
                                     const KernelSpec& kernel,
                                     const BiasVarianceOptions& opts) {
  const Eigen::VectorXd xc = sample.x.array() - sample.cutoff;
  const Eigen::VectorXd xi = detail::composite_outcome(sample, selected, gamma_bar);
  const Eigen::Index m = static_cast<Eigen::Index>(selected.size());

  // Co-deviation rows of (xi, z_sel): column 0 already folds gamma into the
  // outcome, so (q' d_i) is just the first column.
  Eigen::MatrixXd v(sample.n(), 1 + m);
  v.col(0) = xi;
  for (Eigen::Index j = 0; j < m; ++j) {
    v.col(1 + j) = sample.z.col(selected[static_cast<std::size_t>(j)]);
  }
  const Eigen::MatrixXd dev =
      nn_codeviations(sample.x, sample.cutoff, v, opts.nn_neighbors);
  const Eigen::VectorXd sigma2 = dev.col(0).cwiseAbs2();

  const detail::ContrastComponents comp =
      detail::jump_components(xc, xi, sigma2, bandwidths, kernel);

  BiasVariance out;
  out.bias = comp.bias;
  const double nh = static_cast<double>(sample.n()) * bandwidths.h;
  out.variance = nh * comp.var_point_raw;

  out.q_bar.resize(1 + m);
  out.q_bar(0) = 1.0;
  for (Eigen::Index j = 0; j < m; ++j) out.q_bar(1 + j) = -gamma_bar(j);

  // Per-component second derivatives (outcome first) for reporting.
  out.mu2_minus.resize(1 + m);
  out.mu2_plus.resize(1 + m);
  Eigen::MatrixXd raw(sample.n(), 1 + m);
  raw.col(0) = sample.y;
  for (Eigen::Index j = 0; j < m; ++j) {
    raw.col(1 + j) = sample.z.col(selected[static_cast<std::size_t>(j)]);
  }
  for (Eigen::Index j = 0; j < 1 + m; ++j) {
    out.mu2_minus(j) =
        2.0 * local_poly_fit(xc, raw.col(j), Side::left, 2, bandwidths.b, kernel)(2);
    out.mu2_plus(j) =
        2.0 * local_poly_fit(xc, raw.col(j), Side::right, 2, bandwidths.b, kernel)(2);
  }

  // Side-averaged conditional covariance estimates of the raw (y, z_sel)
  // vector from the same nearest-neighbor machinery.
  const Eigen::MatrixXd dev_raw =
      nn_codeviations(sample.x, sample.cutoff, raw, opts.nn_neighbors);
  Eigen::MatrixXd sm = Eigen::MatrixXd::Zero(1 + m, 1 + m);
  Eigen::MatrixXd sp = Eigen::MatrixXd::Zero(1 + m, 1 + m);
  Eigen::Index cm = 0, cp = 0;
  for (Eigen::Index i = 0; i < sample.n(); ++i) {
    if (xc(i) >= 0.0) {
      sp += dev_raw.row(i).transpose() * dev_raw.row(i);
      ++cp;
    } else {
      sm += dev_raw.row(i).transpose() * dev_raw.row(i);
      ++cm;
    }
  }
  out.sigma_minus = cm > 0 ? (sm / static_cast<double>(cm)).eval() : sm;
  out.sigma_plus = cp > 0 ? (sp / static_cast<double>(cp)).eval() : sp;
  return out;
}

}  // namespace rdlasso
