#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

#include "rdlasso/errors.hpp"
#include "rdlasso/sim.hpp"

namespace rdlasso {

std::vector<McMethod> default_mc_methods() {
  return {
      {"standard", Method::standard, BandwidthMode::auto_without_covariates},
      {"adjusted_h_nocov", Method::covariate_adjusted, BandwidthMode::auto_without_covariates},
      {"adjusted_h_cov", Method::covariate_adjusted, BandwidthMode::auto_with_covariates},
      {"selection", Method::covariate_selection, BandwidthMode::adaptive},
  };
}

namespace {

struct RepRecord {
  bool ok = false;
  double tau = 0.0;
  bool covered = false;
  double length = 0.0;
  double h = 0.0;
  double b = 0.0;
  Eigen::Index n_selected = 0;
};

}  // namespace

McSummary run_monte_carlo(const DgpSpec& spec, Eigen::Index reps,
                          const std::vector<McMethod>& methods,
                          const McOptions& options) {
  if (reps < 1) throw std::invalid_argument("run_monte_carlo: reps must be >= 1");
  const double tau = reference_tau(spec);
  const std::size_t n_methods = methods.size();

  std::vector<std::vector<RepRecord>> records(
      static_cast<std::size_t>(reps), std::vector<RepRecord>(n_methods));

  auto run_one = [&](Eigen::Index rep) {
    const Sample sample = draw_sample(spec, static_cast<std::uint64_t>(rep));
    for (std::size_t m = 0; m < n_methods; ++m) {
      RddRequest request;
      request.sample = sample;
      request.method = methods[m].method;
      request.design_kind = DesignKind::sharp;
      request.kernel = options.kernel;
      request.bandwidth_mode = methods[m].bandwidth_mode;
      request.confidence_level = options.level;
      request.hb_restricted = options.hb_restricted;
      request.bandwidth_options = options.bandwidth_options;
      RepRecord& rec = records[static_cast<std::size_t>(rep)][m];
      try {
        const RddEstimate est = estimate_sharp(request);
        rec.ok = true;
        rec.tau = est.tau_hat;
        rec.covered = est.ci_lower <= tau && tau <= est.ci_upper;
        rec.length = est.ci_upper - est.ci_lower;
        rec.h = est.bandwidths.h;
        rec.b = est.bandwidths.b;
        rec.n_selected = static_cast<Eigen::Index>(est.selected.size());
      } catch (const EstimationError&) {
        rec.ok = false;
      }
    }
  };

  unsigned workers = options.threads > 0
                         ? static_cast<unsigned>(options.threads)
                         : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min<unsigned>(workers, static_cast<unsigned>(reps));
  if (workers <= 1) {
    for (Eigen::Index rep = 0; rep < reps; ++rep) run_one(rep);
  } else {
    std::atomic<Eigen::Index> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned t = 0; t < workers; ++t) {
      pool.emplace_back([&]() {
        while (true) {
          const Eigen::Index rep = next.fetch_add(1);
          if (rep >= reps) break;
          run_one(rep);
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  McSummary summary;
  summary.spec = spec;
  summary.reps = reps;
  summary.tau_true = tau;
  for (std::size_t m = 0; m < n_methods; ++m) {
    McMethodSummary ms;
    ms.name = methods[m].name;
    double sum = 0.0, sum_sq = 0.0, cover = 0.0, length = 0.0;
    double h_sum = 0.0, h_sq = 0.0, b_sum = 0.0, sel_sum = 0.0;
    Eigen::Index ok = 0;
    ms.selected_min = 0;
    ms.selected_max = 0;
    bool first = true;
    for (Eigen::Index rep = 0; rep < reps; ++rep) {
      const RepRecord& rec = records[static_cast<std::size_t>(rep)][m];
      if (!rec.ok) {
        ++ms.failures;
        continue;
      }
      ++ok;
      const double err = rec.tau - tau;
      sum += err;
      sum_sq += err * err;
      cover += rec.covered ? 1.0 : 0.0;
      length += rec.length;
      h_sum += rec.h;
      h_sq += rec.h * rec.h;
      b_sum += rec.b;
      sel_sum += static_cast<double>(rec.n_selected);
      if (first) {
        ms.selected_min = ms.selected_max = rec.n_selected;
        first = false;
      } else {
        ms.selected_min = std::min(ms.selected_min, rec.n_selected);
        ms.selected_max = std::max(ms.selected_max, rec.n_selected);
      }
    }
    ms.successes = ok;
    if (ok > 0) {
      const double k = static_cast<double>(ok);
      ms.bias = sum / k;
      ms.rmse = std::sqrt(sum_sq / k);
      ms.coverage = cover / k;
      ms.coverage_se = std::sqrt(ms.coverage * (1.0 - ms.coverage) / k);
      ms.mean_length = length / k;
      ms.h_mean = h_sum / k;
      ms.h_sd = std::sqrt(std::max(0.0, h_sq / k - ms.h_mean * ms.h_mean));
      ms.b_mean = b_sum / k;
      ms.selected_mean = sel_sum / k;
    }
    summary.methods.push_back(ms);
  }
  return summary;
}

}  // namespace rdlasso
