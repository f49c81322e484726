#include <benchmark/benchmark.h>

#include "rdlasso/lasso.hpp"
#include "rdlasso/localpoly.hpp"
#include "rdlasso/rdd.hpp"
#include "rdlasso/sim.hpp"

namespace {

rdlasso::Sample make_sample(Eigen::Index n, Eigen::Index p) {
  rdlasso::DgpSpec spec;
  spec.dgp = rdlasso::Dgp::dgp2;
  spec.n = n;
  spec.p = p;
  spec.seed = 7;
  return rdlasso::draw_sample(spec, 0);
}

void bm_lasso_fit(benchmark::State& state) {
  const auto p = static_cast<Eigen::Index>(state.range(0));
  const rdlasso::Sample sample = make_sample(500, p);
  std::vector<Eigen::Index> all(static_cast<std::size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j) all[static_cast<std::size_t>(j)] = j;
  const rdlasso::KernelSpec kernel(rdlasso::KernelFamily::triangular, 0.2);
  const rdlasso::Design design = rdlasso::build_design(sample, 0.2, kernel, all);
  rdlasso::PenaltyConfig penalty;
  penalty.lambda_rule = rdlasso::LambdaRule::fixed;
  penalty.lambda = rdlasso::plugin_lambda_core(p, design.rows());
  penalty.loadings = rdlasso::default_loadings(design);
  for (auto _ : state) {
    benchmark::DoNotOptimize(rdlasso::fit_local_lasso(design, penalty));
  }
}
BENCHMARK(bm_lasso_fit)->Arg(5)->Arg(50)->Arg(500);

void bm_bandwidth(benchmark::State& state) {
  const rdlasso::Sample sample = make_sample(500, 5);
  const rdlasso::BandwidthOptions options;
  for (auto _ : state) {
    benchmark::DoNotOptimize(rdlasso::mse_optimal_bandwidth(
        sample, {}, Eigen::VectorXd(),
        rdlasso::KernelSpec(rdlasso::KernelFamily::triangular, 1.0), options));
  }
}
BENCHMARK(bm_bandwidth);

void bm_full_pipeline(benchmark::State& state) {
  const auto p = static_cast<Eigen::Index>(state.range(0));
  const rdlasso::Sample sample = make_sample(500, p);
  for (auto _ : state) {
    rdlasso::RddRequest request;
    request.sample = sample;
    request.method = rdlasso::Method::covariate_selection;
    request.bandwidth_mode = rdlasso::BandwidthMode::adaptive;
    benchmark::DoNotOptimize(rdlasso::estimate(request));
  }
}
BENCHMARK(bm_full_pipeline)->Arg(5)->Arg(50);

}  // namespace

BENCHMARK_MAIN();
