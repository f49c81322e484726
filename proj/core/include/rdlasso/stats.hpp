#pragma once

#include <cstdint>
#include <random>

namespace rdlasso {

/// Standard normal quantile (Acklam's rational approximation, refined by one
/// Halley step; absolute error well below 1e-12 on (0, 1)).
double normal_quantile(double prob);

/// Standard normal CDF.
double normal_cdf(double value);

/// SplitMix64 finalizer; used to derive well-mixed engine seeds from
/// (seed, replication) pairs.
std::uint64_t splitmix64(std::uint64_t state);

/// Deterministic per-replication engine: seed xor replication, mixed.
std::mt19937_64 replication_engine(std::uint64_t seed, std::uint64_t replication);

/// Draws that do not depend on unspecified library internals, so output is
/// reproducible for a given engine state.
double draw_uniform(std::mt19937_64& eng);             // (0, 1)
double draw_normal(std::mt19937_64& eng);              // N(0, 1)
double draw_beta_2_4(std::mt19937_64& eng);            // Beta(2, 4)

}  // namespace rdlasso
