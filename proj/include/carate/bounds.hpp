#pragma once

#include <cstddef>
#include <cstdint>

#include "carate/population.hpp"
#include "carate/strata.hpp"

namespace carate {

/// Monte Carlo estimate of a scalar with its standard error.
struct OracleEstimate {
    double value = 0.0;
    double mc_se = 0.0;
    std::size_t draws = 0;
};

struct BoundReport {
    double v_star = 0.0;
    double v_sat = 0.0;
    std::size_t mc_draws = 0;
    double mc_se_vstar = 0.0;
    double mc_se_vsat = 0.0;
};

inline constexpr std::size_t kMinOracleDraws = 10'000;
inline constexpr std::size_t kDefaultOracleDraws = 1'000'000;

/// Efficiency bound with covariates:
/// E[ sigma1^2/pi(S) + sigma0^2/(1-pi(S)) + (m1 - m0 - beta0)^2 ] over Z.
/// Uses the population's analytic conditional variances; mc_se is the SE of the mean.
OracleEstimate speb_oracle(const PopulationSpec& spec, const StrataSpec& strata,
                           const TargetProportions& pi, std::size_t draws, std::uint64_t seed,
                           unsigned jobs = 1);

/// Stratum-only bound: conditional moments of Y(a) given S estimated by
/// stratified simulation (noise included). mc_se from batch means over 32 batches.
/// Throws DataError when some stratum receives no draws.
OracleEstimate vsat_oracle(const PopulationSpec& spec, const StrataSpec& strata,
                           const TargetProportions& pi, std::size_t draws, std::uint64_t seed,
                           unsigned jobs = 1);

BoundReport bound_report(const PopulationSpec& spec, const StrataSpec& strata,
                         const TargetProportions& pi, std::size_t draws, std::uint64_t seed,
                         unsigned jobs = 1);

}  // namespace carate
