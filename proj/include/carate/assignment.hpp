#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "carate/population.hpp"
#include "carate/strata.hpp"

namespace carate {

enum class Mechanism { Ssra, Spbr };

Mechanism parse_mechanism(const std::string& s);
std::string to_string(Mechanism m);

/// Simple stratified random assignment: independent Bernoulli(pi(S_i)).
std::vector<int> assign_ssra(std::span<const int> labels, const TargetProportions& pi,
                             std::uint64_t seed);

/// Stratified permuted block randomization: in every stratum exactly
/// floor(pi(s) N(s)) units are treated, the treated subset uniform over all
/// subsets of that size.
std::vector<int> assign_spbr(std::span<const int> labels, const TargetProportions& pi,
                             std::uint64_t seed);

/// Dispatches on mechanism. The result depends on (labels, pi, seed) only.
std::vector<int> assign(Mechanism mechanism, std::span<const int> labels,
                        const TargetProportions& pi, std::uint64_t seed);

/// Exact conditional mass Pr(A = a | S = s) of the mechanism. Intended for small n.
double mechanism_mass(Mechanism mechanism, std::span<const int> a, std::span<const int> s,
                      const TargetProportions& pi);

/// One realized experiment. y0/y1 are empty for frames read back from observed data.
struct ExperimentFrame {
    Matrix z;
    std::vector<int> labels;
    std::vector<int> assignments;
    std::vector<double> y;
    std::vector<double> y0;
    std::vector<double> y1;
    int num_strata = 1;

    std::size_t size() const { return y.size(); }
    bool has_potentials() const { return !y0.empty(); }
};

/// Y = Y(1) A + Y(0) (1 - A).
ExperimentFrame realize_outcomes(const PotentialSample& sample, std::vector<int> labels,
                                 std::vector<int> assignments, int num_strata);

/// Observed-data frame with consistency checks (lengths, labels, binary A).
ExperimentFrame make_observed_frame(Matrix z, std::vector<int> labels, std::vector<int> assignments,
                                    std::vector<double> y, int num_strata);

struct BalanceRow {
    std::size_t n = 0;
    /// Quantiles of sqrt(n) * max_s |N(1,s)/N(s) - pi(s)| across replications.
    double q50 = 0.0;
    double q90 = 0.0;
    double q99 = 0.0;
    /// Largest unscaled deviation, and the largest deviation relative to 1/min_s N(s).
    double max_deviation = 0.0;
    double max_deviation_times_min_n = 0.0;
};

std::vector<BalanceRow> balance_diagnostic(Mechanism mechanism, const PopulationSpec& population,
                                           const StrataSpec& strata, const TargetProportions& pi,
                                           std::span<const std::size_t> n_grid, std::size_t reps,
                                           std::uint64_t seed);

}  // namespace carate
