#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "carate/assignment.hpp"
#include "carate/bounds.hpp"
#include "carate/crossfit.hpp"
#include "carate/estimators.hpp"
#include "carate/population.hpp"
#include "carate/strata.hpp"

namespace carate {

/// Stratification choice: builtin equal-width split or explicit breakpoints on z1.
struct StrataConfig {
    int builtin = 5;
    std::vector<double> breakpoints;

    int num_strata() const;
    StrataSpec make() const;
};

/// Proportion choice: builtin constant/varying vector, a constant p, or explicit pi.
struct ProportionConfig {
    ProportionMode mode = ProportionMode::Constant;
    std::optional<double> constant;
    std::vector<double> explicit_pi;

    TargetProportions make(int num_strata) const;
    std::string label() const;
};

struct SimConfig {
    std::vector<std::string> dgps;
    StrataConfig strata;
    ProportionConfig proportions;
    Mechanism mechanism = Mechanism::Spbr;
    std::vector<std::size_t> n_grid{500, 1000, 2000, 4000, 8000};
    std::size_t reps = 1000;
    int folds = 2;
    KernelSpec kernel;
    PropensityMode propensity = PropensityMode::TruePi;
    std::uint64_t seed = 20230815;
    unsigned jobs = 1;
    std::size_t bound_draws = kDefaultOracleDraws;

    void validate() const;
};

/// Cell coordinates; the replication seed is a pure function of these.
struct CellKey {
    std::string dgp;
    int num_strata = 5;
    std::string proportions;
    Mechanism mechanism = Mechanism::Spbr;
    std::size_t n = 0;
};

std::uint64_t replication_seed(std::uint64_t master_seed, const CellKey& cell, std::size_t rep);

/// Seeds for the stages of one replication, derived from its replication seed.
struct ReplicationSeeds {
    std::uint64_t population = 0;
    std::uint64_t assignment = 0;
    std::uint64_t folds = 0;

    static ReplicationSeeds from(std::uint64_t rep_seed);
};

/// Estimator order used throughout results: infeasible, feasible, SAT, IMP.
inline constexpr std::array<EstimatorId, 4> kEstimatorOrder{
    EstimatorId::AipwInfeasible, EstimatorId::AipwFeasible, EstimatorId::Sat, EstimatorId::Imp};

struct ReplicationResult {
    std::array<EstimateRecord, 4> estimates{};
    /// Infeasible estimate present (requires the true population).
    bool has_infeasible = true;
    /// Some estimator hit a degenerate stratum; the replication is excluded.
    bool degenerate = false;
};

/// Cross-fits and computes all estimators on one frame. `population` may be
/// null, in which case the infeasible estimator is skipped.
ReplicationResult estimate_all(const ExperimentFrame& frame, const PopulationSpec* population,
                               const TargetProportions& pi, int folds, const KernelSpec& kernel,
                               PropensityMode propensity, std::uint64_t fold_seed);

/// Draw -> stratify -> assign -> realize for one replication seed.
ExperimentFrame simulate_frame(const PopulationSpec& population, const StrataSpec& strata,
                               const TargetProportions& pi, Mechanism mechanism, std::size_t n,
                               const ReplicationSeeds& seeds);

ReplicationResult run_replication(const SimConfig& config, const PopulationSpec& population,
                                  const CellKey& cell, std::size_t rep);

struct CellSummary {
    CellKey cell;
    EstimatorId estimator = EstimatorId::Sat;
    /// Mean of n (beta_hat - beta0)^2 and of sqrt(n) (beta_hat - beta0).
    double mse = 0.0;
    double bias = 0.0;
    double mc_se_mse = 0.0;
    double mc_se_bias = 0.0;
    std::size_t reps_used = 0;
    std::size_t degenerate_count = 0;
    bool unreliable = false;
};

/// Summaries from precomputed sqrt(n)(beta_hat - beta0) residuals.
CellSummary summarize_residuals(const std::vector<double>& scaled_errors);

std::array<CellSummary, 4> run_cell(const SimConfig& config, const PopulationSpec& population,
                                    const CellKey& cell);

struct TableRow {
    std::string dgp;
    std::size_t n = 0;
    std::array<CellSummary, 4> cells;
};

struct DgpBounds {
    std::string dgp;
    BoundReport report;
};

struct SimulationTable {
    int num_strata = 5;
    std::string proportions;
    Mechanism mechanism = Mechanism::Spbr;
    int folds = 2;
    std::vector<TableRow> rows;
    std::vector<DgpBounds> bounds;
};

SimulationTable run_table(const SimConfig& config, const DgpRegistry& registry = DgpRegistry{});

/// One CSV row per estimator x cell; full round-trip precision.
std::string results_csv(const SimulationTable& table);

/// Plain-text table: one row per (dgp, n), MSE and bias per estimator.
std::string render_table(const SimulationTable& table);

}  // namespace carate
