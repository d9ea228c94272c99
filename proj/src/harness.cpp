#include "carate/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

#include "carate/csv.hpp"

namespace carate {
namespace {

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Unreliable when more than 1% of replications were excluded.
bool too_many_exclusions(std::size_t excluded, std::size_t reps) { return excluded * 100 > reps; }

}  // namespace

int StrataConfig::num_strata() const {
    return breakpoints.empty() ? builtin : static_cast<int>(breakpoints.size()) - 1;
}

StrataSpec StrataConfig::make() const {
    if (!breakpoints.empty()) return interval_strata(breakpoints, 0);
    return builtin_strata(builtin);
}

TargetProportions ProportionConfig::make(int num_strata) const {
    if (!explicit_pi.empty()) {
        if (static_cast<int>(explicit_pi.size()) != num_strata)
            throw ConfigError("explicit proportions have " + std::to_string(explicit_pi.size()) +
                              " entries but there are " + std::to_string(num_strata) + " strata");
        return TargetProportions(explicit_pi);
    }
    if (constant) return constant_proportions(num_strata, *constant);
    if (mode == ProportionMode::Constant) return constant_proportions(num_strata, 0.5);
    return builtin_proportions(num_strata, mode);
}

std::string ProportionConfig::label() const {
    if (!explicit_pi.empty()) return "explicit";
    if (constant) return "constant:" + csv::format_double(*constant);
    return to_string(mode);
}

void SimConfig::validate() const {
    if (dgps.empty()) throw ConfigError("missing required key 'population.dgp'");
    if (reps < 1) throw ConfigError("reps must be at least 1");
    if (n_grid.empty()) throw ConfigError("n grid must be non-empty");
    for (auto n : n_grid)
        if (n == 0) throw ConfigError("n grid entries must be positive");
    if (folds < 2) throw ConfigError("folds must be at least 2");
    if (bound_draws != 0 && bound_draws < kMinOracleDraws)
        throw ConfigError("bound_draws must be 0 (disabled) or at least " +
                          std::to_string(kMinOracleDraws));
    const auto strata_spec = strata.make();
    proportions.make(strata_spec.num_strata);
}

std::uint64_t replication_seed(std::uint64_t master_seed, const CellKey& cell, std::size_t rep) {
    return derive_seed(master_seed,
                       {fnv1a(cell.dgp), static_cast<std::uint64_t>(cell.num_strata),
                        fnv1a(cell.proportions), static_cast<std::uint64_t>(cell.mechanism),
                        cell.n, rep});
}

ReplicationSeeds ReplicationSeeds::from(std::uint64_t rep_seed) {
    return {derive_seed(rep_seed, {1}), derive_seed(rep_seed, {2}), derive_seed(rep_seed, {3})};
}

ExperimentFrame simulate_frame(const PopulationSpec& population, const StrataSpec& strata,
                               const TargetProportions& pi, Mechanism mechanism, std::size_t n,
                               const ReplicationSeeds& seeds) {
    auto sample = sample_population(population, n, seeds.population);
    auto labels = strata.labels(sample.z);
    auto a = assign(mechanism, labels, pi, seeds.assignment);
    return realize_outcomes(sample, std::move(labels), std::move(a), strata.num_strata);
}

ReplicationResult estimate_all(const ExperimentFrame& frame, const PopulationSpec* population,
                               const TargetProportions& pi, int folds, const KernelSpec& kernel,
                               PropensityMode propensity, std::uint64_t fold_seed) {
    ReplicationResult out;
    const auto plan = make_folds(frame.labels, frame.assignments, frame.num_strata, folds, fold_seed);
    const auto fits = crossfit_mhat(frame, plan, kernel);

    out.has_infeasible = population != nullptr;
    if (population)
        out.estimates[0] = est_aipw_infeasible(frame, *population, pi);
    else
        out.estimates[0] = {EstimatorId::AipwInfeasible, 0.0, frame.size(), 0};

    try {
        out.estimates[1] = est_aipw_feasible(frame, fits, pi, propensity);
    } catch (const DegeneratePropensityError&) {
        out.estimates[1] = {EstimatorId::AipwFeasible, std::nan(""), frame.size(),
                            flags::kDegeneratePropensity};
        out.degenerate = true;
    }
    out.estimates[2] = est_sat(frame);
    if (out.estimates[2].flags != 0) out.degenerate = true;
    out.estimates[3] = est_imp(frame, fits);
    return out;
}

ReplicationResult run_replication(const SimConfig& config, const PopulationSpec& population,
                                  const CellKey& cell, std::size_t rep) {
    const auto strata = config.strata.make();
    const auto pi = config.proportions.make(strata.num_strata);
    const auto seeds = ReplicationSeeds::from(replication_seed(config.seed, cell, rep));
    const auto frame = simulate_frame(population, strata, pi, config.mechanism, cell.n, seeds);
    return estimate_all(frame, &population, pi, config.folds, config.kernel, config.propensity,
                        seeds.folds);
}

CellSummary summarize_residuals(const std::vector<double>& scaled_errors) {
    CellSummary s;
    const auto R = scaled_errors.size();
    s.reps_used = R;
    if (R == 0) return s;
    double sum = 0.0, sum_sq = 0.0;
    for (double e : scaled_errors) {
        sum += e;
        sum_sq += e * e;
    }
    const double r = static_cast<double>(R);
    s.bias = sum / r;
    s.mse = sum_sq / r;
    if (R > 1) {
        double var_e = 0.0, var_sq = 0.0;
        for (double e : scaled_errors) {
            var_e += (e - s.bias) * (e - s.bias);
            var_sq += (e * e - s.mse) * (e * e - s.mse);
        }
        s.mc_se_bias = std::sqrt(var_e / (r - 1.0) / r);
        s.mc_se_mse = std::sqrt(var_sq / (r - 1.0) / r);
    }
    return s;
}

std::array<CellSummary, 4> run_cell(const SimConfig& config, const PopulationSpec& population,
                                    const CellKey& cell) {
    std::vector<ReplicationResult> results(config.reps);
    const unsigned jobs = std::max(1u, std::min<unsigned>(config.jobs, static_cast<unsigned>(config.reps)));
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < config.reps;)
            results[r] = run_replication(config, population, cell, r);
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    // Fold in replication order so the result does not depend on scheduling.
    const double root_n = std::sqrt(static_cast<double>(cell.n));
    std::array<std::vector<double>, 4> errors;
    std::size_t degenerate = 0;
    for (const auto& res : results) {
        if (res.degenerate) {
            ++degenerate;
            continue;
        }
        for (std::size_t e = 0; e < 4; ++e)
            errors[e].push_back(root_n * (res.estimates[e].value - population.true_ate));
    }
    std::array<CellSummary, 4> out;
    for (std::size_t e = 0; e < 4; ++e) {
        out[e] = summarize_residuals(errors[e]);
        out[e].cell = cell;
        out[e].estimator = kEstimatorOrder[e];
        out[e].degenerate_count = degenerate;
        out[e].unreliable = too_many_exclusions(degenerate, config.reps);
    }
    return out;
}

SimulationTable run_table(const SimConfig& config, const DgpRegistry& registry) {
    config.validate();
    const auto strata = config.strata.make();
    const auto pi = config.proportions.make(strata.num_strata);
    SimulationTable table;
    table.num_strata = strata.num_strata;
    table.proportions = config.proportions.label();
    table.mechanism = config.mechanism;
    table.folds = config.folds;
    for (const auto& name : config.dgps) {
        const auto population = registry.make(name);
        for (auto n : config.n_grid) {
            const CellKey cell{name, strata.num_strata, table.proportions, config.mechanism, n};
            table.rows.push_back({name, n, run_cell(config, population, cell)});
        }
        if (config.bound_draws > 0) {
            const auto seed = derive_seed(config.seed, {0xb0, fnv1a(name),
                                                        static_cast<std::uint64_t>(strata.num_strata),
                                                        fnv1a(table.proportions)});
            table.bounds.push_back(
                {name, bound_report(population, strata, pi, config.bound_draws, seed, config.jobs)});
        }
    }
    return table;
}

std::string results_csv(const SimulationTable& table) {
    std::ostringstream out;
    csv::write_row(out, {"dgp", "strata", "proportions", "mechanism", "folds", "n", "estimator",
                         "mse", "bias", "mc_se_mse", "mc_se_bias", "reps_used", "degenerate",
                         "unreliable", "v_star", "v_sat"});
    for (const auto& row : table.rows) {
        std::string v_star, v_sat;
        for (const auto& b : table.bounds)
            if (b.dgp == row.dgp) {
                v_star = csv::format_double(b.report.v_star);
                v_sat = csv::format_double(b.report.v_sat);
            }
        for (const auto& c : row.cells)
            csv::write_row(out, {row.dgp, std::to_string(table.num_strata), table.proportions,
                                 to_string(table.mechanism), std::to_string(table.folds),
                                 std::to_string(row.n), to_string(c.estimator),
                                 csv::format_double(c.mse), csv::format_double(c.bias),
                                 csv::format_double(c.mc_se_mse), csv::format_double(c.mc_se_bias),
                                 std::to_string(c.reps_used), std::to_string(c.degenerate_count),
                                 c.unreliable ? "1" : "0", v_star, v_sat});
    }
    return out.str();
}

std::string render_table(const SimulationTable& table) {
    std::ostringstream out;
    out << "S = " << table.num_strata << ", " << table.proportions << " target assignments, "
        << to_string(table.mechanism) << ", J = " << table.folds << "\n";
    out << std::left << std::setw(6) << "DGP" << std::right << std::setw(7) << "n";
    for (const char* name : {"infeasible", "feasible", "SAT", "IMP"})
        out << std::setw(20) << name;
    out << "\n" << std::setw(13) << "";
    for (int e = 0; e < 4; ++e) out << std::setw(10) << "MSE" << std::setw(10) << "Bias";
    out << "\n";
    out << std::fixed << std::setprecision(3);
    std::string last;
    for (const auto& row : table.rows) {
        out << std::left << std::setw(6) << (row.dgp == last ? "" : row.dgp) << std::right
            << std::setw(7) << row.n;
        last = row.dgp;
        for (const auto& c : row.cells) out << std::setw(10) << c.mse << std::setw(10) << c.bias;
        if (row.cells[0].unreliable) out << "  (unreliable: " << row.cells[0].degenerate_count
                                         << " degenerate)";
        out << "\n";
    }
    if (!table.bounds.empty()) {
        out << "\nefficiency bounds\n";
        for (const auto& b : table.bounds)
            out << std::left << std::setw(6) << b.dgp << std::right << "  V* = " << b.report.v_star
                << " (se " << b.report.mc_se_vstar << ")  V_SAT = " << b.report.v_sat << " (se "
                << b.report.mc_se_vsat << ")\n";
    }
    return out.str();
}

}  // namespace carate
