// carate: simulation and estimation of treatment effects under covariate-adaptive
// randomization. Subcommands: simulate, dgp-sample, assign, estimate, bound.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "carate/bounds.hpp"
#include "carate/config.hpp"
#include "carate/csv.hpp"
#include "carate/harness.hpp"

namespace {

using namespace carate;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

std::string timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream out;
    out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return out.str();
}

unsigned default_jobs() {
    if (const char* env = std::getenv("CARATE_JOBS")) {
        try {
            const auto v = csv::parse_int(env);
            if (v >= 1) return static_cast<unsigned>(v);
        } catch (const DataError&) {
        }
        throw ConfigError("CARATE_JOBS must be a positive integer");
    }
    return 1;
}

// Writes to `path`, or stdout when path is empty or "-".
void emit(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << text;
}

csv::Table read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    try {
        return csv::read(in);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
}

// Columns z1..zk, k = number of consecutive z columns present.
Matrix read_covariates(const csv::Table& t, const std::string& path) {
    std::vector<std::size_t> cols;
    for (std::size_t k = 1;; ++k) {
        const auto c = t.find("z" + std::to_string(k));
        if (c == std::string::npos) break;
        cols.push_back(c);
    }
    if (cols.empty()) throw DataError(path + ": no covariate columns z1..zk");
    Matrix z(t.rows.size(), cols.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t k = 0; k < cols.size(); ++k) z(r, k) = t.number(r, cols[k]);
    return z;
}

// Command-line design overrides shared by assign/estimate/bound.
struct DesignFlags {
    std::string config_path;
    std::string dgp;
    std::optional<int> strata;
    std::string proportions;
    std::string mechanism;

    void add_to(CLI::App* app, bool with_mechanism) {
        app->add_option("--config", config_path, "Study configuration file");
        app->add_option("--dgp", dgp, "Builtin population: dgp1..dgp4");
        app->add_option("--strata", strata, "Builtin stratification: 5 or 20");
        app->add_option("--proportions", proportions, "constant | varying");
        if (with_mechanism) app->add_option("--mechanism", mechanism, "spbr | ssra");
    }

    SimConfig resolve() const {
        SimConfig c = config_path.empty() ? SimConfig{} : load_config(config_path);
        if (!dgp.empty()) c.dgps = {dgp};
        if (strata) {
            if (*strata != 5 && *strata != 20) throw ConfigError("--strata must be 5 or 20");
            c.strata.builtin = *strata;
            c.strata.breakpoints.clear();
        }
        if (!proportions.empty()) {
            c.proportions = ProportionConfig{};
            c.proportions.mode = parse_proportion_mode(proportions);
        }
        if (!mechanism.empty()) c.mechanism = parse_mechanism(mechanism);
        return c;
    }
};

const PopulationSpec* single_population(const SimConfig& c, const DgpRegistry& registry,
                                        std::optional<PopulationSpec>& storage) {
    if (c.dgps.empty()) return nullptr;
    if (c.dgps.size() != 1) throw ConfigError("exactly one dgp expected for this command");
    storage = registry.make(c.dgps.front());
    return &*storage;
}

int cmd_simulate(const std::string& config_path, std::optional<std::size_t> reps,
                 std::optional<std::uint64_t> seed, std::optional<unsigned> jobs, bool full,
                 const std::string& out_path, const std::string& table_path) {
    auto config = load_config(config_path);
    config.jobs = default_jobs();
    if (full) {
        std::cerr << "warning: --full runs 5000 replications per cell over n = 500..8000; "
                     "expect hours of runtime\n";
        config.reps = 5000;
        config.n_grid = {500, 1000, 2000, 4000, 8000};
    }
    if (reps) config.reps = *reps;
    if (seed) config.seed = *seed;
    if (jobs) config.jobs = *jobs;
    config.validate();

    nlohmann::ordered_json manifest;
    manifest["tool"] = "carate";
    manifest["version"] = CARATE_VERSION;
    manifest["master_seed"] = config.seed;
    manifest["started"] = timestamp();
    for (const auto& [k, v] : describe_config(config)) manifest["config"][k] = v;

    const auto table = run_table(config);
    emit(out_path, results_csv(table));
    const auto rendered = render_table(table);
    if (table_path.empty())
        std::cout << rendered;
    else
        emit(table_path, rendered);

    manifest["finished"] = timestamp();
    manifest["outputs"]["results"] = out_path;
    if (!table_path.empty()) manifest["outputs"]["table"] = table_path;
    emit(out_path + ".manifest.json", manifest.dump(2) + "\n");
    return 0;
}

int cmd_dgp_sample(const std::string& dgp, std::size_t n, std::uint64_t seed,
                   const std::string& out_path) {
    const auto spec = DgpRegistry{}.make(dgp);
    const auto sample = sample_population(spec, n, ReplicationSeeds::from(seed).population);
    std::ostringstream out;
    std::vector<std::string> header{"y0", "y1"};
    for (std::size_t k = 1; k <= spec.dim; ++k) header.push_back("z" + std::to_string(k));
    csv::write_row(out, header);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::string> row{csv::format_double(sample.y0[i]), csv::format_double(sample.y1[i])};
        for (double v : sample.z.row(i)) row.push_back(csv::format_double(v));
        csv::write_row(out, row);
    }
    emit(out_path, out.str());
    return 0;
}

int cmd_assign(const DesignFlags& flags, const std::string& input, std::uint64_t seed,
               const std::string& out_path) {
    const auto config = flags.resolve();
    const auto strata = config.strata.make();
    const auto pi = config.proportions.make(strata.num_strata);
    const auto t = read_csv_file(input);
    const auto z = read_covariates(t, input);
    std::vector<int> labels;
    try {
        labels = strata.labels(z);
    } catch (const DataError& e) {
        throw DataError(input + ": " + e.what());
    }
    const auto a = assign(config.mechanism, labels, pi, ReplicationSeeds::from(seed).assignment);

    const auto c0 = t.find("y0"), c1 = t.find("y1");
    const bool potentials = c0 != std::string::npos && c1 != std::string::npos;
    std::ostringstream out;
    auto header = t.header;
    header.insert(header.end(), {"stratum", "a"});
    if (potentials) header.push_back("y");
    csv::write_row(out, header);
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        auto row = t.rows[r];
        row.push_back(std::to_string(labels[r]));
        row.push_back(std::to_string(a[r]));
        if (potentials) row.push_back(a[r] == 1 ? row[c1] : row[c0]);
        csv::write_row(out, row);
    }
    emit(out_path, out.str());
    return 0;
}

int cmd_estimate(const DesignFlags& flags, const std::string& input, std::uint64_t seed,
                 const std::string& out_path) {
    const auto config = flags.resolve();
    const auto strata = config.strata.make();
    const auto pi = config.proportions.make(strata.num_strata);
    DgpRegistry registry;
    std::optional<PopulationSpec> storage;
    const PopulationSpec* population = single_population(config, registry, storage);

    const auto t = read_csv_file(input);
    auto z = read_covariates(t, input);
    const auto cy = t.require("y"), ca = t.require("a");
    const auto cs = t.find("stratum");
    std::vector<double> y(t.rows.size());
    std::vector<int> a(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        y[r] = t.number(r, cy);
        const auto v = t.integer(r, ca);
        if (v != 0 && v != 1)
            throw DataError(input + ": line " + std::to_string(r + 2) + ", column 'a': must be 0 or 1");
        a[r] = static_cast<int>(v);
    }
    std::vector<int> labels;
    if (cs != std::string::npos) {
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            const auto s = t.integer(r, cs);
            if (s < 1 || s > strata.num_strata)
                throw DataError(input + ": line " + std::to_string(r + 2) +
                                ", column 'stratum': label out of range");
            labels.push_back(static_cast<int>(s));
        }
    } else {
        labels = strata.labels(z);
    }
    if (population && population->dim != z.cols())
        throw DataError(input + ": covariate dimension does not match " + population->name);
    const auto frame = make_observed_frame(std::move(z), std::move(labels), std::move(a),
                                           std::move(y), strata.num_strata);
    const auto result = estimate_all(frame, population, pi, config.folds, config.kernel,
                                     config.propensity, ReplicationSeeds::from(seed).folds);

    std::ostringstream out;
    csv::write_row(out, {"estimator", "n", "value", "flags"});
    for (std::size_t e = 0; e < 4; ++e) {
        if (e == 0 && !result.has_infeasible) continue;
        const auto& rec = result.estimates[e];
        csv::write_row(out, {to_string(rec.estimator), std::to_string(rec.n),
                             std::isnan(rec.value) ? "nan" : csv::format_double(rec.value),
                             std::to_string(rec.flags)});
    }
    emit(out_path, out.str());
    return 0;
}

int cmd_bound(const DesignFlags& flags, std::size_t draws, std::uint64_t seed,
              const std::string& out_path) {
    auto config = flags.resolve();
    if (config.dgps.empty()) throw ConfigError("missing required key 'population.dgp' (or --dgp)");
    const auto strata = config.strata.make();
    const auto pi = config.proportions.make(strata.num_strata);
    DgpRegistry registry;
    std::ostringstream out;
    csv::write_row(out, {"dgp", "strata", "proportions", "draws", "v_star", "mc_se_vstar", "v_sat",
                         "mc_se_vsat"});
    for (const auto& name : config.dgps) {
        const auto spec = registry.make(name);
        const auto rep = bound_report(spec, strata, pi, draws, seed, default_jobs());
        csv::write_row(out, {name, std::to_string(strata.num_strata), config.proportions.label(),
                             std::to_string(draws), csv::format_double(rep.v_star),
                             csv::format_double(rep.mc_se_vstar), csv::format_double(rep.v_sat),
                             csv::format_double(rep.mc_se_vsat)});
    }
    emit(out_path, out.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carate: ATE estimation under covariate-adaptive randomization"};
    app.set_version_flag("--version", CARATE_VERSION);
    app.require_subcommand(1);

    std::string config_path, out_path, results_path, table_path, input, dgp;
    std::optional<std::size_t> reps;
    std::optional<std::uint64_t> sim_seed;
    std::optional<unsigned> jobs;
    bool full = false;
    std::uint64_t seed = 1;
    std::size_t n = 1000;
    std::size_t draws = kDefaultOracleDraws;
    DesignFlags design;

    auto* sim = app.add_subcommand("simulate", "Run the Monte Carlo tables described by a config");
    sim->add_option("--config", config_path, "Study configuration file")->required();
    sim->add_option("--reps", reps, "Replications per cell");
    sim->add_option("--seed", sim_seed, "Master seed");
    sim->add_option("--jobs", jobs, "Worker threads (default: $CARATE_JOBS or 1)");
    sim->add_flag("--full", full, "Full-scale run: 5000 replications, n = 500..8000");
    sim->add_option("--out", results_path, "Results CSV")->default_val("results.csv");
    sim->add_option("--table", table_path, "Write the rendered table here instead of stdout");

    auto* sample = app.add_subcommand("dgp-sample", "Draw potential outcomes and covariates");
    sample->add_option("--dgp", dgp, "dgp1..dgp4")->required();
    sample->add_option("--n", n, "Sample size")->check(CLI::PositiveNumber);
    sample->add_option("--seed", seed, "Replication seed");
    sample->add_option("--out", out_path, "Output CSV (default stdout)");

    auto* assign_cmd = app.add_subcommand("assign", "Stratify and assign treatment");
    assign_cmd->add_option("--input", input, "CSV with z1..zk (and optionally y0,y1)")->required();
    assign_cmd->add_option("--seed", seed, "Replication seed");
    assign_cmd->add_option("--out", out_path, "Output CSV (default stdout)");
    design.add_to(assign_cmd, true);

    auto* est = app.add_subcommand("estimate", "Compute ATE estimates for an observed frame");
    est->add_option("--input", input, "CSV with y,a,z1..zk[,stratum]")->required();
    est->add_option("--seed", seed, "Replication seed (drives the fold split)");
    est->add_option("--out", out_path, "Output CSV (default stdout)");
    design.add_to(est, false);

    auto* bound = app.add_subcommand("bound", "Efficiency bounds V* and V_SAT by Monte Carlo");
    bound->add_option("--draws", draws, "Monte Carlo draws");
    bound->add_option("--seed", seed, "Seed");
    bound->add_option("--out", out_path, "Output CSV (default stdout)");
    design.add_to(bound, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*sim) return cmd_simulate(config_path, reps, sim_seed, jobs, full, results_path, table_path);
        if (*sample) return cmd_dgp_sample(dgp, n, seed, out_path);
        if (*assign_cmd) return cmd_assign(design, input, seed, out_path);
        if (*est) return cmd_estimate(design, input, seed, out_path);
        if (*bound) return cmd_bound(design, draws, seed, out_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
