#include "carate/config.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "carate/csv.hpp"

namespace carate {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    for (std::string item; std::getline(ss, item, ',');) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty list entry");
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

double to_double(const std::string& v) {
    try {
        return csv::parse_double(v);
    } catch (const DataError&) {
        throw ConfigError("expected a number, got '" + v + "'");
    }
}

unsigned long long to_count(const std::string& v) {
    long long x = 0;
    try {
        x = csv::parse_int(v);
    } catch (const DataError&) {
        throw ConfigError("expected an integer, got '" + v + "'");
    }
    if (x < 0) throw ConfigError("expected a non-negative integer, got '" + v + "'");
    return static_cast<unsigned long long>(x);
}

std::vector<double> to_doubles(const std::string& v) {
    std::vector<double> out;
    for (const auto& s : split_list(v)) out.push_back(to_double(s));
    return out;
}

using Setter = std::function<void(SimConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
    static const std::map<std::string, Setter> table = {
        {"population.dgp", [](SimConfig& c, const std::string& v) { c.dgps = split_list(v); }},
        {"strata.builtin",
         [](SimConfig& c, const std::string& v) {
             const auto s = static_cast<int>(to_count(v));
             if (s != 5 && s != 20) throw ConfigError("strata.builtin must be 5 or 20");
             c.strata.builtin = s;
         }},
        {"strata.breakpoints",
         [](SimConfig& c, const std::string& v) { c.strata.breakpoints = to_doubles(v); }},
        {"strata.proportions",
         [](SimConfig& c, const std::string& v) { c.proportions.mode = parse_proportion_mode(v); }},
        {"strata.constant_pi",
         [](SimConfig& c, const std::string& v) { c.proportions.constant = to_double(v); }},
        {"strata.pi",
         [](SimConfig& c, const std::string& v) { c.proportions.explicit_pi = to_doubles(v); }},
        {"assignment.mechanism",
         [](SimConfig& c, const std::string& v) { c.mechanism = parse_mechanism(v); }},
        {"crossfit.folds",
         [](SimConfig& c, const std::string& v) {
             const auto j = to_count(v);
             if (j < 2) throw ConfigError("folds must be at least 2");
             c.folds = static_cast<int>(j);
         }},
        {"crossfit.bandwidth_const",
         [](SimConfig& c, const std::string& v) {
             if (v == "default") {
                 c.kernel.bandwidth_const = 0.0;
                 return;
             }
             const double x = to_double(v);
             if (!(x > 0.0)) throw ConfigError("bandwidth_const must be positive");
             c.kernel.bandwidth_const = x;
         }},
        {"crossfit.bandwidth_size",
         [](SimConfig& c, const std::string& v) { c.kernel.size_rule = parse_bandwidth_size(v); }},
        {"crossfit.kernel_radius",
         [](SimConfig& c, const std::string& v) {
             const double x = to_double(v);
             if (!(x > 0.0)) throw ConfigError("kernel_radius must be positive");
             c.kernel.kernel.radius = x;
         }},
        {"crossfit.kernel_norm",
         [](SimConfig& c, const std::string& v) { c.kernel.kernel.norm = parse_kernel_norm(v); }},
        {"estimators.propensity",
         [](SimConfig& c, const std::string& v) { c.propensity = parse_propensity_mode(v); }},
        {"harness.n",
         [](SimConfig& c, const std::string& v) {
             c.n_grid.clear();
             for (const auto& s : split_list(v)) c.n_grid.push_back(to_count(s));
         }},
        {"harness.reps", [](SimConfig& c, const std::string& v) { c.reps = to_count(v); }},
        {"harness.seed", [](SimConfig& c, const std::string& v) { c.seed = to_count(v); }},
        {"harness.jobs",
         [](SimConfig& c, const std::string& v) { c.jobs = static_cast<unsigned>(to_count(v)); }},
        {"harness.bound_draws",
         [](SimConfig& c, const std::string& v) { c.bound_draws = to_count(v); }},
    };
    return table;
}

std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + v[i];
    return out;
}

template <class T, class F>
std::string join_with(const std::vector<T>& v, F f) {
    std::vector<std::string> s;
    for (const auto& x : v) s.push_back(f(x));
    return join(s);
}

}  // namespace

SimConfig parse_config(std::istream& in, const std::string& source) {
    SimConfig config;
    std::string section;
    std::string raw;
    std::map<std::string, int> seen;
    for (int lineno = 1; std::getline(in, raw); ++lineno) {
        const auto where = source + ":" + std::to_string(lineno) + ": ";
        auto cut = raw.find_first_of("#;");
        const auto line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(where + "malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            static const char* known[] = {"population", "strata", "assignment", "crossfit",
                                          "estimators", "harness"};
            if (std::find(std::begin(known), std::end(known), section) == std::end(known))
                throw ConfigError(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
        if (section.empty()) throw ConfigError(where + "key outside of any [section]");
        const auto key = section + "." + trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto it = setters().find(key);
        if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
        if (seen.count(key))
            throw ConfigError(where + "duplicate key '" + key + "' (first set on line " +
                              std::to_string(seen[key]) + ")");
        seen[key] = lineno;
        if (value.empty()) throw ConfigError(where + "empty value for '" + key + "'");
        try {
            it->second(config, value);
        } catch (const ConfigError& e) {
            throw ConfigError(where + key + ": " + e.what());
        }
    }
    if (seen.count("strata.builtin") && seen.count("strata.breakpoints"))
        throw ConfigError(source + ": strata.builtin and strata.breakpoints are mutually exclusive");
    if (seen.count("strata.constant_pi") && seen.count("strata.pi"))
        throw ConfigError(source + ": strata.constant_pi and strata.pi are mutually exclusive");
    return config;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    return parse_config(in, path);
}

std::vector<std::pair<std::string, std::string>> describe_config(const SimConfig& c) {
    using csv::format_double;
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("population.dgp", join(c.dgps));
    if (c.strata.breakpoints.empty())
        out.emplace_back("strata.builtin", std::to_string(c.strata.builtin));
    else
        out.emplace_back("strata.breakpoints", join_with(c.strata.breakpoints, format_double));
    out.emplace_back("strata.proportions", c.proportions.label());
    if (!c.proportions.explicit_pi.empty())
        out.emplace_back("strata.pi", join_with(c.proportions.explicit_pi, format_double));
    out.emplace_back("assignment.mechanism", to_string(c.mechanism));
    out.emplace_back("crossfit.folds", std::to_string(c.folds));
    out.emplace_back("crossfit.bandwidth_const",
                     c.kernel.bandwidth_const > 0 ? format_double(c.kernel.bandwidth_const) : "default");
    out.emplace_back("crossfit.bandwidth_size", to_string(c.kernel.size_rule));
    out.emplace_back("crossfit.kernel_radius", format_double(c.kernel.kernel.radius));
    out.emplace_back("crossfit.kernel_norm", to_string(c.kernel.kernel.norm));
    out.emplace_back("estimators.propensity", to_string(c.propensity));
    out.emplace_back("harness.n", join_with(c.n_grid, [](std::size_t n) { return std::to_string(n); }));
    out.emplace_back("harness.reps", std::to_string(c.reps));
    out.emplace_back("harness.seed", std::to_string(c.seed));
    out.emplace_back("harness.jobs", std::to_string(c.jobs));
    out.emplace_back("harness.bound_draws", std::to_string(c.bound_draws));
    return out;
}

}  // namespace carate
