#include "carate/strata.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "carate/core.hpp"

namespace carate {

std::vector<int> StrataSpec::labels(const Matrix& z) const {
    std::vector<int> out(z.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        const int s = classify(z.row(i));
        if (s < 1 || s > num_strata)
            throw DataError("stratum classifier returned label " + std::to_string(s) +
                            " outside 1.." + std::to_string(num_strata));
        out[i] = s;
    }
    return out;
}

StrataSpec interval_strata(std::vector<double> breakpoints, std::size_t coordinate) {
    if (breakpoints.size() < 2) throw ConfigError("strata breakpoints need at least two values");
    if (!std::is_sorted(breakpoints.begin(), breakpoints.end()) ||
        std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end())
        throw ConfigError("strata breakpoints must be strictly increasing");

    StrataSpec spec;
    spec.num_strata = static_cast<int>(breakpoints.size() - 1);
    std::ostringstream desc;
    desc << "intervals on z" << coordinate + 1 << " with " << spec.num_strata << " strata";
    spec.description = desc.str();
    spec.classify = [b = std::move(breakpoints), coordinate](std::span<const double> z) {
        if (coordinate >= z.size()) throw DataError("covariate vector too short for stratification");
        const double x = z[coordinate];
        if (!(x >= b.front() && x <= b.back()))
            throw OutOfSupportError("covariate value outside stratification support");
        if (x == b.back()) return static_cast<int>(b.size() - 1);
        auto it = std::upper_bound(b.begin(), b.end(), x);
        return static_cast<int>(it - b.begin());
    };
    return spec;
}

StrataSpec uniform_strata(int num_strata) {
    if (num_strata < 1) throw ConfigError("number of strata must be positive");
    std::vector<double> b(static_cast<std::size_t>(num_strata) + 1);
    for (int s = 0; s <= num_strata; ++s)
        b[s] = static_cast<double>(2 * s - num_strata) / num_strata;
    b.back() = 1.0;
    return interval_strata(std::move(b), 0);
}

StrataSpec builtin_strata(int num_strata) {
    if (num_strata != 5 && num_strata != 20)
        throw ConfigError("builtin strata support S = 5 or S = 20, got " + std::to_string(num_strata));
    return uniform_strata(num_strata);
}

TargetProportions::TargetProportions(std::vector<double> pi) : pi_(std::move(pi)) {
    if (pi_.empty()) throw ConfigError("target proportions must be non-empty");
    for (double p : pi_)
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("target proportions must lie strictly in (0,1)");
}

TargetProportions builtin_proportions(int num_strata, ProportionMode mode) {
    if (num_strata != 5 && num_strata != 20)
        throw ConfigError("builtin proportions support S = 5 or S = 20");
    if (mode == ProportionMode::Constant) return constant_proportions(num_strata, 0.5);
    std::vector<double> pi(static_cast<std::size_t>(num_strata));
    for (int s = 0; s < num_strata; ++s)
        // (0.3, ..., 0.7) in steps of 0.1; (0.325, ..., 0.8) in steps of 0.025.
        pi[s] = num_strata == 5 ? (3.0 + s) / 10.0 : (13.0 + s) / 40.0;
    return TargetProportions(std::move(pi));
}

TargetProportions constant_proportions(int num_strata, double p) {
    if (num_strata < 1) throw ConfigError("number of strata must be positive");
    return TargetProportions(std::vector<double>(static_cast<std::size_t>(num_strata), p));
}

ProportionMode parse_proportion_mode(const std::string& s) {
    if (s == "constant") return ProportionMode::Constant;
    if (s == "varying") return ProportionMode::Varying;
    throw ConfigError("unknown proportion mode '" + s + "' (expected constant|varying)");
}

std::string to_string(ProportionMode m) {
    return m == ProportionMode::Constant ? "constant" : "varying";
}

StratumCounts stratum_counts(std::span<const int> labels, int num_strata,
                             std::optional<std::span<const int>> assignments) {
    if (num_strata < 1) throw ConfigError("number of strata must be positive");
    if (assignments && assignments->size() != labels.size())
        throw DataError("labels and assignments differ in length");
    StratumCounts c;
    const auto S = static_cast<std::size_t>(num_strata);
    c.total.assign(S, 0);
    c.treated.assign(S, 0);
    c.control.assign(S, 0);
    c.has_arms = assignments.has_value();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int s = labels[i];
        if (s < 1 || s > num_strata)
            throw DataError("stratum label " + std::to_string(s) + " out of range at unit " +
                            std::to_string(i));
        ++c.total[s - 1];
        if (assignments) {
            const int a = (*assignments)[i];
            if (a == 1)
                ++c.treated[s - 1];
            else if (a == 0)
                ++c.control[s - 1];
            else
                throw DataError("assignment must be 0 or 1 at unit " + std::to_string(i));
        }
    }
    return c;
}

std::size_t treated_quota(double p, std::size_t n) {
    const double x = p * static_cast<double>(n);
    return static_cast<std::size_t>(std::floor(x + 1e-9 * (1.0 + x)));
}

}  // namespace carate
