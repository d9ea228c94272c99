#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "carate/core.hpp"

namespace carate {

/// Stratification map S: R^k -> {1..num_strata}. Labels are 1-based.
struct StrataSpec {
    int num_strata = 1;
    std::function<int(std::span<const double>)> classify;
    std::string description;

    std::vector<int> labels(const Matrix& z) const;
};

/// Intervals [b_0,b_1), [b_1,b_2), ..., [b_{S-1}, b_S] on one covariate coordinate.
/// The last interval is closed on the right; points outside [b_0, b_S] throw
/// OutOfSupportError.
StrataSpec interval_strata(std::vector<double> breakpoints, std::size_t coordinate = 0);

/// Equal-width split of [-1,1] on the first coordinate into `num_strata` segments.
StrataSpec uniform_strata(int num_strata);

/// The two stratifications used in the simulation tables (S = 5 or 20).
StrataSpec builtin_strata(int num_strata);

/// Target treatment shares pi(s), one per stratum, each strictly inside (0,1).
class TargetProportions {
public:
    TargetProportions() = default;
    explicit TargetProportions(std::vector<double> pi);

    std::size_t size() const { return pi_.size(); }
    /// pi(s) for a 1-based stratum label.
    double operator()(int stratum) const { return pi_[static_cast<std::size_t>(stratum - 1)]; }
    /// pi_a(s) = pi(s)^a (1 - pi(s))^(1-a).
    double arm(int a, int stratum) const {
        const double p = (*this)(stratum);
        return a == 1 ? p : 1.0 - p;
    }
    const std::vector<double>& values() const { return pi_; }

private:
    std::vector<double> pi_;
};

enum class ProportionMode { Constant, Varying };

TargetProportions builtin_proportions(int num_strata, ProportionMode mode);
TargetProportions constant_proportions(int num_strata, double p);

ProportionMode parse_proportion_mode(const std::string& s);
std::string to_string(ProportionMode m);

/// N_n(s) and, when assignments are supplied, N_n(a,s). Index by 1-based stratum.
struct StratumCounts {
    std::vector<std::size_t> total;
    std::vector<std::size_t> treated;
    std::vector<std::size_t> control;
    bool has_arms = false;

    std::size_t n(int s) const { return total[static_cast<std::size_t>(s - 1)]; }
    std::size_t n(int a, int s) const {
        const auto& v = a == 1 ? treated : control;
        return v[static_cast<std::size_t>(s - 1)];
    }
};

StratumCounts stratum_counts(std::span<const int> labels, int num_strata,
                             std::optional<std::span<const int>> assignments = std::nullopt);

/// floor(p * n), tolerant to the representation error of decimal proportions
/// (0.575 * 40 must give 23, not 22).
std::size_t treated_quota(double p, std::size_t n);

}  // namespace carate
