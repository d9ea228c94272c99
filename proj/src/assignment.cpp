#include "carate/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace carate {
namespace {

void check_labels(std::span<const int> labels, const TargetProportions& pi) {
    const int S = static_cast<int>(pi.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] < 1 || labels[i] > S)
            throw DataError("stratum label " + std::to_string(labels[i]) + " at unit " +
                            std::to_string(i) + " has no target proportion");
}

enum : std::uint64_t { kSsraStream = 0x55, kSpbrStream = 0x5b };

double quantile(std::vector<double> v, double q) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

Mechanism parse_mechanism(const std::string& s) {
    if (s == "ssra") return Mechanism::Ssra;
    if (s == "spbr") return Mechanism::Spbr;
    throw ConfigError("unknown mechanism '" + s + "' (expected ssra|spbr)");
}

std::string to_string(Mechanism m) { return m == Mechanism::Ssra ? "ssra" : "spbr"; }

std::vector<int> assign_ssra(std::span<const int> labels, const TargetProportions& pi,
                             std::uint64_t seed) {
    check_labels(labels, pi);
    const auto S = pi.size();
    std::vector<Engine> streams;
    streams.reserve(S);
    for (std::size_t s = 1; s <= S; ++s) streams.push_back(make_engine(derive_seed(seed, {kSsraStream, s})));

    std::vector<int> a(labels.size());
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int s = labels[i];
        a[i] = unif(streams[s - 1]) < pi(s) ? 1 : 0;
    }
    return a;
}

std::vector<int> assign_spbr(std::span<const int> labels, const TargetProportions& pi,
                             std::uint64_t seed) {
    check_labels(labels, pi);
    const auto S = pi.size();
    std::vector<std::vector<std::size_t>> members(S);
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i] - 1].push_back(i);

    std::vector<int> a(labels.size(), 0);
    for (std::size_t s = 1; s <= S; ++s) {
        auto& idx = members[s - 1];
        if (idx.empty()) continue;
        Engine eng = make_engine(derive_seed(seed, {kSpbrStream, s}));
        std::shuffle(idx.begin(), idx.end(), eng);
        const auto quota = treated_quota(pi(static_cast<int>(s)), idx.size());
        for (std::size_t r = 0; r < quota; ++r) a[idx[r]] = 1;
    }
    return a;
}

std::vector<int> assign(Mechanism mechanism, std::span<const int> labels,
                        const TargetProportions& pi, std::uint64_t seed) {
    return mechanism == Mechanism::Ssra ? assign_ssra(labels, pi, seed)
                                        : assign_spbr(labels, pi, seed);
}

double mechanism_mass(Mechanism mechanism, std::span<const int> a, std::span<const int> s,
                      const TargetProportions& pi) {
    if (a.size() != s.size()) throw DataError("assignment and label vectors differ in length");
    check_labels(s, pi);
    if (mechanism == Mechanism::Ssra) {
        double p = 1.0;
        for (std::size_t i = 0; i < a.size(); ++i) p *= pi.arm(a[i], s[i]);
        return p;
    }
    const auto counts = stratum_counts(s, static_cast<int>(pi.size()), a);
    double p = 1.0;
    for (int st = 1; st <= static_cast<int>(pi.size()); ++st) {
        const auto n = counts.n(st);
        const auto k = counts.n(1, st);
        if (k != treated_quota(pi(st), n)) return 0.0;
        // 1 / C(n, k)
        double inv = 1.0;
        for (std::size_t j = 1; j <= k; ++j)
            inv *= static_cast<double>(j) / static_cast<double>(n - k + j);
        p *= inv;
    }
    return p;
}

ExperimentFrame realize_outcomes(const PotentialSample& sample, std::vector<int> labels,
                                 std::vector<int> assignments, int num_strata) {
    const auto n = sample.size();
    if (sample.y1.size() != n || sample.z.rows() != n || labels.size() != n ||
        assignments.size() != n)
        throw DataError("realize_outcomes: length mismatch");
    ExperimentFrame f;
    f.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (assignments[i] != 0 && assignments[i] != 1)
            throw DataError("assignment must be 0 or 1 at unit " + std::to_string(i));
        f.y[i] = assignments[i] == 1 ? sample.y1[i] : sample.y0[i];
    }
    f.z = sample.z;
    f.y0 = sample.y0;
    f.y1 = sample.y1;
    f.labels = std::move(labels);
    f.assignments = std::move(assignments);
    f.num_strata = num_strata;
    stratum_counts(f.labels, num_strata, std::span<const int>(f.assignments));
    return f;
}

ExperimentFrame make_observed_frame(Matrix z, std::vector<int> labels, std::vector<int> assignments,
                                    std::vector<double> y, int num_strata) {
    const auto n = y.size();
    if (z.rows() != n || labels.size() != n || assignments.size() != n)
        throw DataError("observed frame: length mismatch");
    stratum_counts(labels, num_strata, std::span<const int>(assignments));
    ExperimentFrame f;
    f.z = std::move(z);
    f.labels = std::move(labels);
    f.assignments = std::move(assignments);
    f.y = std::move(y);
    f.num_strata = num_strata;
    return f;
}

std::vector<BalanceRow> balance_diagnostic(Mechanism mechanism, const PopulationSpec& population,
                                           const StrataSpec& strata, const TargetProportions& pi,
                                           std::span<const std::size_t> n_grid, std::size_t reps,
                                           std::uint64_t seed) {
    if (!std::is_sorted(n_grid.begin(), n_grid.end()))
        throw ConfigError("balance_diagnostic: n_grid must be increasing");
    std::vector<BalanceRow> rows;
    for (std::size_t n : n_grid) {
        std::vector<double> scaled;
        scaled.reserve(reps);
        BalanceRow row;
        row.n = n;
        for (std::size_t r = 0; r < reps; ++r) {
            const auto rep_seed = derive_seed(seed, {n, r});
            const auto sample = sample_population(population, n, derive_seed(rep_seed, {1}));
            const auto labels = strata.labels(sample.z);
            const auto a = assign(mechanism, labels, pi, derive_seed(rep_seed, {2}));
            const auto c = stratum_counts(labels, strata.num_strata, std::span<const int>(a));
            double dev = 0.0;
            std::size_t min_n = n;
            for (int s = 1; s <= strata.num_strata; ++s) {
                if (c.n(s) == 0) continue;
                min_n = std::min(min_n, c.n(s));
                dev = std::max(dev, std::abs(static_cast<double>(c.n(1, s)) / c.n(s) - pi(s)));
            }
            scaled.push_back(std::sqrt(static_cast<double>(n)) * dev);
            row.max_deviation = std::max(row.max_deviation, dev);
            row.max_deviation_times_min_n =
                std::max(row.max_deviation_times_min_n, dev * static_cast<double>(min_n));
        }
        row.q50 = quantile(scaled, 0.5);
        row.q90 = quantile(scaled, 0.9);
        row.q99 = quantile(scaled, 0.99);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace carate
