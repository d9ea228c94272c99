#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <vector>

#include "carate/crossfit.hpp"
#include "carate/harness.hpp"

using namespace carate;

namespace {

Matrix column(std::vector<double> v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

ExperimentFrame dgp_frame(BuiltinDgp id, std::size_t n, Mechanism mech, std::uint64_t seed) {
    const auto spec = make_builtin_dgp(id);
    const auto strata = builtin_strata(5);
    const auto pi = builtin_proportions(5, ProportionMode::Constant);
    return simulate_frame(spec, strata, pi, mech, n, ReplicationSeeds::from(seed));
}

// Direct evaluation of one fit entry from its definition.
double oracle_fit(const ExperimentFrame& f, const FoldPlan& plan, std::size_t i, int a,
                  const KernelSpec& k) {
    const auto gamma = estimation_set(plan, i, a);
    if (gamma.empty()) return 0.0;
    Matrix tz(gamma.size(), f.z.cols());
    std::vector<double> ty;
    for (std::size_t r = 0; r < gamma.size(); ++r) {
        for (std::size_t d = 0; d < f.z.cols(); ++d) tz(r, d) = f.z(gamma[r], d);
        ty.push_back(f.y[gamma[r]]);
    }
    const std::size_t m = k.size_rule == BandwidthSize::SampleSize ? f.size() : gamma.size();
    return nw_predict(ty, tz, f.z.row(i), k.bandwidth(m, f.z.cols()), k.kernel);
}

}  // namespace

TEST_CASE("fold size law") {
    CHECK(fold_size(7, 3, 1) == 2);
    CHECK(fold_size(7, 3, 2) == 2);
    CHECK(fold_size(7, 3, 3) == 3);
    CHECK(fold_size(10, 2, 1) == 5);
    CHECK(fold_size(10, 2, 2) == 5);
    CHECK(fold_size(1, 2, 1) == 0);
    CHECK(fold_size(1, 2, 2) == 1);
}

TEST_CASE("make_folds obeys the size law and partitions every group") {
    std::mt19937_64 eng(31);
    for (int r = 0; r < 400; ++r) {
        const int J = 2 + static_cast<int>(r % 5);
        const int S = 1 + static_cast<int>(eng() % 5);
        const std::size_t n = eng() % 150;
        std::vector<int> labels(n), a(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = 1 + static_cast<int>(eng() % S);
            a[i] = static_cast<int>(eng() % 2);
        }
        const auto plan = make_folds(labels, a, S, J, eng());
        REQUIRE(plan.folds() == J);
        const auto counts = stratum_counts(labels, S, std::span<const int>(a));
        std::vector<int> seen(n, 0);
        for (int arm = 0; arm <= 1; ++arm)
            for (int s = 1; s <= S; ++s)
                for (int j = 1; j <= J; ++j) {
                    const auto g = plan.group(arm, s, j);
                    REQUIRE(g.size() == fold_size(counts.n(arm, s), J, j));
                    for (std::size_t i : g) {
                        CHECK(labels[i] == s);
                        CHECK(a[i] == arm);
                        CHECK(plan.fold_of(i) == j);
                        ++seen[i];
                    }
                }
        for (int v : seen) CHECK(v == 1);
        for (int s = 1; s <= S; ++s)
            for (int j = 1; j <= J; ++j) {
                const auto combined = plan.stratum_fold(s, j);
                CHECK(combined.size() == plan.group(0, s, j).size() + plan.group(1, s, j).size());
                CHECK(std::is_sorted(combined.begin(), combined.end()));
            }
    }
}

TEST_CASE("fold plans are seeded and reject bad input") {
    const std::vector<int> labels{1, 1, 1, 1, 2, 2, 2, 2};
    const std::vector<int> a{0, 1, 0, 1, 0, 1, 0, 1};
    CHECK(make_folds(labels, a, 2, 2, 5).fold_of_unit() == make_folds(labels, a, 2, 2, 5).fold_of_unit());
    CHECK_THROWS_AS(make_folds(labels, a, 2, 1, 5), ConfigError);
    CHECK_THROWS_AS(FoldPlan(labels, a, 2, 2, {1, 1, 1, 1, 1, 1, 1, 1}), DataError);
    CHECK_NOTHROW(FoldPlan(labels, a, 2, 2, {1, 1, 2, 2, 1, 1, 2, 2}));
}

TEST_CASE("estimation sets") {
    const std::vector<int> labels(12, 1);
    std::vector<int> a(12);
    for (std::size_t i = 0; i < 12; ++i) a[i] = static_cast<int>(i % 2);
    const auto plan = make_folds(labels, a, 1, 3, 8);
    for (std::size_t i = 0; i < 12; ++i)
        for (int arm = 0; arm <= 1; ++arm) {
            const auto g = estimation_set(plan, i, arm);
            std::set<std::size_t> expected;
            for (int j = 1; j <= 3; ++j)
                if (j != plan.fold_of(i))
                    for (std::size_t u : plan.group(arm, 1, j)) expected.insert(u);
            CHECK(std::set<std::size_t>(g.begin(), g.end()) == expected);
            for (std::size_t u : g) {
                CHECK(u != i);
                CHECK(a[u] == arm);
                CHECK(labels[u] == labels[i]);
            }
        }
}

TEST_CASE("nadaraya-watson with the uniform kernel") {
    const auto z = column({0.0, 0.2, 0.9});
    const std::vector<double> y{2.0, 4.0, 10.0};
    CHECK(nw_predict(y, z, std::vector<double>{0.1}, 0.25) == doctest::Approx(3.0));
    CHECK(nw_predict(y, z, std::vector<double>{0.5}, 0.25) == 0.0);
    CHECK(nw_predict(std::vector<double>{}, Matrix(0, 1), std::vector<double>{0.5}, 0.25) == 0.0);
    CHECK_THROWS_AS(nw_predict(y, z, std::vector<double>{0.1}, 0.0), ConfigError);

    SUBCASE("box and ball windows differ off the axes") {
        Matrix z2(1, 2);
        z2(0, 0) = 0.8;
        z2(0, 1) = 0.8;
        const std::vector<double> y2{7.0};
        const std::vector<double> origin{0.0, 0.0};
        CHECK(nw_predict(y2, z2, origin, 1.0, {1.0, KernelNorm::Max}) == 7.0);
        CHECK(nw_predict(y2, z2, origin, 1.0, {1.0, KernelNorm::Euclidean}) == 0.0);
    }
    SUBCASE("constant outcomes and range bound") {
        std::mt19937_64 eng(6);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        Matrix tz(200, 1);
        std::vector<double> c(200, 2.5), ty(200);
        for (std::size_t i = 0; i < 200; ++i) {
            tz(i, 0) = u(eng);
            ty[i] = u(eng) * 10.0;
        }
        for (int r = 0; r < 200; ++r) {
            const std::vector<double> q{u(eng)};
            const double h = 0.05 + 0.2 * (u(eng) + 1.0);
            const double v = nw_predict(c, tz, q, h);
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t i = 0; i < 200; ++i)
                if (std::abs(tz(i, 0) - q[0]) <= h) {
                    lo = std::min(lo, ty[i]);
                    hi = std::max(hi, ty[i]);
                }
            if (std::isfinite(lo)) {
                CHECK(v == doctest::Approx(2.5));
                const double w = nw_predict(ty, tz, q, h);
                CHECK(w >= lo - 1e-12);
                CHECK(w <= hi + 1e-12);
            } else {
                CHECK(v == 0.0);
            }
        }
    }
}

TEST_CASE("bandwidth rule") {
    CHECK(default_bandwidth_const(1) == doctest::Approx(1.0 / std::sqrt(3.0)));
    CHECK(default_bandwidth_const(5) == 3.0);
    CHECK(default_bandwidth_const(2) == 1.0);
    KernelSpec k;
    CHECK(k.bandwidth(8000, 1) == doctest::Approx(std::pow(8000.0, -0.2) / std::sqrt(3.0)));
    CHECK(k.bandwidth(1000, 5) == doctest::Approx(3.0 * std::pow(1000.0, -1.0 / 9.0)));
    k.bandwidth_const = 2.0;
    CHECK(k.bandwidth(32, 1) == doctest::Approx(2.0 * std::pow(32.0, -0.2)));
    CHECK_THROWS_AS(k.bandwidth(0, 1), ConfigError);
    CHECK(parse_kernel_norm("euclidean") == KernelNorm::Euclidean);
    CHECK(parse_bandwidth_size("estimation_set") == BandwidthSize::EstimationSet);
    CHECK(to_string(BandwidthSize::SampleSize) == "sample");
}

TEST_CASE("cross-fitted fits match the definition entry by entry") {
    for (auto id : {BuiltinDgp::Dgp1, BuiltinDgp::Dgp3}) {
        const auto f = dgp_frame(id, 600, Mechanism::Spbr, 12);
        for (int J : {2, 3}) {
            const auto plan = make_folds(f.labels, f.assignments, 5, J, 4);
            for (auto rule : {BandwidthSize::SampleSize, BandwidthSize::EstimationSet})
                for (auto norm : {KernelNorm::Max, KernelNorm::Euclidean}) {
                    KernelSpec k;
                    k.size_rule = rule;
                    k.kernel = {norm == KernelNorm::Max ? 0.5 : 1.0, norm};
                    const auto fits = crossfit_mhat(f, plan, k);
                    for (std::size_t i = 0; i < f.size(); ++i)
                        for (int a = 0; a <= 1; ++a)
                            REQUIRE(fits(i, a) ==
                                    doctest::Approx(oracle_fit(f, plan, i, a, k)).epsilon(1e-12));
                }
        }
    }
}

TEST_CASE("empty estimation sets give zero fits") {
    ExperimentFrame f;
    f.z = column({-0.5, 0.5, 0.1});
    f.labels = {1, 1, 1};
    f.assignments = {1, 0, 0};
    f.y = {4.0, 3.0, 3.0};
    f.num_strata = 1;
    // Treated group of one: fold 1 is empty, fold 2 holds the unit.
    const FoldPlan plan(f.labels, f.assignments, 1, 2, {2, 1, 2});
    const auto fits = crossfit_mhat(f, plan, KernelSpec{});
    CHECK(fits(0, 1) == 0.0);
    CHECK(fits(2, 1) == 0.0);
    KernelSpec wide;
    wide.bandwidth_const = 100.0;
    const auto w = crossfit_mhat(f, plan, wide);
    CHECK(w(1, 1) == 4.0);
    CHECK(w(0, 0) == 3.0);
}

TEST_CASE("constant outcomes are reproduced on nonempty windows") {
    auto f = dgp_frame(BuiltinDgp::Dgp1, 400, Mechanism::Spbr, 3);
    std::fill(f.y.begin(), f.y.end(), 1.75);
    const auto plan = make_folds(f.labels, f.assignments, 5, 2, 1);
    KernelSpec wide;
    wide.bandwidth_const = 100.0;
    const auto fits = crossfit_mhat(f, plan, wide);
    for (std::size_t i = 0; i < f.size(); ++i)
        for (int a = 0; a <= 1; ++a)
            if (!estimation_set(plan, i, a).empty()) CHECK(fits(i, a) == doctest::Approx(1.75));
}

TEST_CASE("leave-fold-out isolation") {
    for (auto id : {BuiltinDgp::Dgp1, BuiltinDgp::Dgp4}) {
        const auto f = dgp_frame(id, 500, Mechanism::Spbr, 21);
        const auto plan = make_folds(f.labels, f.assignments, 5, 3, 2);
        const KernelSpec k;
        const auto base = crossfit_mhat(f, plan, k);
        for (int j = 1; j <= 3; ++j) {
            auto g = f;
            std::mt19937_64 eng(static_cast<std::uint64_t>(j));
            std::normal_distribution<double> noise(0.0, 50.0);
            for (std::size_t i = 0; i < g.size(); ++i)
                if (plan.fold_of(i) == j) g.y[i] += noise(eng);
            const auto moved = crossfit_mhat(g, plan, k);
            for (std::size_t i = 0; i < f.size(); ++i)
                if (plan.fold_of(i) == j) {
                    CHECK(moved(i, 0) == base(i, 0));
                    CHECK(moved(i, 1) == base(i, 1));
                }
        }
    }
}

TEST_CASE("permutation equivariance") {
    for (auto id : {BuiltinDgp::Dgp2, BuiltinDgp::Dgp3}) {
        const auto f = dgp_frame(id, 400, Mechanism::Ssra, 8);
        const auto plan = make_folds(f.labels, f.assignments, 5, 2, 6);
        const auto fits = crossfit_mhat(f, plan, KernelSpec{});

        std::vector<std::size_t> perm(f.size());
        std::iota(perm.begin(), perm.end(), 0);
        std::mt19937_64 eng(10);
        std::shuffle(perm.begin(), perm.end(), eng);
        ExperimentFrame g = f;
        std::vector<int> folds(f.size());
        for (std::size_t r = 0; r < f.size(); ++r) {
            const auto i = perm[r];
            for (std::size_t d = 0; d < f.z.cols(); ++d) g.z(r, d) = f.z(i, d);
            g.labels[r] = f.labels[i];
            g.assignments[r] = f.assignments[i];
            g.y[r] = f.y[i];
            folds[r] = plan.fold_of(i);
        }
        const FoldPlan permuted(g.labels, g.assignments, 5, 2, folds);
        const auto pf = crossfit_mhat(g, permuted, KernelSpec{});
        for (std::size_t r = 0; r < f.size(); ++r)
            for (int a = 0; a <= 1; ++a)
                CHECK(pf(r, a) == doctest::Approx(fits(perm[r], a)).epsilon(1e-13));
    }
}

TEST_CASE("fits approach the true means as n grows") {
    const auto spec = make_builtin_dgp(BuiltinDgp::Dgp1);
    auto mean_sq_error = [&](std::size_t n) {
        double total = 0.0;
        for (std::uint64_t r = 0; r < 50; ++r) {
            const auto f = dgp_frame(BuiltinDgp::Dgp1, n, Mechanism::Ssra, 1000 + r);
            const auto plan = make_folds(f.labels, f.assignments, 5, 2, r);
            const auto fits = crossfit_mhat(f, plan, KernelSpec{});
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i)
                for (int a = 0; a <= 1; ++a) {
                    const double e = fits(i, a) - spec.mean(a, f.z.row(i));
                    s += e * e;
                }
            total += s / (2.0 * static_cast<double>(n));
        }
        return total / 50.0;
    };
    const double small = mean_sq_error(500);
    const double large = mean_sq_error(8000);
    CHECK(small / large >= 1.5);
}
