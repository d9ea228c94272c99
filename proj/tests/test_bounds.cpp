#include <doctest.h>

#include <cmath>

#include "carate/bounds.hpp"

using namespace carate;

namespace {

PopulationSpec linear_effect(double s1, double s0) {
    return make_additive_dgp(
        "linear", 1, [](int a, std::span<const double> z) { return a == 1 ? z[0] : 0.0; },
        [s1, s0](int a, std::span<const double>) { return a == 1 ? s1 : s0; }, 0.0);
}

}  // namespace

TEST_CASE("constant design has an exact bound") {
    const auto spec = make_additive_dgp(
        "flat", 1, [](int, std::span<const double>) { return 0.0; },
        [](int a, std::span<const double>) { return a == 1 ? std::sqrt(2.0) : 1.0; }, 0.0);
    const auto o = speb_oracle(spec, builtin_strata(5), constant_proportions(5, 0.5), 20000, 1);
    CHECK(o.value == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(o.mc_se < 1e-10);
    CHECK(o.draws == 20000);
}

TEST_CASE("linear effect on the interval") {
    const auto spec = linear_effect(1.0, 1.0);
    const auto o = speb_oracle(spec, builtin_strata(5), constant_proportions(5, 0.5), 200000, 2);
    CHECK(std::abs(o.value - 13.0 / 3.0) < 4.0 * o.mc_se);
    CHECK(o.mc_se > 0.0);

    const auto sat = vsat_oracle(spec, uniform_strata(1), constant_proportions(1, 0.5), 400000, 3);
    CHECK(std::abs(sat.value - 14.0 / 3.0) < 4.0 * sat.mc_se);
}

TEST_CASE("draw count and support checks") {
    const auto spec = linear_effect(1.0, 1.0);
    CHECK_THROWS_AS(speb_oracle(spec, builtin_strata(5), constant_proportions(5, 0.5), 100, 1), ConfigError);
    CHECK_THROWS_AS(vsat_oracle(spec, builtin_strata(5), constant_proportions(5, 0.5), 100, 1), ConfigError);
    // A stratum beyond the covariate support never receives draws.
    const auto wide = interval_strata({-1.0, 1.0, 2.0});
    CHECK_THROWS_AS(vsat_oracle(spec, wide, constant_proportions(2, 0.5), 20000, 1), DataError);
}

TEST_CASE("saturated bound equals the full bound when strata carry all the information") {
    const auto spec = make_builtin_dgp(BuiltinDgp::Dgp2);
    const auto pi = builtin_proportions(20, ProportionMode::Constant);
    const auto r = bound_report(spec, builtin_strata(20), pi, 1000000, 5);
    CHECK(std::abs(r.v_sat - r.v_star) < 3.0 * (r.mc_se_vsat + r.mc_se_vstar));
    CHECK(r.mc_draws == 1000000);
}

TEST_CASE("ordering and the approximately-half designs") {
    for (auto id : {BuiltinDgp::Dgp1, BuiltinDgp::Dgp2, BuiltinDgp::Dgp3, BuiltinDgp::Dgp4})
        for (auto mode : {ProportionMode::Constant, ProportionMode::Varying}) {
            const auto r = bound_report(make_builtin_dgp(id), builtin_strata(5),
                                        builtin_proportions(5, mode), 200000, 9);
            CHECK(r.v_star <= r.v_sat + 3.0 * (r.mc_se_vstar + r.mc_se_vsat));
            if (id == BuiltinDgp::Dgp3 || id == BuiltinDgp::Dgp4) {
                CHECK(r.v_star / r.v_sat >= 0.45);
                CHECK(r.v_star / r.v_sat <= 0.65);
            }
        }
}

TEST_CASE("oracles are reproducible and independent of the worker count") {
    const auto spec = make_builtin_dgp(BuiltinDgp::Dgp3);
    const auto strata = builtin_strata(5);
    const auto pi = builtin_proportions(5, ProportionMode::Varying);
    const auto a = speb_oracle(spec, strata, pi, 50000, 17, 1);
    const auto b = speb_oracle(spec, strata, pi, 50000, 17, 3);
    CHECK(a.value == b.value);
    CHECK(a.mc_se == b.mc_se);
    const auto c = vsat_oracle(spec, strata, pi, 50000, 17, 1);
    const auto d = vsat_oracle(spec, strata, pi, 50000, 17, 4);
    CHECK(c.value == d.value);
    CHECK(c.mc_se == d.mc_se);
    CHECK(speb_oracle(spec, strata, pi, 50000, 18).value != a.value);
}
