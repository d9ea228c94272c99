#include <doctest.h>

#include <random>
#include <vector>

#include "carate/strata.hpp"

using namespace carate;

namespace {

int label_at(const StrataSpec& s, double z1) {
    const std::vector<double> z{z1};
    return s.classify(z);
}

}  // namespace

TEST_CASE("builtin strata intervals") {
    const auto s5 = builtin_strata(5);
    CHECK(s5.num_strata == 5);
    CHECK(label_at(s5, 0.0) == 3);
    CHECK(label_at(s5, -1.0) == 1);
    CHECK(label_at(s5, 1.0) == 5);
    CHECK(label_at(s5, -0.2) == 3);
    CHECK(label_at(s5, std::nextafter(-0.2, -1.0)) == 2);
    CHECK(label_at(s5, 0.6) == 5);
    CHECK_THROWS_AS(label_at(s5, 1.0000001), OutOfSupportError);
    CHECK_THROWS_AS(label_at(s5, -1.5), OutOfSupportError);

    const auto s20 = builtin_strata(20);
    CHECK(label_at(s20, -1.0) == 1);
    CHECK(label_at(s20, -0.95) == 1);
    CHECK(label_at(s20, -0.9) == 2);
    CHECK(label_at(s20, 0.5) == 16);
    CHECK(label_at(s20, 0.999) == 20);
    CHECK(label_at(s20, 1.0) == 20);
    CHECK_THROWS_AS(builtin_strata(7), ConfigError);
}

TEST_CASE("classification uses the first coordinate only") {
    const auto s5 = builtin_strata(5);
    Matrix z(2, 3);
    z(0, 0) = -0.9;
    z(0, 1) = 0.9;
    z(0, 2) = 0.9;
    z(1, 0) = 0.9;
    z(1, 1) = -0.9;
    z(1, 2) = -0.9;
    CHECK(s5.labels(z) == std::vector<int>{1, 5});
}

TEST_CASE("strata partition the support") {
    std::mt19937_64 eng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int S : {5, 20}) {
        const auto s = builtin_strata(S);
        for (int r = 0; r < 20000; ++r) {
            const double z = u(eng);
            const int l = label_at(s, z);
            REQUIRE(l >= 1);
            REQUIRE(l <= S);
            const double lo = -1.0 + 2.0 * (l - 1) / S;
            const double hi = -1.0 + 2.0 * l / S;
            CHECK(z >= lo - 1e-12);
            CHECK(z < hi + 1e-12);
        }
    }
}

TEST_CASE("explicit breakpoints") {
    const auto s = interval_strata({-1.0, -0.5, 1.0});
    CHECK(s.num_strata == 2);
    CHECK(label_at(s, -0.5) == 2);
    CHECK(label_at(s, -0.6) == 1);
    CHECK_THROWS_AS(interval_strata({0.0}), ConfigError);
    CHECK_THROWS_AS(interval_strata({0.0, 0.0, 1.0}), ConfigError);
    const auto u = uniform_strata(4);
    CHECK(label_at(u, 0.49) == 3);
}

TEST_CASE("builtin proportions") {
    CHECK(builtin_proportions(5, ProportionMode::Varying).values() ==
          std::vector<double>{0.3, 0.4, 0.5, 0.6, 0.7});
    const auto v20 = builtin_proportions(20, ProportionMode::Varying);
    REQUIRE(v20.size() == 20);
    CHECK(v20(1) == doctest::Approx(0.325));
    CHECK(v20(2) == doctest::Approx(0.35));
    CHECK(v20(19) == doctest::Approx(0.775));
    CHECK(v20(20) == doctest::Approx(0.8));
    for (int S : {5, 20}) {
        const auto c = builtin_proportions(S, ProportionMode::Constant);
        CHECK(c.size() == static_cast<std::size_t>(S));
        for (double p : c.values()) CHECK(p == 0.5);
    }
    CHECK(builtin_proportions(5, ProportionMode::Varying).arm(0, 1) == doctest::Approx(0.7));
    CHECK(parse_proportion_mode("varying") == ProportionMode::Varying);
    CHECK(to_string(ProportionMode::Constant) == "constant");
}

TEST_CASE("target proportions must lie strictly inside (0,1)") {
    CHECK_THROWS_AS(TargetProportions({0.5, 1.0}), ConfigError);
    CHECK_THROWS_AS(TargetProportions({0.0}), ConfigError);
    CHECK_THROWS_AS(TargetProportions(std::vector<double>{}), ConfigError);
    CHECK(constant_proportions(3, 0.25).values() == std::vector<double>{0.25, 0.25, 0.25});
}

TEST_CASE("stratum counts") {
    const std::vector<int> labels{1, 1, 2};
    const std::vector<int> a{1, 0, 1};
    const auto c = stratum_counts(labels, 2, std::span<const int>(a));
    CHECK(c.n(1) == 2);
    CHECK(c.n(2) == 1);
    CHECK(c.n(1, 1) == 1);
    CHECK(c.n(0, 1) == 1);
    CHECK(c.n(1, 2) == 1);
    CHECK(c.n(0, 2) == 0);

    const auto empty = stratum_counts(labels, 3);
    CHECK(empty.n(3) == 0);
    CHECK_FALSE(empty.has_arms);

    CHECK_THROWS_AS(stratum_counts(std::vector<int>{1, 4}, 3), DataError);
    CHECK_THROWS_AS(stratum_counts(labels, 2, std::span<const int>(std::vector<int>{1, 0})),
                    DataError);
}

TEST_CASE("count conservation on random inputs") {
    std::mt19937_64 eng(17);
    for (int r = 0; r < 500; ++r) {
        const int S = 1 + static_cast<int>(eng() % 8);
        const std::size_t n = eng() % 200;
        std::vector<int> labels(n), a(n);
        for (std::size_t i = 0; i < n; ++i) {
            labels[i] = 1 + static_cast<int>(eng() % S);
            a[i] = static_cast<int>(eng() % 2);
        }
        const auto c = stratum_counts(labels, S, std::span<const int>(a));
        std::size_t total = 0, both = 0;
        for (int s = 1; s <= S; ++s) {
            CHECK(c.n(0, s) + c.n(1, s) == c.n(s));
            total += c.n(s);
            both += c.n(0, s) + c.n(1, s);
        }
        CHECK(total == n);
        CHECK(both == n);
    }
}

TEST_CASE("treated quota floors exactly on decimal proportions") {
    CHECK(treated_quota(0.5, 5) == 2);
    CHECK(treated_quota(0.575, 40) == 23);
    CHECK(treated_quota(0.7, 10) == 7);
    CHECK(treated_quota(0.3, 10) == 3);
    CHECK(treated_quota(0.5, 0) == 0);
    CHECK(treated_quota(0.325, 40) == 13);
}
