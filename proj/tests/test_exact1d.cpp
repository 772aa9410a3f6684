#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "winmart/exact1d.hpp"
#include "winmart/rng.hpp"

#include <cmath>
#include <numbers>

using namespace winmart;

TEST_CASE("closed-form values") {
    constexpr double pi = std::numbers::pi;
    const auto mid = exact_g_1d(0.5);
    CHECK(mid.g == doctest::Approx(2 * std::log(pi)).epsilon(1e-15));
    CHECK(mid.dg == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(mid.d2g == doctest::Approx(2 * pi * pi).epsilon(1e-15));
    // log(0.5 g'') = g at the midpoint
    CHECK(std::log(0.5 * mid.d2g) == doctest::Approx(mid.g).epsilon(1e-15));

    const auto q = exact_g_1d(0.25);
    CHECK(q.g == doctest::Approx(std::log(2 * pi * pi)).epsilon(1e-15));
    CHECK(q.g == doctest::Approx(2.982607).epsilon(1e-6));
}

TEST_CASE("solves the equation identically") {
    Xoshiro256pp gen(5);
    for (int i = 0; i < 200; ++i) {
        const double x = 1e-3 + 0.998 * gen.uniform01();
        const auto e = exact_g_1d(x);
        CHECK(std::abs(std::log(0.5 * e.d2g) - e.g) < 1e-12);
    }
}

TEST_CASE("derivatives match finite differences") {
    const double h = 1e-6, h2 = 1e-4;  // wider step for the second difference
    for (double x : {0.1, 0.37, 0.5, 0.82}) {
        const auto e = exact_g_1d(x);
        const double fd1 = (exact_g_1d(x + h).g - exact_g_1d(x - h).g) / (2 * h);
        const double fd2 =
            (exact_g_1d(x + h2).g + exact_g_1d(x - h2).g - 2 * e.g) / (h2 * h2);
        CHECK(fd1 == doctest::Approx(e.dg).epsilon(1e-7));
        CHECK(fd2 == doctest::Approx(e.d2g).epsilon(1e-5));
    }
}

TEST_CASE("domain errors") {
    CHECK_THROWS_AS(exact_g_1d(0.0), DomainError);
    CHECK_THROWS_AS(exact_g_1d(1.0), DomainError);
    CHECK_THROWS_AS(exact_g_1d(-0.2), DomainError);
}
