#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "winmart/rng.hpp"
#include "winmart/solver.hpp"
#include "winmart/value.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <numbers>

using namespace winmart;

namespace {

constexpr double kTwoLogPi = 2.2894597716988003;  // 2 log(pi)

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(Eigen::Index(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("value through the 1d oracle") {
    CHECK(value_exact_1d(0.0, 0.5) == doctest::Approx(kTwoLogPi).epsilon(1e-14));
    // t = 0.5: 0.5 * 2 log pi + 0.5 log 0.5
    const double expected = 0.5 * 2 * std::log(std::numbers::pi) + 0.5 * std::log(0.5);
    CHECK(value_exact_1d(0.5, 0.5) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(0.798156).epsilon(1e-6));
    // terminal limit: both terms vanish as t -> 1
    CHECK(std::abs(value_exact_1d(1.0 - 1e-9, 0.5)) < 1e-7);
    CHECK_THROWS_AS(value_exact_1d(1.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(value_exact_1d(-0.1, 0.5), std::invalid_argument);
}

TEST_CASE("scaling identity is exact to rounding") {
    Xoshiro256pp gen(3);
    for (int i = 0; i < 1000; ++i) {
        const double t = 0.99 * gen.uniform01();
        const double s = 0.99 * gen.uniform01();
        const double g = 10.0 * gen.uniform01();
        CHECK(scaling_identity_gap(t, s, g, 2) <= 1e-12);
    }
    CHECK(scaling_identity_gap(0.3, 0.3, 5.0, 1) == 0.0);
    CHECK(scaling_identity_gap(0.0, 0.9, exact_g_1d(0.25).g, 1) <= 1e-12);
}

TEST_CASE("covariance budget") {
    CHECK(covariance_budget(vec({0.5}))(0, 0) == doctest::Approx(0.25).epsilon(1e-15));
    const Eigen::MatrixXd B = covariance_budget(vec({1.0 / 3, 1.0 / 3}));
    CHECK(B(0, 0) == doctest::Approx(2.0 / 9).epsilon(1e-14));
    CHECK(B(0, 1) == doctest::Approx(-1.0 / 9).epsilon(1e-14));
    CHECK(B(1, 1) == doctest::Approx(2.0 / 9).epsilon(1e-14));

    Xoshiro256pp gen(4);
    for (int i = 0; i < 200; ++i) {
        Eigen::VectorXd e(4);
        for (int k = 0; k < 4; ++k) e[k] = -std::log(gen.uniform01());
        const Eigen::VectorXd x = e.head(3) / e.sum();
        const Eigen::MatrixXd C = covariance_budget(x);
        CHECK(C.trace() < 1.0);  // sum x - |x|^2 < 1
        CHECK(Eigen::LLT<Eigen::MatrixXd>(C).info() == Eigen::Success);  // SPD
    }
}

TEST_CASE("determinant lower bound") {
    // d=2 barycenter: det(Diag(x) - xx^T) = prod(x) * (1 - sum x) = 1/27
    const Eigen::VectorXd bary = vec({1.0 / 3, 1.0 / 3});
    const Eigen::MatrixXd B = covariance_budget(bary);
    CHECK(B.determinant() == doctest::Approx(1.0 / 27).epsilon(1e-12));
    // independent route: Sherman-Morrison gives prod(x_i) (1 - sum x_i)
    const double sm = (1.0 / 3) * (1.0 / 3) * (1.0 - 2.0 / 3);
    CHECK(B.determinant() == doctest::Approx(sm).epsilon(1e-12));
    CHECK(lower_bound(0.0, bary) == doctest::Approx(3 * std::log(3.0)).epsilon(1e-12));

    // d=1: det = 1/4, bound = log 4 <= 2 log pi = value
    CHECK(lower_bound(0.0, vec({0.5})) == doctest::Approx(std::log(4.0)).epsilon(1e-12));
    CHECK(lower_bound(0.0, vec({0.5})) <= kTwoLogPi);

    // bound blows up towards the boundary
    double prev = lower_bound(0.0, vec({1e-2, 0.4}));
    for (double eps : {1e-4, 1e-6, 1e-8}) {
        const double b = lower_bound(0.0, vec({eps, 0.4}));
        CHECK(b > prev);
        prev = b;
    }
}

TEST_CASE("value through a solved field dominates the lower bound") {
    SolveConfig cfg;
    cfg.levels = {6.0, 8.0};
    cfg.h = 1e-3;
    auto [field, rep] = solve_nested(1, cfg);
    CHECK(std::abs(value(field, 0.0, vec({0.5})) - kTwoLogPi) < 1e-2);
    Xoshiro256pp gen(9);
    for (int i = 0; i < 100; ++i) {
        const Eigen::VectorXd x = vec({0.1 + 0.8 * gen.uniform01()});
        const double t = 0.95 * gen.uniform01();
        CHECK(value(field, t, x) >= lower_bound(t, x) - 1e-9);
    }
    // midpoint convexity on axis triples of nodes
    const Grid& g = field.grid();
    for (Index r = 1; r + 1 < g.num_interior(); ++r) {
        const double um = field.base().values()[g.interior_nodes()[size_t(r - 1)]];
        const double uc = field.base().values()[g.interior_nodes()[size_t(r)]];
        const double up = field.base().values()[g.interior_nodes()[size_t(r + 1)]];
        CHECK(um + up - 2 * uc >= -1e-12);
    }
}
