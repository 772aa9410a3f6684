#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "winmart/rng.hpp"
#include "winmart/simplex.hpp"

#include <cmath>

using namespace winmart;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(Eigen::Index(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

Eigen::VectorXd random_interior(int d, Xoshiro256pp& gen) {
    Eigen::VectorXd e(d + 1);
    for (int i = 0; i <= d; ++i) e[i] = -std::log(gen.uniform01());
    Eigen::VectorXd x = e.head(d) / e.sum();
    return 0.01 * Eigen::VectorXd::Constant(d, 1.0 / (d + 1)) + 0.99 * x;
}

}  // namespace

TEST_CASE("membership") {
    CHECK(in_simplex(vec({1.0 / 3, 1.0 / 3}), 0.0));
    CHECK_FALSE(in_simplex(vec({0.5, 0.5}), 0.0));   // boundary face sum = 1
    CHECK_FALSE(in_simplex(vec({1.0}), 0.0));        // vertex
    CHECK(in_simplex(vec({0.5})));
    CHECK_FALSE(in_simplex(vec({1e-15})));           // below default tolerance
    CHECK_THROWS_AS(in_simplex(Eigen::VectorXd(), 0.0), std::invalid_argument);
    CHECK_THROWS_AS(in_simplex(vec({0.5}), -1.0), std::invalid_argument);
    CHECK_THROWS_AS(SimplexPoint(vec({0.7, 0.4})), DomainError);
    CHECK(SimplexPoint(vec({0.2, 0.3})).dim() == 2);
}

TEST_CASE("barrier value") {
    CHECK(barrier_value(vec({0.5})) == doctest::Approx(4 * std::log(2.0)).epsilon(1e-14));
    CHECK(barrier_value(vec({1.0 / 3, 1.0 / 3})) ==
          doctest::Approx(6 * std::log(3.0)).epsilon(1e-14));
    // monotone blow-up towards the boundary
    double prev = barrier_value(vec({1e-2}));
    for (double x : {1e-4, 1e-6, 1e-8}) {
        const double w = barrier_value(vec({x}));
        CHECK(w > prev);
        prev = w;
    }
    CHECK_THROWS_AS(barrier_value(vec({-0.1, 0.5})), DomainError);
    // lower bound 2(d+1)log(d+1) attained at the barycenter
    for (int d : {1, 2, 3, 7}) {
        const Eigen::VectorXd bary = Eigen::VectorXd::Constant(d, 1.0 / (d + 1));
        CHECK(barrier_value(bary) ==
              doctest::Approx(SublevelSpec::min_barrier(d)).epsilon(1e-13));
    }
}

TEST_CASE("barrier derivatives") {
    // d=1, x=0.5: hess = 2/0.25 + 2/0.25 = 16
    CHECK(barrier_hessian(vec({0.5}))(0, 0) == doctest::Approx(16.0).epsilon(1e-14));

    // d=2 barycenter: diag 2/x^2 + 2/s^2 = 18+18, off-diag 2/s^2 = 18
    const Eigen::MatrixXd H = barrier_hessian(vec({1.0 / 3, 1.0 / 3}));
    CHECK(H(0, 0) == doctest::Approx(36.0).epsilon(1e-13));
    CHECK(H(1, 1) == doctest::Approx(36.0).epsilon(1e-13));
    CHECK(H(0, 1) == doctest::Approx(18.0).epsilon(1e-13));

    // hess - Diag(2/x_i^2) has rank 1 (it is (2/s^2) * ones ones^T)
    Xoshiro256pp gen(11);
    for (int rep = 0; rep < 20; ++rep) {
        const Eigen::VectorXd x = random_interior(3, gen);
        Eigen::MatrixXd R = barrier_hessian(x);
        R.diagonal() -= (2.0 / x.array().square()).matrix();
        const double s = slack(x);
        CHECK((R - (2 / (s * s)) * Eigen::MatrixXd::Ones(3, 3)).norm() < 1e-9 * R.norm());
    }

    // gradient and Hessian agree with central differences to O(h^2)
    for (int d : {1, 2, 3}) {
        const Eigen::VectorXd x = random_interior(d, gen);
        const double h = 1e-5;
        const Eigen::VectorXd grad = barrier_gradient(x);
        const Eigen::MatrixXd hess = barrier_hessian(x);
        for (int a = 0; a < d; ++a) {
            Eigen::VectorXd xp = x, xm = x;
            xp[a] += h;
            xm[a] -= h;
            const double fd = (barrier_value(xp) - barrier_value(xm)) / (2 * h);
            CHECK(fd == doctest::Approx(grad[a]).epsilon(1e-6));
            const Eigen::VectorXd gfd = (barrier_gradient(xp) - barrier_gradient(xm)) / (2 * h);
            for (int b = 0; b < d; ++b)
                CHECK(gfd[b] == doctest::Approx(hess(a, b)).epsilon(1e-6));
        }
    }
}

TEST_CASE("barrier determinant ratio") {
    // barycenter attains the lower bound 1/(d+1)
    CHECK(barrier_det_ratio(vec({1.0 / 3, 1.0 / 3})) ==
          doctest::Approx(1.0 / 3).epsilon(1e-14));
    // d=1: x^2 + (1-x)^2
    CHECK(barrier_det_ratio(vec({0.5})) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(barrier_det_ratio(vec({1e-6})) == doctest::Approx(1.0).epsilon(1e-5));

    Xoshiro256pp gen(12);
    for (int d : {1, 2, 3, 5}) {
        for (int rep = 0; rep < 200; ++rep) {
            const Eigen::VectorXd x = random_interior(d, gen);
            const double closed = barrier_det_ratio(x);
            const double direct = barrier_det_ratio_direct(x);
            CHECK(std::abs(closed - direct) / closed < 1e-10);
            CHECK(closed >= 1.0 / (d + 1) - 1e-12);
            CHECK(closed <= 1.0 + 1e-12);
        }
    }
}

TEST_CASE("vertex swap") {
    const Eigen::VectorXd y = vertex_swap(vec({0.2, 0.3}), 1);
    CHECK(y[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(0.3).epsilon(1e-15));

    // fixed point of the symmetry at the barycenter
    const Eigen::VectorXd b = vertex_swap(vec({1.0 / 3, 1.0 / 3}), 2);
    CHECK(b[1] == doctest::Approx(1.0 / 3).epsilon(1e-14));

    Xoshiro256pp gen(13);
    for (int rep = 0; rep < 50; ++rep) {
        const Eigen::VectorXd x = random_interior(3, gen);
        for (Index i = 1; i <= 3; ++i) {
            const Eigen::VectorXd z = vertex_swap(vertex_swap(x, i), i);
            CHECK((z - x).lpNorm<Eigen::Infinity>() < 1e-14);  // involution
            // w is symmetric under exchanging a coordinate with the slack
            CHECK(barrier_value(vertex_swap(x, i)) ==
                  doctest::Approx(barrier_value(x)).epsilon(1e-12));
        }
    }
    CHECK_THROWS_AS(vertex_swap(vec({0.2, 0.3}), 0), std::invalid_argument);
    CHECK_THROWS_AS(vertex_swap(vec({0.2, 0.3}), 3), std::invalid_argument);
}

TEST_CASE("sublevel spec") {
    SublevelSpec three{3.0};
    CHECK(three.contains(vec({0.5})));  // w ~ 2.77 < 3
    SublevelSpec two{2.0};
    CHECK_FALSE(two.contains(vec({0.5})));
    CHECK(two.empty(1));  // 2 <= 4 log 2
    CHECK(SublevelSpec{SublevelSpec::min_barrier(1)}.empty(1));
    CHECK_FALSE(SublevelSpec{4.0 * std::log(2.0) + 0.1}.empty(1));
    CHECK(SublevelSpec{6.0 * std::log(3.0)}.empty(2));
}

TEST_CASE("vertices and nearest vertex") {
    CHECK(vertex(2, 0).isZero());
    CHECK(vertex(2, 2)[1] == 1.0);
    CHECK_THROWS_AS(vertex(2, 3), std::invalid_argument);

    auto [v, dist] = nearest_vertex(vec({0.9, 0.05}));
    CHECK(v == 1);
    CHECK(dist == doctest::Approx(std::sqrt(0.01 + 0.0025)));
    // equidistant from e_0 and e_1: ties to the lowest index
    auto [v2, d2] = nearest_vertex(vec({0.5, 0.1}));
    CHECK(v2 == 0);
    (void)d2;
}
