#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "winmart/rng.hpp"

#include <cmath>
#include <set>

using namespace winmart;

TEST_CASE("streams are deterministic and split cleanly") {
    Xoshiro256pp a(path_stream_seed(42, 0));
    Xoshiro256pp b(path_stream_seed(42, 0));
    for (int i = 0; i < 100; ++i) CHECK(a.next() == b.next());

    std::set<std::uint64_t> firsts;
    for (std::uint64_t p = 0; p < 1000; ++p) {
        Xoshiro256pp g(path_stream_seed(42, p));
        firsts.insert(g.next());
    }
    CHECK(firsts.size() == 1000);  // no collisions among path streams

    Xoshiro256pp c(path_stream_seed(43, 0));
    Xoshiro256pp d(path_stream_seed(42, 0));
    CHECK(c.next() != d.next());
}

TEST_CASE("uniforms live in (0,1]") {
    Xoshiro256pp g(7);
    for (int i = 0; i < 100000; ++i) {
        const double u = g.uniform01();
        CHECK(u > 0.0);
        CHECK(u <= 1.0);
    }
}

TEST_CASE("normal stream moments") {
    NormalStream n(path_stream_seed(7, 3));
    const int N = 1000000;
    double s1 = 0, s2 = 0, s4 = 0;
    for (int i = 0; i < N; ++i) {
        const double z = n.next();
        s1 += z;
        s2 += z * z;
        s4 += z * z * z * z;
    }
    CHECK(std::abs(s1 / N) < 0.01);
    CHECK(s2 / N == doctest::Approx(1.0).epsilon(0.01));
    CHECK(s4 / N == doctest::Approx(3.0).epsilon(0.03));
}
