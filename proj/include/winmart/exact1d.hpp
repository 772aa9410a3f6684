#pragma once

// Closed-form solution of g = log det(0.5 g'') on (0,1) with infinite
// boundary data:
//   g(x)  = log(pi^2 / sin^2(pi x))
//   g'(x) = -2 pi cot(pi x)
//   g''(x) = 2 pi^2 / sin^2(pi x)
// so that log(0.5 g'') = g holds identically. Serves as the 1D oracle for
// the numeric solver.

#include "winmart/simplex.hpp"

#include <cmath>
#include <numbers>

namespace winmart {

template <typename Scalar>
struct Exact1d {
    Scalar g;
    Scalar dg;
    Scalar d2g;
};

template <typename Scalar>
Exact1d<Scalar> exact_g_1d(Scalar x) {
    if (!(x > Scalar(0) && x < Scalar(1)))
        throw DomainError("exact_g_1d: x must lie in (0,1)");
    constexpr Scalar pi = std::numbers::pi_v<Scalar>;
    const Scalar s = std::sin(pi * x);
    const Scalar c = std::cos(pi * x);
    return {Scalar(2) * std::log(pi / s),
            -2 * pi * c / s,
            2 * pi * pi / (s * s)};
}

}  // namespace winmart
