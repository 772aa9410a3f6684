#pragma once

// The control-problem value function and its companions:
//   v(t,x) = (1-t) g(x) + f(t),  f(t) = d (1-t) log(1-t),
// the time-scaling identity, the determinant lower bound and the exact
// integrated-covariance budget of a win-martingale from x.

#include "winmart/exact1d.hpp"
#include "winmart/field.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace winmart {

inline void require_time(double t) {
    if (!(t >= 0.0 && t < 1.0))
        throw std::invalid_argument("time must lie in [0,1)");
}

/// f(t) = d (1-t) log(1-t).
inline double terminal_profile(double t, int d) {
    require_time(t);
    return d * (1.0 - t) * std::log1p(-t);
}

/// v(t,x) given g(x).
inline double value_from_g(double t, double g, int d) {
    require_time(t);
    return (1.0 - t) * g + terminal_profile(t, d);
}

/// v(t,x) through a solved field.
inline double value(const GradHessField& field, double t, const Eigen::VectorXd& x) {
    return value_from_g(t, field.value(x), field.dim());
}

/// v(t,x) in d=1 through the closed-form g.
inline double value_exact_1d(double t, double x) {
    return value_from_g(t, exact_g_1d(x).g, 1);
}

/// |[v(s,x)/(1-s) - d log(1-s)] - [v(t,x)/(1-t) - d log(1-t)]|,
/// zero up to rounding by construction of value_from_g.
inline double scaling_identity_gap(double t, double s, double g, int d) {
    const auto side = [&](double tt) {
        return value_from_g(tt, g, d) / (1.0 - tt) - d * std::log1p(-tt);
    };
    return std::abs(side(s) - side(t));
}

/// Diag(x) - x x^T: the exact expected integrated covariance of any
/// win-martingale started at x; SPD for interior x.
inline Eigen::MatrixXd covariance_budget(const Eigen::VectorXd& x) {
    require_interior(x);
    Eigen::MatrixXd B = -x * x.transpose();
    B.diagonal() += x;
    return B;
}

/// d(1-t)log(1-t) - (1-t) log det(Diag(x) - x x^T); +inf when the budget
/// matrix degenerates (boundary behaviour).
inline double lower_bound(double t, const Eigen::VectorXd& x) {
    require_time(t);
    const Eigen::MatrixXd B = covariance_budget(x);
    Eigen::LLT<Eigen::MatrixXd> llt(B);
    if (llt.info() != Eigen::Success)
        return std::numeric_limits<double>::infinity();
    const double logdet =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    return terminal_profile(t, int(x.size())) - (1.0 - t) * logdet;
}

}  // namespace winmart
