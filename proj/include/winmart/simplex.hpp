#pragma once

// Geometry of the open subprobability simplex
//   Delta = { x in R^d : x_i > 0, sum_i x_i < 1 },
// the log barrier
//   w(x) = -2 sum_i log(x_i) - 2 log(1 - sum_i x_i),
// its derivatives, sublevel domains Omega_C = { w < C }, and the linear
// symmetry exchanging a coordinate with the slack 1 - sum x.
//
// Player 0's probability is the slack; vertices are e_0 = 0 and the
// canonical basis e_1..e_d.

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <string>

namespace winmart {

using Eigen::Index;

/// Thrown when an argument lies outside the open simplex (or a solved region).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Default interior tolerance for membership checks.
inline constexpr double kDomainTol = 1e-12;

template <typename Derived>
typename Derived::Scalar slack(const Eigen::MatrixBase<Derived>& x) {
    return typename Derived::Scalar(1) - x.sum();
}

/// True iff min_i x_i > tol and sum_i x_i < 1 - tol.
template <typename Derived>
bool in_simplex(const Eigen::MatrixBase<Derived>& x,
                typename Derived::Scalar tol = kDomainTol) {
    if (x.size() < 1) throw std::invalid_argument("in_simplex: dimension must be >= 1");
    if (tol < 0) throw std::invalid_argument("in_simplex: tol must be >= 0");
    return x.minCoeff() > tol && slack(x) > tol;
}

template <typename Derived>
void require_interior(const Eigen::MatrixBase<Derived>& x,
                      typename Derived::Scalar tol = kDomainTol) {
    if (!in_simplex(x, tol))
        throw DomainError("point is not in the open simplex interior");
}

/// w(x) = -2 sum log(x_i) - 2 log(1 - sum x_i).
template <typename Derived>
typename Derived::Scalar barrier_value(const Eigen::MatrixBase<Derived>& x) {
    require_interior(x);
    return -2 * x.array().log().sum() - 2 * std::log(slack(x));
}

/// grad w: entries -2/x_i + 2/(1 - sum x).
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic>
barrier_gradient(const Eigen::MatrixBase<Derived>& x) {
    require_interior(x);
    using Scalar = typename Derived::Scalar;
    const Scalar s = slack(x);
    return (2 / s - 2 / x.array()).matrix();
}

/// hess w = Diag(2/x_i^2) + (2/s^2) * ones*ones^T, positive definite on Delta.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
barrier_hessian(const Eigen::MatrixBase<Derived>& x) {
    require_interior(x);
    using Scalar = typename Derived::Scalar;
    const Index d = x.size();
    const Scalar s = slack(x);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> H =
        Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>::Constant(d, d, 2 / (s * s));
    H.diagonal() += (2 / x.array().square()).matrix();
    return H;
}

/// det(0.5 hess w)/e^w by the closed form sum x_i^2 + (1 - sum x_i)^2.
/// Lies in [1/(d+1), 1] on the open simplex.
template <typename Derived>
typename Derived::Scalar barrier_det_ratio(const Eigen::MatrixBase<Derived>& x) {
    require_interior(x);
    const auto s = slack(x);
    return x.array().square().sum() + s * s;
}

/// Same ratio via direct linear algebra; cross-checks the closed form.
template <typename Derived>
typename Derived::Scalar barrier_det_ratio_direct(const Eigen::MatrixBase<Derived>& x) {
    const auto H = barrier_hessian(x);
    return (H / 2).determinant() / std::exp(barrier_value(x));
}

/// The involution L swapping coordinate `player` (1-based) with the slack:
/// coordinate player-1 becomes 1 - sum_j x_j, all others unchanged.
/// Maps Delta onto Delta and leaves w invariant.
template <typename Derived>
Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic>
vertex_swap(const Eigen::MatrixBase<Derived>& x, Index player) {
    require_interior(x);
    if (player < 1 || player > x.size())
        throw std::invalid_argument("vertex_swap: player index must be in 1..d");
    Eigen::Vector<typename Derived::Scalar, Eigen::Dynamic> y = x;
    y[player - 1] = slack(x);
    return y;
}

/// Vertex i of Delta: e_0 = 0, e_1..e_d canonical basis.
inline Eigen::VectorXd vertex(Index d, Index i) {
    if (i < 0 || i > d) throw std::invalid_argument("vertex: index must be in 0..d");
    Eigen::VectorXd v = Eigen::VectorXd::Zero(d);
    if (i > 0) v[i - 1] = 1.0;
    return v;
}

/// Nearest vertex in Euclidean distance, ties broken by lowest index.
template <typename Derived>
std::pair<Index, typename Derived::Scalar>
nearest_vertex(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Index d = x.size();
    Index best = 0;
    Scalar best_d2 = x.squaredNorm();
    for (Index i = 1; i <= d; ++i) {
        Scalar d2 = x.squaredNorm() - 2 * x[i - 1] + 1;
        if (d2 < best_d2) {
            best = i;
            best_d2 = d2;
        }
    }
    return {best, std::sqrt(best_d2)};
}

/// Sublevel domain Omega_C = { x in Delta : w(x) < C }.
struct SublevelSpec {
    double level = 0.0;

    /// inf_Delta w = 2 (d+1) log(d+1), attained at the barycenter.
    static double min_barrier(int d) { return 2.0 * (d + 1) * std::log(double(d + 1)); }

    bool empty(int d) const { return level <= min_barrier(d); }

    template <typename Derived>
    bool contains(const Eigen::MatrixBase<Derived>& x) const {
        return barrier_value(x) < level;
    }
};

/// A validated interior point of Delta.
class SimplexPoint {
public:
    SimplexPoint(Eigen::VectorXd coords, double tol = kDomainTol)
        : c_(std::move(coords)) {
        require_interior(c_, tol);
    }

    const Eigen::VectorXd& vec() const { return c_; }
    Index dim() const { return c_.size(); }
    double operator[](Index i) const { return c_[i]; }

private:
    Eigen::VectorXd c_;
};

}  // namespace winmart
