#pragma once

// Nodal scalar fields on a Grid and the interpolating evaluation wrapper
// used by the value function and the simulator.

#include "winmart/grid.hpp"

#include <memory>
#include <stdexcept>

namespace winmart {

/// Query outside the evaluatable part of the solved region.
class OutOfRegion : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class InitKind {
    Auto,           // SubSolution for d = 1, SuperSolution for d >= 2
    SubSolution,    // w - log(d+1) at interior nodes, w on the layer
    SuperSolution,  // w everywhere
};

class ScalarField {
public:
    ScalarField(std::shared_ptr<const Grid> grid, Eigen::VectorXd values)
        : grid_(std::move(grid)), values_(std::move(values)) {
        if (values_.size() != grid_->num_nodes())
            throw std::invalid_argument("ScalarField: size mismatch");
    }

    const Grid& grid() const { return *grid_; }
    std::shared_ptr<const Grid> grid_ptr() const { return grid_; }
    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd& values() { return values_; }

private:
    std::shared_ptr<const Grid> grid_;
    Eigen::VectorXd values_;
};

ScalarField initial_field(std::shared_ptr<const Grid> grid, InitKind kind);

/// max over interior nodes of |u - log det(0.5 D2_h u)|.
/// Throws DomainError if the discrete Hessian is not PD somewhere.
double residual_max(const ScalarField& f);

/// Nodes violating w - log(d+1) <= u <= w (exact comparisons).
Index sandwich_violations(const ScalarField& f);

struct FieldJet {
    double value;
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;  // symmetrized
};

/// Immutable evaluation wrapper: multilinear interpolation of the nodal
/// values and of the centered-difference nodal gradient/Hessian fields.
/// Safe for concurrent reads.
class GradHessField {
public:
    explicit GradHessField(ScalarField field);

    const Grid& grid() const { return field_.grid(); }
    const ScalarField& base() const { return field_; }
    int dim() const { return field_.grid().dim(); }
    double level() const { return field_.grid().level(); }
    double h() const { return field_.grid().h(); }

    /// All 2^d cell corners are interior nodes.
    bool in_region(const Eigen::VectorXd& x) const;

    /// Interpolated value; throws OutOfRegion.
    double value(const Eigen::VectorXd& x) const;

    /// Fills `out` with the interpolated value, gradient and symmetrized
    /// Hessian, reusing its storage; returns false when out of region.
    bool try_eval(const Eigen::VectorXd& x, FieldJet& out) const;

    /// Interpolated value, gradient and symmetrized Hessian; throws OutOfRegion.
    FieldJet eval(const Eigen::VectorXd& x) const;

    /// Nodal derivative access for scans (by interior rank).
    void node_jet(Index rank, double& value, Eigen::VectorXd& grad,
                  Eigen::MatrixXd& hess) const;

private:
    ScalarField field_;
    Eigen::MatrixXd node_grad_;   // d x n_interior
    Eigen::MatrixXd node_hess_;   // d*d x n_interior (column-major per node)

    bool locate(const Eigen::VectorXd& x, Eigen::VectorXi& base,
                Eigen::VectorXd& frac) const;
};

}  // namespace winmart
