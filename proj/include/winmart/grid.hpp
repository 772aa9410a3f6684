#pragma once

// Uniform lattice restricted to a sublevel domain Omega_C = { w < C } of the
// simplex. Interior nodes are the unknowns of the Dirichlet solve; layer
// nodes are the first lattice shell outside Omega_C, where the boundary data
// w is imposed. Node ids are assigned in row-major lattice order
// (lexicographic in the integer coordinates, first axis major).
//
// A lattice point only becomes interior if
//   * w(x) < C,
//   * its full second-difference stencil (axis and pair-diagonal neighbors)
//     lies strictly inside the simplex, and
//   * the discrete Hessian of w at x is positive definite with
//     w(x) - log(d+1) <= log det(0.5 D2_h w) <= w(x),
// i.e. the lattice still resolves the barrier within its Jensen gap there.
// This keeps w and w - log(d+1) a discrete super-/sub-solution pair, which
// is what makes the nodewise sandwich w - log(d+1) <= g <= w hold for the
// solved field. Near the slack facet (diagonal to the lattice) the cross
// stencil loses the determinant cancellation within a few cells of the rim;
// those nodes fail the lower inequality and are excluded.

#include "winmart/simplex.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <vector>

namespace winmart {

enum class NodeKind : std::uint8_t { Interior = 0, Layer = 1 };

class Grid {
public:
    /// Builds the lattice for Omega_{spec.level} at spacing h.
    /// Throws DomainError for an empty domain and std::invalid_argument when
    /// h is too coarse (< 10 nodes across the widest axis).
    static Grid build(int dim, SublevelSpec spec, double h);

    int dim() const { return dim_; }
    double level() const { return level_; }
    double h() const { return h_; }

    Index num_nodes() const { return Index(kind_.size()); }
    Index num_interior() const { return Index(interior_nodes_.size()); }

    NodeKind kind(Index node) const { return kind_[size_t(node)]; }
    bool interior(Index node) const { return kind_[size_t(node)] == NodeKind::Interior; }

    /// Integer lattice coordinates of a node.
    Eigen::VectorXi lat(Index node) const { return lat_.col(node); }
    /// Physical coordinates (= integer coords * h).
    Eigen::VectorXd coords(Index node) const { return lat_.col(node).cast<double>() * h_; }

    /// Node id at integer coordinates, or -1.
    Index node_at(const Eigen::VectorXi& lat) const;
    Index node_at(const int* lat) const;  // allocation-free variant

    const std::vector<Index>& interior_nodes() const { return interior_nodes_; }
    Index interior_rank(Index node) const { return interior_rank_[size_t(node)]; }

    // Stencil of an interior node, as node ids:
    //   [0, 2d):               +e_a, -e_a for a = 0..d-1
    //   then per pair a < b:   ++, --, +-, -+
    int stencil_size() const { return 2 * dim_ + 2 * dim_ * (dim_ - 1); }
    const Index* stencil(Index rank) const { return stencil_.data() + size_t(rank) * stencil_size(); }

    /// Widest axis extent in nodes (build-time diagnostic).
    Index max_extent() const { return max_extent_; }

private:
    Grid() = default;

    int dim_ = 0;
    double level_ = 0.0;
    double h_ = 0.0;
    Index box_ = 0;  // raster extent per axis

    Eigen::MatrixXi lat_;                // dim x num_nodes
    std::vector<NodeKind> kind_;
    std::vector<Index> interior_nodes_;  // node ids in id order
    std::vector<Index> interior_rank_;   // per node; -1 for layer
    std::vector<Index> stencil_;         // per interior rank
    std::vector<Index> raster_;          // flattened box -> node id or -1
    Index max_extent_ = 0;

    std::int64_t flatten(const Eigen::VectorXi& lat) const;
};

/// Discrete Hessian of nodal values at interior rank `rank`.
/// H_aa = (u(+a) + u(-a) - 2u)/h^2, H_ab via the 4-point cross stencil.
void discrete_hessian(const Grid& grid, const Eigen::VectorXd& values, Index rank,
                      Eigen::MatrixXd& H);

/// Central-difference gradient at an interior node.
void discrete_gradient(const Grid& grid, const Eigen::VectorXd& values, Index rank,
                       Eigen::VectorXd& grad);

}  // namespace winmart
