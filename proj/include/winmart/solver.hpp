#pragma once

// Damped Newton solver for the discretized equation
//   F(u) = u - log det(0.5 D2_h u) = 0   at interior nodes,
//   u = w                                 on the boundary layer,
// on sublevel domains Omega_C, and the nested-level driver that solves an
// increasing sequence C_1 < ... < C_K and tracks the stabilization of the
// fields on Omega_{C_1}.

#include "winmart/field.hpp"

#include <string>
#include <vector>

namespace winmart {

class SolveError : public std::runtime_error {
public:
    SolveError(const std::string& what, double last_residual)
        : std::runtime_error(what), last_residual(last_residual) {}
    double last_residual;
};

struct SolveConfig {
    std::vector<double> levels;       // strictly increasing C_1 < ... < C_K
    double h = 0.01;                  // spacing (all levels unless overridden)
    std::vector<double> h_per_level;  // optional per-level spacing
    double tol_res = 1e-8;
    int max_iter = 200;
    int max_backtrack = 10;           // damping factors 1, 1/2, ..., 2^-10
    double lambda_floor = 1e-8;       // SPD clamp inside the linearization
    InitKind init = InitKind::Auto;

    void validate(int dim) const;
    double level_h(size_t k) const {
        return h_per_level.empty() ? h : h_per_level.at(k);
    }
};

struct LevelReport {
    double level = 0;
    double h = 0;
    Index interior_nodes = 0;
    int iterations = 0;
    std::vector<double> residual_history;  // max |F| before each iteration
    double final_residual = 0;             // recomputed post hoc
    Index sandwich_violations = 0;         // must be 0
};

struct SolveReport {
    std::vector<LevelReport> levels;
    // sup |g^{C_{k+1}} - g^{C_k}| over the level-1 interior region, one entry
    // per consecutive pair; expected monotone decreasing.
    std::vector<double> stabilization;
    double wall_seconds = 0;
};

/// Newton solve on a fixed grid from a given init (must satisfy the sandwich).
std::pair<ScalarField, LevelReport> solve_dirichlet(std::shared_ptr<const Grid> grid,
                                                    ScalarField init,
                                                    const SolveConfig& cfg);

/// Nested construction; returns the level-C_K field.
std::pair<GradHessField, SolveReport> solve_nested(int dim, const SolveConfig& cfg);

}  // namespace winmart
