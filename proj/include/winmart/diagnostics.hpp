#pragma once

// Statistical and analytical verification harness. Each check produces one
// McEntry; run_battery drives the full desk-scale suite (solves, Monte
// Carlo runs, scans) and is shared by the verify command and the acceptance
// suite. All statistics are 3-standard-error comparisons unless stated.

#include "winmart/sim.hpp"
#include "winmart/solver.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace winmart {

struct McEntry {
    enum class Status { Pass, Fail, Insufficient };

    std::string name;
    Status status = Status::Fail;
    double statistic = 0;  // headline statistic (worst |z|, value, ratio, ...)
    double se = 0;
    double threshold = 0;
    bool informational = false;
    std::string details;

    bool passed() const { return status == Status::Pass; }
};

struct McReport {
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> config_echo;
    std::vector<McEntry> entries;

    bool all_pass() const;
    const McEntry* find(const std::string& name) const;
    void print(std::ostream& out) const;      // key/value records, one per test
    void print_csv(std::ostream& out) const;  // comma-separated summary
};

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

/// Vertex frequencies of non-censored paths vs (1 - sum x0, x0_1, ..., x0_d).
McEntry terminal_distribution_test(const std::vector<PathSummary>& paths,
                                   const Eigen::VectorXd& x0,
                                   std::int64_t min_paths = 10000);

/// Censored fraction below a ceiling.
McEntry censoring_test(const std::vector<PathSummary>& paths, double ceiling);

/// Zero drift of -d log(1-t) - g(M_t) at the configured snapshot times
/// (values frozen at the stop time; optional stopping).
McEntry logdet_martingale_test(const std::vector<PathSummary>& paths, double ghat_x0,
                               int dim);

/// |MC objective - target| <= 3 SE + allowance.
McEntry objective_vs_value_test(const std::vector<PathSummary>& paths, double target,
                                double allowance, const std::string& name);

/// mean objective - 3 SE > target (strict suboptimality of a baseline).
McEntry baseline_suboptimality_test(const std::vector<PathSummary>& paths, double target);

/// MC mean of int Sigma dt vs Diag(x0) - x0 x0^T, entrywise within 3 SE.
McEntry integrated_covariance_test(const std::vector<PathSummary>& paths,
                                   const Eigen::VectorXd& x0);

struct BoundaryScanConfig {
    int axis = 0;                // coordinate sent towards 0
    Eigen::VectorXd base;        // the other coordinates (entry [axis] ignored)
    std::vector<double> radii;   // decreasing offsets
    double band_max = 10.0;      // allowed max/min of r^2 H_aa over the scan
    bool compare_exact_1d = false;
    double exact_rel_tol = 0.05;
};

/// r^2 (hess g)_{aa} along a facet approach stays in a positive band;
/// tangential entries stay in a band as well.
McEntry boundary_hessian_scan(const GradHessField& field, const BoundaryScanConfig& cfg);

/// sup over margin nodes of grad^T (hess)^{-1} grad; optionally compared
/// against a refined field (< 2x change) and/or an exact target.
McEntry gradient_form_scan(const GradHessField& field, const GradHessField* refined,
                           std::optional<double> exact_target, double exact_rel_tol);

struct LangevinConfig {
    Eigen::VectorXd x0;
    std::int64_t paths = 3000;
    double h_u = 0.005;
    double u_horizon = 1.5;
    std::uint64_t seed = 1;
    bool remove_drift = false;  // negative control
    std::int64_t min_samples = 1000;
    double grad_delta = 0;  // span of the smoothed gradient; 0 = 2 * grid h
};

/// Simulates dY = sqrt(2 (hess g)^-1) dW (the e^{-t} clock), sets
/// X = grad g(Y), and regresses dX on X du; the fitted coefficient must be 1
/// within 3 SE per coordinate. X is read off by centered differences of the
/// interpolated value over grad_delta (the raw piecewise-linear gradient
/// hides curvature inside cells), and the fit is GLS-weighted with the known
/// conditional variances 2 (hess g)_aa du (the plain residuals are too
/// heavy-tailed near the rim for a stable standard error).
McEntry langevin_coupling_test(const GradHessField& field, const LangevinConfig& cfg);

/// Nodewise barrier sandwich w - log(d+1) <= g <= w; zero violations.
McEntry sandwich_test(const ScalarField& field, const std::string& name);

/// det(1/2 hess w)/e^w in [1/(d+1), 1] at n random interior points, closed
/// form vs direct linear algebra within 1e-10 relative.
McEntry barrier_ratio_test(int dim, int n, std::uint64_t seed);

/// scaling_identity_gap <= 1e-12 on n random (t,s,x) triples.
McEntry scaling_identity_test(const GradHessField& field, int n, std::uint64_t seed);

/// d=1 only: max |g - exact| over interior nodes with w < core_level.
McEntry oracle_1d_error_test(const GradHessField& field, double core_level, double bound,
                             const std::string& name);

/// Synthetic summaries of a path frozen at x0 while time advances; the
/// logdet martingale test must fail on them (negative control).
std::vector<PathSummary> frozen_control_paths(const Eigen::VectorXd& x0, double ghat_x0,
                                              const std::vector<double>& times, int n);

// ---------------------------------------------------------------------------
// Battery
// ---------------------------------------------------------------------------

struct BatteryConfig {
    std::uint64_t seed = 7;
    std::string only;          // substring filter on entry names; empty = all
    std::string artifact_dir;  // when set, fields/dumps/reports are written here
    int threads = 0;
    bool quick = false;        // reduced path counts (smoke mode)
};

McReport run_battery(const BatteryConfig& cfg);

}  // namespace winmart
