#pragma once

// Win-martingale path simulation in the log-transformed clock
//   t = 1 - e^{-u/2},  u in [0, inf),
// in which the optimal dynamics become the autonomous SDE
//   dY = sqrt((hess g(Y))^{-1}) dW_u,
// stepped by Euler-Maruyama with a fixed step h_u. The original-time
// instantaneous covariance is Sigma*(t,x) = 2 (hess g(x))^{-1} / (1-t).
//
// Baselines: the explicit 1D diffusion dM = M(1-M) dW_u and its
// two-factor product lift onto the 2D simplex (independent drivers).
//
// Paths are reproducible from (master seed, path index) alone; aggregation
// over paths is done in index order, so results do not depend on the number
// of worker threads.

#include "winmart/field.hpp"
#include "winmart/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

namespace winmart {

enum class PathKind { Aldous, Logistic1d, ProductLift };

const char* to_string(PathKind kind);

struct SimConfig {
    double h_u = 1e-3;       // step in transformed time
    double u_max = 40.0;     // horizon in transformed time
    double g_stop = 8.0;     // absorption threshold on ghat
    double r_snap = 0.1;     // vertex snap radius
    std::uint64_t seed = 1;  // master seed (mandatory, no silent entropy)
    std::int64_t paths = 20000;
    bool barrier_fallback = false;  // continue outside the solved region with
                                    // the barrier Hessian / ghat = w - log(d+1)/2
    int threads = 0;                // 0 = hardware concurrency
    std::vector<double> snapshot_times = {0.25, 0.5, 0.75, 0.9};
    double floor_eps = 1e-12;
    int max_bisect = 20;

    void validate(const GradHessField* field) const;
};

/// Diffusion model: the solved field inside its evaluatable region, the
/// explicit barrier asymptotics outside it when fallback is enabled.
class DiffusionProvider {
public:
    DiffusionProvider(const GradHessField* field, bool fallback, int dim,
                      double floor_eps = 1e-12);

    int dim() const { return dim_; }
    bool usable(const Eigen::VectorXd& x) const;
    /// Model jet at x (ghat in out.value); `fallback` reports which branch
    /// fired. Reuses out's storage. Throws OutOfRegion when x is unusable.
    void jet(const Eigen::VectorXd& x, FieldJet& out, bool& fallback) const;
    double ghat(const Eigen::VectorXd& x) const;

private:
    const GradHessField* field_;
    bool fallback_;
    int dim_;
    double floor_;
};

/// Symmetric PSD square root (closed form for d <= 2).
Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& a);
/// Inverse of an SPD matrix; throws DomainError when not PD.
Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& h);

struct SigmaStar {
    Eigen::MatrixXd sigma;  // 2 (hess g)^{-1} / (1-t)
    Eigen::MatrixXd root;   // its symmetric square root
};

/// Optimal instantaneous covariance at (t,x) through the solved field.
SigmaStar sigma_star(double t, const Eigen::VectorXd& x, const GradHessField& field);

struct StepRecord {
    double u = 0;
    Eigen::VectorXd y;
    double logdet_sigma = 0;  // log det Sigma*(t_k, y_k) of the realized diffusion
    bool fallback = false;
};

struct Snapshot {
    double u = 0;
    double one_minus_t = 1;
    Eigen::VectorXd y;
    double ghat = 0;
    bool fallback = false;
};

struct PathSummary {
    std::int64_t path_index = 0;
    int terminal = -1;  // vertex index 0..d, or -1 when censored
    bool censored = true;
    double u_stop = 0;
    double one_minus_t_stop = 1;
    Eigen::VectorXd y_stop;
    double ghat_stop = 0;
    double objective = 0;    // left-point quadrature plus tail correction
    double tail = 0;         // closed-form remainder (Aldous paths)
    double trunc_bound = 0;  // (1-t_stop)|integrand(stop)| for baselines
    Eigen::MatrixXd int_cov; // realized sum of Sigma* dt plus the exact
                             // martingale tail at the stop point
    std::vector<Snapshot> snaps;  // frozen at the stop time if reached earlier
    std::int64_t steps = 0;
    std::int64_t fallback_steps = 0;
    int bisections = 0;
};

struct PathSample {
    std::int64_t path_index = 0;
    PathKind kind = PathKind::Aldous;
    std::vector<StepRecord> steps;
    PathSummary summary;
};

/// One full path with its trajectory (field may be null for baselines when
/// barrier_fallback is set).
PathSample simulate_path(PathKind kind, const Eigen::VectorXd& x0, const SimConfig& cfg,
                         const GradHessField* field, std::int64_t path_index);

/// Monte Carlo batch; summaries indexed by path, independent of threading.
std::vector<PathSummary> simulate_many(PathKind kind, const Eigen::VectorXd& x0,
                                       const SimConfig& cfg, const GradHessField* field);

/// Objective of one recorded path (left-point rule + tail correction).
double objective(const PathSample& path);

/// CSV dump, one record per step:
/// "path,k,u,t,y1..yd,logdet_sigma" with a header line. Sequential by design.
void dump_paths_csv(std::ostream& out, PathKind kind, const Eigen::VectorXd& x0,
                    const SimConfig& cfg, const GradHessField* field);

}  // namespace winmart
