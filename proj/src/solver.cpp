#include "winmart/solver.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <chrono>
#include <cmath>
#include <limits>

namespace winmart {

namespace {

bool logdet_half(const Eigen::MatrixXd& H, double& out) {
    const Index d = H.rows();
    if (d == 1) {
        if (H(0, 0) <= 0) return false;
        out = std::log(0.5 * H(0, 0));
        return true;
    }
    if (d == 2) {
        const double det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
        if (H(0, 0) <= 0 || det <= 0) return false;
        out = std::log(0.25 * det);
        return true;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(H);
    if (llt.info() != Eigen::Success) return false;
    out = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum() -
          double(d) * std::log(2.0);
    return true;
}

// Residual vector; false if the discrete Hessian loses positivity anywhere.
bool residual(const Grid& g, const Eigen::VectorXd& u, Eigen::VectorXd& F) {
    Eigen::MatrixXd H;
    F.resize(g.num_interior());
    for (Index r = 0; r < g.num_interior(); ++r) {
        discrete_hessian(g, u, r, H);
        double ld;
        if (!logdet_half(H, ld)) return false;
        F[r] = u[g.interior_nodes()[size_t(r)]] - ld;
    }
    return true;
}

// H^{-1}, with eigenvalue clamping at lambda_floor if H is not PD.
void clamped_inverse(const Eigen::MatrixXd& H, double lambda_floor, Eigen::MatrixXd& Minv) {
    const Index d = H.rows();
    if (d == 1) {
        Minv.resize(1, 1);
        Minv(0, 0) = 1.0 / std::max(H(0, 0), lambda_floor);
        return;
    }
    if (d == 2) {
        const double det = H(0, 0) * H(1, 1) - H(0, 1) * H(1, 0);
        if (H(0, 0) > 0 && det > 0) {
            Minv.resize(2, 2);
            Minv << H(1, 1), -H(0, 1), -H(1, 0), H(0, 0);
            Minv /= det;
            return;
        }
    } else {
        Eigen::LLT<Eigen::MatrixXd> llt(H);
        if (llt.info() == Eigen::Success) {
            Minv = llt.solve(Eigen::MatrixXd::Identity(d, d));
            return;
        }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
    const Eigen::VectorXd lam = es.eigenvalues().cwiseMax(lambda_floor);
    Minv = es.eigenvectors() * lam.cwiseInverse().asDiagonal() *
           es.eigenvectors().transpose();
}

}  // namespace

void SolveConfig::validate(int dim) const {
    if (dim < 1) throw std::invalid_argument("SolveConfig: dim must be >= 1");
    if (levels.empty()) throw std::invalid_argument("SolveConfig: no levels");
    for (size_t k = 1; k < levels.size(); ++k)
        if (!(levels[k] > levels[k - 1]))
            throw std::invalid_argument("SolveConfig: levels must be strictly increasing");
    if (!(tol_res > 0)) throw std::invalid_argument("SolveConfig: tol_res must be > 0");
    if (!h_per_level.empty() && h_per_level.size() != levels.size())
        throw std::invalid_argument("SolveConfig: h_per_level size mismatch");
    for (size_t k = 0; k < levels.size(); ++k)
        if (!(level_h(k) > 0)) throw std::invalid_argument("SolveConfig: h must be > 0");
}

std::pair<ScalarField, LevelReport> solve_dirichlet(std::shared_ptr<const Grid> grid,
                                                    ScalarField init,
                                                    const SolveConfig& cfg) {
    const Grid& g = *grid;
    const int d = g.dim();
    const double h2 = g.h() * g.h();
    const Index nun = g.num_interior();

    if (sandwich_violations(init) != 0)
        throw std::invalid_argument("solve_dirichlet: init violates the sandwich");

    Eigen::VectorXd u = init.values();
    Eigen::VectorXd F;
    if (!residual(g, u, F))
        throw SolveError("solve_dirichlet: init is not discretely convex",
                         std::numeric_limits<double>::quiet_NaN());

    LevelReport rep;
    rep.level = g.level();
    rep.h = g.h();
    rep.interior_nodes = nun;

    Eigen::SparseMatrix<double> J(nun, nun);
    std::vector<Eigen::Triplet<double>> trips;
    Eigen::MatrixXd H, Minv;
    Eigen::VectorXd Fn;

    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        const double res = F.cwiseAbs().maxCoeff();
        rep.residual_history.push_back(res);
        if (res <= cfg.tol_res) break;

        // Assemble J = I - d(log det(0.5 D2_h u))/du.
        trips.clear();
        for (Index r = 0; r < nun; ++r) {
            discrete_hessian(g, u, r, H);
            clamped_inverse(H, cfg.lambda_floor, Minv);
            const Index* st = g.stencil(r);
            const Index center = g.interior_nodes()[size_t(r)];
            double diag = 1.0;
            auto add = [&](Index node, double v) {
                if (node == center) { diag += v; return; }
                const Index rr = g.interior_rank(node);
                if (rr >= 0) trips.emplace_back(int(r), int(rr), v);
            };
            for (int a = 0; a < d; ++a) {
                diag += 2.0 * Minv(a, a) / h2;
                add(st[2 * a], -Minv(a, a) / h2);
                add(st[2 * a + 1], -Minv(a, a) / h2);
            }
            int base = 2 * d;
            for (int a = 0; a < d; ++a) {
                for (int b = a + 1; b < d; ++b) {
                    const double c = Minv(a, b) / (2 * h2);
                    add(st[base + 0], -c);
                    add(st[base + 1], -c);
                    add(st[base + 2], c);
                    add(st[base + 3], c);
                    base += 4;
                }
            }
            trips.emplace_back(int(r), int(r), diag);
        }
        J.setFromTriplets(trips.begin(), trips.end());

        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(J);
        if (lu.info() != Eigen::Success)
            throw SolveError("solve_dirichlet: singular Newton system", res);
        const Eigen::VectorXd step = lu.solve(-F);

        // Residual-monotone backtracking; candidates must stay discretely convex.
        double lambda = 1.0;
        bool accepted = false;
        for (int bt = 0; bt <= cfg.max_backtrack; ++bt, lambda *= 0.5) {
            Eigen::VectorXd un = u;
            for (Index r = 0; r < nun; ++r)
                un[g.interior_nodes()[size_t(r)]] += lambda * step[r];
            if (!residual(g, un, Fn)) continue;
            if (Fn.cwiseAbs().maxCoeff() < res) {
                u = std::move(un);
                F = Fn;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (res <= 100 * cfg.tol_res) break;  // at the floating-point floor
            throw SolveError("solve_dirichlet: Newton stalled", res);
        }
    }

    rep.iterations = it;
    if (it == cfg.max_iter) {
        const double res = F.cwiseAbs().maxCoeff();
        if (res > cfg.tol_res)
            throw SolveError("solve_dirichlet: Newton did not converge", res);
    }

    ScalarField out(std::move(grid), std::move(u));
    rep.final_residual = residual_max(out);
    rep.sandwich_violations = sandwich_violations(out);
    return {std::move(out), std::move(rep)};
}

std::pair<GradHessField, SolveReport> solve_nested(int dim, const SolveConfig& cfg) {
    cfg.validate(dim);
    const auto t0 = std::chrono::steady_clock::now();

    SolveReport rep;
    std::unique_ptr<GradHessField> prev;
    std::unique_ptr<GradHessField> current;
    std::shared_ptr<const Grid> first_grid;

    for (size_t k = 0; k < cfg.levels.size(); ++k) {
        auto grid = std::make_shared<const Grid>(
            Grid::build(dim, SublevelSpec{cfg.levels[k]}, cfg.level_h(k)));
        auto [field, lrep] = solve_dirichlet(grid, initial_field(grid, cfg.init), cfg);
        rep.levels.push_back(std::move(lrep));
        if (k == 0) first_grid = grid;

        prev = std::move(current);
        current = std::make_unique<GradHessField>(std::move(field));

        if (prev) {
            // sup difference over the level-1 interior region (both fields
            // evaluatable); exact node match when spacings agree.
            double sup = 0.0;
            const bool same_h = prev->h() == current->h();
            for (Index node : first_grid->interior_nodes()) {
                const Eigen::VectorXd x = first_grid->coords(node);
                if (same_h) {
                    const Eigen::VectorXi lat = first_grid->lat(node);
                    const Index ia = prev->grid().node_at(lat);
                    const Index ib = current->grid().node_at(lat);
                    if (ia < 0 || ib < 0) continue;
                    sup = std::max(sup, std::abs(prev->base().values()[ia] -
                                                 current->base().values()[ib]));
                } else if (prev->in_region(x) && current->in_region(x)) {
                    sup = std::max(sup, std::abs(prev->value(x) - current->value(x)));
                }
            }
            rep.stabilization.push_back(sup);
        }
    }

    rep.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return {std::move(*current), std::move(rep)};
}

}  // namespace winmart
