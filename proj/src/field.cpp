#include "winmart/field.hpp"

#include <Eigen/Cholesky>

#include <cmath>

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

}  // namespace

ScalarField initial_field(std::shared_ptr<const Grid> grid, InitKind kind) {
    const Grid& g = *grid;
    if (kind == InitKind::Auto)
        kind = g.dim() == 1 ? InitKind::SubSolution : InitKind::SuperSolution;
    Eigen::VectorXd v(g.num_nodes());
    const double shift = std::log(double(g.dim() + 1));
    for (Index i = 0; i < g.num_nodes(); ++i) {
        const double w = barrier_value(g.coords(i));
        v[i] = (kind == InitKind::SubSolution && g.interior(i)) ? w - shift : w;
    }
    return ScalarField(std::move(grid), std::move(v));
}

double residual_max(const ScalarField& f) {
    const Grid& g = f.grid();
    Eigen::MatrixXd H;
    double r = 0.0;
    for (Index rank = 0; rank < g.num_interior(); ++rank) {
        discrete_hessian(g, f.values(), rank, H);
        double ld;
        if (!logdet_half(H, ld))
            throw DomainError("residual_max: discrete Hessian not positive definite");
        const Index node = g.interior_nodes()[size_t(rank)];
        r = std::max(r, std::abs(f.values()[node] - ld));
    }
    return r;
}

Index sandwich_violations(const ScalarField& f) {
    const Grid& g = f.grid();
    const double shift = std::log(double(g.dim() + 1));
    Index bad = 0;
    for (Index i = 0; i < g.num_nodes(); ++i) {
        const double w = barrier_value(g.coords(i));
        const double u = f.values()[i];
        if (u > w || u < w - shift) ++bad;
    }
    return bad;
}

GradHessField::GradHessField(ScalarField field) : field_(std::move(field)) {
    const Grid& g = field_.grid();
    const int d = g.dim();
    const Index ni = g.num_interior();
    node_grad_.resize(d, ni);
    node_hess_.resize(d * d, ni);
    Eigen::VectorXd grad;
    Eigen::MatrixXd H;
    for (Index r = 0; r < ni; ++r) {
        discrete_gradient(g, field_.values(), r, grad);
        discrete_hessian(g, field_.values(), r, H);
        node_grad_.col(r) = grad;
        node_hess_.col(r) = Eigen::Map<const Eigen::VectorXd>(H.data(), d * d);
    }
}

bool GradHessField::locate(const Eigen::VectorXd& x, Eigen::VectorXi& base,
                           Eigen::VectorXd& frac) const {
    const Grid& g = field_.grid();
    const int d = g.dim();
    if (x.size() != d) throw std::invalid_argument("GradHessField: dimension mismatch");
    base.resize(d);
    frac.resize(d);
    for (int a = 0; a < d; ++a) {
        const double y = x[a] / g.h();
        double fl = std::floor(y);
        double fr = y - fl;
        // nudge exact-node hits into a consistent cell
        if (fr >= 1.0) { fl += 1.0; fr = 0.0; }
        if (fl < 0) return false;
        base[a] = int(fl);
        frac[a] = fr;
    }
    return true;
}

bool GradHessField::in_region(const Eigen::VectorXd& x) const {
    const Grid& g = field_.grid();
    const int d = g.dim();
    if (x.size() != d) throw std::invalid_argument("GradHessField: dimension mismatch");
    if (d > 8) throw std::invalid_argument("GradHessField: dimension too large");
    int base[8];
    for (int a = 0; a < d; ++a) {
        const double y = x[a] / g.h();
        double fl = std::floor(y);
        if (y - fl >= 1.0) fl += 1.0;
        if (fl < 0) return false;
        base[a] = int(fl);
    }
    int corner[8];
    for (int mask = 0; mask < (1 << d); ++mask) {
        for (int a = 0; a < d; ++a) corner[a] = base[a] + ((mask >> a) & 1);
        const Index id = g.node_at(corner);
        if (id < 0 || !g.interior(id)) return false;
    }
    return true;
}

double GradHessField::value(const Eigen::VectorXd& x) const {
    const Grid& g = field_.grid();
    Eigen::VectorXi base;
    Eigen::VectorXd frac;
    if (!locate(x, base, frac)) throw OutOfRegion("field value: query outside solved region");
    const int d = g.dim();
    Eigen::VectorXi corner(d);
    double acc = 0.0;
    for (int mask = 0; mask < (1 << d); ++mask) {
        double wgt = 1.0;
        for (int a = 0; a < d; ++a) {
            const int bit = (mask >> a) & 1;
            corner[a] = base[a] + bit;
            wgt *= bit ? frac[a] : 1.0 - frac[a];
        }
        const Index id = g.node_at(corner);
        if (id < 0 || !g.interior(id))
            throw OutOfRegion("field value: query outside solved region");
        acc += wgt * field_.values()[id];
    }
    return acc;
}

bool GradHessField::try_eval(const Eigen::VectorXd& x, FieldJet& out) const {
    const Grid& g = field_.grid();
    const int d = g.dim();
    if (x.size() != d) throw std::invalid_argument("GradHessField: dimension mismatch");

    // locate the cell (kept allocation-free for the simulation hot loop)
    int base[8];
    double frac[8];
    if (d > 8) throw std::invalid_argument("GradHessField: dimension too large");
    for (int a = 0; a < d; ++a) {
        const double y = x[a] / g.h();
        double fl = std::floor(y);
        double fr = y - fl;
        if (fr >= 1.0) { fl += 1.0; fr = 0.0; }
        if (fl < 0) return false;
        base[a] = int(fl);
        frac[a] = fr;
    }

    Index ranks[256];
    double weights[256];
    double cvals[256];
    int corner[8];
    for (int mask = 0; mask < (1 << d); ++mask) {
        double wgt = 1.0;
        for (int a = 0; a < d; ++a) {
            const int bit = (mask >> a) & 1;
            corner[a] = base[a] + bit;
            wgt *= bit ? frac[a] : 1.0 - frac[a];
        }
        const Index id = g.node_at(corner);
        if (id < 0 || !g.interior(id)) return false;
        ranks[mask] = g.interior_rank(id);
        weights[mask] = wgt;
        cvals[mask] = field_.values()[id];
    }

    out.value = 0.0;
    out.grad.resize(d);
    out.grad.setZero();
    out.hess.resize(d, d);
    Eigen::Map<Eigen::VectorXd> hflat(out.hess.data(), d * d);
    hflat.setZero();
    for (int mask = 0; mask < (1 << d); ++mask) {
        out.value += weights[mask] * cvals[mask];
        out.grad += weights[mask] * node_grad_.col(ranks[mask]);
        hflat += weights[mask] * node_hess_.col(ranks[mask]);
    }
    // symmetrize in place
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            const double m = 0.5 * (out.hess(a, b) + out.hess(b, a));
            out.hess(a, b) = out.hess(b, a) = m;
        }
    }
    return true;
}

FieldJet GradHessField::eval(const Eigen::VectorXd& x) const {
    FieldJet jet;
    if (!try_eval(x, jet)) throw OutOfRegion("field eval: query outside solved region");
    return jet;
}

void GradHessField::node_jet(Index rank, double& value, Eigen::VectorXd& grad,
                             Eigen::MatrixXd& hess) const {
    const Grid& g = field_.grid();
    const int d = g.dim();
    const Index node = g.interior_nodes()[size_t(rank)];
    value = field_.values()[node];
    grad = node_grad_.col(rank);
    hess = Eigen::Map<const Eigen::MatrixXd>(node_hess_.col(rank).data(), d, d);
}

}  // namespace winmart
