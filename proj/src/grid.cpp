#include "winmart/grid.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>

namespace winmart {

namespace {

// Offsets of the full stencil: axis pairs then diagonal pairs, in the order
// documented in Grid::stencil().
std::vector<Eigen::VectorXi> stencil_offsets(int d) {
    std::vector<Eigen::VectorXi> offs;
    for (int a = 0; a < d; ++a) {
        Eigen::VectorXi o = Eigen::VectorXi::Zero(d);
        o[a] = 1;
        offs.push_back(o);
        offs.push_back(-o);
    }
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            Eigen::VectorXi o = Eigen::VectorXi::Zero(d);
            o[a] = 1; o[b] = 1;
            offs.push_back(o);          // ++
            offs.push_back(-o);         // --
            o[b] = -1;
            offs.push_back(o);          // +-
            offs.push_back(-o);         // -+
        }
    }
    return offs;
}

bool lat_in_simplex(const Eigen::VectorXi& lat, double h) {
    if (lat.minCoeff() < 1) return false;
    return double(lat.sum()) * h < 1.0;
}

double w_at(const Eigen::VectorXi& lat, double h) {
    Eigen::VectorXd x = lat.cast<double>() * h;
    return barrier_value(x);
}

// log det(0.5 H) for an SPD matrix; returns false if H is not PD.
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

std::int64_t Grid::flatten(const Eigen::VectorXi& lat) const {
    std::int64_t f = 0;
    for (int a = 0; a < dim_; ++a) f = f * box_ + lat[a];
    return f;
}

Index Grid::node_at(const Eigen::VectorXi& lat) const {
    if (lat.minCoeff() < 0 || lat.maxCoeff() >= box_) return -1;
    return raster_[size_t(flatten(lat))];
}

Index Grid::node_at(const int* lat) const {
    std::int64_t f = 0;
    for (int a = 0; a < dim_; ++a) {
        if (lat[a] < 0 || lat[a] >= box_) return -1;
        f = f * box_ + lat[a];
    }
    return raster_[size_t(f)];
}

Grid Grid::build(int dim, SublevelSpec spec, double h) {
    if (dim < 1) throw std::invalid_argument("Grid::build: dim must be >= 1");
    if (!(h > 0)) throw std::invalid_argument("Grid::build: h must be > 0");
    if (spec.empty(dim))
        throw DomainError("Grid::build: sublevel domain is empty (level <= 2(d+1)log(d+1))");

    Grid g;
    g.dim_ = dim;
    g.level_ = spec.level;
    g.h_ = h;
    g.box_ = Index(std::floor(1.0 / h)) + 1;

    const double box_cells = std::pow(double(g.box_), dim);
    if (box_cells > 2e8)
        throw std::invalid_argument("Grid::build: lattice too fine for the dense index");

    const auto offs = stencil_offsets(dim);

    // Pass 1: interior nodes.
    std::vector<Eigen::VectorXi> interior;
    Eigen::VectorXi lat = Eigen::VectorXi::Ones(dim);
    const Index nlat = g.box_;
    std::vector<char> is_interior(size_t(std::llround(box_cells)), 0);
    // odometer over [1, nlat)^d restricted to the simplex
    while (true) {
        if (lat_in_simplex(lat, h)) {
            const double w0 = w_at(lat, h);
            if (w0 < spec.level) {
                bool ok = true;
                for (const auto& o : offs) {
                    if (!lat_in_simplex(lat + o, h)) { ok = false; break; }
                }
                if (ok) {
                    // discrete Hessian of w
                    Eigen::MatrixXd H(dim, dim);
                    for (int a = 0; a < dim; ++a) {
                        const double wp = w_at(lat + offs[2 * a], h);
                        const double wm = w_at(lat + offs[2 * a + 1], h);
                        H(a, a) = (wp + wm - 2 * w0) / (h * h);
                    }
                    int base = 2 * dim;
                    for (int a = 0; a < dim; ++a) {
                        for (int b = a + 1; b < dim; ++b) {
                            const double pp = w_at(lat + offs[base + 0], h);
                            const double mm = w_at(lat + offs[base + 1], h);
                            const double pm = w_at(lat + offs[base + 2], h);
                            const double mp = w_at(lat + offs[base + 3], h);
                            H(a, b) = H(b, a) = (pp + mm - pm - mp) / (4 * h * h);
                            base += 4;
                        }
                    }
                    double ld;
                    if (logdet_half(H, ld) && ld <= w0 &&
                        ld >= w0 - std::log(double(dim + 1))) {
                        interior.push_back(lat);
                        std::int64_t f = 0;
                        for (int a = 0; a < dim; ++a) f = f * g.box_ + lat[a];
                        is_interior[size_t(f)] = 1;
                    }
                }
            }
        }
        // advance odometer
        int a = dim - 1;
        while (a >= 0) {
            ++lat[a];
            if (lat[a] < nlat) break;
            lat[a] = 1;
            --a;
        }
        if (a < 0) break;
    }

    if (interior.empty())
        throw DomainError("Grid::build: no interior nodes (domain empty at this spacing)");

    // Pass 2: layer nodes = stencil neighbors of interior nodes not interior.
    std::vector<Eigen::VectorXi> nodes = interior;
    {
        std::vector<char> seen = is_interior;
        for (const auto& p : interior) {
            for (const auto& o : offs) {
                Eigen::VectorXi q = p + o;
                std::int64_t f = 0;
                for (int a = 0; a < dim; ++a) f = f * g.box_ + q[a];
                if (!seen[size_t(f)]) {
                    seen[size_t(f)] = 1;
                    nodes.push_back(q);
                }
            }
        }
    }

    // Row-major lattice order: lexicographic, first axis major.
    std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) {
        for (Index k = 0; k < a.size(); ++k) {
            if (a[k] != b[k]) return a[k] < b[k];
        }
        return false;
    });

    const Index n = Index(nodes.size());
    g.lat_.resize(dim, n);
    g.kind_.resize(size_t(n));
    g.interior_rank_.assign(size_t(n), -1);
    g.raster_.assign(size_t(std::llround(box_cells)), -1);
    for (Index i = 0; i < n; ++i) {
        g.lat_.col(i) = nodes[size_t(i)];
        const std::int64_t f = g.flatten(nodes[size_t(i)]);
        g.raster_[size_t(f)] = i;
        g.kind_[size_t(i)] = is_interior[size_t(f)] ? NodeKind::Interior : NodeKind::Layer;
    }
    for (Index i = 0; i < n; ++i) {
        if (g.kind_[size_t(i)] == NodeKind::Interior) {
            g.interior_rank_[size_t(i)] = Index(g.interior_nodes_.size());
            g.interior_nodes_.push_back(i);
        }
    }

    // Stencil ids per interior rank.
    const int ssz = g.stencil_size();
    g.stencil_.resize(g.interior_nodes_.size() * size_t(ssz));
    for (size_t r = 0; r < g.interior_nodes_.size(); ++r) {
        const Eigen::VectorXi p = g.lat_.col(g.interior_nodes_[r]);
        for (int k = 0; k < ssz; ++k) {
            const Index id = g.node_at(p + offs[size_t(k)]);
            g.stencil_[r * size_t(ssz) + size_t(k)] = id;
        }
    }

    // Coarseness check: widest axis extent of the interior set.
    Index ext = 0;
    for (int a = 0; a < dim; ++a) {
        int lo = g.box_, hi = 0;
        for (Index i : g.interior_nodes_) {
            lo = std::min(lo, int(g.lat_(a, i)));
            hi = std::max(hi, int(g.lat_(a, i)));
        }
        ext = std::max(ext, Index(hi - lo + 1));
    }
    g.max_extent_ = ext;
    if (ext < 10)
        throw std::invalid_argument("Grid::build: h too coarse (< 10 nodes across the domain)");

    return g;
}

void discrete_hessian(const Grid& grid, const Eigen::VectorXd& values, Index rank,
                      Eigen::MatrixXd& H) {
    const int d = grid.dim();
    const double h2 = grid.h() * grid.h();
    const Index* st = grid.stencil(rank);
    const Index node = grid.interior_nodes()[size_t(rank)];
    const double c = values[node];
    H.resize(d, d);
    for (int a = 0; a < d; ++a)
        H(a, a) = (values[st[2 * a]] + values[st[2 * a + 1]] - 2 * c) / h2;
    int base = 2 * d;
    for (int a = 0; a < d; ++a) {
        for (int b = a + 1; b < d; ++b) {
            H(a, b) = H(b, a) = (values[st[base]] + values[st[base + 1]] -
                                 values[st[base + 2]] - values[st[base + 3]]) /
                                (4 * h2);
            base += 4;
        }
    }
}

void discrete_gradient(const Grid& grid, const Eigen::VectorXd& values, Index rank,
                       Eigen::VectorXd& grad) {
    const int d = grid.dim();
    const Index* st = grid.stencil(rank);
    grad.resize(d);
    for (int a = 0; a < d; ++a)
        grad[a] = (values[st[2 * a]] - values[st[2 * a + 1]]) / (2 * grid.h());
}

}  // namespace winmart
