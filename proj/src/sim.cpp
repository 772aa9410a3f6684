#include "winmart/sim.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <ostream>
#include <thread>

namespace winmart {

namespace {

double logdet_spd(const Eigen::MatrixXd& a) {
    const Index d = a.rows();
    if (d == 1) {
        if (a(0, 0) <= 0) throw DomainError("logdet_spd: not PD");
        return std::log(a(0, 0));
    }
    if (d == 2) {
        const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        if (a(0, 0) <= 0 || det <= 0) throw DomainError("logdet_spd: not PD");
        return std::log(det);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw DomainError("logdet_spd: not PD");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Per-kind stepping state. ProductLift tracks its two scalar factors; the
// simplex state y is derived as (m x, m (1-x)).
struct PathState {
    Eigen::VectorXd y;
    double m = 0, x = 0;  // ProductLift factors
};

PathState start_state(PathKind kind, const Eigen::VectorXd& x0) {
    PathState st;
    st.y = x0;
    if (kind == PathKind::ProductLift) {
        if (x0.size() != 2)
            throw std::invalid_argument("ProductLift baseline requires d = 2");
        st.m = x0.sum();
        st.x = x0[0] / st.m;
    }
    if (kind == PathKind::Logistic1d && x0.size() != 1)
        throw std::invalid_argument("Logistic1d baseline requires d = 1");
    return st;
}

// log det Sigma*(t,y) of the diffusion the simulator actually uses, with
// the ProductLift factors reconstructed from y so that record-based and
// streaming evaluations agree bitwise.
double logdet_sigma_of(PathKind kind, double u, const Eigen::VectorXd& y,
                       const Eigen::MatrixXd& hess) {
    const int d = int(y.size());
    switch (kind) {
        case PathKind::Aldous:
            // Sigma* = 2 H^{-1} e^{u/2}
            return d * (std::log(2.0) + u / 2) - logdet_spd(hess);
        case PathKind::Logistic1d:
            return std::log(2.0) + u / 2 + 2 * std::log(y[0] * (1 - y[0]));
        case PathKind::ProductLift: {
            const double m = y.sum();
            const double x = y[0] / m;
            const double s2m = m * (1 - m) * m * (1 - m);
            const double s2x = x * (1 - x) * x * (1 - x);
            const double m2 = m * m;
            const double s11 = m2 * s2x + x * x * s2m;
            const double s12 = -m2 * s2x + x * (1 - x) * s2m;
            const double s22 = m2 * s2x + (1 - x) * (1 - x) * s2m;
            // common factor 2 e^{u/2} per entry
            return 2 * (std::log(2.0) + u / 2) + std::log(s11 * s22 - s12 * s12);
        }
    }
    throw std::logic_error("unreachable");
}

// Sigma*(t,y) written into a preallocated matrix.
void sigma_fill(PathKind kind, double u, const Eigen::VectorXd& y,
                const Eigen::MatrixXd& hess, Eigen::MatrixXd& sigma) {
    const double scale = 2.0 * std::exp(u / 2);
    switch (kind) {
        case PathKind::Aldous: {
            const Index d = hess.rows();
            if (d == 1) {
                sigma(0, 0) = scale * (1.0 / hess(0, 0));
            } else if (d == 2) {
                const double det =
                    hess(0, 0) * hess(1, 1) - hess(0, 1) * hess(1, 0);
                if (hess(0, 0) <= 0 || det <= 0)
                    throw DomainError("sigma_fill: Hessian not PD");
                sigma(0, 0) = scale * (hess(1, 1) / det);
                sigma(0, 1) = sigma(1, 0) = scale * (-hess(0, 1) / det);
                sigma(1, 1) = scale * (hess(0, 0) / det);
            } else {
                sigma = scale * spd_inverse(hess);
            }
            return;
        }
        case PathKind::Logistic1d: {
            const double v = y[0] * (1 - y[0]);
            sigma(0, 0) = scale * v * v;
            return;
        }
        case PathKind::ProductLift: {
            const double m = y.sum();
            const double x = y[0] / m;
            const double s2m = m * (1 - m) * m * (1 - m);
            const double s2x = x * (1 - x) * x * (1 - x);
            sigma(0, 0) = scale * (m * m * s2x + x * x * s2m);
            sigma(0, 1) = sigma(1, 0) = scale * (-m * m * s2x + x * (1 - x) * s2m);
            sigma(1, 1) = scale * (m * m * s2x + (1 - x) * (1 - x) * s2m);
            return;
        }
    }
    throw std::logic_error("unreachable");
}

}  // namespace

const char* to_string(PathKind kind) {
    switch (kind) {
        case PathKind::Aldous: return "aldous";
        case PathKind::Logistic1d: return "logistic1d";
        case PathKind::ProductLift: return "productlift";
    }
    return "?";
}

void SimConfig::validate(const GradHessField* field) const {
    if (!(h_u > 0)) throw std::invalid_argument("SimConfig: h_u must be > 0");
    if (!(u_max > 0)) throw std::invalid_argument("SimConfig: u_max must be > 0");
    if (!(r_snap > 0)) throw std::invalid_argument("SimConfig: r_snap must be > 0");
    if (paths < 1) throw std::invalid_argument("SimConfig: paths must be >= 1");
    if (!barrier_fallback) {
        if (!field)
            throw std::invalid_argument("SimConfig: need a field unless barrier_fallback is set");
        if (g_stop > field->level() - 1.0)
            throw std::invalid_argument(
                "SimConfig: g_stop must stay below the solved level minus a margin "
                "(enable barrier_fallback to go further)");
    }
}

DiffusionProvider::DiffusionProvider(const GradHessField* field, bool fallback, int dim,
                                     double floor_eps)
    : field_(field), fallback_(fallback), dim_(dim), floor_(floor_eps) {
    if (field && field->dim() != dim)
        throw std::invalid_argument("DiffusionProvider: dimension mismatch");
    if (!field && !fallback)
        throw std::invalid_argument("DiffusionProvider: no field and no fallback");
}

bool DiffusionProvider::usable(const Eigen::VectorXd& x) const {
    if (!in_simplex(x, floor_)) return false;
    if (field_ && field_->in_region(x)) return true;
    return fallback_;
}

void DiffusionProvider::jet(const Eigen::VectorXd& x, FieldJet& out,
                            bool& fallback) const {
    if (!in_simplex(x, floor_))
        throw OutOfRegion("DiffusionProvider: state outside the usable region");
    if (field_ && field_->try_eval(x, out)) {
        fallback = false;
        return;
    }
    if (fallback_) {
        // ghat = w - log(d+1)/2 (middle of the sandwich), hess = hess w
        const int d = dim_;
        const double s = slack(x);
        out.value = -2 * x.array().log().sum() - 2 * std::log(s) -
                    0.5 * std::log(double(d + 1));
        out.grad.resize(d);
        out.hess.resize(d, d);
        const double off = 2 / (s * s);
        for (int a = 0; a < d; ++a) {
            out.grad[a] = 2 / s - 2 / x[a];
            for (int b = 0; b < d; ++b) out.hess(a, b) = off;
            out.hess(a, a) += 2 / (x[a] * x[a]);
        }
        fallback = true;
        return;
    }
    throw OutOfRegion("DiffusionProvider: state outside the usable region");
}

double DiffusionProvider::ghat(const Eigen::VectorXd& x) const {
    FieldJet jet;
    bool fb;
    this->jet(x, jet, fb);
    return jet.value;
}

Eigen::MatrixXd spd_sqrt(const Eigen::MatrixXd& a) {
    const Index d = a.rows();
    if (d == 1) {
        if (a(0, 0) < 0) throw DomainError("spd_sqrt: negative");
        return Eigen::MatrixXd::Constant(1, 1, std::sqrt(a(0, 0)));
    }
    if (d == 2) {
        const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(1, 0);
        const double tr = a(0, 0) + a(1, 1);
        if (det < 0 || tr < 0) throw DomainError("spd_sqrt: not PSD");
        const double s = std::sqrt(det);
        const double t = std::sqrt(tr + 2 * s);
        Eigen::MatrixXd r = a;
        r(0, 0) += s;
        r(1, 1) += s;
        return r / t;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
    if (es.eigenvalues().minCoeff() < 0) throw DomainError("spd_sqrt: not PSD");
    return es.operatorSqrt();
}

Eigen::MatrixXd spd_inverse(const Eigen::MatrixXd& h) {
    const Index d = h.rows();
    if (d == 1) {
        if (h(0, 0) <= 0) throw DomainError("spd_inverse: not PD");
        return Eigen::MatrixXd::Constant(1, 1, 1.0 / h(0, 0));
    }
    if (d == 2) {
        const double det = h(0, 0) * h(1, 1) - h(0, 1) * h(1, 0);
        if (h(0, 0) <= 0 || det <= 0) throw DomainError("spd_inverse: not PD");
        Eigen::MatrixXd m(2, 2);
        m << h(1, 1), -h(0, 1), -h(1, 0), h(0, 0);
        return m / det;
    }
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() != Eigen::Success) throw DomainError("spd_inverse: not PD");
    return llt.solve(Eigen::MatrixXd::Identity(d, d));
}

SigmaStar sigma_star(double t, const Eigen::VectorXd& x, const GradHessField& field) {
    if (!(t < 1.0)) throw std::invalid_argument("sigma_star: t must be < 1");
    const FieldJet jet = field.eval(x);
    SigmaStar s;
    s.sigma = (2.0 / (1.0 - t)) * spd_inverse(jet.hess);
    s.root = spd_sqrt(s.sigma);
    return s;
}

namespace {

// Streaming core: walks one path, invoking point(k, u, y, ghat, logdet,
// fallback, sigma) at every recorded state (including the stop state).
template <typename PointFn>
void run_path(PathKind kind, const Eigen::VectorXd& x0, const SimConfig& cfg,
              const DiffusionProvider& provider, std::int64_t path_index,
              PointFn&& point, int& bisections, std::int64_t& fallback_steps) {
    const int d = int(x0.size());
    NormalStream normals(path_stream_seed(cfg.seed, std::uint64_t(path_index)));
    PathState st = start_state(kind, x0);
    if (!provider.usable(st.y))
        throw OutOfRegion("simulate: start point outside the usable region");

    const std::int64_t max_steps = std::int64_t(std::ceil(cfg.u_max / cfg.h_u - 1e-9));
    const double sqh = std::sqrt(cfg.h_u);

    bisections = 0;
    fallback_steps = 0;

    FieldJet jet;
    Eigen::MatrixXd sigma(d, d);
    Eigen::MatrixXd root_nd;  // d >= 3 only
    Eigen::VectorXd xi(d);
    PathState next = st;
    bool fb = false;
    std::int64_t k = 0;

    while (true) {
        const double u = double(k) * cfg.h_u;
        provider.jet(st.y, jet, fb);
        if (fb) ++fallback_steps;
        const double logdet = logdet_sigma_of(kind, u, st.y, jet.hess);
        sigma_fill(kind, u, st.y, jet.hess, sigma);
        point(k, u, st.y, jet.value, logdet, fb, sigma);

        if (jet.value >= cfg.g_stop || k >= max_steps) break;

        for (int a = 0; a < d; ++a) xi[a] = normals.next();

        // the diffusion factor at the current state (independent of the
        // bisection retries)
        double r00 = 0, r01 = 0, r11 = 0;  // d <= 2 closed forms
        if (kind == PathKind::Aldous) {
            if (d == 1) {
                r00 = std::sqrt(1.0 / jet.hess(0, 0));
            } else if (d == 2) {
                const double det =
                    jet.hess(0, 0) * jet.hess(1, 1) - jet.hess(0, 1) * jet.hess(1, 0);
                if (jet.hess(0, 0) <= 0 || det <= 0)
                    throw DomainError("simulate: field Hessian not PD");
                const double i00 = jet.hess(1, 1) / det;
                const double i01 = -jet.hess(0, 1) / det;
                const double i11 = jet.hess(0, 0) / det;
                const double s = std::sqrt(i00 * i11 - i01 * i01);
                const double t = std::sqrt(i00 + i11 + 2 * s);
                r00 = (i00 + s) / t;
                r01 = i01 / t;
                r11 = (i11 + s) / t;
            } else {
                root_nd = spd_sqrt(spd_inverse(jet.hess));
            }
        }

        // propose, bisecting the Gaussian increment while invalid
        bool ok = false;
        double scale = sqh;
        for (int tries = 0; tries <= cfg.max_bisect; ++tries) {
            if (tries > 0) {
                scale *= 0.5;
                ++bisections;
            }
            switch (kind) {
                case PathKind::Aldous: {
                    if (d == 1) {
                        next.y[0] = st.y[0] + r00 * xi[0] * scale;
                    } else if (d == 2) {
                        next.y[0] = st.y[0] + (r00 * xi[0] + r01 * xi[1]) * scale;
                        next.y[1] = st.y[1] + (r01 * xi[0] + r11 * xi[1]) * scale;
                    } else {
                        next.y = st.y + root_nd * xi * scale;
                    }
                    ok = provider.usable(next.y);
                    break;
                }
                case PathKind::Logistic1d: {
                    const double v = st.y[0] * (1 - st.y[0]);
                    next.y[0] = st.y[0] + v * xi[0] * scale;
                    ok = next.y[0] > cfg.floor_eps && next.y[0] < 1 - cfg.floor_eps &&
                         provider.usable(next.y);
                    break;
                }
                case PathKind::ProductLift: {
                    next.m = st.m + st.m * (1 - st.m) * xi[0] * scale;
                    next.x = st.x + st.x * (1 - st.x) * xi[1] * scale;
                    ok = next.m > cfg.floor_eps && next.m < 1 - cfg.floor_eps &&
                         next.x > cfg.floor_eps && next.x < 1 - cfg.floor_eps;
                    if (ok) {
                        next.y[0] = next.m * next.x;
                        next.y[1] = next.m * (1 - next.x);
                        ok = provider.usable(next.y);
                    }
                    break;
                }
            }
            if (ok) break;
        }
        if (!ok) break;  // stop the path here; the stop state was reported

        st = next;
        ++k;
    }
}

// Streaming accumulator producing a PathSummary; fed by run_path directly or
// by replaying recorded steps, with bitwise-identical results.
class SummaryBuilder {
public:
    SummaryBuilder(PathKind kind, const SimConfig& cfg, int d)
        : kind_(kind), cfg_(cfg), d_(d) {
        int_cov_ = Eigen::MatrixXd::Zero(d, d);
        prev_sigma_.resize(d, d);
        snap_k_.reserve(cfg.snapshot_times.size());
        for (double tstar : cfg.snapshot_times) {
            const double ustar = -2.0 * std::log1p(-tstar);
            snap_k_.push_back(std::int64_t(std::ceil(ustar / cfg.h_u - 1e-9)));
        }
        snaps_.resize(cfg.snapshot_times.size());
        snap_done_.assign(cfg.snapshot_times.size(), false);
    }

    void point(std::int64_t k, double u, const Eigen::VectorXd& y, double ghat,
               double logdet, bool fb, const Eigen::MatrixXd& sigma) {
        if (k > 0) {
            const double dt = std::exp(-prev_u_ / 2) - std::exp(-u / 2);
            quad_ += -prev_logdet_ * dt;
            int_cov_ += prev_sigma_ * dt;
        }
        prev_u_ = u;
        prev_logdet_ = logdet;
        prev_sigma_ = sigma;
        for (size_t j = 0; j < snap_k_.size(); ++j) {
            if (!snap_done_[j] && snap_k_[j] == k) take_snap(j, u, y, ghat, fb);
        }
        last_k_ = k;
        last_u_ = u;
        last_y_ = y;
        last_ghat_ = ghat;
        last_logdet_ = logdet;
        last_fb_ = fb;
    }

    PathSummary finish(std::int64_t path_index, int bisections,
                       std::int64_t fallback_steps) {
        // snapshots not reached before the stop freeze at the stop state
        for (size_t j = 0; j < snap_k_.size(); ++j) {
            if (!snap_done_[j]) take_snap(j, last_u_, last_y_, last_ghat_, last_fb_);
        }
        PathSummary s;
        s.path_index = path_index;
        s.steps = last_k_;
        s.fallback_steps = fallback_steps;
        s.bisections = bisections;
        s.u_stop = last_u_;
        s.one_minus_t_stop = std::exp(-last_u_ / 2);
        s.y_stop = last_y_;
        s.ghat_stop = last_ghat_;

        const auto [nv, dist] = nearest_vertex(last_y_);
        s.censored = dist > cfg_.r_snap;
        s.terminal = s.censored ? -1 : int(nv);

        // exact martingale tail of the covariance budget at the stop point
        int_cov_ -= last_y_ * last_y_.transpose();
        int_cov_.diagonal() += last_y_;
        s.int_cov = std::move(int_cov_);

        if (kind_ == PathKind::Aldous) {
            // E[ int_tau^1 -log det Sigma* dt | F_tau ] = f(tau) + (1-tau) g
            s.tail = s.one_minus_t_stop * (s.ghat_stop - d_ * last_u_ / 2);
            s.trunc_bound = 0;
        } else {
            s.tail = 0;
            s.trunc_bound = s.one_minus_t_stop * std::abs(last_logdet_);
        }
        s.objective = quad_ + s.tail;
        s.snaps = std::move(snaps_);
        return s;
    }

private:
    void take_snap(size_t j, double u, const Eigen::VectorXd& y, double ghat, bool fb) {
        Snapshot& snap = snaps_[j];
        snap.u = u;
        snap.one_minus_t = std::exp(-u / 2);
        snap.y = y;
        snap.ghat = ghat;
        snap.fallback = fb;
        snap_done_[j] = true;
    }

    PathKind kind_;
    const SimConfig& cfg_;
    int d_;
    double quad_ = 0;
    Eigen::MatrixXd int_cov_, prev_sigma_;
    double prev_u_ = 0, prev_logdet_ = 0;
    std::vector<std::int64_t> snap_k_;
    std::vector<Snapshot> snaps_;
    std::vector<char> snap_done_;
    std::int64_t last_k_ = 0;
    double last_u_ = 0, last_ghat_ = 0, last_logdet_ = 0;
    bool last_fb_ = false;
    Eigen::VectorXd last_y_;
};

PathSummary stream_path(PathKind kind, const Eigen::VectorXd& x0, const SimConfig& cfg,
                        const DiffusionProvider& provider, std::int64_t path_index) {
    SummaryBuilder builder(kind, cfg, int(x0.size()));
    int bis = 0;
    std::int64_t fbs = 0;
    run_path(kind, x0, cfg, provider, path_index,
             [&](std::int64_t k, double u, const Eigen::VectorXd& y, double ghat,
                 double logdet, bool fb, const Eigen::MatrixXd& sigma) {
                 builder.point(k, u, y, ghat, logdet, fb, sigma);
             },
             bis, fbs);
    return builder.finish(path_index, bis, fbs);
}

}  // namespace

PathSample simulate_path(PathKind kind, const Eigen::VectorXd& x0, const SimConfig& cfg,
                         const GradHessField* field, std::int64_t path_index) {
    cfg.validate(field);
    DiffusionProvider provider(field, cfg.barrier_fallback, int(x0.size()),
                               cfg.floor_eps);
    PathSample sample;
    sample.path_index = path_index;
    sample.kind = kind;
    int bis = 0;
    std::int64_t fbs = 0;
    run_path(kind, x0, cfg, provider, path_index,
             [&](std::int64_t, double u, const Eigen::VectorXd& y, double,
                 double logdet, bool fb, const Eigen::MatrixXd&) {
                 sample.steps.push_back({u, y, logdet, fb});
             },
             bis, fbs);

    // summary by replaying the records (jets and Sigma* recomputed through the
    // provider); identical to the streaming result by construction
    SummaryBuilder builder(kind, cfg, int(x0.size()));
    FieldJet jet;
    Eigen::MatrixXd sigma(x0.size(), x0.size());
    bool fb = false;
    for (std::int64_t k = 0; k < std::int64_t(sample.steps.size()); ++k) {
        const StepRecord& r = sample.steps[size_t(k)];
        provider.jet(r.y, jet, fb);
        sigma_fill(kind, r.u, r.y, jet.hess, sigma);
        builder.point(k, r.u, r.y, jet.value, r.logdet_sigma, r.fallback, sigma);
    }
    sample.summary = builder.finish(path_index, bis, fbs);
    return sample;
}

std::vector<PathSummary> simulate_many(PathKind kind, const Eigen::VectorXd& x0,
                                       const SimConfig& cfg, const GradHessField* field) {
    cfg.validate(field);
    DiffusionProvider provider(field, cfg.barrier_fallback, int(x0.size()),
                               cfg.floor_eps);

    std::vector<PathSummary> out(size_t(cfg.paths));
    int nthreads = cfg.threads > 0 ? cfg.threads
                                   : int(std::thread::hardware_concurrency());
    nthreads = std::max(1, std::min({nthreads, 64, int(cfg.paths)}));

    std::atomic<std::int64_t> next{0};
    std::exception_ptr error;
    std::mutex error_mx;
    auto worker = [&] {
        try {
            while (true) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= cfg.paths) return;
                out[size_t(i)] = stream_path(kind, x0, cfg, provider, i);
            }
        } catch (...) {
            std::lock_guard<std::mutex> lock(error_mx);
            if (!error) error = std::current_exception();
        }
    };
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(size_t(nthreads));
        for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (error) std::rethrow_exception(error);
    return out;
}

double objective(const PathSample& path) {
    double quad = 0;
    for (size_t k = 0; k + 1 < path.steps.size(); ++k) {
        const double dt = std::exp(-path.steps[k].u / 2) -
                          std::exp(-path.steps[k + 1].u / 2);
        quad += -path.steps[k].logdet_sigma * dt;
    }
    return quad + path.summary.tail;
}

void dump_paths_csv(std::ostream& out, PathKind kind, const Eigen::VectorXd& x0,
                    const SimConfig& cfg, const GradHessField* field) {
    cfg.validate(field);
    out << "path,k";
    out << ",u,t";
    for (int a = 0; a < x0.size(); ++a) out << ",y" << (a + 1);
    out << ",logdet_sigma\n";
    char buf[64];
    for (std::int64_t i = 0; i < cfg.paths; ++i) {
        const PathSample sample = simulate_path(kind, x0, cfg, field, i);
        for (size_t k = 0; k < sample.steps.size(); ++k) {
            const StepRecord& r = sample.steps[k];
            out << i << ',' << k;
            std::snprintf(buf, sizeof buf, ",%.17g,%.17g", r.u, -std::expm1(-r.u / 2));
            out << buf;
            for (int a = 0; a < r.y.size(); ++a) {
                std::snprintf(buf, sizeof buf, ",%.17g", r.y[a]);
                out << buf;
            }
            std::snprintf(buf, sizeof buf, ",%.17g\n", r.logdet_sigma);
            out << buf;
        }
    }
}

}  // namespace winmart
