// winmart: solve the simplex Monge-Ampere field, simulate win-martingales,
// query the value function, and run the verification battery.
//
// Exit codes: 0 success, 1 verification failure, 2 usage/infrastructure error.
//
// Every subcommand accepts --config FILE, a flat key=value text file whose
// keys are the long option names (without the leading dashes, '-' may be
// written as '_'); '#' starts a comment. Unknown keys are errors. Explicit
// command-line flags override config values.

#include "winmart/diagnostics.hpp"
#include "winmart/exact1d.hpp"
#include "winmart/field_io.hpp"
#include "winmart/value.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

namespace {

using namespace winmart;

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", x);
    return buf;
}

std::string fmt_vec(const Eigen::VectorXd& v) {
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += fmt(v[i]);
    }
    return s;
}

std::string fmt_mat(const Eigen::MatrixXd& m) {
    std::string s;
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        if (r) s += ";";
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            if (c) s += ",";
            s += fmt(m(r, c));
        }
    }
    return s;
}

Eigen::VectorXd to_point(const std::vector<double>& xs) {
    Eigen::VectorXd x(Eigen::Index(xs.size()));
    for (size_t i = 0; i < xs.size(); ++i) x[Eigen::Index(i)] = xs[i];
    return x;
}

// ---------------------------------------------------------------------------
// flat key=value config files
// ---------------------------------------------------------------------------

using ConfigMap = std::map<std::string, std::string>;

ConfigMap load_config(const std::string& path, const std::set<std::string>& allowed) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path);
    ConfigMap out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(lineno) +
                             ": expected key=value");
        std::string key = line.substr(0, eq);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        for (auto& c : key)
            if (c == '_') c = '-';
        std::string value = line.substr(eq + 1);
        const auto vfirst = value.find_first_not_of(" \t");
        value = vfirst == std::string::npos ? "" : value.substr(vfirst);
        if (!allowed.count(key))
            throw UsageError("config line " + std::to_string(lineno) +
                             ": unknown key '" + key + "'");
        out[key] = value;
    }
    return out;
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

bool parse_bool(const std::string& s) {
    if (s == "1" || s == "true" || s == "yes") return true;
    if (s == "0" || s == "false" || s == "no") return false;
    throw UsageError("expected a boolean, got '" + s + "'");
}

// Applies config values to fields whose command-line flag was not given.
struct Merge {
    const ConfigMap& cfg;
    const CLI::App* cmd;

    bool has(const std::string& key) const {
        return cfg.count(key) && cmd->get_option("--" + key)->count() == 0;
    }
    void num(const std::string& key, double& target) const {
        if (has(key)) target = std::stod(cfg.at(key));
    }
    void num(const std::string& key, int& target) const {
        if (has(key)) target = std::stoi(cfg.at(key));
    }
    void num(const std::string& key, std::int64_t& target) const {
        if (has(key)) target = std::stoll(cfg.at(key));
    }
    void num(const std::string& key, std::uint64_t& target) const {
        if (has(key)) target = std::stoull(cfg.at(key));
    }
    void str(const std::string& key, std::string& target) const {
        if (has(key)) target = cfg.at(key);
    }
    void list(const std::string& key, std::vector<double>& target) const {
        if (has(key)) target = parse_list(cfg.at(key));
    }
    void flag(const std::string& key, bool& target) const {
        if (has(key)) target = parse_bool(cfg.at(key));
    }
};

// ---------------------------------------------------------------------------
// solve
// ---------------------------------------------------------------------------

struct SolveArgs {
    int dim = 0;
    std::vector<double> levels;
    double h = 1e-3;
    std::vector<double> h_per_level;
    double tol = 1e-8;
    int max_iter = 200;
    std::string init = "auto";
    std::string out;
    std::string report;
    std::string config;
};

int cmd_solve(SolveArgs a, const CLI::App* cmd) {
    if (!a.config.empty()) {
        const auto cfg = load_config(
            a.config, {"dim", "levels", "h", "h-per-level", "tol", "max-iter", "init",
                       "out", "report"});
        Merge m{cfg, cmd};
        m.num("dim", a.dim);
        m.list("levels", a.levels);
        m.num("h", a.h);
        m.list("h-per-level", a.h_per_level);
        m.num("tol", a.tol);
        m.num("max-iter", a.max_iter);
        m.str("init", a.init);
        m.str("out", a.out);
        m.str("report", a.report);
    }
    if (a.dim < 1) throw UsageError("solve: --dim is required");
    if (a.levels.empty()) throw UsageError("solve: --levels is required");

    SolveConfig sc;
    sc.levels = a.levels;
    sc.h = a.h;
    sc.h_per_level = a.h_per_level;
    sc.tol_res = a.tol;
    sc.max_iter = a.max_iter;
    if (a.init == "sub") sc.init = InitKind::SubSolution;
    else if (a.init == "super") sc.init = InitKind::SuperSolution;
    else if (a.init == "auto") sc.init = InitKind::Auto;
    else throw UsageError("--init must be auto|sub|super");

    const std::string out =
        a.out.empty() ? "field_d" + std::to_string(a.dim) + ".mafg" : a.out;
    const std::string report_path = a.report.empty() ? out + ".report.txt" : a.report;

    auto [field, rep] = solve_nested(a.dim, sc);

    const std::string tmp = out + ".tmp";
    try {
        write_field(tmp, field.base());
        std::filesystem::rename(tmp, out);
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }

    std::ostringstream r;
    r << "dim=" << a.dim << "\n";
    r << "levels=" << fmt_vec(to_point(a.levels)) << "\n";
    for (const auto& lv : rep.levels) {
        r << "level=" << fmt(lv.level) << " h=" << fmt(lv.h)
          << " interior_nodes=" << lv.interior_nodes << " iterations=" << lv.iterations
          << " final_residual=" << fmt(lv.final_residual)
          << " sandwich_violations=" << lv.sandwich_violations << "\n";
    }
    r << "stabilization=";
    for (double s : rep.stabilization) r << fmt(s) << " ";
    r << "\n";
    if (a.dim == 1) {
        double full = 0, core = 0;
        const Grid& g = field.grid();
        for (Index node : g.interior_nodes()) {
            const Eigen::VectorXd x = g.coords(node);
            const double err = std::abs(field.base().values()[node] - exact_g_1d(x[0]).g);
            full = std::max(full, err);
            if (barrier_value(x) < a.levels.front()) core = std::max(core, err);
        }
        r << "oracle_max_error_full=" << fmt(full) << "\n";
        r << "oracle_max_error_core=" << fmt(core) << " (over the level-"
          << fmt(a.levels.front()) << " region)\n";
    }
    std::ofstream rf(report_path);
    rf << r.str();
    std::cout << r.str();
    std::cout << "field=" << out << " wall_seconds=" << fmt(rep.wall_seconds) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimArgs {
    std::string field;
    std::vector<double> x0;
    std::int64_t paths = 20000;
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string kind = "aldous";
    std::string baseline;
    double h_u = 1e-3;
    double u_max = 40;
    double g_stop = -1;  // default: level - 2
    double r_snap = 0.1;
    bool fallback = false;
    int threads = 0;
    std::string dump;
    std::string summary;
    std::string config;
};

int cmd_simulate(SimArgs a, const CLI::App* cmd) {
    if (!a.config.empty()) {
        const auto cfg = load_config(
            a.config, {"field", "x0", "paths", "seed", "kind", "baseline", "h-u",
                       "u-max", "g-stop", "r-snap", "fallback", "threads", "dump",
                       "summary"});
        Merge m{cfg, cmd};
        m.str("field", a.field);
        m.list("x0", a.x0);
        m.num("paths", a.paths);
        if (m.has("seed")) {
            a.seed = std::stoull(cfg.at("seed"));
            a.seed_given = true;
        }
        m.str("kind", a.kind);
        m.str("baseline", a.baseline);
        m.num("h-u", a.h_u);
        m.num("u-max", a.u_max);
        m.num("g-stop", a.g_stop);
        m.num("r-snap", a.r_snap);
        m.flag("fallback", a.fallback);
        m.num("threads", a.threads);
        m.str("dump", a.dump);
        m.str("summary", a.summary);
    }
    if (a.field.empty()) throw UsageError("simulate: --field is required");
    if (a.x0.empty()) throw UsageError("simulate: --x0 is required");
    if (!a.seed_given)
        throw UsageError("simulate: --seed is required (no silent entropy)");

    const ScalarField stored = read_field(a.field);
    const GradHessField field(stored);
    const Eigen::VectorXd x0 = to_point(a.x0);
    if (x0.size() != field.dim())
        throw UsageError("--x0 has dimension " + std::to_string(x0.size()) +
                         " but field '" + a.field + "' has dimension " +
                         std::to_string(field.dim()));

    const std::string kind_name = a.baseline.empty() ? a.kind : a.baseline;
    PathKind kind;
    if (kind_name == "aldous") kind = PathKind::Aldous;
    else if (kind_name == "logistic1d") kind = PathKind::Logistic1d;
    else if (kind_name == "productlift") kind = PathKind::ProductLift;
    else throw UsageError("--kind must be aldous|logistic1d|productlift");

    SimConfig sc;
    sc.h_u = a.h_u;
    sc.u_max = a.u_max;
    sc.g_stop = a.g_stop > 0 ? a.g_stop : field.level() - 2.0;
    sc.r_snap = a.r_snap;
    sc.seed = a.seed;
    sc.paths = a.paths;
    sc.barrier_fallback = a.fallback;
    sc.threads = a.threads;

    const auto summaries = simulate_many(kind, x0, sc, &field);

    std::ostringstream r;
    r << "kind=" << to_string(kind) << " x0=" << fmt_vec(x0) << " paths=" << a.paths
      << " seed=" << a.seed << " h_u=" << fmt(sc.h_u) << " u_max=" << fmt(sc.u_max)
      << " g_stop=" << fmt(sc.g_stop) << " r_snap=" << fmt(sc.r_snap)
      << " fallback=" << (sc.barrier_fallback ? 1 : 0) << "\n";
    const int d = field.dim();
    std::vector<std::int64_t> counts(size_t(d) + 1, 0);
    std::int64_t censored = 0;
    double obj_sum = 0, obj_sq = 0, trunc = 0;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (const auto& p : summaries) {
        if (p.censored) ++censored;
        else ++counts[size_t(p.terminal)];
        obj_sum += p.objective;
        obj_sq += p.objective * p.objective;
        trunc += p.trunc_bound;
        cov += p.int_cov;
    }
    const double n = double(summaries.size());
    const double mean = obj_sum / n;
    const double se =
        n > 1 ? std::sqrt(std::max(0.0, (obj_sq / n - mean * mean) / (n - 1))) : 0.0;
    r << "objective_mean=" << fmt(mean) << " objective_se=" << fmt(se)
      << " trunc_bound_mean=" << fmt(trunc / n) << "\n";
    r << "terminal_counts=";
    for (auto c : counts) r << c << " ";
    r << "censored=" << censored << "\n";
    r << "int_cov_mean=" << fmt_mat(cov / n) << "\n";
    std::ofstream sf(a.summary.empty() ? a.field + ".sim_summary.txt" : a.summary);
    sf << r.str();
    std::cout << r.str();

    if (!a.dump.empty()) {
        std::ofstream df(a.dump);
        dump_paths_csv(df, kind, x0, sc, &field);
        std::cout << "dump=" << a.dump << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// value
// ---------------------------------------------------------------------------

struct ValueArgs {
    std::string field;
    double t = 0;
    std::vector<double> x;
};

int cmd_value(const ValueArgs& a) {
    if (a.field.empty()) throw UsageError("value: --field is required");
    if (a.x.empty()) throw UsageError("value: --x is required");
    const ScalarField stored = read_field(a.field);
    const GradHessField field(stored);
    const Eigen::VectorXd x = to_point(a.x);
    if (x.size() != field.dim())
        throw UsageError("--x has dimension " + std::to_string(x.size()) +
                         " but the field has dimension " + std::to_string(field.dim()));
    const FieldJet jet = field.eval(x);  // OutOfRegion -> exit 2 via main
    const SigmaStar ss = sigma_star(a.t, x, field);
    std::cout << "t=" << fmt(a.t) << " x=" << fmt_vec(x)
              << " value=" << fmt(value_from_g(a.t, jet.value, field.dim()))
              << " g=" << fmt(jet.value) << " grad=" << fmt_vec(jet.grad)
              << " hess=" << fmt_mat(jet.hess) << " sigma_star=" << fmt_mat(ss.sigma)
              << " sigma_star_root=" << fmt_mat(ss.root)
              << " lower_bound=" << fmt(lower_bound(a.t, x)) << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

struct VerifyArgs {
    std::uint64_t seed = 0;
    bool seed_given = false;
    std::string only;
    std::string out_dir;
    int threads = 0;
    bool quick = false;
    std::string config;
};

int cmd_verify(VerifyArgs a, const CLI::App* cmd) {
    if (!a.config.empty()) {
        const auto cfg =
            load_config(a.config, {"seed", "only", "out-dir", "threads", "quick"});
        Merge m{cfg, cmd};
        if (m.has("seed")) {
            a.seed = std::stoull(cfg.at("seed"));
            a.seed_given = true;
        }
        m.str("only", a.only);
        m.str("out-dir", a.out_dir);
        m.num("threads", a.threads);
        m.flag("quick", a.quick);
    }
    if (!a.seed_given)
        throw UsageError("verify: --seed is required (no silent entropy)");
    BatteryConfig bc;
    bc.seed = a.seed;
    bc.only = a.only;
    bc.artifact_dir = a.out_dir;
    bc.threads = a.threads;
    bc.quick = a.quick;
    const McReport report = run_battery(bc);
    report.print(std::cout);
    std::cout << (report.all_pass() ? "verdict=pass" : "verdict=fail") << "\n";
    return report.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monge-Ampere field solver and win-martingale simulator"};
    app.require_subcommand(1);
    app.set_help_flag("--help", "Print help");  // frees -h; --h is an option below

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "Solve the nested Dirichlet problems");
    solve->set_help_flag("--help", "Print help");
    solve->add_option("--dim", sa.dim, "Simplex dimension d");
    solve->add_option("--levels", sa.levels, "Increasing sublevel values C_1,...,C_K")
        ->delimiter(',');
    solve->add_option("--h", sa.h, "Grid spacing");
    solve->add_option("--h-per-level", sa.h_per_level, "Per-level spacing overrides")
        ->delimiter(',');
    solve->add_option("--tol", sa.tol, "Newton residual tolerance");
    solve->add_option("--max-iter", sa.max_iter, "Newton iteration cap");
    solve->add_option("--init", sa.init, "Initialization: auto|sub|super");
    solve->add_option("--out", sa.out, "Output field file");
    solve->add_option("--report", sa.report, "Report file");
    solve->add_option("--config", sa.config, "Key=value config file");

    SimArgs ma;
    auto* sim = app.add_subcommand("simulate", "Simulate win-martingale paths");
    sim->set_help_flag("--help", "Print help");
    sim->add_option("--field", ma.field, "Field file");
    sim->add_option("--x0", ma.x0, "Start point coordinates")->delimiter(',');
    sim->add_option("--paths", ma.paths, "Number of paths");
    auto* seed_opt = sim->add_option("--seed", ma.seed, "Master seed (mandatory)");
    sim->add_option("--kind", ma.kind, "aldous|logistic1d|productlift");
    sim->add_option("--baseline", ma.baseline, "Baseline kind (same values as --kind)");
    sim->add_option("--h-u", ma.h_u, "Step in transformed time");
    sim->add_option("--u-max", ma.u_max, "Horizon in transformed time");
    sim->add_option("--g-stop", ma.g_stop, "Absorption threshold (default: level - 2)");
    sim->add_option("--r-snap", ma.r_snap, "Vertex snap radius");
    sim->add_flag("--fallback", ma.fallback, "Barrier-Hessian fallback outside the region");
    sim->add_option("--threads", ma.threads, "Worker threads (0 = hardware)");
    sim->add_option("--dump", ma.dump, "Write a per-step CSV dump");
    sim->add_option("--summary", ma.summary, "Summary file");
    sim->add_option("--config", ma.config, "Key=value config file");

    ValueArgs va;
    auto* val = app.add_subcommand("value", "Query the value function at (t, x)");
    val->set_help_flag("--help", "Print help");
    val->add_option("--field", va.field, "Field file");
    val->add_option("--t", va.t, "Time in [0,1)");
    val->add_option("--x", va.x, "Point coordinates")->delimiter(',');

    VerifyArgs ve;
    auto* verify = app.add_subcommand("verify", "Run the verification battery");
    verify->set_help_flag("--help", "Print help");
    auto* vseed_opt = verify->add_option("--seed", ve.seed, "Master seed (mandatory)");
    verify->add_option("--only", ve.only, "Run only tests whose name contains this");
    verify->add_option("--out-dir", ve.out_dir, "Artifact directory");
    verify->add_option("--threads", ve.threads, "Worker threads (0 = hardware)");
    verify->add_flag("--quick", ve.quick, "Reduced path counts");
    verify->add_option("--config", ve.config, "Key=value config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    ma.seed_given = seed_opt->count() > 0;
    ve.seed_given = vseed_opt->count() > 0;

    try {
        if (solve->parsed()) return cmd_solve(sa, solve);
        if (sim->parsed()) return cmd_simulate(ma, sim);
        if (val->parsed()) return cmd_value(va);
        if (verify->parsed()) return cmd_verify(ve, verify);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}
