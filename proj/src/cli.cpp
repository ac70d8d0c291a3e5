#include "lilchain/cli.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "lilchain/coboundary.hpp"
#include "lilchain/diffusion.hpp"
#include "lilchain/errors.hpp"
#include "lilchain/io.hpp"
#include "lilchain/parallel.hpp"
#include "lilchain/strassen.hpp"

namespace lilchain::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct RunConfig {
    std::string command;
    std::string spec;
    double eps = 1e-3;
    std::vector<double> eps_grid{0.1, 0.05, 0.025, 0.0125, 0.00625, 0.003125};
    long n_max = 0;  // 0 = command default
    long n_min = 1000;
    double rho = 1.05;
    std::uint64_t seed = 0;
    int replicas = 1;
    int paths = 200;
    int rem_log2_max = 14;
    long mw_n_max = 1L << 14;
    long decomp_n = 1000;
    double alpha = 0.5;
    double beta = 0.45;
    long frac_terms = 0;  // 0 = automatic truncation
    int grid = 1024;
    int start_state = -1;
    bool centered = false;
    bool svg = false;
    double trd = -1.0;
    std::string method = "auto";
    std::string out = ".";
    Tolerances tol;
};

json tolerances_json(const Tolerances& t) {
    return json{{"row_sum", t.row_sum},
                {"stationary", t.stationary},
                {"centering", t.centering},
                {"resolvent", t.resolvent},
                {"poisson_crosscheck", t.poisson_crosscheck},
                {"martingale", t.martingale},
                {"decomposition", t.decomposition},
                {"psd_floor", t.psd_floor},
                {"symmetry", t.symmetry},
                {"alpha_margin", t.alpha_margin},
                {"frac_tail", t.frac_tail},
                {"dist", t.dist},
                {"band_lo", t.band_lo},
                {"band_hi", t.band_hi},
                {"zero_stat", t.zero_stat}};
}

json config_json(const RunConfig& c) {
    json j{{"command", c.command},   {"spec", c.spec},         {"seed", c.seed},
           {"replicas", c.replicas}, {"n_max", c.n_max},       {"out", c.out},
           {"tolerances", tolerances_json(c.tol)}};
    if (c.command == "analyze") {
        j["eps"] = c.eps;
        j["eps_grid"] = c.eps_grid;
        j["paths"] = c.paths;
        j["remainder_log2_max"] = c.rem_log2_max;
        j["mw_n_max"] = c.mw_n_max;
        j["decomp_n"] = c.decomp_n;
        j["alpha"] = c.alpha;
        j["beta"] = c.beta;
        j["frac_terms"] = c.frac_terms;
    } else if (c.command == "lil") {
        j["rho"] = c.rho;
        j["n_min"] = c.n_min;
        j["grid"] = c.grid;
        j["centered"] = c.centered;
        j["start_state"] = c.start_state;
        j["svg"] = c.svg;
    } else if (c.command == "frac") {
        j["alpha"] = c.alpha;
        j["frac_terms"] = c.frac_terms;
    } else if (c.command == "dist-k") {
        j["trd"] = c.trd;
        j["method"] = c.method;
    }
    return j;
}

json metadata_json() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ts;
    ts << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return json{{"version", kVersion}, {"timestamp", ts.str()}};
}

json matrix_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json r = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
        rows.push_back(r);
    }
    return rows;
}

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError(fmt::format("cannot create output directory {}: {}", dir.string(), ec.message()));
}

std::string state_table_csv(const FiniteKernel& kernel, const Matrix& values, const std::string& prefix) {
    std::vector<std::string> header{"state"};
    for (auto& h : io::indexed(prefix, values.cols())) header.push_back(std::move(h));
    std::string s = io::join(header) + "\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        s += kernel.states()[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < values.cols(); ++c) s += "," + io::num(values(i, c));
        s += "\n";
    }
    return s;
}

std::string diffusion_csv(const DiffusionMatrix& exact, const DiffusionMatrix* empirical) {
    const auto d = exact.D.rows();
    std::vector<std::string> header{"method"};
    for (Eigen::Index i = 1; i <= d; ++i)
        for (Eigen::Index j = 1; j <= d; ++j) header.push_back(fmt::format("D_{}_{}", i, j));
    header.push_back("trace");
    for (Eigen::Index i = 1; i <= d; ++i)
        for (Eigen::Index j = 1; j <= d; ++j) header.push_back(fmt::format("se_{}_{}", i, j));
    std::string s = io::join(header) + "\n";
    auto emit = [&](const DiffusionMatrix& D) {
        s += D.method;
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) s += "," + io::num(D.D(i, j));
        s += "," + io::num(D.trace);
        for (Eigen::Index i = 0; i < d; ++i)
            for (Eigen::Index j = 0; j < d; ++j) s += "," + (D.stderr_.size() ? io::num(D.stderr_(i, j)) : "");
        s += "\n";
    };
    emit(exact);
    if (empirical) emit(*empirical);
    return s;
}

std::string decomp_csv(const Decomposition& dec) {
    const auto d = dec.S.cols();
    std::vector<std::string> header{"k"};
    for (const char* name : {"S", "M_eps", "eps_S_h", "R_eps", "M_lim", "R_lim"})
        for (auto& h : io::indexed(name, d)) header.push_back(std::move(h));
    std::string s = io::join(header) + "\n";
    for (Eigen::Index k = 0; k < dec.S.rows(); ++k) {
        s += std::to_string(k);
        for (const RowMatrix* m : {&dec.S, &dec.M_eps, &dec.eps_S_h, &dec.R_eps, &dec.M_lim, &dec.R_lim})
            for (Eigen::Index c = 0; c < d; ++c) s += "," + io::num((*m)(k, c));
        s += "\n";
    }
    return s;
}

std::string lil_csv(const LILReport& rep) {
    std::string s = "k,n_k,stat,running_max,sup_stat,dist_to_K\n";
    for (const auto& r : rep.rows)
        s += fmt::format("{},{},{},{},{},{}\n", r.k, r.n, io::num(r.stat), io::num(r.running_max),
                         io::num(r.sup_stat), io::num(r.dist_to_K));
    return s;
}

std::string lil_diag_csv(const LILReport& rep) {
    std::string s = "k,n_k,envelope,cluster\n";
    for (const auto& r : rep.rows)
        s += fmt::format("{},{},{},{}\n", r.k, r.n, io::num(r.envelope), io::num(r.cluster));
    return s;
}

// First coordinate of the last few snapshots against the +-sqrt(trD t) envelope.
std::string lil_svg(const LILReport& rep) {
    constexpr double W = 800, H = 400, pad = 40;
    double ymax = std::max(1e-9, 1.2 * std::sqrt(rep.trD));
    const std::size_t first = rep.snapshots.size() > 8 ? rep.snapshots.size() - 8 : 0;
    for (std::size_t i = first; i < rep.snapshots.size(); ++i)
        ymax = std::max(ymax, rep.snapshots[i].values().col(0).cwiseAbs().maxCoeff());
    auto px = [&](double t) { return pad + t * (W - 2 * pad); };
    auto py = [&](double y) { return H / 2 - y / ymax * (H / 2 - pad); };
    std::string s = fmt::format(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
        "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#888\"/>\n",
        W, H, W, H, px(0), py(0), px(1), py(0));
    for (const int sign : {1, -1}) {
        s += "<polyline fill=\"none\" stroke=\"#c00\" stroke-dasharray=\"4 3\" points=\"";
        for (int j = 0; j <= 200; ++j) {
            const double t = j / 200.0;
            s += fmt::format("{:.2f},{:.2f} ", px(t), py(sign * std::sqrt(rep.trD * t)));
        }
        s += "\"/>\n";
    }
    for (std::size_t i = first; i < rep.snapshots.size(); ++i) {
        const auto& f = rep.snapshots[i];
        s += "<polyline fill=\"none\" stroke=\"#036\" stroke-opacity=\"0.6\" points=\"";
        for (Eigen::Index j = 0; j < f.values().rows(); ++j)
            s += fmt::format("{:.2f},{:.2f} ", px(f.grid()[static_cast<std::size_t>(j)]), py(f.values()(j, 0)));
        s += "\"/>\n";
    }
    s += "</svg>\n";
    return s;
}

int cmd_validate(const RunConfig& cfg, std::ostream& out) {
    const auto model = load_chain_file(cfg.spec, cfg.tol);
    out << fmt::format("valid: {} states, d = {}\n", model.kernel.size(), model.dim());
    out << "pi =";
    for (Eigen::Index i = 0; i < model.pi.size(); ++i) out << ' ' << io::num(model.pi(i));
    out << '\n';
    if (model.auto_centered) {
        out << "auto-centered: subtracted pi-mean";
        for (Eigen::Index c = 0; c < model.removed_mean.size(); ++c) out << ' ' << io::num(model.removed_mean(c));
        out << '\n';
    }
    return kOk;
}

long series_terms(double eps, double gmax) {
    if (gmax == 0.0) return 1;
    const double need = std::log(gmax / (eps * 1e-12)) / std::log1p(eps);
    return static_cast<long>(std::clamp(std::ceil(need), 1.0, 2e6));
}

int cmd_analyze(RunConfig cfg, std::ostream& out) {
    if (cfg.n_max == 0) cfg.n_max = 100000;
    if (static_cast<long>(cfg.replicas) * cfg.n_max < 10000)
        throw ConfigError("analyze: replicas * n-max must be >= 1e4 for the empirical diffusion matrix");
    if (cfg.decomp_n < 16) throw ConfigError("analyze: --decomp-n must be >= 16");
    const auto model = load_chain_file(cfg.spec, cfg.tol);
    const auto& kernel = model.kernel;
    const auto& g = model.obs.g;
    const fs::path dir(cfg.out);
    ensure_dir(dir);

    const auto res = solve_resolvent(kernel, g, cfg.eps, cfg.tol);
    const auto series = resolvent_series(kernel, g, cfg.eps, static_cast<int>(series_terms(cfg.eps, g.cwiseAbs().maxCoeff())));
    const double series_gap = (series.h - res.h).cwiseAbs().maxCoeff();
    const Matrix h = poisson_limit(kernel, model.pi, g, cfg.tol);
    const auto mk = martingale_kernel(kernel, model.pi, h, cfg.tol);
    const auto D = diffusion_exact(mk, cfg.tol);
    const auto mw = mw_fit(kernel, model.pi, g, cfg.mw_n_max, cfg.tol);
    const auto conv = h_eps_convergence(model, cfg.eps_grid, mw.alpha_hat, cfg.tol);
    const auto member = frac_membership(kernel, model.pi, g, cfg.beta, cfg.mw_n_max);
    const auto frac = frac_power_apply(kernel, cfg.alpha, g,
                                       cfg.frac_terms > 0 ? std::optional<long>(cfg.frac_terms) : std::nullopt,
                                       cfg.tol);

    std::vector<SamplePath> paths(static_cast<std::size_t>(cfg.replicas));
    parallel_for(paths.size(), [&](std::size_t r) {
        paths[r] = simulate(model, static_cast<std::size_t>(cfg.n_max), cfg.seed, r);
    });
    const auto Demp = diffusion_empirical(paths, mk);
    const auto maxinc = max_increment_stat(paths.front(), mk);

    const auto dpath = simulate(model, static_cast<std::size_t>(cfg.decomp_n), cfg.seed, 0);
    const auto dec = decompose_path(dpath, model, cfg.eps, cfg.tol);

    RemainderConfig rc;
    rc.paths = cfg.paths;
    rc.log2_max = cfg.rem_log2_max;
    rc.log2_min = std::min(6, cfg.rem_log2_max);
    rc.seed = cfg.seed;
    rc.alpha_hat = mw.alpha_hat;
    const auto rem = remainder_growth(model, rc, cfg.tol);

    io::write_file(dir / "resolvent.csv", state_table_csv(kernel, res.h, "h"));
    io::write_file(dir / "fracpower.csv", state_table_csv(kernel, frac.value, "f"));
    io::write_file(dir / "diffusion.csv", diffusion_csv(D, &Demp));
    {
        std::string s = "n,V_n\n";
        for (std::size_t i = 0; i < mw.n_grid.size(); ++i) s += fmt::format("{},{}\n", mw.n_grid[i], io::num(mw.V[i]));
        io::write_file(dir / "mw_fit.csv", s);
    }
    {
        std::string s = "eps,h_error,H_error,h_norm,h_norm_scaled\n";
        for (const auto& r : conv)
            s += fmt::format("{},{},{},{},{}\n", io::num(r.epsilon), io::num(r.h_error), io::num(r.H_error),
                             io::num(r.h_norm), io::num(r.h_norm_scaled));
        io::write_file(dir / "convergence.csv", s);
    }
    io::write_file(dir / "decomp.csv", decomp_csv(dec));
    {
        std::ostringstream s;
        write_path_csv(s, dpath, kernel);
        io::write_file(dir / "path.csv", s.str());
    }
    {
        std::string s = "n,E_R2,stderr\n";
        for (std::size_t i = 0; i < rem.n_grid.size(); ++i)
            s += fmt::format("{},{},{}\n", rem.n_grid[i], io::num(rem.E_R2[i]), io::num(rem.E_R2_stderr[i]));
        io::write_file(dir / "remainder.csv", s);
    }
    {
        std::string s = "n,stat\n";
        for (const auto& r : maxinc) s += fmt::format("{},{}\n", r.n, io::num(r.stat));
        io::write_file(dir / "maxinc.csv", s);
    }

    json report{
        {"config", config_json(cfg)},
        {"metadata", metadata_json()},
        {"states", kernel.states()},
        {"pi", vector_json(model.pi)},
        {"auto_centered", model.auto_centered},
        {"removed_mean", vector_json(model.removed_mean.transpose())},
        {"resolvent", {{"eps", res.epsilon}, {"residual", res.residual}, {"series_terms", series_terms(cfg.eps, g.cwiseAbs().maxCoeff())},
                       {"series_gap", series_gap}, {"series_tail_bound", series.tail_bound}}},
        {"poisson_h", matrix_json(h)},
        {"martingale_defect", mk.conditional_mean_defect(kernel.P())},
        {"diffusion", {{"D", matrix_json(D.D)}, {"trace", D.trace}, {"min_eigenvalue", D.min_eigenvalue},
                       {"H_norm_squared", mk.l2_norm_squared()}}},
        {"diffusion_empirical", {{"D", matrix_json(Demp.D)}, {"trace", Demp.trace}, {"stderr", matrix_json(Demp.stderr_)},
                                 {"steps", Demp.steps}}},
        {"trace", D.trace},
        {"lil_constant", std::sqrt(D.trace)},
        {"mw", {{"alpha_hat", mw.alpha_hat}, {"alpha_ok", mw.alpha_ok}, {"degenerate", mw.degenerate}}},
        {"alpha_hat", mw.alpha_hat},
        {"membership", {{"beta", member.beta}, {"sup", member.sup}, {"tail_slope", member.tail_slope},
                        {"bounded", member.bounded}, {"conclusion", member.conclusion}}},
        {"fracpower", {{"alpha", frac.alpha}, {"terms", frac.terms}, {"coeff_tail", frac.coeff_tail},
                       {"error_bound", frac.error_bound}}},
        {"remainder", {{"beta_hat", rem.beta_hat}, {"degenerate", rem.degenerate}, {"consistent", rem.consistent},
                       {"max_abs_R", rem.max_abs_R}}},
        {"decomposition", {{"n", cfg.decomp_n}, {"max_identity_defect", dec.max_identity_defect}}},
    };
    io::write_file(dir / "report.json", report.dump(2) + "\n");
    out << fmt::format("trace(D) = {}  alpha_hat = {}  beta_hat = {}  -> {}\n", io::num(D.trace),
                       io::num(mw.alpha_hat), io::num(rem.beta_hat), dir.string());
    return kOk;
}

int cmd_lil(RunConfig cfg, std::ostream& out) {
    if (cfg.n_max == 0) cfg.n_max = 10'000'000;
    const auto model = load_chain_file(cfg.spec, cfg.tol);
    const auto mk = martingale_kernel(model.kernel, model.pi, poisson_limit(model.kernel, model.pi, model.obs.g, cfg.tol),
                                      cfg.tol);
    const auto D = diffusion_exact(mk, cfg.tol);
    const fs::path dir(cfg.out);
    ensure_dir(dir);

    LILConfig lc;
    lc.n_max = cfg.n_max;
    lc.n_min = cfg.n_min;
    lc.rho = cfg.rho;
    lc.seed = cfg.seed;
    lc.grid = cfg.grid;
    lc.centered = cfg.centered;
    if (cfg.start_state >= 0) lc.start_state = cfg.start_state;

    std::vector<LILReport> reports(static_cast<std::size_t>(cfg.replicas));
    parallel_for(reports.size(), [&](std::size_t r) {
        LILConfig c = lc;
        c.stream = r;
        c.keep_snapshots = cfg.svg || r == 0;
        reports[r] = lil_run(model, D.trace, c, cfg.tol);
    });

    json replicas = json::array();
    for (std::size_t r = 0; r < reports.size(); ++r) {
        const auto& rep = reports[r];
        const std::string suffix = r == 0 ? "" : fmt::format("_r{:03d}", r);
        io::write_file(dir / ("lil" + suffix + ".csv"), lil_csv(rep));
        io::write_file(dir / ("lil_diag" + suffix + ".csv"), lil_diag_csv(rep));
        json jr{{"replica", r},
                {"stream", r},
                {"running_max", rep.running_max},
                {"final_stat", rep.rows.back().stat},
                {"max_abs_S", rep.max_abs_S},
                {"band_ok", rep.band_ok},
                {"verdict", rep.verdict},
                {"checkpoints", rep.rows.size()},
                {"dist_unconverged", rep.dist_unconverged}};
        if (!rep.snapshots.empty()) {
            const auto cl = cluster_probe(rep.snapshots, D.trace, model.dim());
            jr["cluster_min"] = cl.min;
            jr["cluster_argmin_n"] = rep.rows[cl.argmin].n;
        }
        replicas.push_back(jr);
    }
    if (cfg.svg) io::write_file(dir / "paths.svg", lil_svg(reports.front()));

    const auto& rep = reports.front();
    json report{{"config", config_json(cfg)},
                {"metadata", metadata_json()},
                {"trace", D.trace},
                {"target", rep.target},
                {"band", {cfg.tol.band_lo, cfg.tol.band_hi}},
                {"running_max", rep.running_max},
                {"band_ok", rep.band_ok},
                {"verdict", rep.verdict},
                {"seeds", {{"seed", cfg.seed}, {"streams", cfg.replicas}}},
                {"replicas", replicas}};
    io::write_file(dir / "report.json", report.dump(2) + "\n");
    out << fmt::format("target = {}  running max = {}  verdict: {}\n", io::num(rep.target), io::num(rep.running_max),
                       rep.verdict);
    return kOk;
}

int cmd_dist_k(const RunConfig& cfg, std::ostream& out) {
    if (!(cfg.trd >= 0.0)) throw ConfigError("dist-k: --trd must be given and >= 0");
    const auto table = io::read_csv(cfg.spec);
    if (table.header.size() < 2 || table.header[0] != "t")
        throw ConfigError("dist-k: expected header t,f_1..f_d");
    if (table.rows.size() < 2) throw ConfigError("dist-k: need at least two rows");
    std::vector<double> grid;
    RowMatrix values(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(table.header.size() - 1));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        grid.push_back(table.rows[i][0]);
        for (std::size_t c = 1; c < table.header.size(); ++c)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c - 1)) = table.rows[i][c];
    }
    const PathFunction f(std::move(grid), std::move(values));
    DistOptions opt;
    opt.tol = cfg.tol.dist;
    if (cfg.method == "taut") opt.method = DistOptions::Method::TautString;
    else if (cfg.method == "dykstra") opt.method = DistOptions::Method::Dykstra;
    else if (cfg.method == "barrier") opt.method = DistOptions::Method::InteriorPoint;
    const auto res = dist_to_K(f, cfg.trd, opt);
    json j{{"dist_to_K", res.distance}, {"lower", res.lower},         {"upper", res.upper},
           {"converged", res.converged}, {"method", res.method},      {"iterations", res.iterations},
           {"energy", energy(f)},       {"envelope", envelope_check(f, cfg.trd)}, {"trd", cfg.trd}};
    out << j.dump(2) << '\n';
    if (cfg.out != ".") {
        ensure_dir(cfg.out);
        io::write_file(fs::path(cfg.out) / "dist.json", j.dump(2) + "\n");
    }
    return res.converged ? kOk : kNumeric;
}

int cmd_frac(const RunConfig& cfg, std::ostream& out) {
    const auto model = load_chain_file(cfg.spec, cfg.tol);
    const auto res = frac_power_apply(model.kernel, cfg.alpha, model.obs.g,
                                      cfg.frac_terms > 0 ? std::optional<long>(cfg.frac_terms) : std::nullopt, cfg.tol);
    ensure_dir(cfg.out);
    io::write_file(fs::path(cfg.out) / "fracpower.csv", state_table_csv(model.kernel, res.value, "f"));
    out << fmt::format("alpha = {}  terms = {}  coefficient tail = {}  error bound = {}\n", io::num(res.alpha), res.terms,
                       io::num(res.coeff_tail), io::num(res.error_bound));
    return kOk;
}

void add_tolerances(CLI::App* app, Tolerances& t) {
    const auto add = [&](const char* name, double& field, const char* what) {
        app->add_option(std::string("--tol.") + name, field, what)->capture_default_str()->group("Tolerances");
    };
    add("row-sum", t.row_sum, "row-sum tolerance of P");
    add("stationary", t.stationary, "|pi P - pi| tolerance");
    add("centering", t.centering, "pi-mean tolerance of g");
    add("resolvent", t.resolvent, "relative resolvent residual");
    add("poisson-crosscheck", t.poisson_crosscheck, "limit vs eps=1e-6 agreement");
    add("martingale", t.martingale, "relative conditional-mean defect of H");
    add("decomposition", t.decomposition, "per-step decomposition identity tolerance");
    add("psd-floor", t.psd_floor, "eigenvalue floor for PSD");
    add("symmetry", t.symmetry, "asymmetry tolerance of D");
    add("alpha-margin", t.alpha_margin, "margin below 1/2 for alpha_ok");
    add("frac-tail", t.frac_tail, "truncation target for (I-Q)^alpha");
    add("dist", t.dist, "absolute tolerance of dist_to_K");
    add("band-lo", t.band_lo, "lower LIL band factor");
    add("band-hi", t.band_hi, "upper LIL band factor");
    add("zero-stat", t.zero_stat, "final statistic bound when tr(D) = 0");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Martingale approximation and LIL diagnostics for finite Markov chains", "lilchain"};
    app.require_subcommand(1);
    RunConfig cfg;

    auto* validate = app.add_subcommand("validate", "check a chain spec against every kernel/observable invariant");
    validate->add_option("spec", cfg.spec, "chain-spec JSON")->required();
    add_tolerances(validate, cfg.tol);

    auto* analyze = app.add_subcommand("analyze", "resolvent, Poisson, diffusion, MW fit and coboundary diagnostics");
    analyze->add_option("spec", cfg.spec, "chain-spec JSON")->required();
    analyze->add_option("--eps", cfg.eps, "resolvent parameter")->check(CLI::PositiveNumber)->capture_default_str();
    analyze->add_option("--eps-grid", cfg.eps_grid, "strictly decreasing eps values for the convergence table");
    analyze->add_option("--n-max", cfg.n_max, "path length per replica for empirical estimates (default 1e5)")
        ->check(CLI::Range(16L, 1L << 40));
    analyze->add_option("--seed", cfg.seed)->capture_default_str();
    analyze->add_option("--replicas", cfg.replicas, "paths for the empirical diffusion matrix")
        ->check(CLI::Range(1, 1 << 20))->capture_default_str();
    analyze->add_option("--paths", cfg.paths, "paths for remainder growth (>= 100)")
        ->check(CLI::Range(100, 1 << 20))->capture_default_str();
    analyze->add_option("--rem-log2-max", cfg.rem_log2_max, "largest remainder checkpoint 2^k")
        ->check(CLI::Range(6, 30))->capture_default_str();
    analyze->add_option("--mw-n-max", cfg.mw_n_max, "largest n of the MW fit")->check(CLI::Range(8L, 1L << 30))
        ->capture_default_str();
    analyze->add_option("--decomp-n", cfg.decomp_n, "length of the decomposition path")->capture_default_str();
    analyze->add_option("--alpha", cfg.alpha, "fractional power")->check(CLI::Range(1e-12, 1.0))->capture_default_str();
    analyze->add_option("--beta", cfg.beta, "coboundary membership exponent")->check(CLI::Range(1e-12, 1.0 - 1e-12))
        ->capture_default_str();
    analyze->add_option("--K", cfg.frac_terms, "fixed truncation for the fractional power (0 = automatic)");
    analyze->add_option("--out", cfg.out, "output directory")->capture_default_str();
    add_tolerances(analyze, cfg.tol);

    auto* lil = app.add_subcommand("lil", "law of the iterated logarithm run");
    lil->add_option("spec", cfg.spec, "chain-spec JSON")->required();
    lil->add_option("--n-max", cfg.n_max, "path length (default 1e7)")->check(CLI::Range(1000L, 1L << 40));
    lil->add_option("--n-min", cfg.n_min, "first checkpoint (burn-in)")->check(CLI::Range(1L, 1L << 40))
        ->capture_default_str();
    lil->add_option("--rho", cfg.rho, "geometric checkpoint ratio")->check(CLI::Range(1.0 + 1e-9, 100.0))
        ->capture_default_str();
    lil->add_option("--seed", cfg.seed)->capture_default_str();
    lil->add_option("--replicas", cfg.replicas, "independent runs on streams 0..R-1")->check(CLI::Range(1, 4096))
        ->capture_default_str();
    lil->add_option("--grid", cfg.grid, "xi snapshot grid size")->check(CLI::Range(1, 1 << 16))->capture_default_str();
    lil->add_option("--start-state", cfg.start_state, "start from a point mass instead of pi");
    lil->add_flag("--centered", cfg.centered, "use S_n - E_{X_0} S_n");
    lil->add_flag("--svg", cfg.svg, "write paths.svg");
    lil->add_option("--out", cfg.out, "output directory")->capture_default_str();
    add_tolerances(lil, cfg.tol);

    auto* dist = app.add_subcommand("dist-k", "distance of a path function to sqrt(trD) K");
    dist->add_option("path", cfg.spec, "CSV t,f_1..f_d")->required();
    dist->add_option("--trd", cfg.trd, "tr(D)")->required()->check(CLI::NonNegativeNumber);
    dist->add_option("--method", cfg.method)->check(CLI::IsMember({"auto", "taut", "dykstra", "barrier"}))->capture_default_str();
    dist->add_option("--out", cfg.out, "output directory for dist.json");
    add_tolerances(dist, cfg.tol);

    auto* frac = app.add_subcommand("frac", "apply (I-Q)^alpha to the observable");
    frac->add_option("spec", cfg.spec, "chain-spec JSON")->required();
    frac->add_option("--alpha", cfg.alpha)->check(CLI::Range(1e-12, 1.0))->capture_default_str();
    frac->add_option("--K", cfg.frac_terms, "fixed truncation (0 = automatic)");
    frac->add_option("--out", cfg.out, "output directory")->capture_default_str();
    add_tolerances(frac, cfg.tol);

    std::vector<std::string> rev(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
    try {
        app.parse(rev);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (validate->parsed()) {
            cfg.command = "validate";
            return cmd_validate(cfg, out);
        }
        if (analyze->parsed()) {
            cfg.command = "analyze";
            return cmd_analyze(cfg, out);
        }
        if (lil->parsed()) {
            cfg.command = "lil";
            return cmd_lil(cfg, out);
        }
        if (dist->parsed()) {
            cfg.command = "dist-k";
            return cmd_dist_k(cfg, out);
        }
        cfg.command = "frac";
        return cmd_frac(cfg, out);
    } catch (const SpecError& e) {
        err << "invalid spec: " << e.what() << '\n';
        return kSpecInvalid;
    } catch (const NumericError& e) {
        err << "numeric failure: " << e.what() << '\n';
        return kNumeric;
    } catch (const ConfigError& e) {
        err << "bad config: " << e.what() << '\n';
        return kConfig;
    }
}

}  // namespace lilchain::cli
