#include "lilchain/coboundary.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lilchain/errors.hpp"
#include "lilchain/loglog.hpp"
#include "lilchain/parallel.hpp"
#include "lilchain/rng.hpp"

namespace lilchain {

namespace {

constexpr long kMaxTerms = 100000;

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

FracCoefficients::FracCoefficients(double alpha) : alpha_(alpha), c_{1.0}, partial_{1.0} {}

void FracCoefficients::extend(std::size_t K) {
    while (c_.size() <= K) {
        const auto k = static_cast<double>(c_.size() - 1);
        c_.push_back(c_.back() * (k - alpha_) / (k + 1.0));
        partial_.push_back(partial_.back() + c_.back());
    }
}

double FracCoefficients::operator[](std::size_t k) {
    extend(k);
    return c_[k];
}

double FracCoefficients::tail(std::size_t K) {
    extend(K);
    return std::abs(partial_[K]);
}

FracApplyResult frac_power_apply(const FiniteKernel& kernel, double alpha, const Matrix& u,
                                 std::optional<long> terms, const Tolerances& tol) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw ConfigError(fmt::format("fractional power alpha must lie in (0, 1], got {}", alpha));
    if (terms && *terms < 1) throw ConfigError(fmt::format("truncation K must be >= 1, got {}", *terms));

    FracCoefficients c(alpha);
    const double target = tol.frac_tail * max_abs(u);
    Matrix acc = u;
    Matrix power = kernel.P() * u;  // Q^k u for the term about to be added
    long K = 0;
    double bound = 0.0;
    while (true) {
        ++K;
        const double ck = c[static_cast<std::size_t>(K)];
        if (ck != 0.0) acc += ck * power;
        power = kernel.P() * power;  // now Q^{K+1} u
        // |sum_{k>K} c_k Q^k u|_inf <= |Q^{K+1} u|_inf sum_{k>K} |c_k|: Q is a
        // sup-norm contraction and c_k, k >= 1, share one sign.
        bound = c.tail(static_cast<std::size_t>(K)) * max_abs(power);
        if (terms) {
            if (K == *terms) break;
        } else if (bound <= target || K == kMaxTerms) {
            break;
        }
    }
    return FracApplyResult{std::move(acc), alpha, K, c.tail(static_cast<std::size_t>(K)), bound};
}

MembershipReport frac_membership(const FiniteKernel& kernel, const Vector& pi, const Matrix& g, double beta,
                                 long n_max) {
    if (!(beta > 0.0 && beta < 1.0)) throw ConfigError(fmt::format("beta must lie in (0, 1), got {}", beta));
    if (n_max < 2) throw ConfigError("frac_membership: n_max must be >= 2");
    MembershipReport rep;
    rep.beta = beta;
    Matrix power = g;
    Matrix sum = Matrix::Zero(g.rows(), g.cols());
    long next = 1;
    for (long n = 1; n <= n_max; ++n) {
        power = kernel.P() * power;
        sum += power;
        if (n == next) {
            rep.n_grid.push_back(n);
            rep.scaled.push_back(std::pow(static_cast<double>(n), beta - 1.0) * l2_pi(pi, sum));
            next *= 2;
        }
    }
    rep.sup = *std::max_element(rep.scaled.begin(), rep.scaled.end());

    std::vector<double> lx, ly;
    for (std::size_t i = rep.n_grid.size() / 2; i < rep.n_grid.size(); ++i) {
        lx.push_back(std::log(static_cast<double>(rep.n_grid[i])));
        ly.push_back(std::log(std::max(rep.scaled[i], 1e-300)));
    }
    const bool all_zero = rep.sup == 0.0;
    rep.tail_slope = all_zero ? 0.0 : ls_slope(lx, ly);
    rep.bounded = all_zero || rep.tail_slope <= 0.01;
    rep.conclusion = rep.bounded
                         ? fmt::format("g in (I-Q)^a L2 for every a < {}", beta)
                         : fmt::format("boundedness of n^(beta-1)|sum Q^k g| not established up to n = {}", n_max);
    return rep;
}

RemainderDiagnostics remainder_growth(const ChainModel& model, const RemainderConfig& cfg,
                                      const Tolerances& tol) {
    if (cfg.paths < 100) throw ConfigError(fmt::format("remainder_growth needs >= 100 paths, got {}", cfg.paths));
    if (cfg.log2_min < 0 || cfg.log2_max < cfg.log2_min || cfg.log2_max > 40)
        throw ConfigError("remainder_growth: invalid dyadic range");

    const auto& g = model.obs.g;
    const auto d = g.cols();
    const auto mk = martingale_kernel(model.kernel, model.pi, poisson_limit(model.kernel, model.pi, g, tol), tol);
    const TransitionSampler sampler(model.kernel, model.pi);

    RemainderDiagnostics out;
    for (int e = cfg.log2_min; e <= cfg.log2_max; ++e) out.n_grid.push_back(1L << e);
    const std::size_t G = out.n_grid.size();
    const long n_max = out.n_grid.back();

    struct PathRecord {
        std::vector<double> r2, max_r, max_m;
        double max_abs_r = 0.0;
    };
    std::vector<PathRecord> records(static_cast<std::size_t>(cfg.paths));

    parallel_for(records.size(), [&](std::size_t p) {
        StreamRng rng(cfg.seed, p);
        PathRecord rec;
        rec.r2.reserve(G);
        Eigen::RowVectorXd S = Eigen::RowVectorXd::Zero(d);
        Eigen::RowVectorXd M = Eigen::RowVectorXd::Zero(d);
        double max_r = 0.0, max_m = 0.0;
        int x = sampler.initial(rng.uniform());
        std::size_t gi = 0;
        for (long k = 1; k <= n_max; ++k) {
            const int y = sampler.next(x, rng.uniform());
            S += g.row(x);
            const auto m = mk.at(x, y);
            M += m;
            max_m = std::max(max_m, m.norm());
            const double r = (S - M).norm();
            max_r = std::max(max_r, r);
            if (gi < G && k == out.n_grid[gi]) {
                const double scale = lil_scale(static_cast<double>(k));
                rec.r2.push_back(r * r);
                rec.max_r.push_back(max_r / scale);
                rec.max_m.push_back(max_m / scale);
                ++gi;
            }
            x = y;
        }
        rec.max_abs_r = max_r;
        records[p] = std::move(rec);
    });

    const double P = static_cast<double>(cfg.paths);
    out.E_R2.assign(G, 0.0);
    out.E_R2_stderr.assign(G, 0.0);
    out.max_R_stat.assign(G, 0.0);
    out.max_m_stat.assign(G, 0.0);
    for (std::size_t i = 0; i < G; ++i) {
        double s = 0.0, s2 = 0.0;
        for (const auto& rec : records) {
            s += rec.r2[i];
            s2 += rec.r2[i] * rec.r2[i];
            out.max_R_stat[i] += rec.max_r[i] / P;
            out.max_m_stat[i] += rec.max_m[i] / P;
        }
        const double mean = s / P;
        const double var = std::max(0.0, (s2 - P * mean * mean) / (P - 1.0));
        out.E_R2[i] = mean;
        out.E_R2_stderr[i] = std::sqrt(var / P);
    }
    for (const auto& rec : records) out.max_abs_R = std::max(out.max_abs_R, rec.max_abs_r);

    out.degenerate = std::all_of(out.E_R2.begin(), out.E_R2.end(), [](double v) { return v == 0.0; });
    if (!out.degenerate) {
        std::vector<double> lx, ly;
        for (std::size_t i = 0; i < G; ++i) {
            lx.push_back(std::log(static_cast<double>(out.n_grid[i])));
            ly.push_back(std::log(std::max(out.E_R2[i], 1e-300)));
        }
        out.beta_hat = ls_slope(lx, ly);
    }
    out.consistent = out.beta_hat <= 2.0 * cfg.alpha_hat + 0.1;
    return out;
}

std::vector<MaxIncrementRow> max_increment_stat(const SamplePath& path, const MartingaleKernel& mk) {
    const auto len = static_cast<long>(path.length());
    if (len < 16) throw ConfigError(fmt::format("max_increment_stat needs a path of length >= 16, got {}", len));
    const double hmax = mk.max_norm_on_support();
    std::vector<MaxIncrementRow> rows;
    double running = 0.0;
    long next = 1;
    for (long k = 0; k < len; ++k) {
        running = std::max(running, mk.at(path.states[static_cast<std::size_t>(k)],
                                          path.states[static_cast<std::size_t>(k + 1)])
                                        .norm());
        const long n = k + 1;
        if (n == next) {
            const double scale = lil_scale(static_cast<double>(n));
            rows.push_back({n, running / scale, hmax / scale});
            next *= 2;
        }
    }
    return rows;
}

}  // namespace lilchain
