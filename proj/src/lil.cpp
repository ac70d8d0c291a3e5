#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lilchain/errors.hpp"
#include "lilchain/loglog.hpp"
#include "lilchain/rng.hpp"
#include "lilchain/strassen.hpp"

namespace lilchain {

std::vector<std::pair<int, long>> lil_checkpoints(long n_max, double rho, long n_min) {
    if (!(rho > 1.0)) throw ConfigError(fmt::format("checkpoint ratio rho must exceed 1, got {}", rho));
    std::vector<std::pair<int, long>> out;
    long last = 0;
    for (int k = 0;; ++k) {
        const double v = std::floor(std::pow(rho, k));
        if (v > static_cast<double>(n_max)) break;
        const auto n = static_cast<long>(v);
        if (n >= n_min && n != last) out.emplace_back(k, n);
        last = n;
    }
    return out;
}

namespace {

// Snapshot indices floor(j n / m) and the next index when the grid point
// falls strictly inside a step.
void snapshot_indices(long n, int m, std::vector<long>& out) {
    for (long j = 0; j <= m; ++j) {
        const long num = j * n;
        out.push_back(num / m);
        if (num % m != 0) out.push_back(num / m + 1);
    }
}

PathFunction snapshot(const std::vector<long>& index, const RowMatrix& stored, long n, int m, double scale) {
    auto row_of = [&](long k) {
        const auto it = std::lower_bound(index.begin(), index.end(), k);
        return static_cast<Eigen::Index>(it - index.begin());
    };
    RowMatrix values(m + 1, stored.cols());
    for (long j = 0; j <= m; ++j) {
        const long num = j * n;
        const long k = num / m;
        const long rem = num % m;
        const auto a = row_of(k);
        if (rem == 0) {
            values.row(j) = stored.row(a) / scale;
        } else {
            const double frac = static_cast<double>(rem) / m;
            values.row(j) = (stored.row(a) + frac * (stored.row(a + 1) - stored.row(a))) / scale;
        }
    }
    values.row(0).setZero();
    return PathFunction::uniform(std::move(values));
}

// Restriction of a uniform snapshot to a coarser uniform grid (m_out | m_in).
PathFunction coarsen(const PathFunction& f, int m_out) {
    const auto m_in = static_cast<int>(f.segments());
    if (m_out >= m_in || m_in % m_out != 0) return f;
    const int step = m_in / m_out;
    RowMatrix values(m_out + 1, f.dim());
    for (int j = 0; j <= m_out; ++j) values.row(j) = f.values().row(j * step);
    return PathFunction::uniform(std::move(values));
}

}  // namespace

LILReport lil_run(const ChainModel& model, double trD, const LILConfig& cfg, const Tolerances& tol) {
    if (cfg.n_max < 1000) throw ConfigError(fmt::format("lil_run needs n_max >= 1000, got {}", cfg.n_max));
    if (cfg.grid < 1) throw ConfigError("snapshot grid must be >= 1");
    if (!(trD >= 0.0)) throw ConfigError("trD must be >= 0");
    const auto checkpoints = lil_checkpoints(cfg.n_max, cfg.rho, std::max(1L, cfg.n_min));
    if (checkpoints.empty()) throw ConfigError("no checkpoints between n_min and n_max");

    const auto& g = model.obs.g;
    const auto d = g.cols();
    const auto& P = model.kernel.P();
    const int m = cfg.grid;
    const int dist_grid = cfg.dist_grid > 0 ? cfg.dist_grid : (d == 1 ? m : std::min(m, 128));

    std::vector<long> index;
    for (const auto& [k, n] : checkpoints) snapshot_indices(n, m, index);
    std::sort(index.begin(), index.end());
    index.erase(std::unique(index.begin(), index.end()), index.end());
    RowMatrix stored(static_cast<Eigen::Index>(index.size()), d);

    StreamRng rng(cfg.seed, cfg.stream);
    const TransitionSampler sampler(model.kernel, model.pi);
    int x = 0;
    if (cfg.start_state) {
        if (*cfg.start_state < 0 || *cfg.start_state >= model.kernel.size())
            throw ConfigError(fmt::format("start state {} out of range", *cfg.start_state));
        x = *cfg.start_state;
    } else {
        x = sampler.initial(rng.uniform());
    }

    // Centered variant: c_n = E_{X_0} S_n = sum_{i<n} (e_{X_0}^t Q^i) g. The
    // row is frozen once it has reached pi, where it contributes pi g = 0.
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(P.rows());
    row(x) = 1.0;
    bool row_mixed = false;
    Eigen::RowVectorXd cond_mean = Eigen::RowVectorXd::Zero(d);

    LILReport rep;
    rep.trD = trD;
    rep.target = std::sqrt(trD);
    const PathFunction diag = diagonal_function(trD, d, m);

    Eigen::RowVectorXd S = Eigen::RowVectorXd::Zero(d);
    double max_abs = 0.0;
    std::size_t next_index = 0;
    std::size_t next_cp = 0;
    const long n_end = checkpoints.back().second;
    for (long k = 0; k <= n_end; ++k) {
        const Eigen::RowVectorXd Sk = cfg.centered ? Eigen::RowVectorXd(S - cond_mean) : S;
        const double norm_k = Sk.norm();
        max_abs = std::max(max_abs, norm_k);
        if (next_index < index.size() && index[next_index] == k) stored.row(static_cast<Eigen::Index>(next_index++)) = Sk;

        if (k == checkpoints[next_cp].second) {
            const double scale = lil_scale(static_cast<double>(k));
            LILCheckpoint cp;
            cp.k = checkpoints[next_cp].first;
            cp.n = k;
            cp.stat = norm_k / scale;
            rep.running_max = std::max(rep.running_max, cp.stat);
            cp.running_max = rep.running_max;
            cp.sup_stat = max_abs / scale;
            PathFunction xi = snapshot(index, stored, k, m, scale);
            cp.envelope = envelope_check(xi, trD);
            cp.cluster = sup_distance(xi, diag);
            if (cfg.compute_dist) {
                DistOptions opt;
                opt.tol = tol.dist;
                const auto dr = dist_to_K(coarsen(xi, dist_grid), trD, opt);
                cp.dist_to_K = dr.distance;
                if (!dr.converged) ++rep.dist_unconverged;
            }
            rep.rows.push_back(cp);
            if (cfg.keep_snapshots) rep.snapshots.push_back(std::move(xi));
            ++next_cp;
        }
        if (k == n_end) break;

        S += g.row(x);
        if (cfg.centered && !row_mixed) {
            cond_mean += row * g;
            row = row * P;
            row_mixed = (row - model.pi.transpose()).cwiseAbs().sum() < 1e-15;
        }
        x = sampler.next(x, rng.uniform());
    }
    rep.max_abs_S = max_abs;

    const auto band = fmt::format("[{:.2f},{:.2f}]", tol.band_lo, tol.band_hi);
    if (rep.target <= 1e-12) {
        if (max_abs == 0.0) {
            rep.band_ok = true;
            rep.verdict = "degenerate (trD=0, S≡0)";
        } else if (rep.rows.back().stat <= tol.zero_stat) {
            rep.band_ok = true;
            rep.verdict = "converges to 0; band trivially satisfied";
        } else {
            rep.band_ok = false;
            rep.verdict = "does not converge to 0";
        }
    } else {
        const double ratio = rep.running_max / rep.target;
        rep.band_ok = ratio >= tol.band_lo && ratio <= tol.band_hi;
        rep.verdict = fmt::format("{} band {}", rep.band_ok ? "within" : "outside", band);
    }
    return rep;
}

}  // namespace lilchain
