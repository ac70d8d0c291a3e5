#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "lilchain/errors.hpp"
#include "lilchain/strassen.hpp"

namespace lilchain {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Shortest path through vertical gates [lower_i, upper_i] at increasing t_i
// with both end gates degenerate. The taut string also minimizes
// sum (dh)^2/dt among all paths through the gates.
double taut_string_energy(const std::vector<double>& t, const std::vector<double>& lower,
                          const std::vector<double>& upper) {
    const std::size_t N = t.size() - 1;
    double e = 0.0;
    std::size_t a = 0;
    double ya = lower[0];
    while (a < N) {
        double lo = -kInf, hi = kInf;
        std::size_t klo = a, khi = a;
        bool bent = false;
        for (std::size_t j = a + 1; j <= N; ++j) {
            const double dt = t[j] - t[a];
            const double sl = (lower[j] - ya) / dt;
            const double su = (upper[j] - ya) / dt;
            if (sl > hi) {  // string wraps under the upper point khi
                e += hi * hi * (t[khi] - t[a]);
                a = khi;
                ya = upper[khi];
                bent = true;
                break;
            }
            if (su < lo) {  // string wraps over the lower point klo
                e += lo * lo * (t[klo] - t[a]);
                a = klo;
                ya = lower[klo];
                bent = true;
                break;
            }
            if (sl > lo) {
                lo = sl;
                klo = j;
            }
            if (su < hi) {
                hi = su;
                khi = j;
            }
        }
        if (!bent) {
            // The last gate is a point, so lo == hi is the slope into it.
            e += lo * lo * (t[N] - t[a]);
            a = N;
        }
    }
    return e;
}

struct Tube {
    std::vector<double> dt;  // dt[i] = t_{i+1} - t_i, i = 0..m-1
    RowMatrix f;             // rows 1..m of the path (row 0 is pinned at 0)
};

Tube make_tube(const PathFunction& fn) {
    Tube tube;
    const auto& t = fn.grid();
    for (std::size_t i = 1; i < t.size(); ++i) tube.dt.push_back(t[i] - t[i - 1]);
    tube.f = fn.values().bottomRows(fn.values().rows() - 1);
    return tube;
}

double tube_energy(const Tube& tube, const RowMatrix& h) {
    double e = h.row(0).squaredNorm() / tube.dt[0];
    for (Eigen::Index i = 1; i < h.rows(); ++i)
        e += (h.row(i) - h.row(i - 1)).squaredNorm() / tube.dt[static_cast<std::size_t>(i)];
    return e;
}

// Solves (I + lambda A) x = y column by column, A the tridiagonal energy form
// over rows 1..m with h_0 = 0 and a free right end.
RowMatrix shifted_solve(const Tube& tube, const RowMatrix& y, double lambda) {
    const auto m = y.rows();
    std::vector<double> diag(static_cast<std::size_t>(m)), off(static_cast<std::size_t>(m), 0.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        const double wl = 1.0 / tube.dt[static_cast<std::size_t>(i)];
        const double wr = i + 1 < m ? 1.0 / tube.dt[static_cast<std::size_t>(i + 1)] : 0.0;
        diag[static_cast<std::size_t>(i)] = 1.0 + lambda * (wl + wr);
        if (i + 1 < m) off[static_cast<std::size_t>(i)] = -lambda * wr;
    }
    // Thomas algorithm; the system is symmetric diagonally dominant.
    std::vector<double> c(static_cast<std::size_t>(m));
    RowMatrix x = y;
    double denom = diag[0];
    c[0] = off[0] / denom;
    x.row(0) /= denom;
    for (Eigen::Index i = 1; i < m; ++i) {
        const auto u = static_cast<std::size_t>(i);
        denom = diag[u] - off[u - 1] * c[u - 1];
        c[u] = off[u] / denom;
        x.row(i) = (y.row(i) - off[u - 1] * x.row(i - 1)) / denom;
    }
    for (Eigen::Index i = m - 2; i >= 0; --i) x.row(i) -= c[static_cast<std::size_t>(i)] * x.row(i + 1);
    return x;
}

// Euclidean projection onto {h : energy(h) <= r}. The multiplier solves
// energy((I + lambda A)^{-1} y) = r; found by Illinois regula falsi in log lambda.
RowMatrix project_energy_ball(const Tube& tube, const RowMatrix& y, double r) {
    const double e0 = tube_energy(tube, y);
    if (e0 <= r) return y;
    if (r <= 0.0) return RowMatrix::Zero(y.rows(), y.cols());
    auto phi = [&](double s) { return std::log(tube_energy(tube, shifted_solve(tube, y, std::exp(s)))) - std::log(r); };
    double a = -30.0, b = 0.0;
    double fa = phi(a), fb = phi(b);
    while (fb > 0.0 && b < 80.0) {
        a = b;
        fa = fb;
        b += 4.0;
        fb = phi(b);
    }
    if (fa < 0.0) return shifted_solve(tube, y, std::exp(a));
    int side = 0;
    double s = b;
    for (int it = 0; it < 200 && std::abs(b - a) > 1e-13; ++it) {
        s = (a * fb - b * fa) / (fb - fa);
        const double fs = phi(s);
        if (std::abs(fs) < 1e-13) break;
        if (fs > 0.0) {
            a = s;
            fa = fs;
            if (side == -1) fb *= 0.5;
            side = -1;
        } else {
            b = s;
            fb = fs;
            if (side == 1) fa *= 0.5;
            side = 1;
        }
    }
    RowMatrix h = shifted_solve(tube, y, std::exp(s));
    const double e = tube_energy(tube, h);
    if (e > r) h *= std::sqrt(r / e);  // keep the iterate inside the ball
    return h;
}

void project_tube(const Tube& tube, RowMatrix& h, double delta) {
    for (Eigen::Index i = 0; i < h.rows(); ++i) {
        const Eigen::RowVectorXd v = h.row(i) - tube.f.row(i);
        const double nv = v.norm();
        if (nv > delta) h.row(i) = tube.f.row(i) + v * (delta / nv);
    }
}

double primal_bound(const Tube& tube, const RowMatrix& h) {
    return (h - tube.f).rowwise().norm().maxCoeff();
}

// For w != 0: every delta < L(w) leaves the tube and the energy ball strictly
// separated by the hyperplane with normal w, so L(w) is a lower bound.
double dual_bound(const Tube& tube, const RowMatrix& w, double r) {
    const auto m = w.rows();
    double norm1 = 0.0, lin = 0.0, quad = 0.0;
    Eigen::RowVectorXd tail = Eigen::RowVectorXd::Zero(w.cols());
    for (Eigen::Index i = m - 1; i >= 0; --i) {
        tail += w.row(i);
        quad += tube.dt[static_cast<std::size_t>(i)] * tail.squaredNorm();
        norm1 += w.row(i).norm();
        lin += w.row(i).dot(tube.f.row(i));
    }
    if (norm1 == 0.0) return -kInf;
    return (lin - std::sqrt(r * quad)) / norm1;
}

// Solves (A + diag(lam)) x = diag(lam) f column by column and returns the
// dual value x^t A x + sum lam_i |x_i - f_i|^2 - delta^2 sum lam_i, a lower
// bound on the minimal energy inside the tube.
double tube_dual_value(const Tube& tube, const std::vector<double>& lam, double delta) {
    const auto m = tube.f.rows();
    std::vector<double> diag(static_cast<std::size_t>(m)), off(static_cast<std::size_t>(m), 0.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto u = static_cast<std::size_t>(i);
        const double wr = i + 1 < m ? 1.0 / tube.dt[u + 1] : 0.0;
        diag[u] = 1.0 / tube.dt[u] + wr + lam[u];
        off[u] = -wr;
    }
    std::vector<double> c(static_cast<std::size_t>(m));
    RowMatrix x(m, tube.f.cols());
    double denom = diag[0];
    c[0] = off[0] / denom;
    x.row(0) = lam[0] * tube.f.row(0) / denom;
    for (Eigen::Index i = 1; i < m; ++i) {
        const auto u = static_cast<std::size_t>(i);
        denom = diag[u] - off[u - 1] * c[u - 1];
        c[u] = off[u] / denom;
        x.row(i) = (lam[u] * tube.f.row(i) - off[u - 1] * x.row(i - 1)) / denom;
    }
    for (Eigen::Index i = m - 2; i >= 0; --i) x.row(i) -= c[static_cast<std::size_t>(i)] * x.row(i + 1);
    double value = tube_energy(tube, x);
    for (Eigen::Index i = 0; i < m; ++i) {
        const auto u = static_cast<std::size_t>(i);
        value += lam[u] * ((x.row(i) - tube.f.row(i)).squaredNorm() - delta * delta);
    }
    return value;
}

enum class Feasibility { Feasible, Infeasible, Undecided };

// Decides min{energy(h) : |h_i - f_i| <= delta} <= r by a log-barrier method.
// Newton systems are block tridiagonal with d x d blocks. A feasible answer
// comes with the iterate h; an infeasible one with a dual value above r.
Feasibility barrier_feasible(const Tube& tube, double delta, double r, RowMatrix& h, long& newton_steps) {
    const auto m = tube.f.rows();
    const auto d = tube.f.cols();
    const double d2 = delta * delta;
    std::vector<double> wl(static_cast<std::size_t>(m)), wr(static_cast<std::size_t>(m), 0.0);
    for (Eigen::Index i = 0; i < m; ++i) {
        wl[static_cast<std::size_t>(i)] = 1.0 / tube.dt[static_cast<std::size_t>(i)];
        if (i + 1 < m) wr[static_cast<std::size_t>(i)] = 1.0 / tube.dt[static_cast<std::size_t>(i + 1)];
    }
    auto slack = [&](const RowMatrix& x, Eigen::Index i) { return d2 - (x.row(i) - tube.f.row(i)).squaredNorm(); };
    auto objective = [&](const RowMatrix& x, double t) {
        double v = t * tube_energy(tube, x);
        for (Eigen::Index i = 0; i < m; ++i) {
            const double s = slack(x, i);
            if (s <= 0.0) return kInf;
            v -= std::log(s);
        }
        return v;
    };

    h = tube.f;
    double t = static_cast<double>(m) / std::max(tube_energy(tube, h), r);
    std::vector<Matrix> Dblk(static_cast<std::size_t>(m));
    std::vector<Matrix> inv(static_cast<std::size_t>(m));
    RowMatrix grad(m, d), step(m, d);
    std::vector<double> lam(static_cast<std::size_t>(m));
    for (int outer = 0; outer < 60; ++outer) {
        for (int it = 0; it < 100; ++it) {
            ++newton_steps;
            // gradient and Hessian blocks of t*E - sum log(s_i)
            for (Eigen::Index i = 0; i < m; ++i) {
                const auto u = static_cast<std::size_t>(i);
                Eigen::RowVectorXd ah = (wl[u] + wr[u]) * h.row(i);
                if (i > 0) ah -= wl[u] * h.row(i - 1);
                if (i + 1 < m) ah -= wr[u] * h.row(i + 1);
                const Eigen::RowVectorXd v = h.row(i) - tube.f.row(i);
                const double s = d2 - v.squaredNorm();
                grad.row(i) = 2.0 * t * ah + 2.0 * v / s;
                Dblk[u] = (2.0 * t * (wl[u] + wr[u]) + 2.0 / s) * Matrix::Identity(d, d) +
                          (4.0 / (s * s)) * v.transpose() * v;
            }
            // block Thomas: off-diagonal blocks are -2 t wr_i I
            RowMatrix rhs = -grad;
            for (Eigen::Index i = 0; i < m; ++i) {
                const auto u = static_cast<std::size_t>(i);
                if (i > 0) {
                    const double o = 2.0 * t * wr[u - 1];
                    Dblk[u] -= (o * o) * inv[u - 1];
                    rhs.row(i) += o * (inv[u - 1] * rhs.row(i - 1).transpose()).transpose();
                }
                inv[u] = Dblk[u].inverse();
            }
            step.row(m - 1) = (inv[static_cast<std::size_t>(m - 1)] * rhs.row(m - 1).transpose()).transpose();
            for (Eigen::Index i = m - 2; i >= 0; --i) {
                const auto u = static_cast<std::size_t>(i);
                const double o = 2.0 * t * wr[u];
                step.row(i) = (inv[u] * (rhs.row(i) + o * step.row(i + 1)).transpose()).transpose();
            }
            const double decrement = -(grad.cwiseProduct(step)).sum();
            if (decrement < 1e-10) break;
            const double f0 = objective(h, t);
            double a = 1.0;
            RowMatrix trial = h + step;
            while (a > 1e-12) {
                trial = h + a * step;
                if (objective(trial, t) <= f0 - 0.25 * a * decrement) break;
                a *= 0.5;
            }
            if (a <= 1e-12) break;
            h = std::move(trial);
        }
        if (tube_energy(tube, h) <= r) return Feasibility::Feasible;
        for (Eigen::Index i = 0; i < m; ++i) lam[static_cast<std::size_t>(i)] = 1.0 / (t * slack(h, i));
        if (tube_dual_value(tube, lam, delta) > r) return Feasibility::Infeasible;
        if (static_cast<double>(m) / t < 1e-14 * r) break;
        t *= 8.0;
    }
    return Feasibility::Undecided;
}

}  // namespace

double min_energy_in_tube(const PathFunction& f, double delta) {
    if (f.dim() != 1) throw ConfigError("min_energy_in_tube handles d = 1 only");
    if (delta < 0.0) throw ConfigError("tube radius must be >= 0");
    const auto& g = f.grid();
    const auto& v = f.values();
    const std::size_t m = g.size() - 1;
    // Free right end: mirror the tube about t = 1 and pin both ends at 0.
    std::vector<double> t, lo, up;
    t.reserve(2 * m + 1);
    for (std::size_t i = 0; i <= m; ++i) {
        t.push_back(g[i]);
        lo.push_back(v(static_cast<Eigen::Index>(i), 0) - delta);
        up.push_back(v(static_cast<Eigen::Index>(i), 0) + delta);
    }
    for (std::size_t i = m; i-- > 0;) {
        t.push_back(2.0 - g[i]);
        lo.push_back(lo[i]);
        up.push_back(up[i]);
    }
    lo.front() = up.front() = 0.0;
    lo.back() = up.back() = 0.0;
    return 0.5 * taut_string_energy(t, lo, up);
}

DistResult dist_to_K(const PathFunction& f, double trD, const DistOptions& opt) {
    if (!(trD >= 0.0) || !std::isfinite(trD)) throw ConfigError(fmt::format("trD must be >= 0, got {}", trD));
    if (!(opt.tol > 0.0)) throw ConfigError("dist_to_K tolerance must be positive");

    using Method = DistOptions::Method;
    Method method = opt.method;
    if (method == Method::Auto) method = f.dim() == 1 ? Method::TautString : Method::InteriorPoint;
    const bool taut = method == Method::TautString;
    if (taut && f.dim() != 1) throw ConfigError("taut-string method needs d = 1");

    DistResult res;
    res.method = taut ? "taut-string" : method == Method::Dykstra ? "dykstra" : "interior-point";
    if (energy(f) <= trD) return res;  // member: distance 0
    double hi = sup_norm(f);           // h = 0 is always feasible
    if (trD == 0.0) {
        res.distance = res.lower = res.upper = hi;
        return res;
    }
    double lo = std::max(0.0, envelope_check(f, trD));

    if (taut) {
        while (hi - lo > 0.25 * opt.tol) {
            const double mid = 0.5 * (lo + hi);
            (min_energy_in_tube(f, mid) <= trD ? hi : lo) = mid;
            ++res.iterations;
        }
        res.distance = res.upper = hi;
        res.lower = lo;
        return res;
    }

    const Tube tube = make_tube(f);
    if (method == Method::InteriorPoint) {
        RowMatrix h;
        while (hi - lo > opt.tol) {
            const double delta = 0.5 * (lo + hi);
            const auto verdict = barrier_feasible(tube, delta, trD, h, res.iterations);
            if (verdict == Feasibility::Undecided) {
                res.converged = false;
                break;
            }
            if (verdict == Feasibility::Feasible) hi = std::min(delta, primal_bound(tube, h));
            else lo = delta;
        }
        res.distance = res.upper = hi;
        res.lower = lo;
        return res;
    }
    while (hi - lo > opt.tol) {
        const double width = hi - lo;
        const double delta = 0.5 * (lo + hi);
        RowMatrix x = tube.f;
        RowMatrix p = RowMatrix::Zero(x.rows(), x.cols());
        RowMatrix q = p;
        bool decided = false;
        for (long it = 0; it < opt.max_iterations; ++it) {
            ++res.iterations;
            const RowMatrix y = project_energy_ball(tube, x + p, trD);
            p += x - y;
            RowMatrix xn = y + q;
            project_tube(tube, xn, delta);
            q += y - xn;
            x = std::move(xn);

            hi = std::min(hi, primal_bound(tube, y));
            const RowMatrix w = x - y;
            lo = std::max(lo, dual_bound(tube, w, trD));
            if (hi <= delta + 0.25 * width || lo >= delta - 0.25 * width) {
                decided = true;
                break;
            }
        }
        if (!decided) {
            res.converged = false;
            break;
        }
    }
    res.distance = res.upper = hi;
    res.lower = std::min(lo, hi);
    return res;
}

}  // namespace lilchain
