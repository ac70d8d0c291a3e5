#include "lilchain/poisson.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lilchain/errors.hpp"

namespace lilchain {

namespace {

double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

}  // namespace

double l2_pi(const Vector& pi, const Matrix& u) {
    return std::sqrt(pi.dot(u.rowwise().squaredNorm()));
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const auto n = static_cast<double>(x.size());
    if (x.size() < 2) return 0.0;
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : 0.0;
}

ResolventSolution solve_resolvent(const FiniteKernel& kernel, const Matrix& g, double epsilon,
                                  const Tolerances& tol) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw ConfigError(fmt::format("resolvent: epsilon must be positive, got {}", epsilon));
    const auto& P = kernel.P();
    const auto n = P.rows();
    const Matrix A = (1.0 + epsilon) * Matrix::Identity(n, n) - P;
    Matrix h = A.partialPivLu().solve(g);
    const double residual = max_abs(A * h - g);
    if (!(residual <= tol.resolvent * (1.0 + max_abs(g))))
        throw NumericError(fmt::format("resolvent residual {} at eps = {} (invalid kernel?)", residual, epsilon));
    return ResolventSolution{epsilon, std::move(h), residual};
}

SeriesResult resolvent_series(const FiniteKernel& kernel, const Matrix& g, double epsilon, int terms) {
    if (!(epsilon > 0.0)) throw ConfigError("resolvent series: epsilon must be positive");
    Matrix acc = Matrix::Zero(g.rows(), g.cols());
    Matrix power = g;  // Q^{n-1} g
    double weight = 1.0;
    for (int n = 1; n <= terms; ++n) {
        weight /= (1.0 + epsilon);
        acc += weight * power;
        power = kernel.P() * power;
    }
    return SeriesResult{std::move(acc), max_abs(g) * std::pow(1.0 + epsilon, -terms) / epsilon};
}

Matrix poisson_limit(const FiniteKernel& kernel, const Vector& pi, const Matrix& g, const Tolerances& tol) {
    const Eigen::RowVectorXd mean = pi_mean(pi, g);
    for (Eigen::Index c = 0; c < g.cols(); ++c)
        if (std::abs(mean(c)) > tol.centering)
            throw SpecError(fmt::format("Poisson limit needs centered g: pi-mean of coordinate {} is {}", c + 1,
                                        mean(c)));
    const auto n = kernel.size();
    const Matrix Pi = Vector::Ones(n) * pi.transpose();
    const Matrix A = Matrix::Identity(n, n) - kernel.P() + Pi;
    Eigen::PartialPivLU<Matrix> lu(A);
    Matrix h = lu.solve(g);
    const double residual = max_abs(A * h - g);
    if (!(residual <= tol.resolvent * (1.0 + max_abs(g))))
        throw NumericError(fmt::format("fundamental-matrix solve residual {}", residual));

    const auto near = solve_resolvent(kernel, g, 1e-6, tol);
    const double gap = max_abs(near.h - h);
    if (!(gap <= tol.poisson_crosscheck * max_abs(h) + 1e-12))
        throw NumericError(fmt::format(
            "Poisson limit disagrees with h_eps at eps = 1e-6 by {} (max|h| = {}); chain mixes too slowly "
            "for the configured cross-check",
            gap, max_abs(h)));
    return h;
}

double MartingaleKernel::conditional_mean_defect(const Matrix& P) const {
    const auto n = states();
    double worst = 0.0;
    for (Eigen::Index x0 = 0; x0 < n; ++x0) {
        Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(dim());
        for (Eigen::Index x1 = 0; x1 < n; ++x1) acc += P(x0, x1) * at(x0, x1);
        worst = std::max(worst, acc.cwiseAbs().maxCoeff());
    }
    return worst;
}

double MartingaleKernel::max_norm_on_support() const {
    double worst = 0.0;
    for (Eigen::Index x0 = 0; x0 < states(); ++x0)
        for (Eigen::Index x1 = 0; x1 < states(); ++x1)
            if (pi1_(x0, x1) > 0.0) worst = std::max(worst, at(x0, x1).norm());
    return worst;
}

double MartingaleKernel::l2_norm_squared() const {
    double acc = 0.0;
    for (Eigen::Index x0 = 0; x0 < states(); ++x0)
        for (Eigen::Index x1 = 0; x1 < states(); ++x1) acc += pi1_(x0, x1) * at(x0, x1).squaredNorm();
    return acc;
}

MartingaleKernel martingale_kernel(const FiniteKernel& kernel, const Vector& pi, const Matrix& h,
                                   const Tolerances& tol) {
    if (!h.allFinite()) throw NumericError("martingale kernel: h is not finite");
    const auto& P = kernel.P();
    const auto n = kernel.size();
    const Matrix Ph = P * h;
    Matrix H(n * n, h.cols());
    for (Eigen::Index x0 = 0; x0 < n; ++x0)
        for (Eigen::Index x1 = 0; x1 < n; ++x1) H.row(x0 * n + x1) = h.row(x1) - Ph.row(x0);
    Matrix pi1 = pi.asDiagonal() * P;
    MartingaleKernel mk(std::move(H), std::move(pi1));

    const double defect = mk.conditional_mean_defect(P);
    if (!(defect <= tol.martingale * max_abs(mk.values())))
        throw NumericError(fmt::format("martingale-difference property fails: conditional mean {}", defect));
    return mk;
}

Decomposition decompose_path(const SamplePath& path, const ChainModel& model, double epsilon,
                             const Tolerances& tol) {
    const auto& g = model.obs.g;
    const auto& kernel = model.kernel;
    const auto res = solve_resolvent(kernel, g, epsilon, tol);
    const auto mk_eps = martingale_kernel(kernel, model.pi, res.h, tol);
    const auto mk_lim = martingale_kernel(kernel, model.pi, poisson_limit(kernel, model.pi, g, tol), tol);
    const Matrix& h = res.h;

    const auto n = static_cast<Eigen::Index>(path.length());
    const auto d = g.cols();
    Decomposition out;
    out.epsilon = epsilon;
    out.S = path.partial_sums;
    out.M_eps.setZero(n + 1, d);
    out.eps_S_h.setZero(n + 1, d);
    out.R_eps.setZero(n + 1, d);
    out.M_lim.setZero(n + 1, d);
    out.R_lim.setZero(n + 1, d);

    const auto& X = path.states;
    Eigen::RowVectorXd sum_h = Eigen::RowVectorXd::Zero(d);
    const double gmax = max_abs(g);
    for (Eigen::Index k = 1; k <= n; ++k) {
        const auto a = X[static_cast<std::size_t>(k - 1)];
        const auto b = X[static_cast<std::size_t>(k)];
        out.M_eps.row(k) = out.M_eps.row(k - 1) + mk_eps.at(a, b);
        out.M_lim.row(k) = out.M_lim.row(k - 1) + mk_lim.at(a, b);
        sum_h += h.row(a);
        out.eps_S_h.row(k) = epsilon * sum_h;
        out.R_eps.row(k) = h.row(X[0]) - h.row(b);
        out.R_lim.row(k) = out.S.row(k) - out.M_lim.row(k);

        const double defect =
            (out.S.row(k) - out.M_eps.row(k) - out.eps_S_h.row(k) - out.R_eps.row(k)).cwiseAbs().maxCoeff();
        out.max_identity_defect = std::max(out.max_identity_defect, defect);
        if (!(defect <= tol.decomposition * static_cast<double>(k) * gmax))
            throw NumericError(fmt::format("decomposition identity fails at k = {}: defect {}", k, defect));
    }
    return out;
}

MWFit mw_fit(const FiniteKernel& kernel, const Vector& pi, const Matrix& g, long n_max, const Tolerances& tol) {
    if (n_max < 8) throw ConfigError(fmt::format("mw_fit: n_max must be >= 8, got {}", n_max));
    MWFit fit;
    Matrix u = Matrix::Zero(g.rows(), g.cols());
    long next = 1;
    for (long n = 1; n <= n_max; ++n) {
        u = g + kernel.P() * u;
        if (n == next) {
            fit.n_grid.push_back(n);
            fit.V.push_back(l2_pi(pi, u));
            next *= 2;
        }
    }
    std::vector<double> lx, ly;
    bool all_zero = true;
    for (std::size_t i = 0; i < fit.n_grid.size(); ++i) {
        if (fit.n_grid[i] < 2) continue;
        lx.push_back(std::log(static_cast<double>(fit.n_grid[i])));
        ly.push_back(std::log(std::max(fit.V[i], 1e-300)));
        all_zero = all_zero && fit.V[i] == 0.0;
    }
    fit.degenerate = all_zero;
    fit.alpha_hat = all_zero ? 0.0 : ls_slope(lx, ly);
    fit.alpha_ok = fit.alpha_hat < 0.5 - tol.alpha_margin;
    return fit;
}

std::vector<EpsConvergenceRow> h_eps_convergence(const ChainModel& model, const std::vector<double>& eps_grid,
                                                 double alpha_hat, const Tolerances& tol) {
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        if (!(eps_grid[i] > 0.0)) throw ConfigError("eps grid must be positive");
        if (i > 0 && !(eps_grid[i] < eps_grid[i - 1])) throw ConfigError("eps grid must be strictly decreasing");
    }
    const auto& kernel = model.kernel;
    const auto& g = model.obs.g;
    const Matrix h = poisson_limit(kernel, model.pi, g, tol);
    const auto H = martingale_kernel(kernel, model.pi, h, tol);

    std::vector<EpsConvergenceRow> rows;
    for (const double eps : eps_grid) {
        const auto res = solve_resolvent(kernel, g, eps, tol);
        const auto He = martingale_kernel(kernel, model.pi, res.h, tol);
        const MartingaleKernel diff(He.values() - H.values(), H.pair_measure());
        EpsConvergenceRow row;
        row.epsilon = eps;
        row.h_error = l2_pi(model.pi, res.h - h);
        row.H_error = std::sqrt(diff.l2_norm_squared());
        row.h_norm = l2_pi(model.pi, res.h);
        row.h_norm_scaled = row.h_norm * std::pow(eps, alpha_hat);
        rows.push_back(row);
    }
    return rows;
}

}  // namespace lilchain
