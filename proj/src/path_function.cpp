#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "lilchain/errors.hpp"
#include "lilchain/loglog.hpp"
#include "lilchain/strassen.hpp"

namespace lilchain {

PathFunction::PathFunction(std::vector<double> grid, RowMatrix values)
    : grid_(std::move(grid)), values_(std::move(values)) {
    if (grid_.size() < 2) throw ConfigError("path function needs at least two grid points");
    if (static_cast<Eigen::Index>(grid_.size()) != values_.rows())
        throw ConfigError(fmt::format("{} grid points but {} value rows", grid_.size(), values_.rows()));
    if (values_.cols() < 1) throw ConfigError("path function dimension must be >= 1");
    if (grid_.front() != 0.0 || grid_.back() != 1.0) throw ConfigError("grid must run from t = 0 to t = 1");
    for (std::size_t i = 1; i < grid_.size(); ++i)
        if (!(grid_[i] > grid_[i - 1])) throw ConfigError("grid must be strictly increasing");
    if (!values_.allFinite()) throw ConfigError("path function has non-finite values");
    if (values_.row(0).cwiseAbs().maxCoeff() != 0.0) throw ConfigError("path function must satisfy f(0) = 0");
}

PathFunction PathFunction::uniform(RowMatrix values) {
    const auto m = values.rows() - 1;
    std::vector<double> grid(static_cast<std::size_t>(values.rows()));
    for (Eigen::Index j = 0; j <= m; ++j) grid[static_cast<std::size_t>(j)] = static_cast<double>(j) / m;
    if (m >= 1) grid.back() = 1.0;
    return PathFunction(std::move(grid), std::move(values));
}

PathFunction PathFunction::linear(const Eigen::RowVectorXd& v, int m) {
    if (m < 1) throw ConfigError("grid size m must be >= 1");
    RowMatrix values(m + 1, v.size());
    for (int j = 0; j <= m; ++j) values.row(j) = (static_cast<double>(j) / m) * v;
    values.row(0).setZero();
    return uniform(std::move(values));
}

Eigen::RowVectorXd PathFunction::at(double t) const {
    if (t <= 0.0) return values_.row(0);
    if (t >= 1.0) return values_.row(values_.rows() - 1);
    const auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
    const auto i = static_cast<Eigen::Index>(it - grid_.begin());
    const double t0 = grid_[static_cast<std::size_t>(i - 1)];
    const double t1 = grid_[static_cast<std::size_t>(i)];
    const double w = (t - t0) / (t1 - t0);
    return (1.0 - w) * values_.row(i - 1) + w * values_.row(i);
}

double energy(const PathFunction& f) {
    const auto& v = f.values();
    const auto& t = f.grid();
    double e = 0.0;
    for (Eigen::Index i = 1; i < v.rows(); ++i)
        e += (v.row(i) - v.row(i - 1)).squaredNorm() /
             (t[static_cast<std::size_t>(i)] - t[static_cast<std::size_t>(i - 1)]);
    return e;
}

double envelope_check(const PathFunction& f, double trD) {
    if (trD < 0.0) throw ConfigError("trD must be >= 0");
    double worst = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < f.values().rows(); ++i)
        worst = std::max(worst, f.values().row(i).norm() - std::sqrt(trD * f.grid()[static_cast<std::size_t>(i)]));
    return worst;
}

double sup_norm(const PathFunction& f) { return f.values().rowwise().norm().maxCoeff(); }

double sup_distance(const PathFunction& f, const PathFunction& h) {
    if (f.grid() != h.grid() || f.dim() != h.dim()) throw ConfigError("sup_distance needs matching grids");
    return (f.values() - h.values()).rowwise().norm().maxCoeff();
}

PathFunction xi_path(const SamplePath& path, long n, int m) {
    if (m < 1) throw ConfigError("output grid size m must be >= 1");
    if (n < 1 || static_cast<std::size_t>(n) > path.length())
        throw ConfigError(fmt::format("xi_n with n = {} exceeds path length {}", n, path.length()));
    const auto& S = path.partial_sums;
    const double scale = lil_scale(static_cast<double>(n));
    RowMatrix values(m + 1, S.cols());
    for (long j = 0; j <= m; ++j) {
        const long num = j * n;  // n t_j = num / m
        const long k = num / m;
        const long rem = num % m;
        if (rem == 0) {
            values.row(j) = S.row(k) / scale;
        } else {
            const double frac = static_cast<double>(rem) / m;
            values.row(j) = (S.row(k) + frac * (S.row(k + 1) - S.row(k))) / scale;
        }
    }
    return PathFunction::uniform(std::move(values));
}

PathFunction diagonal_function(double trD, Eigen::Index d, int m) {
    if (trD < 0.0) throw ConfigError("trD must be >= 0");
    const Eigen::RowVectorXd v = Eigen::RowVectorXd::Constant(d, std::sqrt(trD / static_cast<double>(d)));
    return PathFunction::linear(v, m);
}

ClusterRecord cluster_probe(const std::vector<PathFunction>& history, double trD, Eigen::Index d) {
    if (history.empty()) throw ConfigError("cluster_probe needs a nonempty history");
    ClusterRecord rec;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < history.size(); ++i) {
        const auto& f = history[i];
        if (f.dim() != d) throw ConfigError("cluster_probe: snapshot dimension mismatch");
        const auto diag = diagonal_function(trD, d, static_cast<int>(f.segments()));
        // Snapshots may live on any grid; evaluate the diagonal pointwise.
        double dist = 0.0;
        for (Eigen::Index j = 0; j < f.values().rows(); ++j)
            dist = std::max(dist, (f.values().row(j) - diag.at(f.grid()[static_cast<std::size_t>(j)])).norm());
        rec.distances.push_back(dist);
        if (dist < best) {
            best = dist;
            rec.argmin = i;
        }
        rec.running_min.push_back(best);
    }
    rec.min = best;
    return rec;
}

}  // namespace lilchain
