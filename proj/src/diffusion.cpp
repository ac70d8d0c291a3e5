#include "lilchain/diffusion.hpp"

#include <cmath>

#include <fmt/format.h>

#include "lilchain/errors.hpp"

namespace lilchain {

namespace {

double min_eigenvalue(const Matrix& D) {
    if (D.size() == 0) return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(D, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

DiffusionMatrix diffusion_exact(const MartingaleKernel& mk, const Tolerances& tol) {
    const auto n = mk.states();
    const auto d = mk.dim();
    Matrix D = Matrix::Zero(d, d);
    for (Eigen::Index x0 = 0; x0 < n; ++x0) {
        for (Eigen::Index x1 = 0; x1 < n; ++x1) {
            const double w = mk.pair_measure()(x0, x1);
            if (w == 0.0) continue;
            const Eigen::RowVectorXd Hx = mk.at(x0, x1);
            D.noalias() += w * Hx.transpose() * Hx;
        }
    }
    const double asym = (D - D.transpose()).cwiseAbs().maxCoeff();
    if (asym > tol.symmetry) throw NumericError(fmt::format("diffusion matrix asymmetric by {}", asym));
    D = 0.5 * (D + D.transpose());

    DiffusionMatrix out;
    out.method = "exact";
    out.trace = D.trace();
    out.min_eigenvalue = min_eigenvalue(D);
    if (out.min_eigenvalue < -tol.psd_floor)
        throw NumericError(fmt::format("diffusion matrix not PSD: eigenvalue {}", out.min_eigenvalue));
    const double norm2 = mk.l2_norm_squared();
    if (std::abs(out.trace - norm2) > tol.psd_floor * std::max(1.0, norm2))
        throw NumericError(fmt::format("tr(D) = {} but ||H||^2 = {}", out.trace, norm2));
    out.D = std::move(D);
    return out;
}

DiffusionAccumulator::DiffusionAccumulator(Eigen::Index dim, long total_steps, int batches)
    : dim_(dim), total_(total_steps), batches_(batches), sum_(Matrix::Zero(dim, dim)) {
    if (total_steps <= 0) throw ConfigError("degenerate ensemble: no increments");
    if (batches < 2 || batches > total_steps)
        throw ConfigError(fmt::format("need 2 <= batches <= steps, got {} batches for {} steps", batches,
                                      total_steps));
    batch_sum_.assign(static_cast<std::size_t>(batches), Matrix::Zero(dim, dim));
    batch_count_.assign(static_cast<std::size_t>(batches), 0);
}

void DiffusionAccumulator::add(const Eigen::Ref<const Eigen::RowVectorXd>& m) {
    // Batch b covers global indices [b*total/B, (b+1)*total/B).
    const auto b = static_cast<std::size_t>((static_cast<__int128>(seen_) * batches_) / total_);
    const Matrix outer = m.transpose() * m;
    sum_ += outer;
    batch_sum_[b] += outer;
    ++batch_count_[b];
    ++seen_;
}

DiffusionMatrix DiffusionAccumulator::finish() const {
    if (seen_ != total_)
        throw ConfigError(fmt::format("accumulator saw {} increments, expected {}", seen_, total_));
    DiffusionMatrix out;
    out.method = "empirical";
    out.steps = seen_;
    out.D = sum_ / static_cast<double>(seen_);
    out.trace = out.D.trace();
    out.min_eigenvalue = min_eigenvalue(0.5 * (out.D + out.D.transpose()));

    Matrix var = Matrix::Zero(dim_, dim_);
    for (int b = 0; b < batches_; ++b) {
        const Matrix mean_b = batch_sum_[static_cast<std::size_t>(b)] /
                              static_cast<double>(batch_count_[static_cast<std::size_t>(b)]);
        var += (mean_b - out.D).cwiseAbs2();
    }
    var /= static_cast<double>(batches_ - 1);
    out.stderr_ = (var / static_cast<double>(batches_)).cwiseSqrt();
    return out;
}

DiffusionMatrix diffusion_empirical(const std::vector<SamplePath>& paths, const MartingaleKernel& mk,
                                    int batches) {
    long total = 0;
    for (const auto& p : paths) total += static_cast<long>(p.length());
    if (total == 0) throw ConfigError("degenerate ensemble: no increments");
    if (total < 10000) throw ConfigError(fmt::format("diffusion_empirical needs >= 1e4 increments, got {}", total));
    DiffusionAccumulator acc(mk.dim(), total, batches);
    for (const auto& p : paths)
        for (std::size_t i = 0; i + 1 < p.states.size(); ++i) acc.add(mk.at(p.states[i], p.states[i + 1]));
    return acc.finish();
}

}  // namespace lilchain
