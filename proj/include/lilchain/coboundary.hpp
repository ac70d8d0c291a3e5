#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lilchain/poisson.hpp"

namespace lilchain {

/// Coefficients c_k = (-1)^k binom(alpha, k) of (I - T)^alpha = sum_k c_k T^k,
/// built by c_{k+1} = c_k (k - alpha) / (k + 1).
class FracCoefficients {
public:
    explicit FracCoefficients(double alpha);

    double alpha() const noexcept { return alpha_; }

    /// c_0 .. c_K, extending the cache as needed.
    double operator[](std::size_t k);

    /// |sum_{k > K} c_k| = |sum_{k <= K} c_k| (the full series sums to 0).
    double tail(std::size_t K);

private:
    void extend(std::size_t K);

    double alpha_;
    std::vector<double> c_;
    std::vector<double> partial_;
};

struct FracApplyResult {
    Matrix value;             // sum_{k<=K} c_k Q^k u
    double alpha = 0.0;
    long terms = 0;           // K
    double coeff_tail = 0.0;  // |sum_{k>K} c_k|
    double error_bound = 0.0; // coeff_tail * max|Q^{K+1} u|, bounds the sup-norm truncation error
};

/// Binomial series for (I - Q)^alpha u, alpha in (0, 1]. With `terms` unset the
/// series runs until error_bound <= tol.frac_tail * max|u| or K = 1e5.
/// Throws ConfigError for alpha outside (0, 1] or terms < 1.
FracApplyResult frac_power_apply(const FiniteKernel& kernel, double alpha, const Matrix& u,
                                 std::optional<long> terms = std::nullopt, const Tolerances& tol = {});

/// sup over dyadic n <= n_max of n^{beta-1} ||sum_{k=1}^n Q^k g||_{L^2(pi)}.
struct MembershipReport {
    double beta = 0.0;
    std::vector<long> n_grid;
    std::vector<double> scaled;  // n^{beta-1} ||sum_{k=1}^n Q^k g||
    double sup = 0.0;
    double tail_slope = 0.0;     // log-log slope of `scaled` over the upper half of the grid
    bool bounded = false;
    std::string conclusion;
};

MembershipReport frac_membership(const FiniteKernel& kernel, const Vector& pi, const Matrix& g, double beta,
                                 long n_max = 1L << 14);

struct RemainderConfig {
    int paths = 200;
    int log2_min = 6;
    int log2_max = 14;
    std::uint64_t seed = 0;
    double alpha_hat = 0.0;  // from mw_fit; used for the beta_hat <= 2 alpha_hat + 0.1 check
};

/// Monte Carlo signature of E|R_n|^2 = O(n^{2 alpha}) for R_n = S_n - M_n.
struct RemainderDiagnostics {
    std::vector<long> n_grid;
    std::vector<double> E_R2;
    std::vector<double> E_R2_stderr;
    double beta_hat = 0.0;
    bool degenerate = false;     // E_R2 == 0 on the whole grid
    bool consistent = false;     // beta_hat <= 2 alpha_hat + 0.1
    double max_abs_R = 0.0;      // over all paths and k <= n_max
    std::vector<double> max_R_stat;  // mean over paths of max_{k<=n}|R_k| / sqrt(2n LL n)
    std::vector<double> max_m_stat;  // mean over paths of max_{k<n}|m_k| / sqrt(2n LL n)
};

/// Path p uses stream p of `seed`. Throws ConfigError for fewer than 100 paths.
RemainderDiagnostics remainder_growth(const ChainModel& model, const RemainderConfig& cfg,
                                      const Tolerances& tol = {});

struct MaxIncrementRow {
    long n = 0;
    double stat = 0.0;      // max_{0<=k<n} |m_k| / sqrt(2n LL n)
    double envelope = 0.0;  // max_{supp pi1} |H| / sqrt(2n LL n)
};

/// Checkpoints n = 1, 2, 4, ... <= path length. Path length must be >= 16.
std::vector<MaxIncrementRow> max_increment_stat(const SamplePath& path, const MartingaleKernel& mk);

}  // namespace lilchain
