#pragma once

#include <string>
#include <vector>

#include "lilchain/poisson.hpp"

namespace lilchain {

struct DiffusionMatrix {
    Matrix D;                  // d x d
    double trace = 0.0;
    double min_eigenvalue = 0.0;
    std::string method;        // "exact" | "empirical"
    Matrix stderr_;            // batch-means standard errors (empirical only)
    long steps = 0;            // increments used (empirical only)
};

/// D = sum_{x0,x1} pi1(x0,x1) H(x0,x1) H(x0,x1)^t. Checks symmetry, PSD
/// (eigenvalues >= -tol.psd_floor) and tr D = ||H||^2_{L^2(pi1)}; throws
/// NumericError on violation.
DiffusionMatrix diffusion_exact(const MartingaleKernel& mk, const Tolerances& tol = {});

/// Streaming estimator of E[m m^t] over increments m_i = H(X_i, X_{i+1}),
/// with batch means over contiguous blocks of the global increment index.
class DiffusionAccumulator {
public:
    /// `total_steps` must be known up front to lay out the batches.
    DiffusionAccumulator(Eigen::Index dim, long total_steps, int batches = 100);

    void add(const Eigen::Ref<const Eigen::RowVectorXd>& m);
    DiffusionMatrix finish() const;

private:
    Eigen::Index dim_;
    long total_;
    int batches_;
    long seen_ = 0;
    Matrix sum_;
    std::vector<Matrix> batch_sum_;
    std::vector<long> batch_count_;
};

/// D-hat from an ensemble of paths (increments concatenated in ensemble
/// order). Requires at least 10^4 increments; throws ConfigError otherwise.
DiffusionMatrix diffusion_empirical(const std::vector<SamplePath>& paths, const MartingaleKernel& mk,
                                    int batches = 100);

}  // namespace lilchain
