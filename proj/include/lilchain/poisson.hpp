#pragma once

#include <string>
#include <vector>

#include "lilchain/chain.hpp"

namespace lilchain {

/// Solution h_eps of the resolvent equation (1 + eps) h = Q h + g.
struct ResolventSolution {
    double epsilon = 0.0;
    Matrix h;               // |S| x d
    double residual = 0.0;  // max |(1+eps)h - Qh - g|
};

/// Dense solve of ((1 + eps) I - P) h = g. Throws NumericError when the
/// residual exceeds tol.resolvent * (1 + max|g|).
ResolventSolution solve_resolvent(const FiniteKernel& kernel, const Matrix& g, double epsilon,
                                  const Tolerances& tol = {});

/// Truncated series sum_{n=1}^{terms} (1+eps)^{-n} Q^{n-1} g, kept as an
/// independent check of solve_resolvent.
struct SeriesResult {
    Matrix h;
    double tail_bound = 0.0;  // max|g| (1+eps)^{-terms} / eps
};
SeriesResult resolvent_series(const FiniteKernel& kernel, const Matrix& g, double epsilon, int terms);

/// eps -> 0 limit of h_eps for centered g: the solution of (I - P + 1 pi^t) h = g,
/// which satisfies (I - P) h = g and pi h = 0. Cross-checked against h_eps at
/// eps = 1e-6. Throws SpecError for non-centered g.
Matrix poisson_limit(const FiniteKernel& kernel, const Vector& pi, const Matrix& g,
                     const Tolerances& tol = {});

/// H(x0, x1) = h(x1) - (Ph)(x0) on all state pairs, with the pair measure
/// pi1(x0, x1) = pi(x0) P(x0, x1).
class MartingaleKernel {
public:
    MartingaleKernel(Matrix pair_values, Matrix pair_measure)
        : H_(std::move(pair_values)), pi1_(std::move(pair_measure)) {}

    Eigen::Index states() const noexcept { return pi1_.rows(); }
    Eigen::Index dim() const noexcept { return H_.cols(); }

    /// Row of H for the transition x0 -> x1.
    auto at(Eigen::Index x0, Eigen::Index x1) const { return H_.row(x0 * states() + x1); }

    /// (|S|*|S|) x d, row index x0 * |S| + x1.
    const Matrix& values() const noexcept { return H_; }
    const Matrix& pair_measure() const noexcept { return pi1_; }

    /// max_{x0} |sum_{x1} P(x0,x1) H(x0,x1)| over all coordinates.
    double conditional_mean_defect(const Matrix& P) const;

    /// max |H| (Euclidean) over pairs carrying pi1 mass.
    double max_norm_on_support() const;

    /// ||H||^2 in L^2(pi1).
    double l2_norm_squared() const;

private:
    Matrix H_;
    Matrix pi1_;
};

/// Builds H from any h (limit or resolvent). Throws NumericError if the
/// martingale-difference property fails beyond tol.martingale * max|H|.
MartingaleKernel martingale_kernel(const FiniteKernel& kernel, const Vector& pi, const Matrix& h,
                                   const Tolerances& tol = {});

/// Per-index terms of S_k = M_k(eps) + eps S_k(h_eps) + R_k(eps) and of the
/// limit split S_k = M_k + R_k along one path. Each array is (n+1) x d.
struct Decomposition {
    double epsilon = 0.0;
    RowMatrix S;
    RowMatrix M_eps;
    RowMatrix eps_S_h;
    RowMatrix R_eps;  // h_eps(X_0) - h_eps(X_k)
    RowMatrix M_lim;
    RowMatrix R_lim;  // S_k - M_k
    double max_identity_defect = 0.0;
};

/// Throws NumericError if |S_k - M_k(eps) - eps S_k(h_eps) - R_k(eps)| exceeds
/// tol.decomposition * max(k,1) * max|g| at any index.
Decomposition decompose_path(const SamplePath& path, const ChainModel& model, double epsilon,
                             const Tolerances& tol = {});

/// Growth of V_n = ||sum_{i<n} Q^i g||_{L^2(pi)} on a dyadic grid.
struct MWFit {
    std::vector<long> n_grid;
    std::vector<double> V;
    double alpha_hat = 0.0;
    bool alpha_ok = false;
    bool degenerate = false;  // every V_n on the grid is 0
};

/// V_n by the recursion u_n = g + P u_{n-1}; alpha_hat is the least-squares
/// slope of log max(V_n, 1e-300) against log n over n = 2, 4, ..., n_max.
MWFit mw_fit(const FiniteKernel& kernel, const Vector& pi, const Matrix& g, long n_max,
             const Tolerances& tol = {});

/// L^2(pi) norm of an |S| x d function.
double l2_pi(const Vector& pi, const Matrix& u);

/// One row of the eps-convergence table.
struct EpsConvergenceRow {
    double epsilon = 0.0;
    double h_error = 0.0;       // ||h_eps - h||_{L^2(pi)}
    double H_error = 0.0;       // ||H_eps - H||_{L^2(pi1)}
    double h_norm = 0.0;        // ||h_eps||_{L^2(pi)}
    double h_norm_scaled = 0.0; // ||h_eps|| * eps^alpha_hat
};

/// Requires a strictly decreasing positive eps_grid (ConfigError otherwise).
std::vector<EpsConvergenceRow> h_eps_convergence(const ChainModel& model,
                                                 const std::vector<double>& eps_grid,
                                                 double alpha_hat, const Tolerances& tol = {});

/// Least-squares slope of y against x.
double ls_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace lilchain
