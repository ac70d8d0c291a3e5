#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lilchain/chain.hpp"
#include "lilchain/tolerances.hpp"

namespace lilchain {

/// Piecewise-linear map [0,1] -> R^d through (t_i, values.row(i)), with
/// t_0 = 0 < t_1 < ... < t_m = 1 and f(0) = 0.
class PathFunction {
public:
    /// Throws ConfigError on a malformed grid or f(0) != 0.
    PathFunction(std::vector<double> grid, RowMatrix values);

    /// Uniform grid t_j = j / m, m = values.rows() - 1.
    static PathFunction uniform(RowMatrix values);

    /// t -> t v on a uniform grid with m segments.
    static PathFunction linear(const Eigen::RowVectorXd& v, int m);

    const std::vector<double>& grid() const noexcept { return grid_; }
    const RowMatrix& values() const noexcept { return values_; }
    Eigen::Index dim() const noexcept { return values_.cols(); }
    std::size_t segments() const noexcept { return grid_.size() - 1; }

    Eigen::RowVectorXd at(double t) const;

private:
    std::vector<double> grid_;
    RowMatrix values_;
};

/// sum_i |f_i - f_{i-1}|^2 / (t_i - t_{i-1}), i.e. the integral of |f'|^2.
double energy(const PathFunction& f);

/// max_i (|f(t_i)| - sqrt(trD t_i)); <= 0 iff the envelope holds on the grid.
double envelope_check(const PathFunction& f, double trD);

/// max_i |f(t_i)|.
double sup_norm(const PathFunction& f);

/// max_i |f(t_i) - h(t_i)| for functions on the same grid.
double sup_distance(const PathFunction& f, const PathFunction& h);

/// Minimal energy of a piecewise-linear h on the grid of f with h(0) = 0,
/// h(1) free and |h(t_i) - f(t_i)| <= delta (d = 1 only). Exact: the taut
/// string through the tube, computed on the grid mirrored about t = 1.
double min_energy_in_tube(const PathFunction& f, double delta);

struct DistOptions {
    enum class Method { Auto, TautString, Dykstra, InteriorPoint };
    double tol = 1e-6;
    long max_iterations = 10000;  // Dykstra sweeps per bisection step
    Method method = Method::Auto;
};

struct DistResult {
    double distance = 0.0;  // upper end of the certified bracket
    double lower = 0.0;
    double upper = 0.0;
    bool converged = true;
    long iterations = 0;
    std::string method;
};

/// Sup-norm distance on the grid of f from f to sqrt(trD) K, where K is the
/// set of h with h(0) = 0 and energy(h) <= 1. Bisection on the distance;
/// feasibility by the taut string (Auto for d = 1), a log-barrier method with a
/// closed-form dual certificate (Auto for d > 1), or Dykstra projections between
/// the energy ellipsoid and the tube, each sweep yielding a primal upper bound
/// and a separating-hyperplane lower bound.
DistResult dist_to_K(const PathFunction& f, double trD, const DistOptions& opt = {});

/// xi_n(t) = (S_k + (nt - k) g(X_k)) / sqrt(2 n LL n), t in [k/n, (k+1)/n),
/// sampled exactly at t_j = j / m. Throws ConfigError if n exceeds the path.
PathFunction xi_path(const SamplePath& path, long n, int m);

struct LILConfig {
    long n_max = 10'000'000;
    double rho = 1.05;
    long n_min = 1000;  // checkpoints below this are skipped (burn-in)
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    int grid = 1024;    // xi snapshot grid
    int dist_grid = 0;  // grid for dist_to_K; 0 = grid for d = 1, 128 otherwise
    bool centered = false;
    std::optional<int> start_state;
    bool compute_dist = true;
    bool keep_snapshots = true;
};

struct LILCheckpoint {
    int k = 0;
    long n = 0;
    double stat = 0.0;         // |S_n| / sqrt(2 n LL n)
    double running_max = 0.0;
    double sup_stat = 0.0;     // sup_t |xi_n(t)| = max_{j<=n} |S_j| / sqrt(2 n LL n)
    double dist_to_K = 0.0;
    double envelope = 0.0;     // envelope_check(xi_n, trD)
    double cluster = 0.0;      // sup-distance from xi_n to the diagonal function
};

struct LILReport {
    double trD = 0.0;
    double target = 0.0;       // sqrt(trD)
    double running_max = 0.0;
    double max_abs_S = 0.0;
    int dist_unconverged = 0;  // checkpoints whose distance bracket missed tol
    bool band_ok = false;
    std::string verdict;
    std::vector<LILCheckpoint> rows;
    std::vector<PathFunction> snapshots;  // xi_{n_k} on the snapshot grid
};

/// Geometric checkpoints n_k = floor(rho^k) in [n_min, n_max].
std::vector<std::pair<int, long>> lil_checkpoints(long n_max, double rho, long n_min);

/// One long path with memory independent of n_max: only the S values needed
/// by the snapshot grids are kept. `centered` subtracts E_{X_0} S_n.
LILReport lil_run(const ChainModel& model, double trD, const LILConfig& cfg, const Tolerances& tol = {});

/// t -> t sqrt(trD / d) (1, ..., 1) on a uniform grid.
PathFunction diagonal_function(double trD, Eigen::Index d, int m);

struct ClusterRecord {
    std::vector<double> distances;
    std::vector<double> running_min;
    double min = 0.0;
    std::size_t argmin = 0;
};

/// Sup-distance of each snapshot to the diagonal function. Throws ConfigError
/// on an empty history.
ClusterRecord cluster_probe(const std::vector<PathFunction>& history, double trD, Eigen::Index d);

}  // namespace lilchain
