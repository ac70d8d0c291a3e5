#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "lilchain/tolerances.hpp"

namespace lilchain {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Row-stochastic, irreducible transition matrix over labeled states.
/// Periodic kernels are accepted.
class FiniteKernel {
public:
    /// Validates and takes ownership; throws SpecError naming the violated
    /// invariant ("non-stochastic row i", "reducible chain", ...).
    static FiniteKernel create(std::vector<std::string> states, Matrix P,
                               const Tolerances& tol = {});

    /// Unlabeled convenience; states are named s0, s1, ...
    static FiniteKernel create(Matrix P, const Tolerances& tol = {});

    const std::vector<std::string>& states() const noexcept { return states_; }
    const Matrix& P() const noexcept { return P_; }
    Eigen::Index size() const noexcept { return P_.rows(); }

private:
    FiniteKernel(std::vector<std::string> states, Matrix P)
        : states_(std::move(states)), P_(std::move(P)) {}

    std::vector<std::string> states_;
    Matrix P_;
};

/// True iff the directed graph {i -> j : P(i,j) > 0} is strongly connected.
bool is_irreducible(const Matrix& P);

/// Unique stationary law of an irreducible kernel: dense LU on (P^t - I) with
/// the last equation replaced by sum(pi) = 1, then one power-iteration step.
/// Throws NumericError if the system is singular or pi P = pi fails.
Vector stationary(const FiniteKernel& kernel, const Tolerances& tol = {});

/// Centered R^d-valued observable, one row per state.
struct Observable {
    Matrix g;

    Eigen::Index dim() const noexcept { return g.cols(); }
};

/// pi-mean of each coordinate of g.
Eigen::RowVectorXd pi_mean(const Vector& pi, const Matrix& g);

/// Builds a centered observable. With `center` the pi-mean is subtracted,
/// otherwise a non-centered g is rejected with SpecError.
Observable make_observable(const Vector& pi, Matrix g, bool center, const Tolerances& tol = {});

/// A loaded chain-spec document.
struct ChainModel {
    FiniteKernel kernel;
    Vector pi;
    Observable obs;
    bool auto_centered = false;
    Eigen::RowVectorXd removed_mean;  // subtracted pi-mean (zero if none)

    Eigen::Index dim() const noexcept { return obs.dim(); }
};

/// Builds a model from an explicit kernel and raw g (computes pi).
ChainModel make_model(FiniteKernel kernel, Matrix g, bool center = false,
                      const Tolerances& tol = {});

/// Parses {"states": [...], "P": [[...]], "g": [[...]], "d": k, "center": bool}.
/// For d = 1, "g" may be a flat array.
ChainModel load_chain(const nlohmann::json& doc, const Tolerances& tol = {});
ChainModel load_chain_file(const std::filesystem::path& path, const Tolerances& tol = {});

/// Inverse-CDF sampler for the initial law and each transition row.
class TransitionSampler {
public:
    TransitionSampler(const FiniteKernel& kernel, const Vector& initial);

    int initial(double u) const noexcept { return draw(init_cdf_, u); }
    int next(int state, double u) const noexcept { return draw(row_cdf_[state], u); }

private:
    static std::vector<double> make_cdf(const Eigen::Ref<const Eigen::RowVectorXd>& probs);
    static int draw(const std::vector<double>& cdf, double u) noexcept;

    std::vector<double> init_cdf_;
    std::vector<std::vector<double>> row_cdf_;
};

/// Realization X_0..X_n with S_0 = 0 and S_{k+1} = S_k + g(X_k).
struct SamplePath {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::vector<int> states;    // n + 1 entries
    RowMatrix partial_sums;     // (n + 1) x d

    std::size_t length() const noexcept { return states.empty() ? 0 : states.size() - 1; }
};

/// Stationary path: X_0 ~ pi (or a point mass at `start_state`). Identical
/// (seed, stream, n) gives bit-identical paths.
SamplePath simulate(const ChainModel& model, std::size_t n, std::uint64_t seed,
                    std::uint64_t stream = 0, std::optional<int> start_state = std::nullopt);

/// CSV with header `k,state,S_1..S_d`.
void write_path_csv(std::ostream& out, const SamplePath& path, const FiniteKernel& kernel);

}  // namespace lilchain
