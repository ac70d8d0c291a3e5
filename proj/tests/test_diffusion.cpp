#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "lilchain/diffusion.hpp"
#include "lilchain/errors.hpp"
#include "lilchain/parallel.hpp"

using namespace lilchain;
namespace fx = lilchain::testing;

namespace {

MartingaleKernel kernel_of(const ChainModel& m) {
    return martingale_kernel(m.kernel, m.pi, poisson_limit(m.kernel, m.pi, m.obs.g));
}

std::vector<SamplePath> ensemble(const ChainModel& m, int replicas, std::size_t n, std::uint64_t seed) {
    std::vector<SamplePath> paths(static_cast<std::size_t>(replicas));
    parallel_for(paths.size(), [&](std::size_t r) { paths[r] = simulate(m, n, seed, r); });
    return paths;
}

}  // namespace

TEST(DiffusionExact, ClosedForms) {
    EXPECT_NEAR(diffusion_exact(kernel_of(fx::sym2())).trace, 1.0, 1e-10);
    EXPECT_NEAR(diffusion_exact(kernel_of(fx::alt2())).trace, 0.0, 1e-10);
    for (double p : {0.1, 0.25, 0.5}) EXPECT_NEAR(diffusion_exact(kernel_of(fx::lazy2(p))).trace, (1 - p) / p, 1e-10);
}

TEST(DiffusionExact, TraceEqualsHNorm) {
    for (const auto& [name, m] : fx::all_fixtures()) {
        const auto mk = kernel_of(m);
        const auto D = diffusion_exact(mk);
        EXPECT_NEAR(D.trace, mk.l2_norm_squared(), 1e-10) << name;
        EXPECT_GE(D.min_eigenvalue, -1e-10) << name;
        EXPECT_LE((D.D - D.D.transpose()).cwiseAbs().maxCoeff(), 1e-12) << name;
    }
}

TEST(DiffusionExact, QuadraticScaling) {
    const auto m = fx::random_chain(5, 2, 12);
    const auto D1 = diffusion_exact(kernel_of(m)).D;
    const auto scaled = make_model(m.kernel, 3.0 * m.obs.g);
    const auto D3 = diffusion_exact(kernel_of(scaled)).D;
    EXPECT_LT((D3 - 9.0 * D1).cwiseAbs().maxCoeff(), 1e-10 * (1.0 + D1.cwiseAbs().maxCoeff()));
}

TEST(DiffusionEmpirical, Alt2IsExactlyZero) {
    const auto m = fx::alt2();
    const auto D = diffusion_empirical(ensemble(m, 2, 10000, 1), kernel_of(m));
    EXPECT_EQ(D.trace, 0.0);
}

TEST(DiffusionEmpirical, Sym2NearOne) {
    const auto m = fx::sym2();
    const auto D = diffusion_empirical(ensemble(m, 1, 1000000, 7), kernel_of(m));
    EXPECT_LE(std::abs(D.D(0, 0) - 1.0), 0.01);
    EXPECT_EQ(D.steps, 1000000);
}

TEST(DiffusionEmpirical, WithinFiveStandardErrors) {
    for (const auto& [name, m] : fx::gap_fixtures()) {
        const auto mk = kernel_of(m);
        const auto exact = diffusion_exact(mk);
        const auto emp = diffusion_empirical(ensemble(m, 4, 250000, 11), mk);
        for (Eigen::Index i = 0; i < exact.D.rows(); ++i)
            for (Eigen::Index j = 0; j < exact.D.cols(); ++j)
                EXPECT_LE(std::abs(emp.D(i, j) - exact.D(i, j)), 5.0 * emp.stderr_(i, j) + 1e-12)
                    << name << " entry " << i << "," << j;
    }
}

TEST(DiffusionEmpirical, RejectsTinyEnsembles) {
    const auto m = fx::sym2();
    EXPECT_THROW(diffusion_empirical(ensemble(m, 1, 100, 1), kernel_of(m)), ConfigError);
    EXPECT_THROW(diffusion_empirical({}, kernel_of(m)), ConfigError);
}

TEST(DiffusionAccumulator, BatchLayoutIsIndependentOfSplitting) {
    const auto m = fx::random_chain(4, 1, 5);
    const auto mk = kernel_of(m);
    // one path of 40000 steps vs the same increments cut into four paths
    const auto whole = simulate(m, 40000, 3);
    std::vector<SamplePath> parts(4);
    for (int r = 0; r < 4; ++r) {
        auto& p = parts[static_cast<std::size_t>(r)];
        p.states.assign(whole.states.begin() + r * 10000, whole.states.begin() + (r + 1) * 10000 + 1);
        p.partial_sums = RowMatrix::Zero(10001, 1);
    }
    const auto a = diffusion_empirical({whole}, mk);
    const auto b = diffusion_empirical(parts, mk);
    EXPECT_EQ(a.D(0, 0), b.D(0, 0));
    EXPECT_EQ(a.stderr_(0, 0), b.stderr_(0, 0));
}
