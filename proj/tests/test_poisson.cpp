#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "lilchain/errors.hpp"
#include "lilchain/poisson.hpp"

using namespace lilchain;
namespace fx = lilchain::testing;

namespace {

double max_abs(const Matrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

TEST(Resolvent, Sym2ClosedForm) {
    const auto m = fx::sym2();
    for (double eps : {1.0, 0.1, 1e-3, 1e-6}) {
        const auto r = solve_resolvent(m.kernel, m.obs.g, eps);
        // the solve has condition number ~ 1/eps
        EXPECT_LT(max_abs(r.h - m.obs.g / (1.0 + eps)), 1e-15 / eps + 1e-15) << eps;
        EXPECT_LE(r.residual, 1e-10 * 2.0);
    }
}

TEST(Resolvent, Alt2ClosedForm) {
    const auto m = fx::alt2();
    for (double eps : {1.0, 0.1, 1e-3, 1e-6}) {
        const auto r = solve_resolvent(m.kernel, m.obs.g, eps);
        EXPECT_LT(max_abs(r.h - m.obs.g / (2.0 + eps)), 1e-15 / eps + 1e-15) << eps;
    }
}

TEST(Resolvent, ZeroObservable) {
    const auto m = fx::two_state(0.5, 0.5, 0.5, 0.5, 0.0, 0.0);
    EXPECT_EQ(max_abs(solve_resolvent(m.kernel, m.obs.g, 0.1).h), 0.0);
}

TEST(Resolvent, SeriesOracleWithinTailBound) {
    for (int s = 0; s < 5; ++s) {
        const auto m = fx::random_chain(5, 2, 40 + s);
        for (double eps : {1.0, 0.1, 1e-2}) {
            const auto r = solve_resolvent(m.kernel, m.obs.g, eps);
            const auto series = resolvent_series(m.kernel, m.obs.g, eps, 400);
            EXPECT_LE(max_abs(series.h - r.h), series.tail_bound + 1e-12) << eps;
        }
    }
}

TEST(Resolvent, RejectsNonPositiveEpsilon) {
    const auto m = fx::sym2();
    EXPECT_THROW(solve_resolvent(m.kernel, m.obs.g, 0.0), ConfigError);
}

TEST(PoissonLimit, ClosedForms) {
    EXPECT_LT(max_abs(poisson_limit(fx::sym2().kernel, fx::sym2().pi, fx::sym2().obs.g) - fx::sym2().obs.g), 1e-14);
    const auto a = fx::alt2();
    EXPECT_LT(max_abs(poisson_limit(a.kernel, a.pi, a.obs.g) - a.obs.g / 2.0), 1e-14);
    for (double p : {0.1, 0.25, 0.4}) {
        const auto l = fx::lazy2(p);
        EXPECT_LT(max_abs(poisson_limit(l.kernel, l.pi, l.obs.g) - l.obs.g / (2.0 * p)), 1e-12) << p;
    }
}

TEST(PoissonLimit, MatchesNeumannSumOnGapChains) {
    for (int s = 0; s < 5; ++s) {
        const auto m = fx::random_chain(5, 2, 70 + s);
        Matrix acc = Matrix::Zero(5, 2), term = m.obs.g;
        for (int i = 0; i < 2000; ++i) {
            acc += term;
            term = m.kernel.P() * term;
        }
        EXPECT_LT(max_abs(poisson_limit(m.kernel, m.pi, m.obs.g) - acc), 1e-11);
    }
}

TEST(PoissonLimit, RejectsUncentered) {
    const auto m = fx::sym2();
    Matrix g(2, 1);
    g << 1.0, 0.0;
    EXPECT_THROW(poisson_limit(m.kernel, m.pi, g), SpecError);
}

TEST(MartingaleKernel, ClosedForms) {
    {
        const auto m = fx::sym2();
        const auto mk = martingale_kernel(m.kernel, m.pi, poisson_limit(m.kernel, m.pi, m.obs.g));
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) EXPECT_NEAR(mk.at(a, b)(0), m.obs.g(b, 0), 1e-15);
    }
    {
        const auto m = fx::alt2();
        const auto mk = martingale_kernel(m.kernel, m.pi, poisson_limit(m.kernel, m.pi, m.obs.g));
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b)
                EXPECT_NEAR(mk.at(a, b)(0), (m.obs.g(a, 0) + m.obs.g(b, 0)) / 2.0, 1e-15);
        EXPECT_EQ(mk.max_norm_on_support(), 0.0);
    }
    for (double p : {0.1, 0.25}) {
        const auto m = fx::lazy2(p);
        const auto mk = martingale_kernel(m.kernel, m.pi, poisson_limit(m.kernel, m.pi, m.obs.g));
        for (int a = 0; a < 2; ++a) {
            EXPECT_NEAR(mk.at(a, a)(0), m.obs.g(a, 0), 1e-12);
            EXPECT_NEAR(mk.at(a, 1 - a)(0), -m.obs.g(a, 0) * (1 - p) / p, 1e-12);
        }
    }
}

TEST(MartingaleKernel, DifferenceProperty) {
    for (const auto& [name, m] : fx::all_fixtures()) {
        const auto mk = martingale_kernel(m.kernel, m.pi, poisson_limit(m.kernel, m.pi, m.obs.g));
        EXPECT_LE(mk.conditional_mean_defect(m.kernel.P()), 1e-10 * std::max(1.0, max_abs(mk.values()))) << name;
        EXPECT_NEAR(mk.pair_measure().sum(), 1.0, 1e-12) << name;
        EXPECT_GE(mk.pair_measure().minCoeff(), 0.0) << name;
    }
}

TEST(Decomposition, IdentityAlongRandomPaths) {
    for (const auto& [name, m] : fx::all_fixtures()) {
        const auto path = simulate(m, 5000, 3);
        const auto dec = decompose_path(path, m, 1e-3);
        const double gmax = max_abs(m.obs.g);
        EXPECT_LE(dec.max_identity_defect, 1e-9 * gmax) << name;
        const auto mk = martingale_kernel(m.kernel, m.pi, poisson_limit(m.kernel, m.pi, m.obs.g));
        for (Eigen::Index k = 1; k <= 5000; ++k) {
            const auto inc = dec.M_lim.row(k) - dec.M_lim.row(k - 1);
            const double ulp = 4e-16 * (1.0 + dec.M_lim.row(k).cwiseAbs().maxCoeff());
            ASSERT_LE((inc - mk.at(path.states[k - 1], path.states[k])).cwiseAbs().maxCoeff(), ulp);
        }
    }
}

TEST(Decomposition, ZeroObservableGivesZeros) {
    const auto m = fx::two_state(0.3, 0.7, 0.6, 0.4, 0.0, 0.0);
    const auto dec = decompose_path(simulate(m, 200, 1), m, 0.1);
    for (const RowMatrix* a : {&dec.S, &dec.M_eps, &dec.eps_S_h, &dec.R_eps, &dec.M_lim, &dec.R_lim})
        EXPECT_EQ(a->cwiseAbs().maxCoeff(), 0.0);
}

TEST(Decomposition, Sym2RemainderIsEndpointDifference) {
    const auto m = fx::sym2();
    const double eps = 0.1;
    const auto path = simulate(m, 500, 4);
    const auto dec = decompose_path(path, m, eps);
    for (Eigen::Index k = 0; k <= 500; ++k) {
        const double expect = (m.obs.g(path.states[0], 0) - m.obs.g(path.states[k], 0)) / (1.0 + eps);
        EXPECT_NEAR(dec.R_eps(k, 0), expect, 1e-15);
        // limit remainder: S_k - M_k = g(X_0) - g(X_k) since h = g and Ph = 0
        EXPECT_NEAR(dec.R_lim(k, 0), m.obs.g(path.states[0], 0) - m.obs.g(path.states[k], 0), 1e-12);
    }
}

TEST(Decomposition, Alt2LimitMartingaleVanishes) {
    const auto m = fx::alt2();
    const auto dec = decompose_path(simulate(m, 400, 2), m, 0.01);
    EXPECT_EQ(dec.M_lim.cwiseAbs().maxCoeff(), 0.0);
    for (Eigen::Index k = 0; k <= 400; ++k) {
        EXPECT_EQ(dec.R_lim(k, 0), dec.S(k, 0));
        EXPECT_LE(std::abs(dec.S(k, 0)), 1.0);
    }
}

TEST(MWFit, Sym2IsFlat) {
    const auto m = fx::sym2();
    const auto fit = mw_fit(m.kernel, m.pi, m.obs.g, 1 << 14);
    for (double v : fit.V) EXPECT_NEAR(v, 1.0, 1e-15);
    EXPECT_NEAR(fit.alpha_hat, 0.0, 1e-12);
    EXPECT_TRUE(fit.alpha_ok);
    EXPECT_EQ(fit.n_grid.front(), 1);
}

TEST(MWFit, Lazy2Bounded) {
    const auto m = fx::lazy2(0.25);
    const auto fit = mw_fit(m.kernel, m.pi, m.obs.g, 1 << 14);
    for (double v : fit.V) EXPECT_LE(v, 2.0 + 1e-12);
    EXPECT_LE(fit.alpha_hat, 0.05);
    EXPECT_NEAR(fit.V.front(), 1.0, 1e-15);  // V_1 = ||g||
}

TEST(MWFit, ZeroObservableIsDegenerate) {
    const auto m = fx::two_state(0.5, 0.5, 0.5, 0.5, 0.0, 0.0);
    const auto fit = mw_fit(m.kernel, m.pi, m.obs.g, 64);
    EXPECT_TRUE(fit.degenerate);
    EXPECT_EQ(fit.alpha_hat, 0.0);
}

TEST(MWFit, RecursionMatchesMatrixPowers) {
    const auto m = fx::random_chain(5, 2, 3);
    const auto fit = mw_fit(m.kernel, m.pi, m.obs.g, 64);
    for (std::size_t i = 0; i < fit.n_grid.size(); ++i) {
        Matrix acc = Matrix::Zero(5, 2);
        for (long j = 0; j < fit.n_grid[i]; ++j) acc += fx::matrix_power_apply(m.kernel.P(), m.obs.g, j);
        EXPECT_NEAR(fit.V[i], l2_pi(m.pi, acc), 1e-10);
    }
    EXPECT_THROW(mw_fit(m.kernel, m.pi, m.obs.g, 4), ConfigError);
}

TEST(EpsConvergence, Sym2ClosedForm) {
    const auto m = fx::sym2();
    const auto rows = h_eps_convergence(m, {0.1, 0.05}, 0.0);
    EXPECT_NEAR(rows[0].h_error, 1.0 - 1.0 / 1.1, 1e-14);
    EXPECT_NEAR(rows[1].h_error, 1.0 - 1.0 / 1.05, 1e-14);
    // H_eps = H / (1 + eps), ||H|| = 1
    EXPECT_NEAR(rows[0].H_error, 0.1 / 1.1, 1e-14);
}

TEST(EpsConvergence, Lazy2HalvingRatio) {
    const auto m = fx::lazy2(0.25);
    std::vector<double> grid{0.1};
    for (int i = 0; i < 5; ++i) grid.push_back(grid.back() / 2);
    const auto rows = h_eps_convergence(m, grid, 0.0);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double ratio = rows[i].H_error / rows[i - 1].H_error;
        EXPECT_GE(ratio, 0.4);
        EXPECT_LE(ratio, 0.6);
    }
}

TEST(EpsConvergence, ZeroObservableAndGridChecks) {
    const auto z = fx::two_state(0.5, 0.5, 0.5, 0.5, 0.0, 0.0);
    for (const auto& r : h_eps_convergence(z, {0.1, 0.01}, 0.0)) {
        EXPECT_EQ(r.h_error, 0.0);
        EXPECT_EQ(r.H_error, 0.0);
    }
    EXPECT_THROW(h_eps_convergence(z, {0.01, 0.1}, 0.0), ConfigError);
}
