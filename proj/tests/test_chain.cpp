#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "lilchain/errors.hpp"

using namespace lilchain;
using lilchain::testing::data_path;

namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

std::string spec_error(const nlohmann::json& doc) {
    try {
        load_chain(doc);
    } catch (const SpecError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(LoadChain, Sym2IsValid) {
    const auto m = load_chain_file(data_path("sym2.json"));
    EXPECT_EQ(m.kernel.size(), 2);
    EXPECT_NEAR(m.pi(0), 0.5, 1e-15);
    EXPECT_NEAR(m.pi(1), 0.5, 1e-15);
    EXPECT_FALSE(m.auto_centered);
}

TEST(LoadChain, Lazy2StationaryIsUniform) {
    const auto m = load_chain_file(data_path("lazy2.json"));
    EXPECT_NEAR(m.pi(0), 0.5, 1e-14);
    EXPECT_NEAR(m.pi(1), 0.5, 1e-14);
}

TEST(LoadChain, RejectsRowSumPointNine) {
    EXPECT_NE(spec_error(nlohmann::json::parse(R"({"states":["a","b"],"P":[[0.5,0.4],[0.5,0.5]],"g":[1,-1],"d":1})"))
                  .find("non-stochastic row 0"),
              std::string::npos);
}

TEST(LoadChain, RejectsReducible) {
    const auto doc = nlohmann::json::parse(
        R"({"states":["a","b","c","d"],"P":[[0.5,0.5,0,0],[0.5,0.5,0,0],[0,0,0.5,0.5],[0,0,0.5,0.5]],"g":[1,-1,1,-1]})");
    EXPECT_NE(spec_error(doc).find("reducible"), std::string::npos);
}

TEST(LoadChain, RejectsUncenteredUnlessAsked) {
    auto doc = nlohmann::json::parse(R"({"states":["a","b"],"P":[[0.5,0.5],[0.5,0.5]],"g":[2,0]})");
    EXPECT_NE(spec_error(doc).find("not centered"), std::string::npos);
    doc["center"] = true;
    const auto m = load_chain(doc);
    EXPECT_TRUE(m.auto_centered);
    EXPECT_DOUBLE_EQ(m.removed_mean(0), 1.0);
    EXPECT_DOUBLE_EQ(m.obs.g(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(m.obs.g(1, 0), -1.0);
}

TEST(LoadChain, MalformedDocuments) {
    EXPECT_NE(spec_error(nlohmann::json::parse(R"({"P":[[1]],"g":[0]})")).find("missing \"states\""), std::string::npos);
    EXPECT_NE(spec_error(nlohmann::json::parse(R"({"states":["a"],"P":[[1]],"g":[[0,0]],"d":1})")).find("d = 1"),
              std::string::npos);
    EXPECT_NE(spec_error(nlohmann::json::parse(R"({"states":["a","a"],"P":[[0,1],[1,0]],"g":[1,-1]})")).find("duplicate"),
              std::string::npos);
    EXPECT_NE(spec_error(nlohmann::json::parse(R"({"states":["a","b"],"P":[[0.5,0.5]],"g":[1,-1]})")).find("rows"),
              std::string::npos);
    EXPECT_THROW(load_chain_file(data_path("does_not_exist.json")), SpecError);
}

TEST(LoadChain, MultiDimensionalObservable) {
    const auto m = load_chain_file(data_path("ring3_2d.json"));
    EXPECT_EQ(m.dim(), 2);
    EXPECT_TRUE(m.auto_centered);
    EXPECT_LT(pi_mean(m.pi, m.obs.g).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Stationary, ClosedFormTwoState) {
    const auto k = FiniteKernel::create(mat({{0.7, 0.3}, {0.4, 0.6}}));
    const auto pi = stationary(k);
    EXPECT_NEAR(pi(0), 4.0 / 7.0, 1e-14);
    EXPECT_NEAR(pi(1), 3.0 / 7.0, 1e-14);
}

TEST(Stationary, PermutationCycleIsUniform) {
    const auto k = FiniteKernel::create(mat({{0, 1, 0}, {0, 0, 1}, {1, 0, 0}}));
    const auto pi = stationary(k);
    for (int i = 0; i < 3; ++i) EXPECT_NEAR(pi(i), 1.0 / 3.0, 1e-14);
}

TEST(Stationary, RandomChainsSatisfyBalance) {
    for (int s = 0; s < 20; ++s) {
        const auto m = lilchain::testing::random_chain(5 + s % 4, 1, 500 + s);
        EXPECT_NEAR(m.pi.sum(), 1.0, 1e-12);
        EXPECT_GE(m.pi.minCoeff(), 0.0);
        EXPECT_LT((m.pi.transpose() * m.kernel.P() - m.pi.transpose()).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Irreducibility, GraphReachability) {
    EXPECT_TRUE(is_irreducible(mat({{0, 1}, {1, 0}})));
    EXPECT_FALSE(is_irreducible(mat({{1, 0}, {0.5, 0.5}})));
    EXPECT_FALSE(is_irreducible(mat({{1, 0}, {0, 1}})));
}

TEST(Simulate, Alt2Alternates) {
    const auto m = lilchain::testing::alt2();
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto p = simulate(m, 1000, seed);
        for (std::size_t k = 1; k < p.states.size(); ++k) EXPECT_NE(p.states[k], p.states[k - 1]);
        for (Eigen::Index k = 0; k < p.partial_sums.rows(); ++k) EXPECT_LE(std::abs(p.partial_sums(k, 0)), 1.0);
    }
}

TEST(Simulate, LengthOnePath) {
    const auto m = lilchain::testing::sym2();
    const auto p = simulate(m, 1, 5);
    ASSERT_EQ(p.states.size(), 2u);
    EXPECT_EQ(p.partial_sums(0, 0), 0.0);
    EXPECT_EQ(p.partial_sums(1, 0), m.obs.g(p.states[0], 0));
}

TEST(Simulate, IncrementsAreExact) {
    const auto m = lilchain::testing::random_chain(6, 2, 9);
    const auto p = simulate(m, 5000, 11);
    EXPECT_EQ(p.partial_sums.row(0).cwiseAbs().maxCoeff(), 0.0);
    for (std::size_t k = 0; k + 1 < p.states.size(); ++k) {
        const auto i = static_cast<Eigen::Index>(k);
        for (Eigen::Index c = 0; c < 2; ++c)
            ASSERT_EQ(p.partial_sums(i + 1, c), p.partial_sums(i, c) + m.obs.g(p.states[k], c));
    }
}

TEST(Simulate, ErgodicAverageSym2) {
    const auto m = lilchain::testing::sym2();
    const auto p = simulate(m, 1000000, 42);
    EXPECT_LT(std::abs(p.partial_sums(1000000, 0)) / 1e6, 0.01);
}

TEST(Simulate, StateFrequenciesMatchPi) {
    const auto m = lilchain::testing::random_chain(4, 1, 77);
    const std::size_t n = 1000000;
    const auto p = simulate(m, n, 3);
    std::vector<double> count(4, 0.0);
    for (std::size_t k = 0; k < n; ++k) count[static_cast<std::size_t>(p.states[k])] += 1.0;
    for (int x = 0; x < 4; ++x) {
        const double pi = m.pi(x);
        EXPECT_NEAR(count[static_cast<std::size_t>(x)] / n, pi, 12.0 * std::sqrt(pi * (1 - pi) / n));
    }
}

TEST(Simulate, DeterministicByteStream) {
    const auto m = lilchain::testing::random_chain(5, 2, 1);
    std::ostringstream a, b, c;
    write_path_csv(a, simulate(m, 2000, 8, 2), m.kernel);
    write_path_csv(b, simulate(m, 2000, 8, 2), m.kernel);
    write_path_csv(c, simulate(m, 2000, 8, 3), m.kernel);
    EXPECT_EQ(a.str(), b.str());
    EXPECT_NE(a.str(), c.str());
    EXPECT_EQ(a.str().substr(0, a.str().find('\n')), "k,state,S_1,S_2");
}

TEST(Simulate, PointMassStart) {
    const auto m = lilchain::testing::sym2();
    for (std::uint64_t s = 0; s < 10; ++s) EXPECT_EQ(simulate(m, 10, s, 0, 1).states[0], 1);
    EXPECT_THROW(simulate(m, 10, 0, 0, 2), ConfigError);
    EXPECT_THROW(simulate(m, 0, 0), ConfigError);
}
