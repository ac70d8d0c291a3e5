#pragma once

#include <random>
#include <string>
#include <vector>

#include "lilchain/chain.hpp"

namespace lilchain::testing {

inline std::string data_path(const std::string& name) { return std::string(LILCHAIN_DATA_DIR) + "/" + name; }

inline ChainModel two_state(double p00, double p01, double p10, double p11, double g0 = 1.0, double g1 = -1.0) {
    Matrix P(2, 2);
    P << p00, p01, p10, p11;
    Matrix g(2, 1);
    g << g0, g1;
    return make_model(FiniteKernel::create({"a", "b"}, P), g);
}

inline ChainModel sym2() { return two_state(0.5, 0.5, 0.5, 0.5); }
inline ChainModel alt2() { return two_state(0.0, 1.0, 1.0, 0.0); }
inline ChainModel lazy2(double p) { return two_state(1.0 - p, p, p, 1.0 - p); }

// Dense positive kernel, so irreducible with a spectral gap; g is centered.
inline ChainModel random_chain(int n, int d, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0), v(-2.0, 2.0);
    Matrix P(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) P(i, j) = u(gen);
        P.row(i) /= P.row(i).sum();
    }
    Matrix g(n, d);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < d; ++c) g(i, c) = v(gen);
    return make_model(FiniteKernel::create(P), g, true);
}

// The spectral-gap fixtures shared by several checks.
inline std::vector<std::pair<std::string, ChainModel>> gap_fixtures() {
    std::vector<std::pair<std::string, ChainModel>> out;
    out.emplace_back("SYM2", sym2());
    out.emplace_back("LAZY2(0.25)", lazy2(0.25));
    for (int k = 0; k < 3; ++k) out.emplace_back("random5#" + std::to_string(k), random_chain(5, 2, 100 + k));
    return out;
}

inline std::vector<std::pair<std::string, ChainModel>> all_fixtures() {
    auto out = gap_fixtures();
    out.emplace_back("ALT2", alt2());
    return out;
}

// Q^n u by repeated multiplication.
inline Matrix matrix_power_apply(const Matrix& P, const Matrix& u, long n) {
    Matrix x = u;
    for (long i = 0; i < n; ++i) x = P * x;
    return x;
}

}  // namespace lilchain::testing
