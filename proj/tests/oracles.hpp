#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include "lilchain/strassen.hpp"

namespace lilchain::testing {

// Exhaustive search over lattice-valued h (h_i in step * Z, d = 1) by dynamic
// programming: E_i(v) = min_u E_{i-1}(u) + (v - u)^2 / dt_i, each stage a 1-D
// squared distance transform (lower envelope of parabolas).
namespace detail {

constexpr double kInf = std::numeric_limits<double>::infinity();

// out[q] = min_p in[p] + c (q - p)^2 over lattice indices; `in` starts at
// index `in0`, `out` at `out0`.
inline std::vector<double> distance_transform(const std::vector<double>& in, long in0, long out_len, long out0,
                                              double c) {
    std::vector<long> v;        // parabola apexes (lattice index)
    std::vector<double> z;      // envelope breakpoints
    auto val = [&](long p) { return in[static_cast<std::size_t>(p - in0)]; };
    for (long p = in0; p < in0 + static_cast<long>(in.size()); ++p) {
        if (!std::isfinite(val(p))) continue;
        while (!v.empty()) {
            const long r = v.back();
            const double s = ((val(p) + c * p * p) - (val(r) + c * r * r)) / (2.0 * c * static_cast<double>(p - r));
            if (s <= z.back()) {
                v.pop_back();
                z.pop_back();
            } else {
                v.push_back(p);
                z.push_back(s);
                break;
            }
        }
        if (v.empty()) {
            v.push_back(p);
            z.push_back(-kInf);
        }
    }
    std::vector<double> out(static_cast<std::size_t>(out_len), kInf);
    if (v.empty()) return out;
    std::size_t k = 0;
    for (long q = out0; q < out0 + out_len; ++q) {
        while (k + 1 < v.size() && z[k + 1] < static_cast<double>(q)) ++k;
        const double dq = static_cast<double>(q - v[k]);
        out[static_cast<std::size_t>(q - out0)] = val(v[k]) + c * dq * dq;
    }
    return out;
}

}  // namespace detail

inline double lattice_min_energy(const PathFunction& f, double delta, double step) {
    const auto& t = f.grid();
    std::vector<double> cur{0.0};
    long cur0 = 0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        const double fi = f.values()(static_cast<Eigen::Index>(i), 0);
        const long lo = static_cast<long>(std::ceil((fi - delta) / step - 1e-9));
        const long hi = static_cast<long>(std::floor((fi + delta) / step + 1e-9));
        if (hi < lo) return detail::kInf;
        const double c = step * step / (t[i] - t[i - 1]);
        cur = detail::distance_transform(cur, cur0, hi - lo + 1, lo, c);
        cur0 = lo;
    }
    double best = detail::kInf;
    for (double e : cur) best = std::min(best, e);
    return best;
}

inline double lattice_dist_to_K(const PathFunction& f, double trD, double step) {
    double lo = 0.0, hi = sup_norm(f) + step;
    if (lattice_min_energy(f, 0.0, step) <= trD) return 0.0;
    while (hi - lo > 1e-7) {
        const double mid = 0.5 * (lo + hi);
        (lattice_min_energy(f, mid, step) <= trD ? hi : lo) = mid;
    }
    return hi;
}

}  // namespace lilchain::testing
