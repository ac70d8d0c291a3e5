#pragma once

#include <cmath>

namespace lilchain {

/// log log x with the convention log log x = 1 for 0 < x <= e^e.
inline double loglog(double x) {
    static const double kEE = std::exp(std::exp(1.0));
    return x <= kEE ? 1.0 : std::log(std::log(x));
}

/// sqrt(2 n log log n), the LIL normalizer.
inline double lil_scale(double n) { return std::sqrt(2.0 * n * loglog(n)); }

}  // namespace lilchain
