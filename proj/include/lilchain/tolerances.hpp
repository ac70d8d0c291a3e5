#pragma once

namespace lilchain {

// Central defaults for every numerical tolerance. The CLI exposes each field
// as a --tol.<name> flag and echoes the effective values into report.json.
struct Tolerances {
    double row_sum = 1e-12;       // |sum_j P(i,j) - 1|
    double stationary = 1e-10;    // |pi P - pi| componentwise
    double centering = 1e-10;     // |sum_x pi(x) g(x)| per coordinate
    double resolvent = 1e-10;     // residual / (1 + max|g|)
    double poisson_crosscheck = 1e-4;  // |h_eps - h| at eps = 1e-6, relative to max|h|
    double martingale = 1e-10;    // conditional mean of H, relative to max|H|
    double decomposition = 1e-9;  // per step, relative to max|g|
    double psd_floor = 1e-10;     // eigenvalues above -psd_floor count as PSD
    double symmetry = 1e-12;
    double alpha_margin = 0.05;   // alpha_ok <=> alpha_hat < 1/2 - margin
    double frac_tail = 1e-8;      // target truncation bound for (I-Q)^alpha
    double dist = 1e-6;           // absolute tolerance of dist_to_K
    double band_lo = 0.70;        // LIL acceptance band, relative to sqrt(tr D)
    double band_hi = 1.10;
    double zero_stat = 0.1;       // tr D = 0: final LIL statistic must fall below this
};

}  // namespace lilchain
