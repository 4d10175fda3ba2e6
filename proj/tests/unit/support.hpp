#pragma once

// Test-side oracles and helpers. Nothing here calls into the library's
// estimator code; closed forms are written out independently.

#include <cmath>
#include <cstddef>
#include <vector>

#include "ambc/complex_matrix.hpp"
#include "ambc/rng.hpp"

namespace testing {

inline ambc::ComplexMatrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    ambc::Rng rng(seed);
    ambc::ComplexMatrix m(r, c);
    for (auto& v : m.entries()) v = {rng.uniform() * 2 - 1, rng.uniform() * 2 - 1};
    return m;
}

inline double mean(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double std_error(const std::vector<double>& v) { return std::sqrt(variance(v) / static_cast<double>(v.size())); }

// For h ~ CN(0, r I_M): E[1 / ||h||^2] = 1 / ((M - 1) r), since ||h||^2 / r is Gamma(M, 1).
inline double inv_energy_mean(std::size_t M, double r) { return 1.0 / ((static_cast<double>(M) - 1.0) * r); }

// E[||e||^2 / ||h||^2] when e = LS error, independent CN(0, n I) noise.
inline double ls_nmse_metric(double n, std::size_t M, double r) { return n * static_cast<double>(M) * inv_energy_mean(M, r); }

// Same metric for the Wiener-shrunk estimate w (h + noise), w = r / (r + n).
inline double mmse_nmse_metric(double n, std::size_t M, double r) {
    const double w = r / (r + n);
    return (1 - w) * (1 - w) + w * w * n * static_cast<double>(M) * inv_energy_mean(M, r);
}

}  // namespace testing
