#pragma once

#include <cstddef>
#include <vector>

namespace ambc {

/// Geometric noise levels sigma_1 < ... < sigma_T (index 0 holds sigma_1).
struct NoiseSchedule {
    std::vector<double> sigmas;

    std::size_t T() const noexcept { return sigmas.size(); }
    double sigma_min() const { return sigmas.front(); }
    double sigma_max() const { return sigmas.back(); }
    /// sigma_t for 1-based t.
    double sigma(std::size_t t) const { return sigmas.at(t - 1); }
};

/// sigma_t = sigma_min (sigma_max / sigma_min)^((t-1)/(T-1)), endpoints exact.
NoiseSchedule make_schedule(double sigma_min, double sigma_max, std::size_t T);

}  // namespace ambc
