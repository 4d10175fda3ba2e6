#include "ambc/schedule.hpp"

#include <cmath>
#include <stdexcept>

namespace ambc {

NoiseSchedule make_schedule(double sigma_min, double sigma_max, std::size_t T) {
    if (!(sigma_min > 0.0) || !(sigma_max > sigma_min)) {
        throw std::invalid_argument("make_schedule: need 0 < sigma_min < sigma_max");
    }
    if (T < 2) throw std::invalid_argument("make_schedule: T must be >= 2");
    NoiseSchedule s;
    s.sigmas.resize(T);
    const double ratio = sigma_max / sigma_min;
    for (std::size_t i = 0; i < T; ++i) {
        s.sigmas[i] = sigma_min * std::pow(ratio, static_cast<double>(i) / static_cast<double>(T - 1));
    }
    s.sigmas.front() = sigma_min;
    s.sigmas.back() = sigma_max;
    return s;
}

}  // namespace ambc
