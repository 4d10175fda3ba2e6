#include "ambc/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace ambc {

GradCheckResult grad_check(std::span<double> params, const LossFn& loss, double epsilon, std::size_t n_checks,
                           Rng& rng, double floor) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3)) throw std::invalid_argument("grad_check: epsilon must be in [1e-7, 1e-3]");
    if (params.empty()) throw std::invalid_argument("grad_check: no parameters");

    std::vector<double> analytic(params.size());
    loss(analytic);

    std::vector<std::size_t> idx(params.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t n = std::min(n_checks, idx.size());
    // partial Fisher-Yates: first n entries are a uniform random subset
    for (std::size_t i = 0; i < n && n < idx.size(); ++i) {
        std::swap(idx[i], idx[i + rng.uniform_index(idx.size() - i)]);
    }

    GradCheckResult res;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t i = idx[j];
        const double saved = params[i];
        params[i] = saved + epsilon;
        const double lp = loss({});
        params[i] = saved - epsilon;
        const double lm = loss({});
        params[i] = saved;
        const double numeric = (lp - lm) / (2.0 * epsilon);
        const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), floor});
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel >= res.max_rel_error) {
            res.max_rel_error = rel;
            res.worst_index = i;
        }
    }
    res.checked = n;
    return res;
}

}  // namespace ambc
