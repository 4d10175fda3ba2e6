#pragma once

#include <cstddef>
#include <functional>
#include <span>

#include "ambc/rng.hpp"

namespace ambc {

/// Loss callback: returns L(params) and, when grad is non-empty, overwrites it
/// with dL/dparams.
using LossFn = std::function<double(std::span<double> grad)>;

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    std::size_t checked = 0;
};

/// Compares the analytic gradient with central differences on n_checks
/// randomly chosen coordinates (all of them if n_checks >= params.size()).
/// Relative error is |a - n| / max(|a|, |n|, floor). params is restored.
GradCheckResult grad_check(std::span<double> params, const LossFn& loss, double epsilon, std::size_t n_checks,
                           Rng& rng, double floor = 1e-7);

}  // namespace ambc
