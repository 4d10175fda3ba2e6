#pragma once

#include <vector>

#include "ambc/channel.hpp"
#include "ambc/complex_matrix.hpp"
#include "ambc/pilots.hpp"

namespace ambc {

/// Per-column prior scale r_k for the covariance model R_k = r_k I_M,
/// k = 0..K (column 0 is the direct link).
struct PriorSpec {
    std::vector<double> r;

    void validate(std::size_t columns) const;
};

/// Genie prior matching a fading config: r_0 = var, r_k = alpha_k var^2.
/// For the cascaded columns this is a moment-matched Gaussian surrogate.
PriorSpec genie_prior(const FadingConfig& config);

/// H_LS = Y S^H C^H / (sqrt(p_p) tau).
ComplexMatrix ls_estimate(const ComplexMatrix& Y, const PilotSet& pilots);

/// Column-wise Wiener shrinkage of the LS estimate,
/// r_k / (r_k + sigma2 / (p_p tau)).
ComplexMatrix mmse_estimate(const ComplexMatrix& Y, const PilotSet& pilots, const PriorSpec& prior, double sigma2);

/// Per-element second moment of sqrt(alpha) f g for independent f and g.
double cascaded_prior_scale(double alpha, double var_f, double var_g);

}  // namespace ambc
