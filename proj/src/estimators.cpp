#include "ambc/estimators.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ambc {

void PriorSpec::validate(std::size_t columns) const {
    if (r.size() != columns) {
        throw std::invalid_argument("PriorSpec: expected " + std::to_string(columns) + " scales, got " +
                                    std::to_string(r.size()));
    }
    for (double v : r) {
        if (!(v >= 0.0)) throw std::invalid_argument("PriorSpec: prior scales must be >= 0");
    }
}

PriorSpec genie_prior(const FadingConfig& config) {
    PriorSpec p;
    const double v = config.per_element_variance;
    p.r.push_back(v);
    for (double a : config.alpha) p.r.push_back(cascaded_prior_scale(a, v, v));
    return p;
}

ComplexMatrix ls_estimate(const ComplexMatrix& Y, const PilotSet& pilots) {
    if (Y.cols() != pilots.tau) {
        throw std::invalid_argument("ls_estimate: Y has " + std::to_string(Y.cols()) + " columns, tau = " +
                                    std::to_string(pilots.tau));
    }
    ComplexMatrix h = matmul(Y, hermitian(pilots.effective()));
    h *= 1.0 / (std::sqrt(pilots.p_p) * static_cast<double>(pilots.tau));
    return h;
}

ComplexMatrix mmse_estimate(const ComplexMatrix& Y, const PilotSet& pilots, const PriorSpec& prior, double sigma2) {
    ComplexMatrix h = ls_estimate(Y, pilots);
    prior.validate(h.cols());
    const double n = sigma2 / (pilots.p_p * static_cast<double>(pilots.tau));
    for (std::size_t k = 0; k < h.cols(); ++k) {
        const double r = prior.r[k];
        const double w = r == 0.0 ? 0.0 : r / (r + n);
        for (std::size_t m = 0; m < h.rows(); ++m) h(m, k) *= w;
    }
    return h;
}

double cascaded_prior_scale(double alpha, double var_f, double var_g) { return alpha * var_f * var_g; }

}  // namespace ambc
