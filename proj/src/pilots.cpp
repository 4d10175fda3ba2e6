#include "ambc/pilots.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ambc {

namespace {

bool is_power_of_two(std::size_t n) { return n >= 1 && (n & (n - 1)) == 0; }

}  // namespace

ComplexMatrix PilotSet::effective() const {
    ComplexMatrix cs = C;
    for (std::size_t r = 0; r < cs.rows(); ++r)
        for (std::size_t i = 0; i < tau; ++i) cs(r, i) *= s(0, i);
    return cs;
}

ComplexMatrix hadamard(std::size_t order) {
    if (!is_power_of_two(order)) {
        throw std::invalid_argument("hadamard: order " + std::to_string(order) + " is not a power of two");
    }
    ComplexMatrix h(order, order);
    h(0, 0) = 1.0;
    for (std::size_t n = 1; n < order; n *= 2) {
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                const cplx v = h(i, j);
                h(i, j + n) = v;
                h(i + n, j) = v;
                h(i + n, j + n) = -v;
            }
        }
    }
    return h;
}

PilotSet build_pilots(std::size_t K, std::size_t tau, double p_p, SourcePilot source, Rng& rng) {
    if (!is_power_of_two(tau)) throw std::invalid_argument("build_pilots: tau must be a power of two");
    if (tau < K + 1) {
        throw std::invalid_argument("build_pilots: tau = " + std::to_string(tau) + " < K + 1 = " +
                                    std::to_string(K + 1));
    }
    if (!(p_p > 0.0)) throw std::invalid_argument("build_pilots: p_p must be > 0");

    const ComplexMatrix h = hadamard(tau);
    PilotSet p;
    p.tau = tau;
    p.p_p = p_p;
    p.C = ComplexMatrix(K + 1, tau);
    for (std::size_t r = 0; r <= K; ++r)
        for (std::size_t i = 0; i < tau; ++i) p.C(r, i) = h(r, i);

    p.s = ComplexMatrix(1, tau);
    for (std::size_t i = 0; i < tau; ++i) {
        p.s(0, i) = source == SourcePilot::AllOnes ? cplx{1.0, 0.0}
                                                   : std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
    }
    return p;
}

ComplexMatrix simulate_observation(const ComplexMatrix& hbar, const PilotSet& pilots, double sigma2, Rng& rng) {
    if (hbar.cols() != pilots.C.rows()) {
        throw std::invalid_argument("simulate_observation: H-bar has " + std::to_string(hbar.cols()) +
                                    " columns, pilots expect " + std::to_string(pilots.C.rows()));
    }
    if (!(sigma2 >= 0.0)) throw std::invalid_argument("simulate_observation: sigma2 must be >= 0");
    ComplexMatrix y = matmul(hbar, pilots.effective());
    y *= std::sqrt(pilots.p_p);
    y += sample_complex_gaussian(y.rows(), y.cols(), sigma2, rng);
    return y;
}

double pilot_power_for_snr(double snr_db, double sigma2) { return sigma2 * std::pow(10.0, snr_db / 10.0); }

}  // namespace ambc
