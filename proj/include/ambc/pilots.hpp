#pragma once

#include <cstddef>

#include "ambc/complex_matrix.hpp"
#include "ambc/rng.hpp"

namespace ambc {

enum class SourcePilot { AllOnes, RandomPhase };

/// Tag pilot matrix C ((K+1) x tau, +-1 entries, row 0 all ones) and the RF
/// source pilot s (1 x tau, unit modulus).
struct PilotSet {
    ComplexMatrix C;
    ComplexMatrix s;
    std::size_t tau = 0;
    double p_p = 1.0;

    std::size_t K() const noexcept { return C.rows() - 1; }
    /// C * diag(s), the effective (K+1) x tau pilot seen by H-bar.
    ComplexMatrix effective() const;
};

/// Sylvester-Hadamard matrix; order must be a power of two.
ComplexMatrix hadamard(std::size_t order);

PilotSet build_pilots(std::size_t K, std::size_t tau, double p_p, SourcePilot source, Rng& rng);

/// Y = sqrt(p_p) H-bar C diag(s) + N, N ~ CN(0, sigma2 I).
ComplexMatrix simulate_observation(const ComplexMatrix& hbar, const PilotSet& pilots, double sigma2, Rng& rng);

/// Transmit SNR convention: p_p = sigma2 * 10^(snr_db / 10).
double pilot_power_for_snr(double snr_db, double sigma2);

}  // namespace ambc
