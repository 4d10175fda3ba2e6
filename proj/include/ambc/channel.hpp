#pragma once

#include <cstddef>
#include <vector>

#include "ambc/complex_matrix.hpp"
#include "ambc/rng.hpp"

namespace ambc {

enum class Fading { Rayleigh, Nakagami };

struct FadingConfig {
    Fading distribution = Fading::Rayleigh;
    double m_shape = 1.0;               // Nakagami only
    double per_element_variance = 1.0;  // second moment of each coefficient
    std::size_t M = 8;                  // reader antennas
    std::size_t K = 3;                  // tags
    std::vector<double> alpha;          // per-tag power reflection factor, size K
    // Verification arm: replace f_k g_k by a single CN(0, var^2 I) vector (f_k = 1),
    // so every column of H-bar is Gaussian with the moment-matched variance.
    bool gaussian_cascade = false;

    /// Uniform reflection factor for every tag.
    static FadingConfig uniform(std::size_t M, std::size_t K, double alpha, double variance = 1.0);

    void validate() const;
};

/// Ground-truth channels for one fading block.
struct ChannelSet {
    ComplexMatrix h0;           // M x 1, source -> reader
    std::vector<cplx> f;        // K forward links, source -> tag k
    ComplexMatrix g;            // M x K, tag k -> reader in column k
    std::vector<double> alpha;  // K

    std::size_t M() const noexcept { return h0.rows(); }
    std::size_t K() const noexcept { return f.size(); }

    /// Cascaded channel h_k = f_k g_k for k in 1..K (1-based, matching H-bar columns).
    ComplexMatrix cascaded(std::size_t k) const;
};

ChannelSet sample_channel_set(const FadingConfig& config, Rng& rng);

/// H-bar = [h0, sqrt(alpha_1) h_1, ..., sqrt(alpha_K) h_K], M x (K+1).
ComplexMatrix assemble_hbar(const ChannelSet& ch);

}  // namespace ambc
