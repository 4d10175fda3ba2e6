#include "ambc/channel.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ambc {

FadingConfig FadingConfig::uniform(std::size_t M, std::size_t K, double alpha, double variance) {
    FadingConfig c;
    c.M = M;
    c.K = K;
    c.per_element_variance = variance;
    c.alpha.assign(K, alpha);
    return c;
}

void FadingConfig::validate() const {
    if (M < 1) throw std::invalid_argument("FadingConfig: M must be >= 1");
    if (alpha.size() != K) {
        throw std::invalid_argument("FadingConfig: alpha has " + std::to_string(alpha.size()) +
                                    " entries, expected K = " + std::to_string(K));
    }
    for (double a : alpha) {
        if (!(a > 0.0 && a <= 1.0)) throw std::invalid_argument("FadingConfig: alpha_k must lie in (0, 1]");
    }
    if (!(per_element_variance > 0.0)) throw std::invalid_argument("FadingConfig: variance must be > 0");
    if (distribution == Fading::Nakagami && !(m_shape >= 0.5)) {
        throw std::invalid_argument("FadingConfig: Nakagami m_shape must be >= 0.5");
    }
}

ComplexMatrix ChannelSet::cascaded(std::size_t k) const {
    if (k < 1 || k > K()) throw std::invalid_argument("cascaded: tag index out of range");
    ComplexMatrix h = g.column(k - 1);
    h *= f[k - 1];
    return h;
}

namespace {

ComplexMatrix draw(const FadingConfig& c, std::size_t n, Rng& rng) {
    if (c.distribution == Fading::Nakagami) return sample_nakagami_vector(c.m_shape, c.per_element_variance, n, rng);
    return sample_complex_gaussian(n, 1, c.per_element_variance, rng);
}

}  // namespace

ChannelSet sample_channel_set(const FadingConfig& config, Rng& rng) {
    config.validate();
    ChannelSet ch;
    ch.h0 = draw(config, config.M, rng);
    ch.alpha = config.alpha;
    ch.f.resize(config.K);
    ch.g = ComplexMatrix(config.M, config.K);
    const double v = config.per_element_variance;
    for (std::size_t k = 0; k < config.K; ++k) {
        if (config.gaussian_cascade) {
            ch.f[k] = 1.0;
            ch.g.set_column(k, sample_complex_gaussian(config.M, 1, v * v, rng));
        } else {
            ch.f[k] = draw(config, 1, rng)(0, 0);
            ch.g.set_column(k, draw(config, config.M, rng));
        }
    }
    return ch;
}

ComplexMatrix assemble_hbar(const ChannelSet& ch) {
    const std::size_t M = ch.M();
    const std::size_t K = ch.K();
    if (ch.g.rows() != M || ch.g.cols() != K || ch.alpha.size() != K) {
        throw std::invalid_argument("assemble_hbar: inconsistent ChannelSet dimensions");
    }
    ComplexMatrix hbar(M, K + 1);
    hbar.set_column(0, ch.h0);
    for (std::size_t k = 0; k < K; ++k) {
        const cplx w = std::sqrt(ch.alpha[k]) * ch.f[k];
        for (std::size_t m = 0; m < M; ++m) hbar(m, k + 1) = w * ch.g(m, k);
    }
    return hbar;
}

}  // namespace ambc
