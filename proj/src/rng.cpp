#include "ambc/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ambc {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Rng::Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

Rng Rng::derive(std::initializer_list<std::uint64_t> tags) const {
    std::uint64_t h = splitmix64(seed_ ^ 0x5bd1e995ULL);
    for (auto t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
    return Rng(h);
}

Rng Rng::derive(Stream purpose, std::uint64_t index) const {
    return derive({static_cast<std::uint64_t>(purpose), index});
}

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    // Marsaglia polar method.
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double Rng::gamma(double shape) {
    if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
    if (shape < 1.0) {
        // Boost: Gamma(a) = Gamma(a + 1) * U^(1/a).
        const double g = gamma(shape + 1.0);
        double u;
        do u = uniform(); while (u == 0.0);
        return g * std::pow(u, 1.0 / shape);
    }
    // Marsaglia-Tsang squeeze.
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            x = normal();
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

cplx Rng::complex_normal(double variance) {
    const double s = std::sqrt(variance / 2.0);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

std::uint64_t Rng::uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    // Rejection to avoid modulo bias.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do x = engine_(); while (x >= limit);
    return x % n;
}

ComplexMatrix sample_complex_gaussian(std::size_t rows, std::size_t cols, double variance, Rng& rng) {
    if (!(variance >= 0.0)) throw std::invalid_argument("sample_complex_gaussian: variance must be >= 0");
    ComplexMatrix m(rows, cols);
    for (auto& v : m.entries()) v = rng.complex_normal(variance);
    return m;
}

ComplexMatrix sample_nakagami_vector(double m_shape, double spread, std::size_t n, Rng& rng) {
    if (!(m_shape >= 0.5)) throw std::invalid_argument("sample_nakagami_vector: m_shape must be >= 0.5");
    if (!(spread > 0.0)) throw std::invalid_argument("sample_nakagami_vector: spread must be > 0");
    ComplexMatrix v(n, 1);
    const double scale = spread / m_shape;
    for (auto& x : v.entries()) {
        const double power = rng.gamma(m_shape) * scale;
        const double phase = 2.0 * std::numbers::pi * rng.uniform();
        x = std::polar(std::sqrt(power), phase);
    }
    return v;
}

}  // namespace ambc
