#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include "ambc/complex_matrix.hpp"

namespace ambc {

/// Purpose tags for derived streams. Each purpose gets its own generator so
/// that, for example, changing the Langevin step count never shifts the
/// channel draws of a Monte-Carlo trial.
enum class Stream : std::uint64_t {
    Channel = 1,
    Noise = 2,
    Training = 3,
    Langevin = 4,
    Pilot = 5,
    Validation = 6,
    Init = 7,
};

/// Seeded generator. The engine is mt19937_64 (output sequence fixed by the
/// standard); all distribution transforms are implemented here rather than
/// via <random> distributions, whose algorithms are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0);

    /// Independent child stream keyed by (seed, tags...).
    Rng derive(std::initializer_list<std::uint64_t> tags) const;
    Rng derive(Stream purpose, std::uint64_t index = 0) const;

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal();
    /// Gamma(shape, scale = 1).
    double gamma(double shape);
    /// Circularly-symmetric complex normal with E|z|^2 = variance.
    cplx complex_normal(double variance = 1.0);
    std::uint64_t uniform_index(std::uint64_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Matrix with i.i.d. CN(0, variance) entries (real and imaginary parts each
/// N(0, variance / 2)).
ComplexMatrix sample_complex_gaussian(std::size_t rows, std::size_t cols, double variance, Rng& rng);

/// n x 1 vector whose entries have Nakagami(m, spread) magnitude and uniform
/// phase, i.e. |x|^2 ~ Gamma(m, spread / m).
ComplexMatrix sample_nakagami_vector(double m_shape, double spread, std::size_t n, Rng& rng);

}  // namespace ambc
