#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "ambc/complex_matrix.hpp"
#include "ambc/rng.hpp"
#include "support.hpp"

using namespace ambc;
using testing::random_matrix;

TEST_CASE("matmul, hermitian and frob_norm_sq basics") {
    const ComplexMatrix a = random_matrix(3, 4, 1);
    CHECK(matmul(ComplexMatrix::identity(3), a) == a);
    CHECK(hermitian(hermitian(a)) == a);
    CHECK(frob_norm_sq(ComplexMatrix{{cplx(3, 4)}}) == 25.0);
    CHECK_THROWS_AS(matmul(a, a), std::invalid_argument);
}

TEST_CASE("matmul on a hand-computed product") {
    const ComplexMatrix a{{cplx(1, 1), 2}, {0, cplx(0, -1)}};
    const ComplexMatrix b{{1, cplx(0, 1)}, {cplx(2, 0), 3}};
    const ComplexMatrix c = matmul(a, b);
    CHECK(c(0, 0) == cplx(5, 1));
    CHECK(c(0, 1) == cplx(5, 1));
    CHECK(c(1, 0) == cplx(0, -2));
    CHECK(c(1, 1) == cplx(0, -3));
    CHECK(hermitian(a)(1, 0) == cplx(2, 0));
    CHECK(hermitian(a)(0, 0) == cplx(1, -1));
}

TEST_CASE("matmul is associative on random triples") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        const auto a = random_matrix(3 + s % 3, 4, s * 3 + 1);
        const auto b = random_matrix(4, 5, s * 3 + 2);
        const auto c = random_matrix(5, 2 + s % 4, s * 3 + 3);
        CHECK(rel_frob_error(matmul(matmul(a, b), c), matmul(a, matmul(b, c))) < 1e-10);
    }
}

TEST_CASE("rng: identical seeds give identical streams") {
    Rng a(42), b(42), c(43);
    bool differs = false;
    for (int i = 0; i < 1000; ++i) {
        const double x = a.normal();
        CHECK(x == b.normal());
        differs |= x != c.normal();
    }
    CHECK(differs);
    CHECK(sample_complex_gaussian(4, 4, 2.0, a) == sample_complex_gaussian(4, 4, 2.0, b));
}

TEST_CASE("rng: engine output is pinned") {
    // mt19937_64 output is fixed by the standard; pinning the first value of
    // the seeded engine guards the cross-platform reproducibility claim.
    std::mt19937_64 ref(splitmix64(7));
    Rng r(7);
    CHECK(r.next_u64() == ref());
}

TEST_CASE("rng: derived streams are distinct and reproducible") {
    const Rng master(5);
    Rng c1 = master.derive(Stream::Channel, 0);
    Rng c1b = master.derive(Stream::Channel, 0);
    Rng c2 = master.derive(Stream::Channel, 1);
    Rng n1 = master.derive(Stream::Noise, 0);
    const auto x = c1.next_u64();
    CHECK(x == c1b.next_u64());
    CHECK(x != c2.next_u64());
    CHECK(x != n1.next_u64());
}

TEST_CASE("rng: uniform and uniform_index ranges") {
    Rng r(3);
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i) {
        const double u = r.uniform();
        CHECK((u >= 0.0 && u < 1.0));
        ++counts[r.uniform_index(7)];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 400);  // ~4.3 sd
    CHECK_THROWS_AS(r.uniform_index(0), std::invalid_argument);
}

TEST_CASE("sample_complex_gaussian: zero variance and negative variance") {
    Rng r(1);
    const auto z = sample_complex_gaussian(3, 3, 0.0, r);
    CHECK(frob_norm_sq(z) == 0.0);
    CHECK_THROWS_AS(sample_complex_gaussian(2, 2, -1.0, r), std::invalid_argument);
}

TEST_CASE("sample_complex_gaussian: moments over 1e5 draws") {
    Rng r(11);
    const std::size_t n = 100000;
    const auto z = sample_complex_gaussian(n, 1, 1.0, r);
    double p = 0, re2 = 0, im2 = 0;
    cplx sum = 0;
    for (auto v : z.entries()) {
        p += std::norm(v);
        re2 += v.real() * v.real();
        im2 += v.imag() * v.imag();
        sum += v;
    }
    p /= n;
    CHECK(std::abs(p - 1.0) < 0.02);
    CHECK(std::abs(std::abs(sum / double(n))) < 0.01);
    // real/imag split: each N(0, 1/2); var of sample var ~ 2 sigma^4 / n
    const double band = 3 * std::sqrt(2.0 * 0.25 / n);
    CHECK(std::abs(re2 / n - 0.5) < band);
    CHECK(std::abs(im2 / n - 0.5) < band);
    // mean within 3 sd of zero (sd of the mean of a CN(0,1) real part is sqrt(0.5/n))
    CHECK(std::abs(sum.real() / n) < 3 * std::sqrt(0.5 / n));
    CHECK(std::abs(sum.imag() / n) < 3 * std::sqrt(0.5 / n));
}

TEST_CASE("rng: gamma moments") {
    for (double shape : {0.7, 1.0, 2.5, 9.0}) {
        Rng r(17);
        const int n = 100000;
        std::vector<double> v(n);
        for (auto& x : v) x = r.gamma(shape);
        CHECK(std::abs(testing::mean(v) - shape) < 3 * std::sqrt(shape / n) + 1e-12);
        CHECK(std::abs(testing::variance(v) / shape - 1.0) < 0.05);
    }
    Rng r(1);
    CHECK_THROWS_AS(r.gamma(0.0), std::invalid_argument);
}

TEST_CASE("sample_nakagami_vector: m = 1 is Rayleigh (exponential power)") {
    Rng r(23);
    const std::size_t n = 100000;
    const auto x = sample_nakagami_vector(1.0, 1.0, n, r);
    std::vector<double> p;
    std::size_t above_one = 0;
    for (auto v : x.entries()) {
        p.push_back(std::norm(v));
        above_one += std::norm(v) > 1.0;
    }
    CHECK(std::abs(testing::mean(p) - 1.0) < 0.03);
    // exponential: P(|x|^2 > 1) = e^-1
    CHECK(std::abs(double(above_one) / n - std::exp(-1.0)) < 0.01);
}

TEST_CASE("sample_nakagami_vector: spread and shape moments") {
    Rng r(29);
    const std::size_t n = 100000;
    const double omega = 2.5;
    for (double m : {0.5, 2.0, 3.0}) {
        const auto x = sample_nakagami_vector(m, omega, n, r);
        std::vector<double> p;
        cplx s = 0;
        for (auto v : x.entries()) {
            p.push_back(std::norm(v));
            s += v;
        }
        CHECK(std::abs(testing::mean(p) / omega - 1.0) < 0.03);
        CHECK(std::abs(testing::variance(p) / (omega * omega / m) - 1.0) < 0.05);
        CHECK(std::abs(s) / n < 0.02);  // uniform phase: zero mean
    }
    CHECK_THROWS_AS(sample_nakagami_vector(0.4, 1.0, 3, r), std::invalid_argument);
}

TEST_CASE("ComplexMatrix shape and finiteness") {
    ComplexMatrix m(2, 3);
    CHECK(m.size() == 6);
    CHECK(m.all_finite());
    m(1, 2) = cplx(std::nan(""), 0);
    CHECK_FALSE(m.all_finite());
    CHECK_THROWS_AS(ComplexMatrix(2, 2, std::vector<cplx>(3)), std::invalid_argument);
    const auto a = random_matrix(3, 2, 4);
    CHECK(a.column(1)(2, 0) == a(2, 1));
}
