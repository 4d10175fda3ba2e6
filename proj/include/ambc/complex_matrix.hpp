#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ambc {

using cplx = std::complex<double>;

/// Dense row-major complex matrix. Channels, pilots, observations and scores
/// all travel through this type.
class ComplexMatrix {
public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);
    ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries);
    ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows);

    static ComplexMatrix identity(std::size_t n);
    static ComplexMatrix diag(std::span<const cplx> d);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    cplx& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
    const cplx& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    std::span<cplx> entries() noexcept { return data_; }
    std::span<const cplx> entries() const noexcept { return data_; }

    ComplexMatrix column(std::size_t c) const;
    void set_column(std::size_t c, const ComplexMatrix& v);

    ComplexMatrix& operator+=(const ComplexMatrix& o);
    ComplexMatrix& operator-=(const ComplexMatrix& o);
    ComplexMatrix& operator*=(cplx s) noexcept;

    bool all_finite() const noexcept;

    friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cplx> data_;
};

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b);
ComplexMatrix operator*(cplx s, ComplexMatrix a);

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b);
ComplexMatrix hermitian(const ComplexMatrix& a);
ComplexMatrix transpose(const ComplexMatrix& a);
double frob_norm_sq(const ComplexMatrix& a) noexcept;

/// Relative Frobenius distance ||a - b|| / ||b||.
double rel_frob_error(const ComplexMatrix& a, const ComplexMatrix& b);

}  // namespace ambc
