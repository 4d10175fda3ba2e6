#include "ambc/complex_matrix.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ambc {

namespace {

void require_same_shape(const ComplexMatrix& a, const ComplexMatrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                                    std::to_string(b.cols()));
    }
}

}  // namespace

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), data_(rows * cols, cplx{0.0, 0.0}) {}

ComplexMatrix::ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<cplx> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (data_.size() != rows * cols) {
        throw std::invalid_argument("ComplexMatrix: entry count " + std::to_string(data_.size()) +
                                    " does not match " + std::to_string(rows) + "x" + std::to_string(cols));
    }
}

ComplexMatrix::ComplexMatrix(std::initializer_list<std::initializer_list<cplx>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw std::invalid_argument("ComplexMatrix: ragged initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

ComplexMatrix ComplexMatrix::identity(std::size_t n) {
    ComplexMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

ComplexMatrix ComplexMatrix::diag(std::span<const cplx> d) {
    ComplexMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
}

ComplexMatrix ComplexMatrix::column(std::size_t c) const {
    if (c >= cols_) throw std::invalid_argument("column: index out of range");
    ComplexMatrix v(rows_, 1);
    for (std::size_t r = 0; r < rows_; ++r) v(r, 0) = (*this)(r, c);
    return v;
}

void ComplexMatrix::set_column(std::size_t c, const ComplexMatrix& v) {
    if (c >= cols_ || v.rows() != rows_ || v.cols() != 1) {
        throw std::invalid_argument("set_column: shape mismatch");
    }
    for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v(r, 0);
}

ComplexMatrix& ComplexMatrix::operator+=(const ComplexMatrix& o) {
    require_same_shape(*this, o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator-=(const ComplexMatrix& o) {
    require_same_shape(*this, o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

ComplexMatrix& ComplexMatrix::operator*=(cplx s) noexcept {
    for (auto& v : data_) v *= s;
    return *this;
}

bool ComplexMatrix::all_finite() const noexcept {
    for (const auto& v : data_) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    }
    return true;
}

ComplexMatrix operator+(ComplexMatrix a, const ComplexMatrix& b) { return a += b; }
ComplexMatrix operator-(ComplexMatrix a, const ComplexMatrix& b) { return a -= b; }
ComplexMatrix operator*(cplx s, ComplexMatrix a) { return a *= s; }

ComplexMatrix matmul(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions differ (" + std::to_string(a.cols()) + " vs " +
                                    std::to_string(b.rows()) + ")");
    }
    ComplexMatrix out(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
        }
    }
    return out;
}

ComplexMatrix hermitian(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = std::conj(a(i, j));
    return out;
}

ComplexMatrix transpose(const ComplexMatrix& a) {
    ComplexMatrix out(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
    return out;
}

double frob_norm_sq(const ComplexMatrix& a) noexcept {
    double s = 0.0;
    for (const auto& v : a.entries()) s += std::norm(v);
    return s;
}

double rel_frob_error(const ComplexMatrix& a, const ComplexMatrix& b) {
    return std::sqrt(frob_norm_sq(a - b) / frob_norm_sq(b));
}

}  // namespace ambc
