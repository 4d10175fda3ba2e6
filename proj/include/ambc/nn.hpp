#pragma once

// Minimal dense-network toolkit: parameters live in one flat vector per model
// so that optimizers, checkpoints and gradient checks see a single buffer.

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

#include "ambc/rng.hpp"

namespace ambc::nn {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using ConstMap = Eigen::Map<const Mat>;
using MutMap = Eigen::Map<Mat>;

/// Affine layer z = W x + b on column-batched inputs (features x batch).
struct Dense {
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t offset = 0;  // W (out x in, column-major) followed by b (out)

    std::size_t param_count() const noexcept { return in * out + out; }

    Mat forward(std::span<const double> p, const Mat& x) const;
    /// Accumulates dW, db into g; writes dL/dx into dx when non-null.
    void backward(std::span<const double> p, std::span<double> g, const Mat& x, const Mat& dz, Mat* dx) const;

    void init_normal(std::span<double> p, Rng& rng, double scale) const;
    void init_zero(std::span<double> p) const;
};

/// Hands out consecutive slices of a flat parameter buffer.
class Layout {
public:
    Dense dense(std::size_t in, std::size_t out);
    std::size_t vector(std::size_t n);
    std::size_t total() const noexcept { return total_; }

private:
    std::size_t total_ = 0;
};

Mat silu(const Mat& z);
Mat silu_grad(const Mat& z);

bool all_finite(std::span<const double> v) noexcept;

/// Adam with bias correction.
class Adam {
public:
    Adam() = default;
    explicit Adam(std::size_t n, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(std::span<double> params, std::span<const double> grads, double lr);
    std::size_t steps() const noexcept { return t_; }

private:
    std::vector<double> m_, v_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    std::size_t t_ = 0;
};

}  // namespace ambc::nn
