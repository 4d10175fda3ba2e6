#include "ambc/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace ambc::nn {

Mat Dense::forward(std::span<const double> p, const Mat& x) const {
    ConstMap W(p.data() + offset, out, in);
    Eigen::Map<const Vec> b(p.data() + offset + in * out, out);
    Mat z = W * x;
    z.colwise() += b;
    return z;
}

void Dense::backward(std::span<const double> p, std::span<double> g, const Mat& x, const Mat& dz, Mat* dx) const {
    MutMap dW(g.data() + offset, out, in);
    Eigen::Map<Vec> db(g.data() + offset + in * out, out);
    dW.noalias() += dz * x.transpose();
    db += dz.rowwise().sum();
    if (dx != nullptr) {
        ConstMap W(p.data() + offset, out, in);
        *dx = W.transpose() * dz;
    }
}

void Dense::init_normal(std::span<double> p, Rng& rng, double scale) const {
    const double sd = scale / std::sqrt(static_cast<double>(in));
    for (std::size_t i = 0; i < in * out; ++i) p[offset + i] = sd * rng.normal();
    for (std::size_t i = 0; i < out; ++i) p[offset + in * out + i] = 0.0;
}

void Dense::init_zero(std::span<double> p) const {
    for (std::size_t i = 0; i < param_count(); ++i) p[offset + i] = 0.0;
}

Dense Layout::dense(std::size_t in, std::size_t out) {
    Dense d{in, out, total_};
    total_ += d.param_count();
    return d;
}

std::size_t Layout::vector(std::size_t n) {
    const std::size_t off = total_;
    total_ += n;
    return off;
}

Mat silu(const Mat& z) {
    return z.unaryExpr([](double v) { return v / (1.0 + std::exp(-v)); });
}

Mat silu_grad(const Mat& z) {
    return z.unaryExpr([](double v) {
        const double s = 1.0 / (1.0 + std::exp(-v));
        return s * (1.0 + v * (1.0 - s));
    });
}

bool all_finite(std::span<const double> v) noexcept {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

Adam::Adam(std::size_t n, double beta1, double beta2, double eps)
    : m_(n, 0.0), v_(n, 0.0), beta1_(beta1), beta2_(beta2), eps_(eps) {}

void Adam::step(std::span<double> params, std::span<const double> grads, double lr) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw std::invalid_argument("Adam::step: buffer size mismatch");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
        params[i] -= lr * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

}  // namespace ambc::nn
