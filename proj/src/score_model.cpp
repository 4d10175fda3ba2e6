#include "ambc/score_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ambc {

using nn::Mat;
using nn::Vec;

nn::Vec stack_real(const ComplexMatrix& h) {
    const std::size_t n = h.size();
    Vec v(2 * n);
    const auto e = h.entries();
    for (std::size_t i = 0; i < n; ++i) {
        v[i] = e[i].real();
        v[n + i] = e[i].imag();
    }
    return v;
}

ComplexMatrix unstack_real(const double* v, std::size_t rows, std::size_t cols) {
    const std::size_t n = rows * cols;
    ComplexMatrix h(rows, cols);
    auto e = h.entries();
    for (std::size_t i = 0; i < n; ++i) e[i] = {v[i], v[n + i]};
    return h;
}

nn::Mat stack_batch(std::span<const ComplexMatrix> hs) {
    if (hs.empty()) return Mat();
    const std::size_t n = hs.front().size();
    Mat x(2 * n, hs.size());
    for (std::size_t b = 0; b < hs.size(); ++b) {
        if (hs[b].size() != n) throw std::invalid_argument("stack_batch: inconsistent sample shapes");
        x.col(b) = stack_real(hs[b]);
    }
    return x;
}

void ScoreNetConfig::validate() const {
    if (M < 1 || width < 1 || depth < 1) throw std::invalid_argument("ScoreNetConfig: M, width, depth must be >= 1");
    if (!(data_scale > 0.0)) throw std::invalid_argument("ScoreNetConfig: data_scale must be > 0");
}

void DiscNetConfig::validate() const {
    if (width < 1 || depth < 1) throw std::invalid_argument("DiscNetConfig: width and depth must be >= 1");
}

// --- ScoreModel ------------------------------------------------------------

ScoreModel::ScoreModel(const ScoreNetConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    nn::Layout layout;
    const std::size_t d = cfg_.input_dim();
    hidden_.push_back(layout.dense(d + 1, cfg_.width));
    for (std::size_t l = 1; l < cfg_.depth; ++l) hidden_.push_back(layout.dense(cfg_.width, cfg_.width));
    out_ = layout.dense(cfg_.width, d);
    amp_offset_ = layout.vector(d);
    log_rho_offset_ = layout.vector(d);
    params_.assign(layout.total(), 0.0);
}

ScoreModel ScoreModel::initialized(const ScoreNetConfig& cfg, Rng& rng) {
    ScoreModel m(cfg);
    for (const auto& layer : m.hidden_) layer.init_normal(m.params_, rng, 1.0);
    m.out_.init_zero(m.params_);
    // amp = 0 and log_rho = 0 come from the zero fill.
    return m;
}

Mat ScoreModel::forward(const Mat& x, const Vec& sigma, Cache* cache) const {
    const auto d = static_cast<Eigen::Index>(cfg_.input_dim());
    const Eigen::Index B = x.cols();
    if (x.rows() != d || sigma.size() != B) {
        throw std::invalid_argument("ScoreModel::forward: expected " + std::to_string(d) + " x B input with B sigmas");
    }
    const double c2 = cfg_.data_scale * cfg_.data_scale;
    const Vec s2 = sigma.array().square();

    Mat input(d + 1, B);
    input.topRows(d) = x * (c2 + s2.array()).rsqrt().matrix().asDiagonal();
    input.row(d) = sigma.array().log().matrix().transpose();

    std::vector<Mat> pre, act;
    pre.reserve(hidden_.size());
    act.reserve(hidden_.size());
    pre.push_back(hidden_[0].forward(params_, input));
    act.push_back(nn::silu(pre.back()));
    for (std::size_t l = 1; l < hidden_.size(); ++l) {
        pre.push_back(hidden_[l].forward(params_, act.back()));
        act.push_back(act.back() + nn::silu(pre.back()));
    }
    const Mat r = out_.forward(params_, act.back());

    Eigen::Map<const Vec> amp(params_.data() + amp_offset_, d);
    Eigen::Map<const Vec> log_rho(params_.data() + log_rho_offset_, d);
    const Vec rho = log_rho.array().exp();

    Mat s(d, B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const double c_out = c2 / (c2 + s2[b]) / sigma[b];
        s.col(b) = c_out * r.col(b) -
                   (amp.array() * x.col(b).array() / (rho.array() + s2[b])).matrix();
    }

    if (cache != nullptr) {
        cache->x = x;
        cache->sigma = sigma;
        cache->input = std::move(input);
        cache->pre = std::move(pre);
        cache->act = std::move(act);
    }
    return s;
}

void ScoreModel::backward(const Cache& cache, const Mat& d_score, std::span<double> grad) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("ScoreModel::backward: grad size mismatch");
    const auto d = static_cast<Eigen::Index>(cfg_.input_dim());
    const Eigen::Index B = d_score.cols();
    const double c2 = cfg_.data_scale * cfg_.data_scale;

    Eigen::Map<const Vec> amp(params_.data() + amp_offset_, d);
    Eigen::Map<const Vec> log_rho(params_.data() + log_rho_offset_, d);
    Eigen::Map<Vec> g_amp(grad.data() + amp_offset_, d);
    Eigen::Map<Vec> g_log_rho(grad.data() + log_rho_offset_, d);
    const Vec rho = log_rho.array().exp();

    Mat dr(d, B);
    for (Eigen::Index b = 0; b < B; ++b) {
        const double s2 = cache.sigma[b] * cache.sigma[b];
        const double c_out = c2 / (c2 + s2) / cache.sigma[b];
        dr.col(b) = c_out * d_score.col(b);
        const Eigen::ArrayXd inv = (rho.array() + s2).inverse();
        const Eigen::ArrayXd gx = d_score.col(b).array() * cache.x.col(b).array();
        g_amp.array() -= gx * inv;
        g_log_rho.array() += gx * amp.array() * inv.square() * rho.array();
    }

    Mat da;
    out_.backward(params_, grad, cache.act.back(), dr, &da);
    for (std::size_t l = hidden_.size() - 1; l >= 1; --l) {
        const Mat dz = da.cwiseProduct(nn::silu_grad(cache.pre[l]));
        Mat dprev;
        hidden_[l].backward(params_, grad, cache.act[l - 1], dz, &dprev);
        da += dprev;
    }
    const Mat dz0 = da.cwiseProduct(nn::silu_grad(cache.pre[0]));
    hidden_[0].backward(params_, grad, cache.input, dz0, nullptr);
}

// --- DiscModel -------------------------------------------------------------

DiscModel::DiscModel(std::size_t input_dim, const DiscNetConfig& cfg) : input_dim_(input_dim), cfg_(cfg) {
    cfg_.validate();
    nn::Layout layout;
    hidden_.push_back(layout.dense(input_dim_, cfg_.width));
    for (std::size_t l = 1; l < cfg_.depth; ++l) hidden_.push_back(layout.dense(cfg_.width, cfg_.width));
    out_ = layout.dense(cfg_.width, 1);
    params_.assign(layout.total(), 0.0);
}

DiscModel DiscModel::initialized(std::size_t input_dim, const DiscNetConfig& cfg, Rng& rng) {
    DiscModel m(input_dim, cfg);
    for (const auto& layer : m.hidden_) layer.init_normal(m.params_, rng, 1.0);
    m.out_.init_normal(m.params_, rng, 1.0);
    return m;
}

Vec DiscModel::forward(const Mat& x, Cache* cache) const {
    if (x.rows() != static_cast<Eigen::Index>(input_dim_)) {
        throw std::invalid_argument("DiscModel::forward: expected input dimension " + std::to_string(input_dim_));
    }
    std::vector<Mat> pre, act;
    const Mat* a = &x;
    for (const auto& layer : hidden_) {
        pre.push_back(layer.forward(params_, *a));
        act.push_back(nn::silu(pre.back()));
        a = &act.back();
    }
    Vec logit = out_.forward(params_, *a).row(0).transpose();
    if (cache != nullptr) {
        cache->x = x;
        cache->pre = std::move(pre);
        cache->act = std::move(act);
    }
    return logit;
}

void DiscModel::backward(const Cache& cache, const Vec& d_logit, std::span<double> grad, Mat* dx) const {
    if (grad.size() != params_.size()) throw std::invalid_argument("DiscModel::backward: grad size mismatch");
    Mat da;
    out_.backward(params_, grad, cache.act.back(), d_logit.transpose(), &da);
    for (std::size_t l = hidden_.size(); l-- > 0;) {
        const Mat dz = da.cwiseProduct(nn::silu_grad(cache.pre[l]));
        const Mat& below = l == 0 ? cache.x : cache.act[l - 1];
        Mat dprev;
        hidden_[l].backward(params_, grad, below, dz, (l == 0 && dx == nullptr) ? nullptr : &dprev);
        if (l == 0) {
            if (dx != nullptr) *dx = std::move(dprev);
        } else {
            da = std::move(dprev);
        }
    }
}

// --- Free functions --------------------------------------------------------

ComplexMatrix score_forward(const ScoreModel& model, const ComplexMatrix& h_tilde, double sigma) {
    const auto& cfg = model.config();
    if (h_tilde.rows() != cfg.M || h_tilde.cols() != cfg.K + 1) {
        throw std::invalid_argument("score_forward: expected " + std::to_string(cfg.M) + "x" +
                                    std::to_string(cfg.K + 1) + " input, got " + std::to_string(h_tilde.rows()) +
                                    "x" + std::to_string(h_tilde.cols()));
    }
    Mat x = stack_real(h_tilde);
    Vec s(1);
    s[0] = sigma;
    const Mat out = model.forward(x, s);
    return unstack_real(out.data(), h_tilde.rows(), h_tilde.cols());
}

ComplexMatrix analytic_gaussian_score(const ComplexMatrix& h_tilde, std::span<const double> r_prior, double sigma) {
    if (r_prior.size() != h_tilde.cols()) {
        throw std::invalid_argument("analytic_gaussian_score: need one prior scale per column");
    }
    ComplexMatrix s(h_tilde.rows(), h_tilde.cols());
    const double s2 = sigma * sigma;
    for (std::size_t k = 0; k < h_tilde.cols(); ++k) {
        if (!(r_prior[k] >= 0.0)) throw std::invalid_argument("analytic_gaussian_score: r_k must be >= 0");
        const double inv = 1.0 / (r_prior[k] + s2);
        for (std::size_t m = 0; m < h_tilde.rows(); ++m) s(m, k) = -h_tilde(m, k) * inv;
    }
    return s;
}

ComplexMatrix denoise_empirical_bayes(const ComplexMatrix& score, const ComplexMatrix& h_tilde, double sigma) {
    ComplexMatrix q = score;
    q *= sigma * sigma;
    q += h_tilde;
    return q;
}

ComplexMatrix denoise_empirical_bayes(const ScoreModel& model, const ComplexMatrix& h_tilde, double sigma) {
    return denoise_empirical_bayes(score_forward(model, h_tilde, sigma), h_tilde, sigma);
}

Perturbed perturb(const ComplexMatrix& hbar, double sigma, Rng& rng) {
    if (!(sigma > 0.0)) throw std::invalid_argument("perturb: sigma must be > 0");
    Perturbed p;
    p.z = sample_complex_gaussian(hbar.rows(), hbar.cols(), sigma * sigma, rng);
    p.h_tilde = hbar + p.z;
    return p;
}

TrainingBatch make_batch(std::span<const ComplexMatrix> hbar, const NoiseSchedule& schedule, Rng& rng) {
    std::vector<Perturbed> pert;
    std::vector<double> sig;
    pert.reserve(hbar.size());
    sig.reserve(hbar.size());
    for (const auto& h : hbar) {
        const double s = schedule.sigmas[rng.uniform_index(schedule.T())];
        sig.push_back(s);
        pert.push_back(perturb(h, s, rng));
    }
    return make_batch(hbar, pert, sig);
}

TrainingBatch make_batch(std::span<const ComplexMatrix> hbar, std::span<const Perturbed> perturbed,
                         std::span<const double> sigmas) {
    if (hbar.size() != perturbed.size() || hbar.size() != sigmas.size()) {
        throw std::invalid_argument("make_batch: inconsistent batch lengths");
    }
    TrainingBatch b;
    b.clean = stack_batch(hbar);
    std::vector<ComplexMatrix> noisy, noise;
    for (const auto& p : perturbed) {
        noisy.push_back(p.h_tilde);
        noise.push_back(p.z);
    }
    b.noisy = stack_batch(noisy);
    b.noise = stack_batch(noise);
    b.sigma = Eigen::Map<const Vec>(sigmas.data(), static_cast<Eigen::Index>(sigmas.size()));
    return b;
}

namespace {

void require_batch(const TrainingBatch& batch, const char* who) {
    if (batch.size() == 0) throw std::invalid_argument(std::string(who) + ": empty batch");
}

void zero(std::span<double> g) {
    for (auto& v : g) v = 0.0;
}

// Residual R = s + z / sigma^2 and the per-sample weights sigma^2.
Mat dsm_residual(const Mat& s, const TrainingBatch& batch) {
    return s + batch.noise * batch.sigma.array().square().inverse().matrix().asDiagonal();
}

Mat denoised(const Mat& s, const TrainingBatch& batch) {
    return s * batch.sigma.array().square().matrix().asDiagonal() + batch.noisy;
}

}  // namespace

double dsm_loss(const ScoreModel& model, const TrainingBatch& batch, double lambda, std::span<double> grad) {
    require_batch(batch, "dsm_loss");
    const double B = static_cast<double>(batch.size());
    ScoreModel::Cache cache;
    const Mat s = model.forward(batch.noisy, batch.sigma, grad.empty() ? nullptr : &cache);
    const Mat r = dsm_residual(s, batch);
    const Vec s2 = batch.sigma.array().square();
    const double loss = 0.5 * lambda * (r.colwise().squaredNorm().transpose().array() * s2.array()).sum() / B;
    if (!grad.empty()) {
        zero(grad);
        const Mat d = r * (lambda / B * s2).asDiagonal();
        model.backward(cache, d, grad);
    }
    return loss;
}

double disc_loss(const DiscModel& disc, const ScoreModel& model, const TrainingBatch& batch, std::span<double> grad) {
    require_batch(batch, "disc_loss");
    const double B = static_cast<double>(batch.size());
    const Mat q = denoised(model.forward(batch.noisy, batch.sigma), batch);
    DiscModel::Cache real_cache, fake_cache;
    const bool want = !grad.empty();
    const Vec d_real = disc.forward(batch.clean, want ? &real_cache : nullptr);
    const Vec d_fake = disc.forward(q, want ? &fake_cache : nullptr);
    const double loss = (d_real.array() - 1.0).square().sum() / B + (d_fake.array() + 1.0).square().sum() / B;
    if (want) {
        zero(grad);
        disc.backward(real_cache, (2.0 / B) * (d_real.array() - 1.0).matrix(), grad, nullptr);
        disc.backward(fake_cache, (2.0 / B) * (d_fake.array() + 1.0).matrix(), grad, nullptr);
    }
    return loss;
}

GenLoss gen_loss(const ScoreModel& model, const DiscModel& disc, const TrainingBatch& batch, double lambda,
                 std::span<double> grad) {
    require_batch(batch, "gen_loss");
    const double B = static_cast<double>(batch.size());
    const bool want = !grad.empty();
    ScoreModel::Cache score_cache;
    const Mat s = model.forward(batch.noisy, batch.sigma, want ? &score_cache : nullptr);
    const Mat q = denoised(s, batch);
    DiscModel::Cache disc_cache;
    const Vec d_fake = disc.forward(q, want ? &disc_cache : nullptr);
    const Mat r = dsm_residual(s, batch);
    const Vec s2 = batch.sigma.array().square();

    GenLoss out;
    out.adversarial = (d_fake.array() - 1.0).square().sum() / B;
    out.dsm = 0.5 * lambda * (r.colwise().squaredNorm().transpose().array() * s2.array()).sum() / B;

    if (want) {
        zero(grad);
        // phi is frozen: its gradient goes to a scratch buffer.
        std::vector<double> scratch(disc.param_count(), 0.0);
        Mat dq;
        disc.backward(disc_cache, (2.0 / B) * (d_fake.array() - 1.0).matrix(), scratch, &dq);
        const Mat d = dq * s2.asDiagonal() + r * (lambda / B * s2).asDiagonal();
        model.backward(score_cache, d, grad);
    }
    return out;
}

}  // namespace ambc
