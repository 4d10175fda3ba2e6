#include "ambc/als.hpp"

#include <cmath>
#include <string>

namespace ambc {

void ScoreSource::score_batch(std::span<const ComplexMatrix> h, double sigma, std::span<ComplexMatrix> out) const {
    for (std::size_t i = 0; i < h.size(); ++i) out[i] = score(h[i], sigma);
}

ComplexMatrix ZeroScore::score(const ComplexMatrix& h, double) const { return ComplexMatrix(h.rows(), h.cols()); }

ComplexMatrix AnalyticGaussianScore::score(const ComplexMatrix& h, double sigma) const {
    return analytic_gaussian_score(h, prior_.r, sigma);
}

ComplexMatrix TrainedScore::score(const ComplexMatrix& h, double sigma) const {
    return score_forward(*model_, h, sigma);
}

void TrainedScore::score_batch(std::span<const ComplexMatrix> h, double sigma, std::span<ComplexMatrix> out) const {
    if (h.empty()) return;
    const nn::Mat x = stack_batch(h);
    const nn::Vec s = nn::Vec::Constant(x.cols(), sigma);
    const nn::Mat y = model_->forward(x, s);
    for (std::size_t i = 0; i < h.size(); ++i) {
        out[i] = unstack_real(y.col(static_cast<Eigen::Index>(i)).data(), h[i].rows(), h[i].cols());
    }
}

void AlsConfig::validate() const {
    if (!(beta0 > 0.0) || !std::isfinite(beta0)) throw std::invalid_argument("AlsConfig: beta0 must be > 0");
    if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw std::invalid_argument("AlsConfig: zeta must be >= 0");
    if (n_steps == 0) throw std::invalid_argument("AlsConfig: n_steps must be >= 1");
    if (schedule.T() == 0) throw std::invalid_argument("AlsConfig: empty noise schedule");
}

double AlsConfig::beta(std::size_t t) const {
    const double s = schedule.sigma(t) / schedule.sigma_max();
    return beta0 * s * s;
}

double normalized_beta0(double step_scale, const PilotSet& pilots, double sigma2, const NoiseSchedule& schedule) {
    if (!(step_scale > 0.0)) throw std::invalid_argument("normalized_beta0: step_scale must be > 0");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("normalized_beta0: sigma2 must be > 0");
    const double smax = schedule.sigma_max();
    return step_scale / (pilots.p_p * static_cast<double>(pilots.tau) / sigma2 + 1.0 / (smax * smax));
}

SamplingDiverged::SamplingDiverged(std::size_t t_, std::size_t n_)
    : std::runtime_error("annealed Langevin sampling diverged at scale t = " + std::to_string(t_) + ", step n = " +
                         std::to_string(n_) + "; try a smaller beta0"),
      t(t_),
      n(n_) {}

ComplexMatrix likelihood_grad(const ComplexMatrix& Y, const ComplexMatrix& h_hat, const PilotSet& pilots,
                              double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("likelihood_grad: sigma2 must be > 0");
    const ComplexMatrix cs = pilots.effective();
    if (h_hat.cols() != cs.rows() || Y.rows() != h_hat.rows() || Y.cols() != cs.cols()) {
        throw std::invalid_argument("likelihood_grad: inconsistent shapes");
    }
    const double sp = std::sqrt(pilots.p_p);
    ComplexMatrix resid = matmul(h_hat, cs);
    resid *= -sp;
    resid += Y;
    ComplexMatrix g = matmul(resid, hermitian(cs));
    g *= sp / sigma2;
    return g;
}

ComplexMatrix posterior_grad(const ComplexMatrix& Y, const ComplexMatrix& h_hat, const PilotSet& pilots,
                             double sigma2, const ScoreSource& score, double sigma_t) {
    ComplexMatrix g = likelihood_grad(Y, h_hat, pilots, sigma2);
    g += score.score(h_hat, sigma_t);
    return g;
}

namespace {

// h += beta grad + sqrt(2 beta zeta) Z, Z ~ CN(0, I) drawn row-major.
void langevin_step(ComplexMatrix& h, const ComplexMatrix& grad, double beta, double noise_scale, Rng& rng) {
    auto hv = h.entries();
    auto gv = grad.entries();
    for (std::size_t i = 0; i < hv.size(); ++i) hv[i] += beta * gv[i] + noise_scale * rng.complex_normal(1.0);
}

}  // namespace

ComplexMatrix als_estimate(const ComplexMatrix& Y, const PilotSet& pilots, double sigma2, const AlsConfig& cfg,
                           const ScoreSource& score, Rng& rng) {
    cfg.validate();
    ComplexMatrix h = sample_complex_gaussian(Y.rows(), pilots.C.rows(), cfg.schedule.sigma_max() * cfg.schedule.sigma_max(), rng);
    for (std::size_t t = cfg.schedule.T(); t >= 1; --t) {
        const double sigma_t = cfg.schedule.sigma(t);
        const double beta = cfg.beta(t);
        const double noise_scale = std::sqrt(2.0 * beta * cfg.zeta);
        for (std::size_t n = 1; n <= cfg.n_steps; ++n) {
            const ComplexMatrix g = posterior_grad(Y, h, pilots, sigma2, score, sigma_t);
            langevin_step(h, g, beta, noise_scale, rng);
            if (!h.all_finite()) throw SamplingDiverged(t, n);
        }
    }
    return h;
}

AlsBatchResult als_estimate_batch(std::span<const ComplexMatrix> Ys, const PilotSet& pilots, double sigma2,
                                  const AlsConfig& cfg, const ScoreSource& score, std::span<Rng> rngs) {
    cfg.validate();
    if (rngs.size() != Ys.size()) throw std::invalid_argument("als_estimate_batch: one rng per observation required");
    const std::size_t B = Ys.size();
    const double var0 = cfg.schedule.sigma_max() * cfg.schedule.sigma_max();
    AlsBatchResult res;
    res.estimates.reserve(B);
    res.diverged.assign(B, false);
    for (std::size_t i = 0; i < B; ++i) {
        res.estimates.push_back(sample_complex_gaussian(Ys[i].rows(), pilots.C.rows(), var0, rngs[i]));
    }

    std::vector<ComplexMatrix> scores(B);
    for (std::size_t t = cfg.schedule.T(); t >= 1; --t) {
        const double sigma_t = cfg.schedule.sigma(t);
        const double beta = cfg.beta(t);
        const double noise_scale = std::sqrt(2.0 * beta * cfg.zeta);
        for (std::size_t n = 1; n <= cfg.n_steps; ++n) {
            // frozen (diverged) iterates are replaced by zeros so they cannot
            // poison a batched network evaluation
            std::vector<ComplexMatrix> input = res.estimates;
            for (std::size_t i = 0; i < B; ++i) {
                if (res.diverged[i]) input[i] = ComplexMatrix(input[i].rows(), input[i].cols());
            }
            score.score_batch(input, sigma_t, scores);
            for (std::size_t i = 0; i < B; ++i) {
                if (res.diverged[i]) continue;
                ComplexMatrix g = likelihood_grad(Ys[i], res.estimates[i], pilots, sigma2);
                g += scores[i];
                langevin_step(res.estimates[i], g, beta, noise_scale, rngs[i]);
                if (!res.estimates[i].all_finite()) res.diverged[i] = true;
            }
        }
    }
    return res;
}

}  // namespace ambc
