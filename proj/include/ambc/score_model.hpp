#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ambc/complex_matrix.hpp"
#include "ambc/nn.hpp"
#include "ambc/rng.hpp"
#include "ambc/schedule.hpp"

namespace ambc {

// Complex channels enter the networks as real vectors [Re(vec H); Im(vec H)]
// with vec() taken row-major. A network "score" output maps back the same
// way and represents d/dH* log p, the convention shared with the likelihood
// gradient and the analytic Gaussian score.

nn::Vec stack_real(const ComplexMatrix& h);
ComplexMatrix unstack_real(const double* v, std::size_t rows, std::size_t cols);
nn::Mat stack_batch(std::span<const ComplexMatrix> hs);

struct ScoreNetConfig {
    std::size_t M = 8;
    std::size_t K = 3;
    std::size_t width = 256;
    std::size_t depth = 4;    // hidden layers: one input layer plus depth-1 residual layers
    double data_scale = 1.0;  // nominal per-element std of the training data

    std::size_t input_dim() const noexcept { return 2 * M * (K + 1); }
    void validate() const;
};

struct DiscNetConfig {
    std::size_t width = 128;
    std::size_t depth = 2;

    void validate() const;
};

/// Noise-conditional score network s(x, sigma).
///
///   u      = x / sqrt(c^2 + sigma^2)                 (c = data_scale)
///   a      = residual SiLU MLP of [u; log sigma]
///   sigma s = c^2/(c^2 + sigma^2) * (W_out a + b_out)
///             - amp .* sigma x / (sigma^2 + exp(log_rho))
///
/// The second term is a per-coordinate Gaussian skip whose amplitude and
/// variance are learned; the residual branch fades as 1/sigma^2 at large
/// noise, where every perturbed density is close to Gaussian. W_out, b_out
/// and amp start at zero, so a fresh model returns a zero score.
class ScoreModel {
public:
    struct Cache {
        nn::Mat x;
        nn::Vec sigma;
        nn::Mat input;
        std::vector<nn::Mat> pre;
        std::vector<nn::Mat> act;
    };

    explicit ScoreModel(const ScoreNetConfig& cfg);
    static ScoreModel initialized(const ScoreNetConfig& cfg, Rng& rng);

    const ScoreNetConfig& config() const noexcept { return cfg_; }
    std::size_t param_count() const noexcept { return params_.size(); }
    std::span<const double> params() const noexcept { return params_; }
    std::span<double> params() noexcept { return params_; }

    /// x: input_dim x B, sigma: B. Returns input_dim x B scores.
    nn::Mat forward(const nn::Mat& x, const nn::Vec& sigma, Cache* cache = nullptr) const;
    /// Accumulates dL/dparams into grad given dL/dscore.
    void backward(const Cache& cache, const nn::Mat& d_score, std::span<double> grad) const;

private:
    ScoreNetConfig cfg_;
    std::vector<nn::Dense> hidden_;
    nn::Dense out_;
    std::size_t amp_offset_ = 0;
    std::size_t log_rho_offset_ = 0;
    std::vector<double> params_;
};

/// Discriminator D(x): plain SiLU MLP producing one logit per sample.
class DiscModel {
public:
    struct Cache {
        nn::Mat x;
        std::vector<nn::Mat> pre;
        std::vector<nn::Mat> act;
    };

    DiscModel(std::size_t input_dim, const DiscNetConfig& cfg);
    static DiscModel initialized(std::size_t input_dim, const DiscNetConfig& cfg, Rng& rng);

    std::size_t input_dim() const noexcept { return input_dim_; }
    const DiscNetConfig& config() const noexcept { return cfg_; }
    std::size_t param_count() const noexcept { return params_.size(); }
    std::span<const double> params() const noexcept { return params_; }
    std::span<double> params() noexcept { return params_; }

    nn::Vec forward(const nn::Mat& x, Cache* cache = nullptr) const;
    void backward(const Cache& cache, const nn::Vec& d_logit, std::span<double> grad, nn::Mat* dx) const;

private:
    std::size_t input_dim_;
    DiscNetConfig cfg_;
    std::vector<nn::Dense> hidden_;
    nn::Dense out_;
    std::vector<double> params_;
};

ComplexMatrix score_forward(const ScoreModel& model, const ComplexMatrix& h_tilde, double sigma);

/// Exact score of CN(0, r_k I) convolved with CN(0, sigma^2 I), column-wise:
/// -h_k / (r_k + sigma^2).
ComplexMatrix analytic_gaussian_score(const ComplexMatrix& h_tilde, std::span<const double> r_prior, double sigma);

/// Q = score * sigma^2 + h_tilde.
ComplexMatrix denoise_empirical_bayes(const ComplexMatrix& score, const ComplexMatrix& h_tilde, double sigma);
ComplexMatrix denoise_empirical_bayes(const ScoreModel& model, const ComplexMatrix& h_tilde, double sigma);

struct Perturbed {
    ComplexMatrix h_tilde;
    ComplexMatrix z;
};

/// h_tilde = hbar + z, z ~ CN(0, sigma^2 I).
Perturbed perturb(const ComplexMatrix& hbar, double sigma, Rng& rng);

/// Stacked training batch; column b of each matrix is one sample.
struct TrainingBatch {
    nn::Mat clean;
    nn::Mat noisy;
    nn::Mat noise;
    nn::Vec sigma;

    std::size_t size() const noexcept { return static_cast<std::size_t>(sigma.size()); }
};

/// Perturbs each sample at a noise level drawn uniformly from the schedule.
TrainingBatch make_batch(std::span<const ComplexMatrix> hbar, const NoiseSchedule& schedule, Rng& rng);
TrainingBatch make_batch(std::span<const ComplexMatrix> hbar, std::span<const Perturbed> perturbed,
                         std::span<const double> sigmas);

/// Batch mean of (lambda/2) sigma^2 ||s(h_tilde, sigma) + z / sigma^2||^2.
/// When grad is non-empty it receives dL/dtheta (overwritten).
double dsm_loss(const ScoreModel& model, const TrainingBatch& batch, double lambda, std::span<double> grad = {});

/// LSGAN discriminator objective E(D(h) - 1)^2 + E(D(Q) + 1)^2, to be
/// minimized over phi with theta frozen.
double disc_loss(const DiscModel& disc, const ScoreModel& model, const TrainingBatch& batch,
                 std::span<double> grad = {});

struct GenLoss {
    double adversarial = 0.0;
    double dsm = 0.0;
    double total() const noexcept { return adversarial + dsm; }
};

/// E(D(Q) - 1)^2 + dsm term; gradient w.r.t. theta only.
GenLoss gen_loss(const ScoreModel& model, const DiscModel& disc, const TrainingBatch& batch, double lambda,
                 std::span<double> grad = {});

}  // namespace ambc
