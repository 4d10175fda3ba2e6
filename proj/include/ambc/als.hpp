#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include "ambc/complex_matrix.hpp"
#include "ambc/estimators.hpp"
#include "ambc/pilots.hpp"
#include "ambc/rng.hpp"
#include "ambc/schedule.hpp"
#include "ambc/score_model.hpp"

namespace ambc {

/// Prior score d/dH* log p_sigma(H) used inside the posterior gradient.
class ScoreSource {
public:
    virtual ~ScoreSource() = default;
    virtual ComplexMatrix score(const ComplexMatrix& h, double sigma) const = 0;
    /// Scores for several iterates at one noise level. The default loops.
    virtual void score_batch(std::span<const ComplexMatrix> h, double sigma, std::span<ComplexMatrix> out) const;
};

class ZeroScore final : public ScoreSource {
public:
    ComplexMatrix score(const ComplexMatrix& h, double sigma) const override;
};

class AnalyticGaussianScore final : public ScoreSource {
public:
    explicit AnalyticGaussianScore(PriorSpec prior) : prior_(std::move(prior)) {}
    ComplexMatrix score(const ComplexMatrix& h, double sigma) const override;

private:
    PriorSpec prior_;
};

/// Wraps a trained network; the model must outlive this object.
class TrainedScore final : public ScoreSource {
public:
    explicit TrainedScore(const ScoreModel& model) : model_(&model) {}
    ComplexMatrix score(const ComplexMatrix& h, double sigma) const override;
    void score_batch(std::span<const ComplexMatrix> h, double sigma, std::span<ComplexMatrix> out) const override;

private:
    const ScoreModel* model_;
};

struct AlsConfig {
    double beta0 = 3e-9;
    double zeta = 1e-4;
    std::size_t n_steps = 6;
    NoiseSchedule schedule;

    void validate() const;
    /// beta_t = beta0 sigma_t^2 / sigma_T^2, 1-based t.
    double beta(std::size_t t) const;
};

/// Converts a dimensionless step scale into beta0 for a given pilot setup:
/// step_scale / (p_p tau / sigma2 + 1 / sigma_T^2). At step_scale = 1 the
/// largest step equals the inverse curvature of the log posterior at sigma_T.
double normalized_beta0(double step_scale, const PilotSet& pilots, double sigma2, const NoiseSchedule& schedule);

class SamplingDiverged : public std::runtime_error {
public:
    SamplingDiverged(std::size_t t, std::size_t n);
    std::size_t t;
    std::size_t n;
};

/// Ascent direction of log p(Y | H): (sqrt(p_p)/sigma2) (Y - sqrt(p_p) H C S) S^H C^H.
ComplexMatrix likelihood_grad(const ComplexMatrix& Y, const ComplexMatrix& h_hat, const PilotSet& pilots,
                              double sigma2);

ComplexMatrix posterior_grad(const ComplexMatrix& Y, const ComplexMatrix& h_hat, const PilotSet& pilots,
                             double sigma2, const ScoreSource& score, double sigma_t);

/// Annealed Langevin posterior sampling. Throws SamplingDiverged on a
/// non-finite iterate.
ComplexMatrix als_estimate(const ComplexMatrix& Y, const PilotSet& pilots, double sigma2, const AlsConfig& cfg,
                           const ScoreSource& score, Rng& rng);

struct AlsBatchResult {
    std::vector<ComplexMatrix> estimates;
    std::vector<bool> diverged;
};

/// Runs als_estimate for several observations in lock-step so that the score
/// network sees one batch per step. Trial i draws from rngs[i] in the same
/// order as the single-observation routine. Diverged trials are flagged and
/// frozen rather than thrown.
AlsBatchResult als_estimate_batch(std::span<const ComplexMatrix> Ys, const PilotSet& pilots, double sigma2,
                                  const AlsConfig& cfg, const ScoreSource& score, std::span<Rng> rngs);

}  // namespace ambc
