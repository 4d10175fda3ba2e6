#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

#include "ambc/channel.hpp"
#include "ambc/score_model.hpp"

namespace ambc {

struct TrainConfig {
    double lambda = 1.0;
    std::size_t batch_size = 32;
    std::size_t epochs = 40;
    double lr_score = 1e-3;
    double lr_disc = 1e-4;
    bool cosine_decay = true;  // anneal both learning rates to zero over the run
    std::size_t dataset_size = 10000;
    std::uint64_t seed = 0;

    void validate() const;
};

struct EpochLog {
    std::size_t epoch = 0;
    double dsm_loss = 0.0;
    double disc_loss = 0.0;
    double gen_adv_loss = 0.0;
};

struct TrainResult {
    ScoreModel score;
    DiscModel disc;
    std::vector<EpochLog> log;
};

/// Thrown when a loss or parameter goes non-finite. Carries the models as of
/// the last completed epoch.
class TrainingDiverged : public std::runtime_error {
public:
    TrainingDiverged(std::size_t epoch, std::size_t step, ScoreModel score, DiscModel disc);

    std::size_t epoch;
    std::size_t step;
    ScoreModel last_score;
    DiscModel last_disc;
};

/// Draws n H-bar samples from the fading law.
std::vector<ComplexMatrix> make_dataset(const FadingConfig& fading, std::size_t n, Rng& rng);

/// Initial score/discriminator pair for a given seed (what epochs = 0 returns).
TrainResult initial_models(const TrainConfig& cfg, const ScoreNetConfig& score_cfg, const DiscNetConfig& disc_cfg);

/// Alternates one discriminator step (theta frozen) and one score step
/// (phi frozen) per mini-batch. Deterministic for a fixed seed.
TrainResult train_adversarial(const TrainConfig& cfg, std::span<const ComplexMatrix> dataset,
                              const NoiseSchedule& schedule, const ScoreNetConfig& score_cfg,
                              const DiscNetConfig& disc_cfg,
                              const std::function<void(const EpochLog&)>& on_epoch = {});

/// CSV with header epoch,dsm_loss,disc_loss,gen_adv_loss.
void write_training_log(std::ostream& os, std::span<const EpochLog> log);

}  // namespace ambc
