#include "ambc/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>
#include <string>

namespace ambc {

void TrainConfig::validate() const {
    if (!(lambda > 0.0)) throw std::invalid_argument("TrainConfig: lambda must be > 0");
    if (batch_size == 0) throw std::invalid_argument("TrainConfig: batch_size must be > 0");
    if (!(lr_score > 0.0) || !(lr_disc > 0.0)) throw std::invalid_argument("TrainConfig: learning rates must be > 0");
    if (dataset_size == 0) throw std::invalid_argument("TrainConfig: dataset_size must be > 0");
}

TrainingDiverged::TrainingDiverged(std::size_t epoch_, std::size_t step_, ScoreModel score, DiscModel disc)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch_) + ", step " + std::to_string(step_) +
                         " (non-finite loss or parameter)"),
      epoch(epoch_),
      step(step_),
      last_score(std::move(score)),
      last_disc(std::move(disc)) {}

std::vector<ComplexMatrix> make_dataset(const FadingConfig& fading, std::size_t n, Rng& rng) {
    std::vector<ComplexMatrix> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(assemble_hbar(sample_channel_set(fading, rng)));
    return out;
}

TrainResult initial_models(const TrainConfig& cfg, const ScoreNetConfig& score_cfg, const DiscNetConfig& disc_cfg) {
    Rng init = Rng(cfg.seed).derive(Stream::Init);
    ScoreModel score = ScoreModel::initialized(score_cfg, init);
    DiscModel disc = DiscModel::initialized(score_cfg.input_dim(), disc_cfg, init);
    return {std::move(score), std::move(disc), {}};
}

TrainResult train_adversarial(const TrainConfig& cfg, std::span<const ComplexMatrix> dataset,
                              const NoiseSchedule& schedule, const ScoreNetConfig& score_cfg,
                              const DiscNetConfig& disc_cfg, const std::function<void(const EpochLog&)>& on_epoch) {
    cfg.validate();
    if (dataset.empty()) throw std::invalid_argument("train_adversarial: empty dataset");
    for (const auto& h : dataset) {
        if (h.rows() != score_cfg.M || h.cols() != score_cfg.K + 1) {
            throw std::invalid_argument("train_adversarial: dataset sample shape does not match the score network");
        }
    }

    TrainResult res = initial_models(cfg, score_cfg, disc_cfg);
    ScoreModel& score = res.score;
    DiscModel& disc = res.disc;

    Rng rng = Rng(cfg.seed).derive(Stream::Training, 1);
    nn::Adam opt_score(score.param_count());
    nn::Adam opt_disc(disc.param_count());
    std::vector<double> g_score(score.param_count());
    std::vector<double> g_disc(disc.param_count());

    const std::size_t n = dataset.size();
    const std::size_t batches_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const double total_steps = static_cast<double>(batches_per_epoch * cfg.epochs);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<ComplexMatrix> members;
    std::size_t step = 0;

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        ScoreModel epoch_start_score = score;
        DiscModel epoch_start_disc = disc;
        for (std::size_t i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_index(i + 1)]);

        double sum_dsm = 0.0, sum_disc = 0.0, sum_adv = 0.0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            members.clear();
            for (std::size_t i = start; i < end; ++i) members.push_back(dataset[order[i]]);
            const TrainingBatch batch = make_batch(members, schedule, rng);

            const double decay =
                cfg.cosine_decay ? 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(step) / total_steps))
                                 : 1.0;

            const double ld = disc_loss(disc, score, batch, g_disc);
            if (!std::isfinite(ld)) throw TrainingDiverged(epoch, step, epoch_start_score, epoch_start_disc);
            opt_disc.step(disc.params(), g_disc, cfg.lr_disc * decay);

            const GenLoss lg = gen_loss(score, disc, batch, cfg.lambda, g_score);
            if (!std::isfinite(lg.total())) throw TrainingDiverged(epoch, step, epoch_start_score, epoch_start_disc);
            opt_score.step(score.params(), g_score, cfg.lr_score * decay);

            if (!nn::all_finite(score.params()) || !nn::all_finite(disc.params())) {
                throw TrainingDiverged(epoch, step, epoch_start_score, epoch_start_disc);
            }
            sum_dsm += lg.dsm;
            sum_disc += ld;
            sum_adv += lg.adversarial;
            ++step;
        }
        const double nb = static_cast<double>(batches_per_epoch);
        EpochLog entry{epoch + 1, sum_dsm / nb, sum_disc / nb, sum_adv / nb};
        res.log.push_back(entry);
        if (on_epoch) on_epoch(entry);
    }
    return res;
}

void write_training_log(std::ostream& os, std::span<const EpochLog> log) {
    os << "epoch,dsm_loss,disc_loss,gen_adv_loss\n";
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof buf, "%zu,%.10e,%.10e,%.10e\n", e.epoch, e.dsm_loss, e.disc_loss, e.gen_adv_loss);
        os << buf;
    }
}

}  // namespace ambc
