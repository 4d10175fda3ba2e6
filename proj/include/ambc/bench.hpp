#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "ambc/checkpoint.hpp"
#include "ambc/complex_matrix.hpp"
#include "ambc/config.hpp"

namespace ambc {

/// ||h_true - h_est||^2 / ||h_true||^2 for one link.
double nmse(const ComplexMatrix& h_true, const ComplexMatrix& h_est);

struct NmseResult {
    std::string estimator;
    double snr_db = 0.0;
    std::string link;  // direct, cascaded_avg, cascaded_<k>
    double nmse_mean = 0.0;
    double nmse_ci95 = 0.0;  // normal-approximation half-width
    std::size_t trials = 0;  // trials that entered the mean
    std::size_t diverged = 0;
};

/// Link slots in SweepResult::samples: 0 = direct, 1 = cascaded_avg,
/// 1 + k = cascaded_k for tag k = 1..K.
inline constexpr std::size_t kLinkDirect = 0;
inline constexpr std::size_t kLinkCascadedAvg = 1;
inline std::size_t link_cascaded(std::size_t k) { return 1 + k; }
std::string link_name(std::size_t slot);

struct SweepResult {
    std::vector<EstimatorKind> estimators;
    std::vector<double> snr_db;
    std::size_t K = 0;
    std::vector<NmseResult> rows;
    /// samples[e][s][link][trial]; NaN marks a diverged trial.
    std::vector<std::vector<std::vector<std::vector<double>>>> samples;

    const std::vector<double>& trial_nmse(EstimatorKind e, std::size_t snr_index, std::size_t link) const;
    const NmseResult& row(EstimatorKind e, std::size_t snr_index, std::size_t link) const;
};

/// Mean and 95% half-width over the finite entries.
struct SampleStats {
    double mean = 0.0;
    double ci95 = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};
SampleStats sample_stats(const std::vector<double>& v);

/// Paired difference a - b over trials where both are finite; z = mean / se.
struct PairedStats {
    double mean_diff = 0.0;
    double se = 0.0;
    double z = 0.0;
    std::size_t n = 0;
};
PairedStats paired_difference(const std::vector<double>& a, const std::vector<double>& b);

/// Monte-Carlo NMSE sweep. trained must be non-null when ALS-trained is
/// requested. Trials are keyed by index: channel and noise streams depend
/// only on (seed, trial), so every estimator and SNR point sees the same
/// channel draws.
SweepResult run_sweep(const ExperimentConfig& cfg, const ScoreModel* trained = nullptr);

/// CSV with header estimator,snr_db,link,nmse_mean,nmse_ci95,trials.
void write_results_csv(std::ostream& os, const SweepResult& res);
void write_results_csv(const std::filesystem::path& path, const SweepResult& res);

struct GridCell {
    double beta = 0.0;  // beta0 or step scale, per GridSettings::mode
    double zeta = 0.0;
    double objective = 0.0;  // mean over SNR of log10 whole-matrix NMSE
    std::size_t diverged_trials = 0;
    bool diverged() const noexcept { return diverged_trials > 0; }
};

struct GridSearchResult {
    std::vector<GridCell> table;
    std::size_t best = 0;
    bool found = false;  // false when every cell diverged
    const GridCell& best_cell() const { return table.at(best); }
};

/// Evaluates ALS (analytic or trained score) for every (beta, zeta) pair on a
/// validation set drawn from a separate stream; divergent cells are flagged
/// and never selected.
GridSearchResult grid_search_beta(const ExperimentConfig& cfg, const std::vector<double>& betas,
                                  const std::vector<double>& zetas, EstimatorKind kind,
                                  const ScoreModel* trained = nullptr);
void write_grid_csv(std::ostream& os, const GridSearchResult& res, BetaMode mode);

/// Trains the score model for cfg, writes the checkpoint and training log.
Checkpoint train_command(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint_path,
                         const std::filesystem::path& log_path,
                         const std::function<void(const EpochLog&)>& on_epoch = {});

/// Loads the checkpoint if ALS-trained is requested, runs the sweep, writes
/// cfg.out when set.
SweepResult estimate_command(const ExperimentConfig& cfg);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0: hardware
/// concurrency). Exceptions are rethrown on the calling thread.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace ambc
