#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ambc/als.hpp"
#include "ambc/channel.hpp"
#include "ambc/pilots.hpp"
#include "ambc/score_model.hpp"
#include "ambc/trainer.hpp"

namespace ambc {

enum class EstimatorKind { LS, MMSE, AlsAnalytic, AlsTrained };

std::string_view estimator_id(EstimatorKind e) noexcept;
EstimatorKind parse_estimator(std::string_view id);

/// How the ALS step size is given: an absolute beta0, or a dimensionless
/// scale fed through normalized_beta0() at each SNR point.
enum class BetaMode { Absolute, Normalized };

struct AlsSettings {
    BetaMode mode = BetaMode::Normalized;
    double beta = 1.5;  // beta0 (Absolute) or step scale (Normalized)
    double zeta = 1e-4;
    std::size_t n_steps = 6;
    double sigma_min = 0.01;
    double sigma_max = 1.0;
    std::size_t T = 20;

    NoiseSchedule schedule() const { return make_schedule(sigma_min, sigma_max, T); }
    AlsConfig resolve(const PilotSet& pilots, double sigma2) const;
};

struct TrainSettings {
    TrainConfig train;
    ScoreNetConfig score;
    DiscNetConfig disc;
    double sigma_min = 0.01;
    double sigma_max = 6.063827174318213;  // sqrt(36.77)
    std::size_t T = 20;
    bool seed_from_master = true;  // train.seed follows the experiment seed unless set explicitly

    NoiseSchedule schedule() const { return make_schedule(sigma_min, sigma_max, T); }
};

struct GridSettings {
    BetaMode mode = BetaMode::Normalized;
    std::vector<double> betas = {0.5, 1.0, 1.5, 1.9};  // beta0 or step scales, per mode
    std::vector<double> zetas = {1e-4, 1e-3, 1e-2};
    std::size_t trials = 200;
};

struct ExperimentConfig {
    FadingConfig fading;
    std::size_t tau = 4;
    SourcePilot source = SourcePilot::AllOnes;
    double sigma2 = 1.0;
    std::optional<double> sigma2_model;  // noise power assumed by MMSE/ALS; defaults to sigma2
    std::vector<double> snr_db;
    std::vector<EstimatorKind> estimators;
    std::size_t trials = 2000;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: hardware concurrency
    AlsSettings als;
    TrainSettings train;
    GridSettings grid;
    std::string checkpoint;
    std::string out;

    double assumed_sigma2() const { return sigma2_model.value_or(sigma2); }
    bool wants(EstimatorKind e) const;
    /// Applies the master seed to derived settings (training seed) and checks invariants.
    void finalize();
    void validate() const;
};

/// Configuration problem; the message names the offending field path.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// table1: M = 48, K = 7, tau = 8, alpha = 0.6, sigma^2_max = 36.77,
/// T = 2311, N = 6, beta0 = 3e-9, zeta = 1e-4.
ExperimentConfig preset_table1();
/// Desk scale: M = 8, K = 3, tau = 4, SNR -5..20 dB, T = 20.
ExperimentConfig preset_desk();
ExperimentConfig preset(std::string_view name);

/// Overlays JSON text on top of base. Unknown keys and type errors raise
/// ConfigError with the field path.
ExperimentConfig parse_config(std::string_view json_text, ExperimentConfig base);
ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base);

/// Canonical JSON dump of a configuration (sorted keys).
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace ambc
