#include "ambc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <thread>

#include "ambc/als.hpp"
#include "ambc/estimators.hpp"

namespace ambc {

namespace {

constexpr std::size_t kChunk = 64;  // trials per task; fixed so results do not depend on thread count
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct ChunkData {
    std::vector<ComplexMatrix> hbar;
    std::vector<ComplexMatrix> Y;
};

ChunkData draw_chunk(const ExperimentConfig& cfg, const Rng& base, const PilotSet& pilots, std::size_t i0,
                     std::size_t i1) {
    ChunkData d;
    for (std::size_t i = i0; i < i1; ++i) {
        Rng ch = base.derive(Stream::Channel, i);
        Rng nz = base.derive(Stream::Noise, i);
        d.hbar.push_back(assemble_hbar(sample_channel_set(cfg.fading, ch)));
        d.Y.push_back(simulate_observation(d.hbar.back(), pilots, cfg.sigma2, nz));
    }
    return d;
}

struct Estimates {
    std::vector<ComplexMatrix> h;
    std::vector<bool> diverged;
};

Estimates run_estimator(EstimatorKind kind, const ChunkData& d, const PilotSet& pilots, double sigma2_model,
                        const PriorSpec& prior, const AlsConfig* als, const ScoreSource* score, const Rng& base,
                        std::size_t i0) {
    Estimates out;
    const std::size_t n = d.Y.size();
    out.diverged.assign(n, false);
    switch (kind) {
        case EstimatorKind::LS:
            for (const auto& y : d.Y) out.h.push_back(ls_estimate(y, pilots));
            break;
        case EstimatorKind::MMSE:
            for (const auto& y : d.Y) out.h.push_back(mmse_estimate(y, pilots, prior, sigma2_model));
            break;
        case EstimatorKind::AlsAnalytic:
        case EstimatorKind::AlsTrained: {
            std::vector<Rng> rngs;
            rngs.reserve(n);
            for (std::size_t i = 0; i < n; ++i) rngs.push_back(base.derive(Stream::Langevin, i0 + i));
            AlsBatchResult r = als_estimate_batch(d.Y, pilots, sigma2_model, *als, *score, rngs);
            out.h = std::move(r.estimates);
            out.diverged = std::move(r.diverged);
            break;
        }
    }
    return out;
}

PilotSet pilots_for(const ExperimentConfig& cfg, double snr_db) {
    // same pilot draw at every SNR point
    Rng prng = Rng(cfg.seed).derive(Stream::Pilot);
    return build_pilots(cfg.fading.K, cfg.tau, pilot_power_for_snr(snr_db, cfg.sigma2), cfg.source, prng);
}

std::size_t n_chunks(std::size_t trials) { return (trials + kChunk - 1) / kChunk; }

}  // namespace

double nmse(const ComplexMatrix& h_true, const ComplexMatrix& h_est) {
    if (h_true.rows() != h_est.rows() || h_true.cols() != h_est.cols()) {
        throw std::invalid_argument("nmse: shape mismatch");
    }
    const double den = frob_norm_sq(h_true);
    if (!(den > 0.0)) throw std::invalid_argument("nmse: true channel is zero");
    return frob_norm_sq(h_true - h_est) / den;
}

std::string link_name(std::size_t slot) {
    if (slot == kLinkDirect) return "direct";
    if (slot == kLinkCascadedAvg) return "cascaded_avg";
    return "cascaded_" + std::to_string(slot - 1);
}

SampleStats sample_stats(const std::vector<double>& v) {
    SampleStats s;
    double sum = 0.0;
    for (double x : v) {
        if (std::isfinite(x)) {
            sum += x;
            ++s.n;
        }
    }
    if (s.n == 0) {
        s.mean = kNaN;
        return s;
    }
    s.mean = sum / static_cast<double>(s.n);
    if (s.n > 1) {
        double ss = 0.0;
        for (double x : v)
            if (std::isfinite(x)) ss += (x - s.mean) * (x - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
        s.ci95 = 1.959963984540054 * s.sd / std::sqrt(static_cast<double>(s.n));
    }
    return s;
}

PairedStats paired_difference(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_difference: length mismatch");
    std::vector<double> d;
    d.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (std::isfinite(a[i]) && std::isfinite(b[i])) d.push_back(a[i] - b[i]);
    }
    const SampleStats s = sample_stats(d);
    PairedStats p;
    p.n = s.n;
    p.mean_diff = s.mean;
    p.se = s.n > 1 ? s.sd / std::sqrt(static_cast<double>(s.n)) : kNaN;
    p.z = p.se > 0.0 ? p.mean_diff / p.se : kNaN;
    return p;
}

const std::vector<double>& SweepResult::trial_nmse(EstimatorKind e, std::size_t s, std::size_t link) const {
    for (std::size_t i = 0; i < estimators.size(); ++i) {
        if (estimators[i] == e) return samples.at(i).at(s).at(link);
    }
    throw std::invalid_argument("SweepResult: estimator not in sweep");
}

const NmseResult& SweepResult::row(EstimatorKind e, std::size_t s, std::size_t link) const {
    const std::size_t links = K + 2;
    for (std::size_t i = 0; i < estimators.size(); ++i) {
        if (estimators[i] == e) return rows.at((i * snr_db.size() + s) * links + link);
    }
    throw std::invalid_argument("SweepResult: estimator not in sweep");
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = std::min(threads, n);
    if (threads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mu);
                    if (!error) error = std::current_exception();
                    next.store(n);
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

SweepResult run_sweep(const ExperimentConfig& cfg, const ScoreModel* trained) {
    cfg.validate();
    if (cfg.wants(EstimatorKind::AlsTrained)) {
        if (!trained) throw ConfigError("run_sweep: als_trained requested but no trained score model was supplied");
        if (trained->config().M != cfg.fading.M || trained->config().K != cfg.fading.K) {
            throw ConfigError("run_sweep: trained model dimensions do not match fading M/K");
        }
    }
    const std::size_t K = cfg.fading.K;
    const std::size_t links = K + 2;
    const std::size_t E = cfg.estimators.size();
    const std::size_t S = cfg.snr_db.size();

    SweepResult res;
    res.estimators = cfg.estimators;
    res.snr_db = cfg.snr_db;
    res.K = K;
    res.samples.assign(E, std::vector<std::vector<std::vector<double>>>(
                              S, std::vector<std::vector<double>>(links, std::vector<double>(cfg.trials, kNaN))));

    const PriorSpec prior = genie_prior(cfg.fading);
    const AnalyticGaussianScore analytic(prior);
    std::optional<TrainedScore> learned;
    if (trained) learned.emplace(*trained);
    const Rng base(cfg.seed);
    const double s2 = cfg.assumed_sigma2();

    std::vector<PilotSet> pilots;
    std::vector<AlsConfig> als;
    for (double snr : cfg.snr_db) {
        pilots.push_back(pilots_for(cfg, snr));
        als.push_back(cfg.als.resolve(pilots.back(), s2));
    }

    const std::size_t chunks = n_chunks(cfg.trials);
    parallel_for(S * chunks, cfg.threads, [&](std::size_t task) {
        const std::size_t s = task / chunks;
        const std::size_t i0 = (task % chunks) * kChunk;
        const std::size_t i1 = std::min(cfg.trials, i0 + kChunk);
        const ChunkData d = draw_chunk(cfg, base, pilots[s], i0, i1);
        for (std::size_t e = 0; e < E; ++e) {
            const EstimatorKind kind = cfg.estimators[e];
            const ScoreSource* src = kind == EstimatorKind::AlsTrained ? static_cast<const ScoreSource*>(&*learned)
                                                                       : static_cast<const ScoreSource*>(&analytic);
            const Estimates est = run_estimator(kind, d, pilots[s], s2, prior, &als[s], src, base, i0);
            auto& slot = res.samples[e][s];
            for (std::size_t i = 0; i < d.Y.size(); ++i) {
                if (est.diverged[i]) continue;  // stays NaN
                const std::size_t trial = i0 + i;
                double cas = 0.0;
                for (std::size_t k = 0; k <= K; ++k) {
                    const double v = nmse(d.hbar[i].column(k), est.h[i].column(k));
                    if (k == 0) {
                        slot[kLinkDirect][trial] = v;
                    } else {
                        slot[link_cascaded(k)][trial] = v;
                        cas += v;
                    }
                }
                slot[kLinkCascadedAvg][trial] = cas / static_cast<double>(K);
            }
        }
    });

    for (std::size_t e = 0; e < E; ++e) {
        for (std::size_t s = 0; s < S; ++s) {
            for (std::size_t l = 0; l < links; ++l) {
                const auto& v = res.samples[e][s][l];
                const SampleStats st = sample_stats(v);
                NmseResult r;
                r.estimator = std::string(estimator_id(cfg.estimators[e]));
                r.snr_db = cfg.snr_db[s];
                r.link = link_name(l);
                r.nmse_mean = st.mean;
                r.nmse_ci95 = st.ci95;
                r.trials = st.n;
                r.diverged = v.size() - st.n;
                res.rows.push_back(std::move(r));
            }
        }
    }
    return res;
}

void write_results_csv(std::ostream& os, const SweepResult& res) {
    os << "estimator,snr_db,link,nmse_mean,nmse_ci95,trials\n";
    char buf[256];
    for (const auto& r : res.rows) {
        std::snprintf(buf, sizeof buf, "%s,%g,%s,%.10e,%.10e,%zu\n", r.estimator.c_str(), r.snr_db, r.link.c_str(),
                      r.nmse_mean, r.nmse_ci95, r.trials);
        os << buf;
    }
}

void write_results_csv(const std::filesystem::path& path, const SweepResult& res) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    write_results_csv(os, res);
}

GridSearchResult grid_search_beta(const ExperimentConfig& cfg, const std::vector<double>& betas,
                                  const std::vector<double>& zetas, EstimatorKind kind, const ScoreModel* trained) {
    cfg.validate();
    if (betas.empty() || zetas.empty()) throw std::invalid_argument("grid_search_beta: empty candidate grid");
    if (kind != EstimatorKind::AlsAnalytic && kind != EstimatorKind::AlsTrained) {
        throw std::invalid_argument("grid_search_beta: estimator must be als_analytic or als_trained");
    }
    if (kind == EstimatorKind::AlsTrained && !trained) {
        throw ConfigError("grid_search_beta: als_trained requires a trained score model");
    }
    const PriorSpec prior = genie_prior(cfg.fading);
    const AnalyticGaussianScore analytic(prior);
    std::optional<TrainedScore> learned;
    if (trained) learned.emplace(*trained);
    const ScoreSource* src = kind == EstimatorKind::AlsTrained ? static_cast<const ScoreSource*>(&*learned)
                                                               : static_cast<const ScoreSource*>(&analytic);
    const Rng base = Rng(cfg.seed).derive(Stream::Validation);
    const double s2 = cfg.assumed_sigma2();
    const std::size_t S = cfg.snr_db.size();
    const std::size_t trials = cfg.grid.trials;
    const std::size_t chunks = n_chunks(trials);

    std::vector<PilotSet> pilots;
    for (double snr : cfg.snr_db) pilots.push_back(pilots_for(cfg, snr));

    GridSearchResult res;
    for (double b : betas)
        for (double z : zetas) res.table.push_back({b, z, 0.0, 0});
    const std::size_t cells = res.table.size();

    // whole[cell][snr][trial]
    std::vector<std::vector<std::vector<double>>> whole(
        cells, std::vector<std::vector<double>>(S, std::vector<double>(trials, kNaN)));
    parallel_for(cells * S * chunks, cfg.threads, [&](std::size_t task) {
        const std::size_t c = task / (S * chunks);
        const std::size_t s = (task / chunks) % S;
        const std::size_t i0 = (task % chunks) * kChunk;
        const std::size_t i1 = std::min(trials, i0 + kChunk);
        AlsSettings a = cfg.als;
        a.mode = cfg.grid.mode;
        a.beta = res.table[c].beta;
        a.zeta = res.table[c].zeta;
        const AlsConfig ac = a.resolve(pilots[s], s2);
        const ChunkData d = draw_chunk(cfg, base, pilots[s], i0, i1);
        const Estimates est = run_estimator(kind, d, pilots[s], s2, prior, &ac, src, base, i0);
        for (std::size_t i = 0; i < d.Y.size(); ++i) {
            if (!est.diverged[i]) whole[c][s][i0 + i] = nmse(d.hbar[i], est.h[i]);
        }
    });

    for (std::size_t c = 0; c < cells; ++c) {
        double obj = 0.0;
        std::size_t div = 0;
        for (std::size_t s = 0; s < S; ++s) {
            const SampleStats st = sample_stats(whole[c][s]);
            div += trials - st.n;
            obj += st.n > 0 ? std::log10(st.mean) : std::numeric_limits<double>::infinity();
        }
        res.table[c].objective = obj / static_cast<double>(S);
        res.table[c].diverged_trials = div;
        if (div == 0 && std::isfinite(res.table[c].objective) &&
            (!res.found || res.table[c].objective < res.table[res.best].objective)) {
            res.best = c;
            res.found = true;
        }
    }
    return res;
}

void write_grid_csv(std::ostream& os, const GridSearchResult& res, BetaMode mode) {
    os << (mode == BetaMode::Absolute ? "beta0" : "step_scale") << ",zeta,objective_log10_nmse,diverged_trials,selected\n";
    char buf[256];
    for (std::size_t c = 0; c < res.table.size(); ++c) {
        const auto& g = res.table[c];
        std::snprintf(buf, sizeof buf, "%.6g,%.6g,%.10e,%zu,%d\n", g.beta, g.zeta, g.objective, g.diverged_trials,
                      res.found && c == res.best ? 1 : 0);
        os << buf;
    }
}

Checkpoint train_command(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint_path,
                         const std::filesystem::path& log_path, const std::function<void(const EpochLog&)>& on_epoch) {
    cfg.validate();
    const TrainSettings& ts = cfg.train;
    Rng data_rng = Rng(ts.train.seed).derive(Stream::Training, 0);
    const auto dataset = make_dataset(cfg.fading, ts.train.dataset_size, data_rng);
    const NoiseSchedule schedule = ts.schedule();

    auto write_log = [&](std::span<const EpochLog> log) {
        if (log_path.empty()) return;
        std::ofstream os(log_path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open '" + log_path.string() + "' for writing");
        write_training_log(os, log);
    };

    std::vector<EpochLog> log;
    auto record = [&](const EpochLog& e) {
        log.push_back(e);
        if (on_epoch) on_epoch(e);
    };
    try {
        TrainResult r = train_adversarial(ts.train, dataset, schedule, ts.score, ts.disc, record);
        Checkpoint ck{std::move(r.score), std::move(r.disc), schedule, ts.train};
        if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, ck);
        write_log(r.log);
        return ck;
    } catch (const TrainingDiverged& e) {
        if (!checkpoint_path.empty()) {
            auto p = checkpoint_path;
            p += ".last_finite";
            save_checkpoint(p, Checkpoint{e.last_score, e.last_disc, schedule, ts.train});
        }
        write_log(log);
        throw;
    }
}

SweepResult estimate_command(const ExperimentConfig& cfg) {
    std::optional<Checkpoint> ck;
    if (cfg.wants(EstimatorKind::AlsTrained)) {
        if (cfg.checkpoint.empty()) throw ConfigError("config field 'checkpoint': required when als_trained is requested");
        if (!std::filesystem::exists(cfg.checkpoint)) {
            throw ConfigError("config field 'checkpoint': file '" + cfg.checkpoint + "' does not exist");
        }
        ck.emplace(load_checkpoint(cfg.checkpoint));
    }
    SweepResult res = run_sweep(cfg, ck ? &ck->score : nullptr);
    if (!cfg.out.empty()) write_results_csv(std::filesystem::path(cfg.out), res);
    return res;
}

}  // namespace ambc
