// ambc: train / sweep / grid-search front end.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "ambc/bench.hpp"
#include "ambc/config.hpp"

namespace {

struct Common {
    std::string config;
    std::string preset = "desk";
    std::optional<std::uint64_t> seed;
    std::string out;
    std::string checkpoint;
    std::optional<std::size_t> trials;
    std::optional<std::size_t> threads;
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "JSON experiment config (overlays the preset)");
    app->add_option("--preset", c.preset, "Base preset")->check(CLI::IsMember({"table1", "desk"}));
    app->add_option("--seed", c.seed, "Master seed");
    app->add_option("--out", c.out, "Output path");
    app->add_option("--checkpoint", c.checkpoint, "Score-model checkpoint");
    app->add_option("--trials", c.trials, "Monte-Carlo trials");
    app->add_option("--threads", c.threads, "Worker threads (0 = all cores)");
}

ambc::ExperimentConfig resolve(const Common& c) {
    ambc::ExperimentConfig cfg = ambc::preset(c.preset);
    if (!c.config.empty()) cfg = ambc::load_config(c.config, cfg);
    if (c.seed) cfg.seed = *c.seed;
    if (!c.checkpoint.empty()) cfg.checkpoint = c.checkpoint;
    if (c.trials) cfg.trials = *c.trials;
    if (c.threads) cfg.threads = *c.threads;
    cfg.finalize();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score-based channel estimation for ambient backscatter: training and NMSE benchmarks"};
    app.require_subcommand(1);

    Common tc, sc, gc;
    std::string log_path;
    auto* train = app.add_subcommand("train", "Train the score network; writes a checkpoint and a training log");
    add_common(train, tc);
    train->add_option("--log", log_path, "Training-log CSV (default: <checkpoint>.log.csv)");

    auto* sweep = app.add_subcommand("sweep", "NMSE-vs-SNR sweep; writes the results CSV");
    add_common(sweep, sc);

    std::string grid_estimator = "als_analytic";
    auto* grid = app.add_subcommand("grid-search", "Grid search over ALS step size and zeta");
    add_common(grid, gc);
    grid->add_option("--estimator", grid_estimator, "Score source")->check(CLI::IsMember({"als_analytic", "als_trained"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*train) {
            ambc::ExperimentConfig cfg = resolve(tc);
            std::string ckpt = cfg.checkpoint.empty() ? "score.ckpt" : cfg.checkpoint;
            if (!tc.out.empty()) log_path = tc.out;
            if (log_path.empty()) log_path = ckpt + ".log.csv";
            ambc::train_command(cfg, ckpt, log_path, [&](const ambc::EpochLog& e) {
                std::fprintf(stderr, "epoch %zu/%zu  dsm %.6g  disc %.6g  gen_adv %.6g\n", e.epoch,
                             cfg.train.train.epochs, e.dsm_loss, e.disc_loss, e.gen_adv_loss);
            });
            std::fprintf(stderr, "wrote %s and %s\n", ckpt.c_str(), log_path.c_str());
        } else if (*sweep) {
            ambc::ExperimentConfig cfg = resolve(sc);
            if (!sc.out.empty()) cfg.out = sc.out;
            const auto res = ambc::estimate_command(cfg);
            if (cfg.out.empty()) ambc::write_results_csv(std::cout, res);
            for (const auto& r : res.rows) {
                if (r.diverged > 0 && r.link == "direct") {
                    std::fprintf(stderr, "warning: %s at %g dB: %zu diverged trials excluded\n", r.estimator.c_str(),
                                 r.snr_db, r.diverged);
                }
            }
        } else if (*grid) {
            ambc::ExperimentConfig cfg = resolve(gc);
            const auto kind = ambc::parse_estimator(grid_estimator);
            std::optional<ambc::Checkpoint> ck;
            if (kind == ambc::EstimatorKind::AlsTrained) {
                if (cfg.checkpoint.empty()) throw ambc::ConfigError("--checkpoint is required for als_trained");
                ck.emplace(ambc::load_checkpoint(cfg.checkpoint));
            }
            const auto res = ambc::grid_search_beta(cfg, cfg.grid.betas, cfg.grid.zetas, kind, ck ? &ck->score : nullptr);
            if (gc.out.empty()) {
                ambc::write_grid_csv(std::cout, res, cfg.grid.mode);
            } else {
                std::ofstream os(gc.out, std::ios::binary);
                ambc::write_grid_csv(os, res, cfg.grid.mode);
            }
            if (res.found) {
                std::fprintf(stderr, "selected %s = %g, zeta = %g\n",
                             cfg.grid.mode == ambc::BetaMode::Absolute ? "beta0" : "step_scale", res.best_cell().beta,
                             res.best_cell().zeta);
            } else {
                std::fprintf(stderr, "every grid cell diverged\n");
                return 3;
            }
        }
    } catch (const ambc::ConfigError& e) {
        std::fprintf(stderr, "configuration error: %s\n", e.what());
        return 2;
    } catch (const ambc::CheckpointError& e) {
        std::fprintf(stderr, "checkpoint error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
