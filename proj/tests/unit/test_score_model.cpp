#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ambc/checkpoint.hpp"
#include "ambc/gradcheck.hpp"
#include "ambc/schedule.hpp"
#include "ambc/score_model.hpp"
#include "ambc/trainer.hpp"
#include "support.hpp"

using namespace ambc;

namespace {

ScoreNetConfig small_cfg(std::size_t M = 2, std::size_t K = 1, std::size_t width = 16, std::size_t depth = 3) {
    ScoreNetConfig c;
    c.M = M;
    c.K = K;
    c.width = width;
    c.depth = depth;
    return c;
}

template <typename Model>
void randomize(Model& m, std::uint64_t seed, double scale = 0.3) {
    Rng r(seed);
    for (auto& p : m.params()) p = scale * r.normal();
}

std::vector<ComplexMatrix> gaussian_data(std::size_t n, std::size_t M, std::size_t cols, double r, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<ComplexMatrix> d;
    for (std::size_t i = 0; i < n; ++i) d.push_back(sample_complex_gaussian(M, cols, r, rng));
    return d;
}

TrainingBatch random_batch(const ScoreNetConfig& c, std::size_t B, std::uint64_t seed) {
    const auto data = gaussian_data(B, c.M, c.K + 1, 1.0, seed);
    Rng r(seed + 1);
    return make_batch(data, make_schedule(0.05, 3.0, 6), r);
}

}  // namespace

// --- schedule -------------------------------------------------------------

TEST_CASE("make_schedule examples") {
    CHECK(make_schedule(1, 4, 3).sigmas == std::vector<double>{1, 2, 4});
    CHECK(make_schedule(0.3, 0.7, 2).sigmas == std::vector<double>{0.3, 0.7});
    const double smax = std::sqrt(36.77);
    const auto s = make_schedule(0.01, smax, 2311);
    CHECK(s.T() == 2311);
    CHECK(s.sigma_min() == 0.01);
    CHECK(s.sigma_max() == smax);
    CHECK(s.sigma(1) == 0.01);
    const double ratio = s.sigmas[1] / s.sigmas[0];
    for (std::size_t i = 1; i < s.T(); ++i) {
        CHECK(s.sigmas[i] > s.sigmas[i - 1]);
        CHECK(std::abs(s.sigmas[i] / s.sigmas[i - 1] - ratio) < 1e-10);
    }
    CHECK_THROWS_AS(make_schedule(0, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(2, 1, 3), std::invalid_argument);
    CHECK_THROWS_AS(make_schedule(1, 2, 1), std::invalid_argument);
}

// --- perturbation ----------------------------------------------------------

TEST_CASE("perturb: definition, zero-noise limit, variance") {
    Rng r(1);
    const auto h = testing::random_matrix(3, 2, 5);
    const auto p = perturb(h, 0.7, r);
    CHECK(p.h_tilde == h + p.z);
    CHECK(rel_frob_error(p.h_tilde - h, p.z) < 1e-15);
    CHECK(perturb(h, 1e-300, r).h_tilde == h);
    CHECK_THROWS_AS(perturb(h, 0.0, r), std::invalid_argument);

    const auto big = perturb(ComplexMatrix(100000, 1), 0.5, r);
    CHECK(std::abs(frob_norm_sq(big.z) / 1e5 / 0.25 - 1.0) < 0.02);
}

// --- network shape and initialization ---------------------------------------

TEST_CASE("score_forward: output shape equals input shape") {
    for (auto [M, cols] : std::vector<std::pair<std::size_t, std::size_t>>{{2, 2}, {4, 3}, {8, 8}}) {
        Rng r(M);
        auto model = ScoreModel::initialized(small_cfg(M, cols - 1), r);
        randomize(model, M);
        const auto h = testing::random_matrix(M, cols, 7);
        const auto s = score_forward(model, h, 0.5);
        CHECK(s.rows() == M);
        CHECK(s.cols() == cols);
        CHECK(s.all_finite());
        CHECK_THROWS_AS(score_forward(model, testing::random_matrix(M + 1, cols, 1), 0.5), std::invalid_argument);
    }
}

TEST_CASE("fresh model returns a zero score and identity denoiser") {
    Rng r(2);
    const auto model = ScoreModel::initialized(small_cfg(4, 2), r);
    const auto h = testing::random_matrix(4, 3, 8);
    for (double s : {0.01, 1.0, 6.0}) {
        CHECK(frob_norm_sq(score_forward(model, h, s)) == 0.0);
        CHECK(denoise_empirical_bayes(model, h, s) == h);
    }
}

TEST_CASE("Adam and network parameters stay finite on a training step") {
    const auto c = small_cfg();
    Rng r(3);
    auto model = ScoreModel::initialized(c, r);
    nn::Adam opt(model.param_count());
    std::vector<double> g(model.param_count());
    const auto batch = random_batch(c, 8, 4);
    for (int i = 0; i < 5; ++i) {
        dsm_loss(model, batch, 1.0, g);
        opt.step(model.params(), g, 1e-2);
        CHECK(nn::all_finite(model.params()));
    }
    CHECK(opt.steps() == 5);
}

// --- analytic score and Empirical-Bayes denoiser ---------------------------

TEST_CASE("analytic_gaussian_score examples") {
    const std::vector<double> r1{1.0};
    CHECK(frob_norm_sq(analytic_gaussian_score(ComplexMatrix(3, 1), r1, 0.4)) == 0.0);
    const auto s = analytic_gaussian_score(ComplexMatrix{{cplx(2, 2)}}, r1, 1.0);
    CHECK(s(0, 0) == cplx(-1, -1));
    // sigma >> r: approaches the pure-noise score -h / sigma^2
    const auto h = testing::random_matrix(4, 1, 3);
    const double sig = 1e4;
    auto ref = h;
    ref *= -1.0 / (sig * sig);
    CHECK(rel_frob_error(analytic_gaussian_score(h, r1, sig), ref) < 1e-7);
    CHECK_THROWS_AS(analytic_gaussian_score(h, std::vector<double>{-1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("Empirical-Bayes denoiser with the analytic score is the posterior mean") {
    const ComplexMatrix h{{cplx(2, -4)}, {cplx(1, 0)}};
    const std::vector<double> r1{1.0};
    const auto q = denoise_empirical_bayes(analytic_gaussian_score(h, r1, 1.0), h, 1.0);
    CHECK(rel_frob_error(q, 0.5 * h) < 1e-15);

    Rng rng(4);
    for (int trial = 0; trial < 20; ++trial) {
        const auto ht = testing::random_matrix(5, 3, trial + 10);
        const std::vector<double> r{rng.uniform() * 3, rng.uniform(), 0.1 + rng.uniform()};
        const double sigma = 0.1 + 2 * rng.uniform();
        const auto q2 = denoise_empirical_bayes(analytic_gaussian_score(ht, r, sigma), ht, sigma);
        ComplexMatrix post(5, 3);
        for (std::size_t k = 0; k < 3; ++k)
            for (std::size_t m = 0; m < 5; ++m) post(m, k) = r[k] / (r[k] + sigma * sigma) * ht(m, k);
        CHECK(rel_frob_error(q2, post) < 1e-12);
    }
    // sigma -> 0: Q -> h_tilde whatever the (bounded) score
    const auto score = testing::random_matrix(5, 3, 99);
    const auto ht = testing::random_matrix(5, 3, 98);
    CHECK(rel_frob_error(denoise_empirical_bayes(score, ht, 1e-9), ht) < 1e-15);
}

// --- losses ---------------------------------------------------------------

TEST_CASE("dsm_loss: zero residual, zero-model oracle, linearity") {
    const auto c = small_cfg(3, 1);
    Rng r(5);
    const auto model = ScoreModel::initialized(c, r);

    // z = 0: a zero score is the exact target
    const auto data = gaussian_data(4, 3, 2, 1.0, 6);
    std::vector<Perturbed> pert;
    for (const auto& h : data) pert.push_back({h, ComplexMatrix(3, 2)});
    const std::vector<double> sig{0.1, 0.5, 1.0, 2.0};
    CHECK(dsm_loss(model, make_batch(data, pert, sig), 1.0) == 0.0);

    // zero model: loss = mean (lambda/2) ||z||^2 / sigma^2, brute-forced from the batch
    const auto big = gaussian_data(4000, 3, 2, 1.0, 7);
    Rng br(8);
    const auto sched = make_schedule(0.1, 5.0, 7);
    const auto batch = make_batch(big, sched, br);
    double brute = 0;
    for (Eigen::Index b = 0; b < batch.noise.cols(); ++b)
        brute += 0.5 * batch.noise.col(b).squaredNorm() / (batch.sigma[b] * batch.sigma[b]);
    brute /= double(batch.size());
    const double l1 = dsm_loss(model, batch, 1.0);
    CHECK(std::abs(l1 - brute) < 1e-12 * brute);
    // its expectation: E||z||^2 / sigma^2 = M (K+1) for complex entries
    CHECK(std::abs(l1 / (0.5 * 3 * 2) - 1.0) < 0.05);

    auto m2 = model;
    randomize(m2, 9);
    const auto b2 = random_batch(c, 16, 10);
    CHECK(dsm_loss(m2, b2, 2.0) == doctest::Approx(2.0 * dsm_loss(m2, b2, 1.0)).epsilon(1e-14));
    CHECK_THROWS_AS(dsm_loss(m2, TrainingBatch{}, 1.0), std::invalid_argument);
}

TEST_CASE("disc_loss: constant discriminators and brute-force LSGAN") {
    const auto c = small_cfg();
    Rng r(11);
    auto model = ScoreModel::initialized(c, r);
    DiscModel disc(c.input_dim(), DiscNetConfig{8, 2});
    for (auto& p : disc.params()) p = 0.0;
    const auto batch = random_batch(c, 12, 12);
    CHECK(disc_loss(disc, model, batch) == 2.0);

    // real batch identical to the denoised batch: still 2 at D = 0
    std::vector<Perturbed> pert;
    const auto data = gaussian_data(5, 2, 2, 1.0, 13);
    for (const auto& h : data) pert.push_back({h, ComplexMatrix(2, 2)});
    CHECK(disc_loss(disc, model, make_batch(data, pert, std::vector<double>(5, 0.3))) == 2.0);

    // D constant c via the output bias
    disc.params()[disc.param_count() - 1] = 0.5;
    CHECK(disc_loss(disc, model, batch) == doctest::Approx(0.25 + 2.25));

    randomize(disc, 14);
    randomize(model, 15, 0.2);
    const nn::Vec dr = disc.forward(batch.clean);
    nn::Mat q = batch.noisy;
    const nn::Mat s = model.forward(batch.noisy, batch.sigma);
    for (Eigen::Index b = 0; b < q.cols(); ++b) q.col(b) += s.col(b) * batch.sigma[b] * batch.sigma[b];
    const nn::Vec df = disc.forward(q);
    double brute = 0;
    for (Eigen::Index b = 0; b < dr.size(); ++b) brute += (dr[b] - 1) * (dr[b] - 1) + (df[b] + 1) * (df[b] + 1);
    brute /= double(dr.size());
    CHECK(disc_loss(disc, model, batch) == doctest::Approx(brute).epsilon(1e-12));
}

TEST_CASE("gen_loss decomposition and limits") {
    const auto c = small_cfg();
    Rng r(16);
    auto model = ScoreModel::initialized(c, r);
    DiscModel disc(c.input_dim(), DiscNetConfig{8, 2});
    for (auto& p : disc.params()) p = 0.0;
    disc.params()[disc.param_count() - 1] = 1.0;  // D == 1

    // perfect score (z = 0, zero model) and D(Q) == 1
    std::vector<Perturbed> pert;
    const auto data = gaussian_data(4, 2, 2, 1.0, 17);
    for (const auto& h : data) pert.push_back({h, ComplexMatrix(2, 2)});
    const auto zb = make_batch(data, pert, std::vector<double>(4, 0.4));
    CHECK(gen_loss(model, disc, zb, 1.0).total() == 0.0);

    randomize(model, 18, 0.2);
    randomize(disc, 19);
    const auto batch = random_batch(c, 10, 20);
    const GenLoss g0 = gen_loss(model, disc, batch, 0.0);
    CHECK(g0.dsm == 0.0);
    nn::Mat q = batch.noisy;
    const nn::Mat s = model.forward(batch.noisy, batch.sigma);
    for (Eigen::Index b = 0; b < q.cols(); ++b) q.col(b) += s.col(b) * batch.sigma[b] * batch.sigma[b];
    const nn::Vec df = disc.forward(q);
    CHECK(g0.adversarial == doctest::Approx((df.array() - 1).square().mean()).epsilon(1e-12));

    const GenLoss g1 = gen_loss(model, disc, batch, 3.0);
    CHECK(g1.dsm == doctest::Approx(dsm_loss(model, batch, 3.0)).epsilon(1e-14));
    const GenLoss big = gen_loss(model, disc, batch, 1e6);
    CHECK(big.adversarial / big.total() < 1e-3);
}

// --- gradient checks ------------------------------------------------------

TEST_CASE("grad_check: exact case and argument validation") {
    // single affine layer, quadratic loss 0.5 ||W x + b - y||^2
    nn::Layout lay;
    const nn::Dense d = lay.dense(3, 2);
    std::vector<double> p(lay.total());
    Rng r(21);
    d.init_normal(p, r, 1.0);
    for (auto& v : p) v += 0.1;
    nn::Mat x(3, 4), y(2, 4);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = r.normal();
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = r.normal();
    LossFn f = [&](std::span<double> g) {
        const nn::Mat z = d.forward(p, x);
        const nn::Mat e = z - y;
        if (!g.empty()) {
            for (auto& v : g) v = 0.0;
            d.backward(p, g, x, e, nullptr);
        }
        return 0.5 * e.squaredNorm();
    };
    Rng cr(22);
    const auto res = grad_check(p, f, 1e-5, 100, cr);
    CHECK(res.checked == p.size());
    CHECK(res.max_rel_error < 1e-7);
    CHECK_THROWS_AS(grad_check(p, f, 1e-2, 5, cr), std::invalid_argument);
    CHECK_THROWS_AS(grad_check(p, f, 1e-8, 5, cr), std::invalid_argument);
}

TEST_CASE("grad_check: dsm, gen and disc losses on the full networks") {
    ScoreNetConfig c = small_cfg(3, 1, 12, 3);
    Rng r(23);
    auto model = ScoreModel::initialized(c, r);
    randomize(model, 24, 0.25);
    auto disc = DiscModel::initialized(c.input_dim(), DiscNetConfig{10, 2}, r);
    randomize(disc, 25, 0.3);
    const auto batch = random_batch(c, 6, 26);

    Rng cr(27);
    const auto dsm = grad_check(model.params(), [&](std::span<double> g) { return dsm_loss(model, batch, 0.7, g); },
                                1e-5, 300, cr);
    CHECK(dsm.max_rel_error < 1e-4);
    const auto gen = grad_check(
        model.params(), [&](std::span<double> g) { return gen_loss(model, disc, batch, 0.7, g).total(); }, 1e-5, 300,
        cr);
    CHECK(gen.max_rel_error < 1e-4);
    const auto dl = grad_check(disc.params(), [&](std::span<double> g) { return disc_loss(disc, model, batch, g); },
                               1e-5, 300, cr);
    CHECK(dl.max_rel_error < 1e-4);
}

// --- training -------------------------------------------------------------

TEST_CASE("train_adversarial: determinism, log contract, epochs = 0") {
    const auto c = small_cfg(2, 1, 16, 2);
    const DiscNetConfig dc{8, 2};
    const auto data = gaussian_data(200, 2, 2, 1.0, 28);
    TrainConfig tc;
    tc.epochs = 3;
    tc.batch_size = 16;
    tc.dataset_size = data.size();
    tc.seed = 5;
    const auto sched = make_schedule(0.05, 3.0, 8);
    const auto a = train_adversarial(tc, data, sched, c, dc);
    const auto b = train_adversarial(tc, data, sched, c, dc);
    CHECK(std::equal(a.score.params().begin(), a.score.params().end(), b.score.params().begin()));
    CHECK(std::equal(a.disc.params().begin(), a.disc.params().end(), b.disc.params().begin()));
    REQUIRE(a.log.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(a.log[i].epoch == i + 1);
        CHECK(std::isfinite(a.log[i].dsm_loss));
        CHECK(std::isfinite(a.log[i].disc_loss));
        CHECK(std::isfinite(a.log[i].gen_adv_loss));
    }
    CHECK(nn::all_finite(a.score.params()));

    tc.epochs = 0;
    const auto z = train_adversarial(tc, data, sched, c, dc);
    const auto init = initial_models(tc, c, dc);
    CHECK(z.log.empty());
    CHECK(std::equal(z.score.params().begin(), z.score.params().end(), init.score.params().begin()));

    std::ostringstream os;
    write_training_log(os, a.log);
    const std::string text = os.str();
    CHECK(text.rfind("epoch,dsm_loss,disc_loss,gen_adv_loss\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 4);

    TrainConfig bad = tc;
    bad.lambda = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    CHECK_THROWS_AS(train_adversarial(tc, gaussian_data(3, 3, 2, 1.0, 1), sched, c, dc), std::invalid_argument);
}

TEST_CASE("train_adversarial: divergence carries the last finite models") {
    const auto c = small_cfg(2, 1, 8, 2);
    const auto data = gaussian_data(64, 2, 2, 1.0, 29);
    TrainConfig tc;
    tc.epochs = 50;
    tc.batch_size = 16;
    tc.lr_score = 1e300;
    tc.lr_disc = 1e300;
    try {
        train_adversarial(tc, data, make_schedule(0.05, 3.0, 8), c, DiscNetConfig{8, 2});
        FAIL("expected divergence");
    } catch (const TrainingDiverged& e) {
        CHECK(nn::all_finite(e.last_score.params()));
        CHECK(nn::all_finite(e.last_disc.params()));
    }
}

namespace {

// Held-out relative error of the learned score against -h/(r + sigma^2),
// averaged over the given noise levels.
double score_error(const ScoreModel& m, double r, const std::vector<double>& sigmas, std::uint64_t seed) {
    const auto& c = m.config();
    double acc = 0;
    for (double s : sigmas) {
        const auto clean = gaussian_data(256, c.M, c.K + 1, r, seed);
        Rng pr(seed + 1);
        std::vector<ComplexMatrix> noisy;
        for (const auto& h : clean) noisy.push_back(perturb(h, s, pr).h_tilde);
        const nn::Mat x = stack_batch(noisy);
        const nn::Mat out = m.forward(x, nn::Vec::Constant(x.cols(), s));
        const nn::Mat ref = -x / (r + s * s);
        acc += (out - ref).norm() / ref.norm();
    }
    return acc / double(sigmas.size());
}

}  // namespace

TEST_CASE("DSM training learns a Gaussian score; more data helps") {
    const auto c = small_cfg(2, 1, 32, 2);
    const auto sched = make_schedule(0.05, 4.0, 10);
    const std::vector<double> top{sched.sigmas[7], sched.sigmas[8], sched.sigmas[9]};
    double err_small = 0, err_large = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        TrainConfig tc;
        tc.lambda = 1e4;  // pure-DSM limit
        tc.lr_disc = 1e-6;
        tc.epochs = 15;
        tc.seed = seed;
        const auto small = gaussian_data(1000, 2, 2, 1.0, 100 + seed);
        const auto large = gaussian_data(10000, 2, 2, 1.0, 200 + seed);
        tc.dataset_size = small.size();
        err_small += score_error(train_adversarial(tc, small, sched, c, DiscNetConfig{8, 2}).score, 1.0, top, 999) / 3;
        tc.dataset_size = large.size();
        err_large += score_error(train_adversarial(tc, large, sched, c, DiscNetConfig{8, 2}).score, 1.0, top, 999) / 3;
    }
    MESSAGE("score error: 1e3 samples " << err_small << ", 1e4 samples " << err_large);
    CHECK(err_large < err_small);
    CHECK(err_large < 0.15);
}

// --- checkpoint -----------------------------------------------------------

TEST_CASE("checkpoint: save -> load -> save is byte-identical") {
    const auto c = small_cfg(3, 2, 10, 3);
    Rng r(30);
    Checkpoint ck{ScoreModel::initialized(c, r), DiscModel::initialized(c.input_dim(), DiscNetConfig{6, 2}, r),
                  make_schedule(0.01, 6.0, 20), TrainConfig{}};
    randomize(ck.score, 31);
    ck.train.seed = 0xfeedfacecafebeefULL;
    ck.train.lambda = 0.1 + 0.2;  // not exactly representable in short decimal form

    std::stringstream a;
    save_checkpoint(a, ck);
    const Checkpoint back = load_checkpoint(a);
    std::stringstream b;
    save_checkpoint(b, back);
    CHECK(a.str() == b.str());
    CHECK(back.train.seed == ck.train.seed);
    CHECK(back.train.lambda == ck.train.lambda);
    CHECK(back.schedule.sigmas == ck.schedule.sigmas);
    CHECK(std::equal(back.score.params().begin(), back.score.params().end(), ck.score.params().begin()));
    CHECK(a.str().substr(0, 8) == "AMBCCKPT");
}

TEST_CASE("checkpoint: malformed files are rejected with a reason") {
    const auto c = small_cfg(2, 1, 4, 2);
    Rng r(32);
    Checkpoint ck{ScoreModel::initialized(c, r), DiscModel::initialized(c.input_dim(), DiscNetConfig{4, 2}, r),
                  make_schedule(0.01, 1.0, 4), TrainConfig{}};
    std::stringstream ss;
    save_checkpoint(ss, ck);
    const std::string good = ss.str();

    auto load = [](std::string s) {
        std::stringstream in(s);
        return load_checkpoint(in);
    };
    CHECK_NOTHROW(load(good));
    std::string bad = good;
    bad[0] = 'X';
    CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("magic"), CheckpointError);
    bad = good;
    bad[8] = 9;
    CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("version"), CheckpointError);
    CHECK_THROWS_WITH_AS(load(good.substr(0, good.size() - 3)), doctest::Contains("truncated"), CheckpointError);
    bad = good;
    const auto pos = bad.find("\"width\":4");
    REQUIRE(pos != std::string::npos);
    bad[pos + 8] = '5';
    CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("param_count"), CheckpointError);
    bad = good;
    bad[20] = '!';
    CHECK_THROWS_WITH_AS(load(bad), doctest::Contains("JSON"), CheckpointError);
    CHECK_THROWS_AS(load_checkpoint(std::filesystem::path("/nonexistent/x.ckpt")), CheckpointError);
}
