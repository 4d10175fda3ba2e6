#include <pybind11/pybind11.h>
#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <sstream>

#include "ambc/als.hpp"
#include "ambc/bench.hpp"
#include "ambc/channel.hpp"
#include "ambc/checkpoint.hpp"
#include "ambc/config.hpp"
#include "ambc/estimators.hpp"
#include "ambc/pilots.hpp"
#include "ambc/score_model.hpp"

namespace py = pybind11;
using namespace ambc;

namespace {

using CArray = py::array_t<cplx, py::array::c_style | py::array::forcecast>;

ComplexMatrix to_matrix(const CArray& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D complex array");
    ComplexMatrix m(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + a.size(), m.entries().begin());
    return m;
}

CArray to_array(const ComplexMatrix& m) {
    CArray a({m.rows(), m.cols()});
    std::copy(m.entries().begin(), m.entries().end(), a.mutable_data());
    return a;
}

SourcePilot parse_source(const std::string& s) {
    if (s == "ones") return SourcePilot::AllOnes;
    if (s == "random_phase") return SourcePilot::RandomPhase;
    throw py::value_error("source must be 'ones' or 'random_phase'");
}

PilotSet pilot_set(const CArray& C, const CArray& s, double p_p) {
    PilotSet p;
    p.C = to_matrix(C);
    p.s = to_matrix(s);
    p.tau = p.C.cols();
    p.p_p = p_p;
    if (p.s.rows() != 1 || p.s.cols() != p.tau) throw py::value_error("s must have shape (1, tau)");
    return p;
}

// Holds a loaded checkpoint so TrainedScore can point at it.
struct PyScoreModel {
    Checkpoint ck;

    CArray score(const CArray& h, double sigma) const { return to_array(score_forward(ck.score, to_matrix(h), sigma)); }
    CArray denoise(const CArray& h, double sigma) const {
        return to_array(denoise_empirical_bayes(ck.score, to_matrix(h), sigma));
    }
};

py::dict row_dict(const NmseResult& r) {
    py::dict d;
    d["estimator"] = r.estimator;
    d["snr_db"] = r.snr_db;
    d["link"] = r.link;
    d["nmse_mean"] = r.nmse_mean;
    d["nmse_ci95"] = r.nmse_ci95;
    d["trials"] = r.trials;
    d["diverged"] = r.diverged;
    return d;
}

}  // namespace

PYBIND11_MODULE(_ambc, m) {
    m.doc() = "Score-based channel estimation for ambient backscatter: C++ core bindings";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<CheckpointError>(m, "CheckpointError", PyExc_IOError);
    py::register_exception<SamplingDiverged>(m, "SamplingDiverged", PyExc_ArithmeticError);

    m.def("hadamard", [](std::size_t order) { return to_array(hadamard(order)); }, py::arg("order"));

    m.def(
        "build_pilots",
        [](std::size_t K, std::size_t tau, double p_p, const std::string& source, std::uint64_t seed) {
            Rng rng(seed);
            const PilotSet p = build_pilots(K, tau, p_p, parse_source(source), rng);
            return py::make_tuple(to_array(p.C), to_array(p.s));
        },
        py::arg("K"), py::arg("tau"), py::arg("p_p") = 1.0, py::arg("source") = "ones", py::arg("seed") = 0,
        "Returns (C, s): the (K+1) x tau tag pilots and the 1 x tau source pilot.");

    m.def("pilot_power_for_snr", &pilot_power_for_snr, py::arg("snr_db"), py::arg("sigma2") = 1.0);

    m.def(
        "sample_hbar",
        [](std::size_t M, std::size_t K, std::vector<double> alpha, const std::string& fading, double m_shape,
           double variance, std::uint64_t seed) {
            FadingConfig c;
            c.M = M;
            c.K = K;
            c.alpha = alpha.size() == 1 ? std::vector<double>(K, alpha[0]) : std::move(alpha);
            c.per_element_variance = variance;
            c.m_shape = m_shape;
            if (fading == "rayleigh") c.distribution = Fading::Rayleigh;
            else if (fading == "nakagami") c.distribution = Fading::Nakagami;
            else throw py::value_error("fading must be 'rayleigh' or 'nakagami'");
            c.validate();
            Rng rng(seed);
            return to_array(assemble_hbar(sample_channel_set(c, rng)));
        },
        py::arg("M"), py::arg("K"), py::arg("alpha") = std::vector<double>{0.6}, py::arg("fading") = "rayleigh",
        py::arg("m") = 1.0, py::arg("variance") = 1.0, py::arg("seed") = 0,
        "Draws H-bar = [h0, sqrt(alpha_k) f_k g_k], shape (M, K+1).");

    m.def(
        "simulate_observation",
        [](const CArray& hbar, const CArray& C, const CArray& s, double p_p, double sigma2, std::uint64_t seed) {
            Rng rng(seed);
            return to_array(simulate_observation(to_matrix(hbar), pilot_set(C, s, p_p), sigma2, rng));
        },
        py::arg("hbar"), py::arg("C"), py::arg("s"), py::arg("p_p"), py::arg("sigma2") = 1.0, py::arg("seed") = 0);

    m.def(
        "ls_estimate",
        [](const CArray& Y, const CArray& C, const CArray& s, double p_p) {
            return to_array(ls_estimate(to_matrix(Y), pilot_set(C, s, p_p)));
        },
        py::arg("Y"), py::arg("C"), py::arg("s"), py::arg("p_p"));

    m.def(
        "mmse_estimate",
        [](const CArray& Y, const CArray& C, const CArray& s, double p_p, std::vector<double> r, double sigma2) {
            return to_array(mmse_estimate(to_matrix(Y), pilot_set(C, s, p_p), PriorSpec{std::move(r)}, sigma2));
        },
        py::arg("Y"), py::arg("C"), py::arg("s"), py::arg("p_p"), py::arg("r"), py::arg("sigma2") = 1.0);

    m.def("nmse", [](const CArray& h, const CArray& h_est) { return nmse(to_matrix(h), to_matrix(h_est)); },
          py::arg("h_true"), py::arg("h_est"));

    py::class_<PyScoreModel>(m, "ScoreModel")
        .def_static(
            "load", [](const std::filesystem::path& p) { return PyScoreModel{load_checkpoint(p)}; }, py::arg("path"))
        .def("score", &PyScoreModel::score, py::arg("h_tilde"), py::arg("sigma"))
        .def("denoise", &PyScoreModel::denoise, py::arg("h_tilde"), py::arg("sigma"))
        .def("save",
             [](const PyScoreModel& s, const std::filesystem::path& p) { save_checkpoint(p, s.ck); }, py::arg("path"))
        .def_property_readonly("M", [](const PyScoreModel& s) { return s.ck.score.config().M; })
        .def_property_readonly("K", [](const PyScoreModel& s) { return s.ck.score.config().K; })
        .def_property_readonly("sigmas", [](const PyScoreModel& s) { return s.ck.schedule.sigmas; })
        .def_property_readonly("param_count", [](const PyScoreModel& s) { return s.ck.score.param_count(); });

    m.def(
        "als_estimate",
        [](const CArray& Y, const CArray& C, const CArray& s, double p_p, double sigma2,
           std::optional<std::vector<double>> prior, const PyScoreModel* model, double step_scale, double zeta,
           std::size_t n_steps, double sigma_min, double sigma_max, std::size_t T, std::uint64_t seed) {
            const PilotSet p = pilot_set(C, s, p_p);
            AlsConfig cfg;
            cfg.schedule = make_schedule(sigma_min, sigma_max, T);
            cfg.beta0 = normalized_beta0(step_scale, p, sigma2, cfg.schedule);
            cfg.zeta = zeta;
            cfg.n_steps = n_steps;
            Rng rng(seed);
            const ComplexMatrix y = to_matrix(Y);
            if (model) return to_array(als_estimate(y, p, sigma2, cfg, TrainedScore(model->ck.score), rng));
            if (prior) return to_array(als_estimate(y, p, sigma2, cfg, AnalyticGaussianScore(PriorSpec{*prior}), rng));
            return to_array(als_estimate(y, p, sigma2, cfg, ZeroScore{}, rng));
        },
        py::arg("Y"), py::arg("C"), py::arg("s"), py::arg("p_p"), py::arg("sigma2") = 1.0,
        py::arg("prior") = py::none(), py::arg("model") = nullptr, py::arg("step_scale") = 1.5,
        py::arg("zeta") = 1e-4, py::arg("n_steps") = 6, py::arg("sigma_min") = 0.01, py::arg("sigma_max") = 1.0,
        py::arg("T") = 20, py::arg("seed") = 0,
        "Annealed Langevin estimate. Uses the trained model if given, else the Gaussian prior r, else no prior.");

    m.def(
        "config",
        [](const std::string& preset_name, const std::string& overrides) {
            ExperimentConfig c = preset(preset_name);
            if (!overrides.empty()) c = parse_config(overrides, c);
            c.finalize();
            return config_to_json(c);
        },
        py::arg("preset") = "desk", py::arg("overrides") = "",
        "Resolved configuration as canonical JSON text.");

    m.def(
        "train",
        [](const std::string& config_json, const std::filesystem::path& checkpoint, const std::filesystem::path& log) {
            ExperimentConfig c = parse_config(config_json, preset_desk());
            c.finalize();
            Checkpoint ck = [&] {
                py::gil_scoped_release release;
                return train_command(c, checkpoint, log);
            }();
            return PyScoreModel{std::move(ck)};
        },
        py::arg("config_json"), py::arg("checkpoint"), py::arg("log") = std::filesystem::path{},
        "Trains the score model; writes the checkpoint and training log.");

    m.def(
        "run_sweep",
        [](const std::string& config_json) {
            ExperimentConfig c = parse_config(config_json, preset_desk());
            c.finalize();
            SweepResult r;
            {
                py::gil_scoped_release release;
                r = estimate_command(c);
            }
            py::list rows;
            for (const auto& row : r.rows) rows.append(row_dict(row));
            std::ostringstream os;
            write_results_csv(os, r);
            return py::make_tuple(rows, os.str());
        },
        py::arg("config_json"), "Runs a sweep; returns (rows, csv_text).");
}
