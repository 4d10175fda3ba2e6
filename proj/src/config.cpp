#include "ambc/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ambc {

using nlohmann::json;

std::string_view estimator_id(EstimatorKind e) noexcept {
    switch (e) {
        case EstimatorKind::LS: return "ls";
        case EstimatorKind::MMSE: return "mmse";
        case EstimatorKind::AlsAnalytic: return "als_analytic";
        case EstimatorKind::AlsTrained: return "als_trained";
    }
    return "?";
}

EstimatorKind parse_estimator(std::string_view id) {
    for (auto e : {EstimatorKind::LS, EstimatorKind::MMSE, EstimatorKind::AlsAnalytic, EstimatorKind::AlsTrained}) {
        if (estimator_id(e) == id) return e;
    }
    throw ConfigError("unknown estimator '" + std::string(id) + "' (expected ls, mmse, als_analytic, als_trained)");
}

AlsConfig AlsSettings::resolve(const PilotSet& pilots, double sigma2) const {
    AlsConfig c;
    c.schedule = schedule();
    c.beta0 = mode == BetaMode::Absolute ? beta : normalized_beta0(beta, pilots, sigma2, c.schedule);
    c.zeta = zeta;
    c.n_steps = n_steps;
    c.validate();
    return c;
}

bool ExperimentConfig::wants(EstimatorKind e) const {
    for (auto x : estimators)
        if (x == e) return true;
    return false;
}

void ExperimentConfig::finalize() {
    if (train.seed_from_master) train.train.seed = seed;
    validate();
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    try {
        fading.validate();
    } catch (const std::invalid_argument& e) {
        fail(std::string("fading: ") + e.what());
    }
    if (tau < fading.K + 1 || (tau & (tau - 1)) != 0) fail("pilots.tau: must be a power of two >= K+1");
    if (!(sigma2 > 0.0)) fail("sigma2: must be > 0");
    if (sigma2_model && !(*sigma2_model > 0.0)) fail("sigma2_model: must be > 0");
    if (snr_db.empty()) fail("snr_db: must be non-empty");
    for (std::size_t i = 1; i < snr_db.size(); ++i) {
        if (!(snr_db[i] > snr_db[i - 1])) fail("snr_db: must be strictly increasing");
    }
    if (estimators.empty()) fail("estimators: must be non-empty");
    if (trials < 1) fail("trials: must be >= 1");
    try {
        als.schedule();
        if (!(als.beta > 0.0)) fail("als: beta0/step_scale must be > 0");
        if (!(als.zeta >= 0.0)) fail("als.zeta: must be >= 0");
        if (als.n_steps < 1) fail("als.n_steps: must be >= 1");
    } catch (const std::invalid_argument& e) {
        fail(std::string("als: ") + e.what());
    }
    try {
        train.train.validate();
        train.score.validate();
        train.disc.validate();
        train.schedule();
    } catch (const std::invalid_argument& e) {
        fail(std::string("train: ") + e.what());
    }
    if (train.score.M != fading.M || train.score.K != fading.K) fail("train: network dims disagree with fading M/K");
    if (grid.betas.empty() || grid.zetas.empty()) fail("grid: candidate lists must be non-empty");
    if (grid.trials < 1) fail("grid.trials: must be >= 1");
}

namespace {

std::vector<double> snr_range(double lo, double hi, double step) {
    std::vector<double> v;
    for (int i = 0; lo + i * step <= hi + 1e-9; ++i) v.push_back(lo + i * step);
    return v;
}

void sync_dims(ExperimentConfig& c) {
    c.train.score.M = c.fading.M;
    c.train.score.K = c.fading.K;
    c.train.score.data_scale = std::sqrt(c.fading.per_element_variance);
}

}  // namespace

ExperimentConfig preset_table1() {
    ExperimentConfig c;
    c.fading = FadingConfig::uniform(48, 7, 0.6, 1.0);
    c.tau = 8;
    c.sigma2 = 1.0;
    c.snr_db = snr_range(-5, 20, 5);
    c.estimators = {EstimatorKind::LS, EstimatorKind::MMSE};
    c.trials = 2000;
    c.als.mode = BetaMode::Absolute;
    c.als.beta = 3e-9;
    c.als.zeta = 1e-4;
    c.als.n_steps = 6;
    c.als.sigma_min = 0.01;
    c.als.sigma_max = std::sqrt(36.77);
    c.als.T = 2311;
    c.train.T = 2311;
    c.train.train.epochs = 600;
    c.train.score.width = 256;
    c.grid.mode = BetaMode::Absolute;
    c.grid.betas = {1e-9, 3e-9, 1e-8};
    sync_dims(c);
    return c;
}

ExperimentConfig preset_desk() {
    ExperimentConfig c;
    c.fading = FadingConfig::uniform(8, 3, 0.6, 1.0);
    c.tau = 4;
    c.sigma2 = 1.0;
    c.snr_db = snr_range(-5, 20, 5);
    c.estimators = {EstimatorKind::LS, EstimatorKind::MMSE, EstimatorKind::AlsAnalytic, EstimatorKind::AlsTrained};
    c.trials = 2000;
    c.train.score.width = 128;
    c.train.train.epochs = 40;
    sync_dims(c);
    return c;
}

ExperimentConfig preset(std::string_view name) {
    if (name == "table1") return preset_table1();
    if (name == "desk") return preset_desk();
    throw ConfigError("unknown preset '" + std::string(name) + "' (expected table1 or desk)");
}

namespace {

// Walks a JSON object, tracking the dotted path and rejecting unknown keys.
class Reader {
public:
    Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(where("") + "expected an object");
    }
    ~Reader() noexcept(false) {
        if (std::uncaught_exceptions() > 0) return;
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(where(it.key()) + "unknown field");
        }
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    template <typename T>
    void get(const std::string& key, T& out) {
        if (!j_.contains(key)) return;
        seen_.insert(key);
        out = convert<T>(j_[key], key);
    }

    template <typename T>
    T require(const std::string& key) {
        if (!j_.contains(key)) throw ConfigError(where(key) + "missing required field");
        T v{};
        get(key, v);
        return v;
    }

    Reader child(const std::string& key) {
        seen_.insert(key);
        return Reader(j_[key], full(key));
    }

    const json& raw(const std::string& key) {
        seen_.insert(key);
        return j_[key];
    }

    std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    std::string where(const std::string& key) const { return "config field '" + full(key) + "': "; }

private:
    template <typename T>
    T convert(const json& v, const std::string& key) const {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(where(key) + "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
                throw ConfigError(where(key) + "expected a non-negative integer");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(where(key) + "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(where(key) + "expected a string");
        } else if constexpr (std::is_same_v<T, std::vector<double>>) {
            if (!v.is_array()) throw ConfigError(where(key) + "expected an array of numbers");
            for (std::size_t i = 0; i < v.size(); ++i)
                if (!v[i].is_number()) throw ConfigError(where(key + "[" + std::to_string(i) + "]") + "expected a number");
        }
        return v.get<T>();
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

void read_fading(Reader r, FadingConfig& f) {
    std::string dist = f.distribution == Fading::Nakagami ? "nakagami" : "rayleigh";
    r.get("distribution", dist);
    if (dist == "rayleigh") f.distribution = Fading::Rayleigh;
    else if (dist == "nakagami") f.distribution = Fading::Nakagami;
    else throw ConfigError(r.where("distribution") + "expected 'rayleigh' or 'nakagami'");
    r.get("m", f.m_shape);
    r.get("gaussian_cascade", f.gaussian_cascade);
    r.get("variance", f.per_element_variance);
    r.get("M", f.M);
    const std::size_t oldK = f.K;
    r.get("K", f.K);
    if (r.has("alpha")) {
        const json& a = r.raw("alpha");
        if (a.is_number()) {
            f.alpha.assign(f.K, a.get<double>());
        } else if (a.is_array()) {
            f.alpha.clear();
            for (std::size_t i = 0; i < a.size(); ++i) {
                if (!a[i].is_number()) throw ConfigError(r.where("alpha[" + std::to_string(i) + "]") + "expected a number");
                f.alpha.push_back(a[i].get<double>());
            }
        } else {
            throw ConfigError(r.where("alpha") + "expected a number or an array of numbers");
        }
    } else if (f.K != oldK) {
        const double a = f.alpha.empty() ? 0.6 : f.alpha.front();
        f.alpha.assign(f.K, a);
    }
}

void read_als(Reader r, AlsSettings& a) {
    if (r.has("beta0") && r.has("step_scale")) throw ConfigError(r.where("beta0") + "give either beta0 or step_scale, not both");
    if (r.has("beta0")) {
        a.mode = BetaMode::Absolute;
        r.get("beta0", a.beta);
    }
    if (r.has("step_scale")) {
        a.mode = BetaMode::Normalized;
        r.get("step_scale", a.beta);
    }
    r.get("zeta", a.zeta);
    r.get("n_steps", a.n_steps);
    r.get("sigma_min", a.sigma_min);
    r.get("sigma_max", a.sigma_max);
    r.get("T", a.T);
}

void read_train(Reader r, TrainSettings& t) {
    auto& c = t.train;
    r.get("lambda", c.lambda);
    r.get("batch_size", c.batch_size);
    r.get("epochs", c.epochs);
    r.get("lr_score", c.lr_score);
    r.get("lr_disc", c.lr_disc);
    r.get("cosine_decay", c.cosine_decay);
    r.get("dataset_size", c.dataset_size);
    if (r.has("seed")) {
        r.get("seed", c.seed);
        t.seed_from_master = false;
    }
    r.get("width", t.score.width);
    r.get("depth", t.score.depth);
    r.get("disc_width", t.disc.width);
    r.get("disc_depth", t.disc.depth);
    r.get("sigma_min", t.sigma_min);
    r.get("sigma_max", t.sigma_max);
    r.get("T", t.T);
}

}  // namespace

ExperimentConfig parse_config(std::string_view json_text, ExperimentConfig c) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: invalid JSON: ") + e.what());
    }
    {
        Reader r(j, "");
        if (r.has("preset")) {
            std::string name;
            r.get("preset", name);
            c = preset(name);
        }
        if (r.has("fading")) read_fading(r.child("fading"), c.fading);
        if (r.has("pilots")) {
            Reader p = r.child("pilots");
            p.get("tau", c.tau);
            std::string src = c.source == SourcePilot::AllOnes ? "ones" : "random_phase";
            p.get("source", src);
            if (src == "ones") c.source = SourcePilot::AllOnes;
            else if (src == "random_phase") c.source = SourcePilot::RandomPhase;
            else throw ConfigError(p.where("source") + "expected 'ones' or 'random_phase'");
        }
        r.get("sigma2", c.sigma2);
        if (r.has("sigma2_model")) c.sigma2_model = r.require<double>("sigma2_model");
        r.get("snr_db", c.snr_db);
        if (r.has("estimators")) {
            const json& e = r.raw("estimators");
            if (!e.is_array()) throw ConfigError(r.where("estimators") + "expected an array of strings");
            c.estimators.clear();
            for (std::size_t i = 0; i < e.size(); ++i) {
                if (!e[i].is_string()) throw ConfigError(r.where("estimators[" + std::to_string(i) + "]") + "expected a string");
                try {
                    c.estimators.push_back(parse_estimator(e[i].get<std::string>()));
                } catch (const ConfigError& err) {
                    throw ConfigError(r.where("estimators[" + std::to_string(i) + "]") + err.what());
                }
            }
        }
        r.get("trials", c.trials);
        r.get("seed", c.seed);
        r.get("threads", c.threads);
        if (r.has("als")) read_als(r.child("als"), c.als);
        if (r.has("train")) read_train(r.child("train"), c.train);
        if (r.has("grid")) {
            Reader g = r.child("grid");
            if (g.has("beta0") && g.has("step_scales")) throw ConfigError(g.where("beta0") + "give either beta0 or step_scales");
            if (g.has("beta0")) {
                c.grid.mode = BetaMode::Absolute;
                g.get("beta0", c.grid.betas);
            }
            if (g.has("step_scales")) {
                c.grid.mode = BetaMode::Normalized;
                g.get("step_scales", c.grid.betas);
            }
            g.get("zetas", c.grid.zetas);
            g.get("trials", c.grid.trials);
        }
        r.get("checkpoint", c.checkpoint);
        r.get("out", c.out);
    }
    sync_dims(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::ifstream is(path);
    if (!is) throw ConfigError("config: cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str(), std::move(base));
}

std::string config_to_json(const ExperimentConfig& c) {
    json j;
    j["fading"] = {{"distribution", c.fading.distribution == Fading::Nakagami ? "nakagami" : "rayleigh"},
                   {"m", c.fading.m_shape},
                   {"gaussian_cascade", c.fading.gaussian_cascade},
                   {"variance", c.fading.per_element_variance},
                   {"M", c.fading.M},
                   {"K", c.fading.K},
                   {"alpha", c.fading.alpha}};
    j["pilots"] = {{"tau", c.tau}, {"source", c.source == SourcePilot::AllOnes ? "ones" : "random_phase"}};
    j["sigma2"] = c.sigma2;
    if (c.sigma2_model) j["sigma2_model"] = *c.sigma2_model;
    j["snr_db"] = c.snr_db;
    std::vector<std::string> est;
    for (auto e : c.estimators) est.emplace_back(estimator_id(e));
    j["estimators"] = est;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    json als = {{"zeta", c.als.zeta},           {"n_steps", c.als.n_steps}, {"sigma_min", c.als.sigma_min},
                {"sigma_max", c.als.sigma_max}, {"T", c.als.T}};
    als[c.als.mode == BetaMode::Absolute ? "beta0" : "step_scale"] = c.als.beta;
    j["als"] = als;
    const auto& t = c.train;
    j["train"] = {{"lambda", t.train.lambda},   {"batch_size", t.train.batch_size}, {"epochs", t.train.epochs},
                  {"lr_score", t.train.lr_score}, {"lr_disc", t.train.lr_disc},   {"cosine_decay", t.train.cosine_decay},
                  {"dataset_size", t.train.dataset_size}, {"seed", t.train.seed}, {"width", t.score.width},
                  {"depth", t.score.depth},     {"disc_width", t.disc.width},   {"disc_depth", t.disc.depth},
                  {"sigma_min", t.sigma_min},   {"sigma_max", t.sigma_max},     {"T", t.T}};
    j["grid"] = {{c.grid.mode == BetaMode::Absolute ? "beta0" : "step_scales", c.grid.betas},
                 {"zetas", c.grid.zetas},
                 {"trials", c.grid.trials}};
    if (!c.checkpoint.empty()) j["checkpoint"] = c.checkpoint;
    if (!c.out.empty()) j["out"] = c.out;
    return j.dump(2);
}

}  // namespace ambc
