#pragma once
// Experiment configuration: a strict JSON format covering the schedule, the
// training set, the sampler, guidance, the trainer, and every verification
// block. Parsing validates against the published schema semantics — unknown
// keys are rejected, every value is type- and range-checked, and the first
// violation is reported with its JSON path.

#include <singlab/errors.hpp>
#include <singlab/guidance.hpp>
#include <singlab/init_trainer.hpp>
#include <singlab/samplers.hpp>
#include <singlab/schedule.hpp>
#include <singlab/training_set.hpp>
#include <singlab/verify.hpp>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace singlab {

// ---------------------------------------------------------------------------
// Enum names (shared by the config parser, reports, and the CLI)
// ---------------------------------------------------------------------------

inline const char* method_name(Method m) {
    switch (m) {
        case Method::ddpm: return "ddpm";
        case Method::ddpm_eps: return "ddpm_eps";
        case Method::ddim: return "ddim";
        case Method::sde_em: return "sde_em";
        case Method::ode_euler: return "ode_euler";
        case Method::ode_rk4: return "ode_rk4";
    }
    return "?";
}

inline const char* init_mode_name(InitMode m) {
    switch (m) {
        case InitMode::naive_gaussian: return "naive_gaussian";
        case InitMode::sing_step: return "sing_step";
        case InitMode::true_forward: return "true_forward";
        case InitMode::step_from_one: return "step_from_one";
    }
    return "?";
}

inline const char* final_mode_name(FinalMode m) {
    return m == FinalMode::ybar_collapse ? "ybar_collapse" : "plain_last_step";
}

inline const char* bound_kind_name(BoundKind k) {
    switch (k) {
        case BoundKind::prop1: return "prop1";
        case BoundKind::prop2: return "prop2";
        case BoundKind::terminal_marginal: return "terminal_marginal";
    }
    return "?";
}

inline const char* consistency_kind_name(ConsistencyKind k) {
    switch (k) {
        case ConsistencyKind::bayes: return "bayes";
        case ConsistencyKind::marginal: return "marginal";
        case ConsistencyKind::reverse_from_one: return "reverse_from_one";
        case ConsistencyKind::terminal_gaussian: return "terminal_gaussian";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// The parsed configuration
// ---------------------------------------------------------------------------

struct ExperimentConfig {
    NoiseSchedule schedule = NoiseSchedule::cosine();
    TrainingSet training = builtin_training_set("two-point");

    SamplerConfig sampler;  // seed is filled from the master seed when used
    std::optional<int> sample_label;
    bool record_trajectories = false;
    std::optional<std::string> init_model_path;

    TrainConfig train;

    BoundKind bound_kind = BoundKind::prop1;
    SweepGrid bounds = SweepGrid::prop1_default();

    InitMode prop3_mode = InitMode::naive_gaussian;
    Prop3Config prop3;

    std::vector<ConsistencyKind> consistency_which{
        ConsistencyKind::bayes, ConsistencyKind::marginal, ConsistencyKind::reverse_from_one,
        ConsistencyKind::terminal_gaussian};
    ConsistencySpec consistency;

    LipschitzConfig lipschitz;
    double lipschitz_growth_min = 50.0;

    BrightnessConfig brightness;

    std::filesystem::path output_dir = "out";
    std::uint64_t seed = 0;
    int threads = 0;  // 0 selects the hardware concurrency
};

// ---------------------------------------------------------------------------
// Strict parsing helpers
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

[[noreturn]] inline void cfg_fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) cfg_fail(where, "expected an object");
}

inline void check_keys(const json& obj, const std::string& where,
                       std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) {
                known = true;
                break;
            }
        if (!known) cfg_fail(where + "." + it.key(), "unknown key");
    }
}

inline const json* find_key(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

inline double get_num(const json& obj, const std::string& where, const char* key, double dflt) {
    const json* v = find_key(obj, key);
    if (!v) return dflt;
    if (!v->is_number()) cfg_fail(where + "." + key, "expected a number");
    return v->get<double>();
}

inline int get_int(const json& obj, const std::string& where, const char* key, int dflt,
                   int lo = std::numeric_limits<int>::min(),
                   int hi = std::numeric_limits<int>::max()) {
    const json* v = find_key(obj, key);
    if (!v) return dflt;
    if (!v->is_number_integer()) cfg_fail(where + "." + key, "expected an integer");
    auto raw = v->get<std::int64_t>();
    if (raw < lo || raw > hi)
        cfg_fail(where + "." + key, "out of range [" + std::to_string(lo) + ", " +
                                        std::to_string(hi) + "]");
    return static_cast<int>(raw);
}

inline std::uint64_t get_u64(const json& obj, const std::string& where, const char* key,
                             std::uint64_t dflt) {
    const json* v = find_key(obj, key);
    if (!v) return dflt;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    if (v->is_number_integer() && v->get<std::int64_t>() >= 0)
        return static_cast<std::uint64_t>(v->get<std::int64_t>());
    cfg_fail(where + "." + key, "expected a nonnegative integer");
}

inline std::size_t get_count(const json& obj, const std::string& where, const char* key,
                             std::size_t dflt, std::size_t lo = 0) {
    const json* v = find_key(obj, key);
    if (!v) return dflt;
    std::uint64_t n = get_u64(obj, where, key, 0);
    if (n < lo) cfg_fail(where + "." + key, "must be >= " + std::to_string(lo));
    return static_cast<std::size_t>(n);
}

inline bool get_bool(const json& obj, const std::string& where, const char* key, bool dflt) {
    const json* v = find_key(obj, key);
    if (!v) return dflt;
    if (!v->is_boolean()) cfg_fail(where + "." + key, "expected a boolean");
    return v->get<bool>();
}

inline std::string get_str(const json& obj, const std::string& where, const char* key,
                           const std::string& dflt) {
    const json* v = find_key(obj, key);
    if (!v) return dflt;
    if (!v->is_string()) cfg_fail(where + "." + key, "expected a string");
    return v->get<std::string>();
}

inline std::optional<int> get_opt_label(const json& obj, const std::string& where,
                                        const char* key) {
    const json* v = find_key(obj, key);  // absent and null both mean "no label"
    if (!v) return std::nullopt;
    if (!v->is_number_integer()) cfg_fail(where + "." + key, "expected an integer or null");
    return static_cast<int>(v->get<std::int64_t>());
}

inline std::vector<double> get_vec(const json& obj, const std::string& where, const char* key,
                                   std::vector<double> dflt) {
    const json* v = find_key(obj, key);
    if (!v) return dflt;
    if (!v->is_array()) cfg_fail(where + "." + key, "expected an array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
        if (!e.is_number()) cfg_fail(where + "." + key, "expected an array of numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

template <class Enum>
Enum get_enum(const json& obj, const std::string& where, const char* key, Enum dflt,
              std::initializer_list<std::pair<const char*, Enum>> table) {
    const json* v = find_key(obj, key);
    if (!v) return dflt;
    if (!v->is_string()) cfg_fail(where + "." + key, "expected a string");
    auto s = v->get<std::string>();
    std::string options;
    for (const auto& [name, val] : table) {
        if (s == name) return val;
        if (!options.empty()) options += ", ";
        options += name;
    }
    cfg_fail(where + "." + key, "must be one of: " + options);
}

inline NoiseSchedule parse_schedule(const json& j, const std::string& where) {
    require_object(j, where);
    check_keys(j, where, {"kind", "knots_t", "knots_alpha"});
    std::string kind = get_str(j, where, "kind", "cosine");
    if (kind == "cosine" || kind == "linear_alpha_squared") {
        if (find_key(j, "knots_t") || find_key(j, "knots_alpha"))
            cfg_fail(where, "knots are only valid for the tabular kind");
        return kind == "cosine" ? NoiseSchedule::cosine() : NoiseSchedule::linear_alpha_squared();
    }
    if (kind != "tabular")
        cfg_fail(where + ".kind", "must be one of: cosine, linear_alpha_squared, tabular");
    auto kt = get_vec(j, where, "knots_t", {});
    auto ka = get_vec(j, where, "knots_alpha", {});
    if (kt.empty() || ka.empty()) cfg_fail(where, "tabular kind needs knots_t and knots_alpha");
    try {
        return NoiseSchedule::tabular(kt, ka);
    } catch (const Error& e) {
        cfg_fail(where, e.what());
    }
}

inline TrainingSet parse_training_set(const json& j, const std::string& where) {
    require_object(j, where);
    check_keys(j, where, {"builtin", "csv", "points", "labels"});
    int sources = (find_key(j, "builtin") != nullptr) + (find_key(j, "csv") != nullptr) +
                  (find_key(j, "points") != nullptr);
    if (sources != 1)
        cfg_fail(where, "provide exactly one of: builtin, csv, points");
    if (const json* b = find_key(j, "builtin")) {
        if (find_key(j, "labels")) cfg_fail(where + ".labels", "only valid with points");
        if (!b->is_string()) cfg_fail(where + ".builtin", "expected a string");
        try {
            return builtin_training_set(b->get<std::string>());
        } catch (const Error& e) {
            cfg_fail(where + ".builtin", e.what());
        }
    }
    if (const json* c = find_key(j, "csv")) {
        if (find_key(j, "labels")) cfg_fail(where + ".labels", "only valid with points");
        if (!c->is_string()) cfg_fail(where + ".csv", "expected a path string");
        try {
            return load_training_set_csv(c->get<std::string>());
        } catch (const Error& e) {
            cfg_fail(where + ".csv", e.what());
        }
    }
    const json* p = find_key(j, "points");
    if (!p->is_array() || p->empty()) cfg_fail(where + ".points", "expected a nonempty array");
    std::vector<std::vector<double>> rows;
    for (const auto& r : *p) {
        if (!r.is_array() || r.empty())
            cfg_fail(where + ".points", "each point must be a nonempty array of numbers");
        std::vector<double> row;
        for (const auto& e : r) {
            if (!e.is_number())
                cfg_fail(where + ".points", "each point must be a nonempty array of numbers");
            row.push_back(e.get<double>());
        }
        rows.push_back(std::move(row));
    }
    std::vector<int> labels;
    if (const json* l = find_key(j, "labels")) {
        if (!l->is_array()) cfg_fail(where + ".labels", "expected an array of integers");
        for (const auto& e : *l) {
            if (!e.is_number_integer())
                cfg_fail(where + ".labels", "expected an array of integers");
            labels.push_back(static_cast<int>(e.get<std::int64_t>()));
        }
    }
    try {
        return TrainingSet::from_rows(rows, std::move(labels));
    } catch (const Error& e) {
        cfg_fail(where, e.what());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

inline ExperimentConfig parse_experiment_config(const nlohmann::json& root) {
    using detail::cfg_fail;
    using detail::check_keys;
    using detail::find_key;
    using nlohmann::json;

    detail::require_object(root, "config");
    check_keys(root, "config",
               {"schedule", "training_set", "sampler", "guidance", "train", "verify",
                "output_dir", "seed", "threads"});
    ExperimentConfig cfg;

    if (const json* j = find_key(root, "schedule"))
        cfg.schedule = detail::parse_schedule(*j, "config.schedule");
    if (const json* j = find_key(root, "training_set"))
        cfg.training = detail::parse_training_set(*j, "config.training_set");

    if (const json* j = find_key(root, "sampler")) {
        const std::string w = "config.sampler";
        detail::require_object(*j, w);
        check_keys(*j, w,
                   {"method", "steps", "epsilon", "init_mode", "final_mode", "chains", "label",
                    "record_trajectories", "init_model"});
        cfg.sampler.method = detail::get_enum(*j, w, "method", Method::ddpm,
                                              {{"ddpm", Method::ddpm},
                                               {"ddpm_eps", Method::ddpm_eps},
                                               {"ddim", Method::ddim},
                                               {"sde_em", Method::sde_em},
                                               {"ode_euler", Method::ode_euler},
                                               {"ode_rk4", Method::ode_rk4}});
        cfg.sampler.steps = detail::get_int(*j, w, "steps", 1000, 2, 100000000);
        cfg.sampler.epsilon = detail::get_num(*j, w, "epsilon", 0.0);
        cfg.sampler.init_mode = detail::get_enum(*j, w, "init_mode", InitMode::sing_step,
                                                 {{"naive_gaussian", InitMode::naive_gaussian},
                                                  {"sing_step", InitMode::sing_step},
                                                  {"true_forward", InitMode::true_forward},
                                                  {"step_from_one", InitMode::step_from_one}});
        cfg.sampler.final_mode = detail::get_enum(*j, w, "final_mode", FinalMode::ybar_collapse,
                                                  {{"ybar_collapse", FinalMode::ybar_collapse},
                                                   {"plain_last_step", FinalMode::plain_last_step}});
        cfg.sampler.chains = detail::get_int(*j, w, "chains", 1, 1, 100000000);
        cfg.sample_label = detail::get_opt_label(*j, w, "label");
        cfg.record_trajectories = detail::get_bool(*j, w, "record_trajectories", false);
        std::string mp = detail::get_str(*j, w, "init_model", "");
        if (!mp.empty()) cfg.init_model_path = mp;
        try {
            validate(cfg.sampler);
        } catch (const Error& e) {
            cfg_fail(w, e.what());
        }
    }

    if (const json* j = find_key(root, "guidance")) {
        const std::string w = "config.guidance";
        detail::require_object(*j, w);
        check_keys(*j, w, {"scale", "normalize_initial", "pos_label", "neg_label"});
        GuidanceConfig g;
        g.scale = detail::get_num(*j, w, "scale", 1.0);
        if (!(g.scale >= 1.0)) cfg_fail(w + ".scale", "guidance scale must satisfy w >= 1");
        g.normalize_initial = detail::get_bool(*j, w, "normalize_initial", true);
        g.pos_label = detail::get_int(*j, w, "pos_label", 0);
        g.neg_label = detail::get_opt_label(*j, w, "neg_label");
        cfg.sampler.guidance = g;
    }

    if (const json* j = find_key(root, "train")) {
        const std::string w = "config.train";
        detail::require_object(*j, w);
        check_keys(*j, w, {"learning_rate", "steps", "batch_size"});
        cfg.train.learning_rate = detail::get_num(*j, w, "learning_rate", 0.1);
        if (!(cfg.train.learning_rate > 0.0 && cfg.train.learning_rate < 1.0))
            cfg_fail(w + ".learning_rate", "must lie in (0, 1)");
        cfg.train.steps = detail::get_int(*j, w, "steps", 5000, 1, 100000000);
        cfg.train.batch_size = detail::get_int(*j, w, "batch_size", 128, 1, 100000000);
    }

    if (const json* j = find_key(root, "verify")) {
        const std::string w = "config.verify";
        detail::require_object(*j, w);
        check_keys(*j, w, {"bounds", "prop3", "consistency", "lipschitz", "brightness"});

        if (const json* b = find_key(*j, "bounds")) {
            const std::string wb = w + ".bounds";
            detail::require_object(*b, wb);
            check_keys(*b, wb,
                       {"kind", "s", "t_values", "probes", "s_values", "rel_tol", "abs_tol",
                        "mc_samples"});
            cfg.bound_kind = detail::get_enum(*b, wb, "kind", BoundKind::prop1,
                                              {{"prop1", BoundKind::prop1},
                                               {"prop2", BoundKind::prop2},
                                               {"terminal_marginal", BoundKind::terminal_marginal}});
            switch (cfg.bound_kind) {
                case BoundKind::prop1: cfg.bounds = SweepGrid::prop1_default(); break;
                case BoundKind::prop2: cfg.bounds = SweepGrid::prop2_default(); break;
                case BoundKind::terminal_marginal:
                    cfg.bounds = SweepGrid::terminal_marginal_default();
                    break;
            }
            cfg.bounds.s_fixed = detail::get_num(*b, wb, "s", cfg.bounds.s_fixed);
            cfg.bounds.t_values = detail::get_vec(*b, wb, "t_values", cfg.bounds.t_values);
            cfg.bounds.probes = detail::get_vec(*b, wb, "probes", cfg.bounds.probes);
            cfg.bounds.s_values = detail::get_vec(*b, wb, "s_values", cfg.bounds.s_values);
            cfg.bounds.quad.rel_tol = detail::get_num(*b, wb, "rel_tol", cfg.bounds.quad.rel_tol);
            cfg.bounds.quad.abs_tol = detail::get_num(*b, wb, "abs_tol", cfg.bounds.quad.abs_tol);
            cfg.bounds.mc_samples =
                detail::get_count(*b, wb, "mc_samples", cfg.bounds.mc_samples, 100);
        }

        if (const json* p = find_key(*j, "prop3")) {
            const std::string wp = w + ".prop3";
            detail::require_object(*p, wp);
            check_keys(*p, wp, {"mode", "epsilon", "n", "label", "mean_tol", "var_lo", "var_hi"});
            cfg.prop3_mode = detail::get_enum(*p, wp, "mode", InitMode::naive_gaussian,
                                              {{"naive_gaussian", InitMode::naive_gaussian},
                                               {"sing_step", InitMode::sing_step}});
            cfg.prop3.epsilon = detail::get_num(*p, wp, "epsilon", cfg.prop3.epsilon);
            cfg.prop3.n = detail::get_count(*p, wp, "n", cfg.prop3.n, 2);
            cfg.prop3.label = detail::get_opt_label(*p, wp, "label");
            cfg.prop3.mean_tol = detail::get_num(*p, wp, "mean_tol", cfg.prop3.mean_tol);
            cfg.prop3.var_lo = detail::get_num(*p, wp, "var_lo", cfg.prop3.var_lo);
            cfg.prop3.var_hi = detail::get_num(*p, wp, "var_hi", cfg.prop3.var_hi);
        }

        if (const json* c = find_key(*j, "consistency")) {
            const std::string wc = w + ".consistency";
            detail::require_object(*c, wc);
            check_keys(*c, wc,
                       {"which", "tuples", "samples", "times", "x_one_probes", "terminal_times",
                        "grid_lo", "grid_hi", "grid_points"});
            if (const json* wh = find_key(*c, "which")) {
                if (!wh->is_array() || wh->empty())
                    cfg_fail(wc + ".which", "expected a nonempty array of check names");
                cfg.consistency_which.clear();
                for (const auto& e : *wh) {
                    if (!e.is_string()) cfg_fail(wc + ".which", "expected check-name strings");
                    auto s = e.get<std::string>();
                    if (s == "bayes") cfg.consistency_which.push_back(ConsistencyKind::bayes);
                    else if (s == "marginal")
                        cfg.consistency_which.push_back(ConsistencyKind::marginal);
                    else if (s == "reverse_from_one")
                        cfg.consistency_which.push_back(ConsistencyKind::reverse_from_one);
                    else if (s == "terminal_gaussian")
                        cfg.consistency_which.push_back(ConsistencyKind::terminal_gaussian);
                    else
                        cfg_fail(wc + ".which",
                                 "must be among: bayes, marginal, reverse_from_one, "
                                 "terminal_gaussian");
                }
            }
            cfg.consistency.tuples = detail::get_count(*c, wc, "tuples", cfg.consistency.tuples, 1);
            cfg.consistency.samples =
                detail::get_count(*c, wc, "samples", cfg.consistency.samples, 10);
            cfg.consistency.times = detail::get_vec(*c, wc, "times", cfg.consistency.times);
            cfg.consistency.x_one_probes =
                detail::get_vec(*c, wc, "x_one_probes", cfg.consistency.x_one_probes);
            cfg.consistency.terminal_times =
                detail::get_vec(*c, wc, "terminal_times", cfg.consistency.terminal_times);
            cfg.consistency.grid_lo = detail::get_num(*c, wc, "grid_lo", cfg.consistency.grid_lo);
            cfg.consistency.grid_hi = detail::get_num(*c, wc, "grid_hi", cfg.consistency.grid_hi);
            cfg.consistency.grid_points =
                detail::get_count(*c, wc, "grid_points", cfg.consistency.grid_points, 2);
        }

        if (const json* l = find_key(*j, "lipschitz")) {
            const std::string wl = w + ".lipschitz";
            detail::require_object(*l, wl);
            check_keys(*l, wl, {"t_values", "x_lo", "x_hi", "x_step", "fd_h", "growth_min"});
            cfg.lipschitz.t_values = detail::get_vec(*l, wl, "t_values", cfg.lipschitz.t_values);
            cfg.lipschitz.x_lo = detail::get_num(*l, wl, "x_lo", cfg.lipschitz.x_lo);
            cfg.lipschitz.x_hi = detail::get_num(*l, wl, "x_hi", cfg.lipschitz.x_hi);
            cfg.lipschitz.x_step = detail::get_num(*l, wl, "x_step", cfg.lipschitz.x_step);
            cfg.lipschitz.fd_h = detail::get_num(*l, wl, "fd_h", cfg.lipschitz.fd_h);
            cfg.lipschitz_growth_min =
                detail::get_num(*l, wl, "growth_min", cfg.lipschitz_growth_min);
        }

        if (const json* b = find_key(*j, "brightness")) {
            const std::string wb = w + ".brightness";
            detail::require_object(*b, wb);
            check_keys(*b, wb, {"epsilon", "n", "moments_n", "hit_chains", "steps"});
            cfg.brightness.epsilon = detail::get_num(*b, wb, "epsilon", cfg.brightness.epsilon);
            cfg.brightness.n = detail::get_count(*b, wb, "n", cfg.brightness.n, 100);
            cfg.brightness.moments_n =
                detail::get_count(*b, wb, "moments_n", cfg.brightness.moments_n, 100);
            cfg.brightness.hit_chains =
                detail::get_count(*b, wb, "hit_chains", cfg.brightness.hit_chains);
            cfg.brightness.steps = detail::get_int(*b, wb, "steps", cfg.brightness.steps, 0,
                                                   100000000);
        }
    }

    cfg.output_dir = detail::get_str(root, "config", "output_dir", "out");
    cfg.seed = detail::get_u64(root, "config", "seed", 0);
    cfg.threads = detail::get_int(root, "config", "threads", 0, 0, 4096);
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config is not valid JSON: " + std::string(e.what()));
    }
    return parse_experiment_config(root);
}

// The published JSON schema the parser enforces.
inline const char* experiment_config_schema() {
    return R"SCHEMA({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "singlab experiment configuration",
  "type": "object",
  "additionalProperties": false,
  "properties": {
    "schedule": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "kind": {"enum": ["cosine", "linear_alpha_squared", "tabular"], "default": "cosine"},
        "knots_t": {"type": "array", "items": {"type": "number"},
                    "description": "tabular only: strictly increasing times from 0 to 1"},
        "knots_alpha": {"type": "array", "items": {"type": "number"},
                        "description": "tabular only: strictly decreasing alpha from 1 to 0"}
      }
    },
    "training_set": {
      "type": "object",
      "additionalProperties": false,
      "description": "exactly one of builtin | csv | points",
      "properties": {
        "builtin": {"enum": ["two-point", "brightness-toy", "grid-9"]},
        "csv": {"type": "string", "description": "path; optional header; optional trailing 'label' column"},
        "points": {"type": "array", "items": {"type": "array", "items": {"type": "number"}}},
        "labels": {"type": "array", "items": {"type": "integer"},
                   "description": "points only: one integer class label per point"}
      }
    },
    "sampler": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "method": {"enum": ["ddpm", "ddpm_eps", "ddim", "sde_em", "ode_euler", "ode_rk4"],
                   "default": "ddpm"},
        "steps": {"type": "integer", "minimum": 2, "default": 1000},
        "epsilon": {"type": "number", "description": "early-stop margin; 0 selects 1/steps",
                    "default": 0},
        "init_mode": {"enum": ["naive_gaussian", "sing_step", "true_forward", "step_from_one"],
                      "default": "sing_step"},
        "final_mode": {"enum": ["ybar_collapse", "plain_last_step"], "default": "ybar_collapse"},
        "chains": {"type": "integer", "minimum": 1, "default": 1},
        "label": {"type": ["integer", "null"], "description": "conditioning class", "default": null},
        "record_trajectories": {"type": "boolean", "default": false},
        "init_model": {"type": "string", "description": "path to a trained init model JSON"}
      }
    },
    "guidance": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "scale": {"type": "number", "minimum": 1, "default": 1},
        "normalize_initial": {"type": "boolean", "default": true},
        "pos_label": {"type": "integer", "default": 0},
        "neg_label": {"type": ["integer", "null"], "default": null,
                      "description": "null conditions the negative branch on the whole set"}
      }
    },
    "train": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "learning_rate": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1,
                          "default": 0.1},
        "steps": {"type": "integer", "minimum": 1, "default": 5000},
        "batch_size": {"type": "integer", "minimum": 1, "default": 128}
      }
    },
    "verify": {
      "type": "object",
      "additionalProperties": false,
      "properties": {
        "bounds": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "kind": {"enum": ["prop1", "prop2", "terminal_marginal"], "default": "prop1"},
            "s": {"type": "number", "description": "prop1: the fixed earlier time", "default": 0.5},
            "t_values": {"type": "array", "items": {"type": "number"},
                         "description": "prop1 / terminal_marginal grid, ascending"},
            "probes": {"type": "array", "items": {"type": "number"},
                       "description": "prop1 x_t probes (1-D models)"},
            "s_values": {"type": "array", "items": {"type": "number"},
                         "description": "prop2 grid, ascending toward 1"},
            "rel_tol": {"type": "number", "default": 1e-5},
            "abs_tol": {"type": "number", "default": 1e-12},
            "mc_samples": {"type": "integer", "minimum": 100, "default": 200000}
          }
        },
        "prop3": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "mode": {"enum": ["naive_gaussian", "sing_step"], "default": "naive_gaussian"},
            "epsilon": {"type": "number", "default": 0.05},
            "n": {"type": "integer", "minimum": 2, "default": 100000},
            "label": {"type": ["integer", "null"], "default": null},
            "mean_tol": {"type": "number", "default": 0.02},
            "var_lo": {"type": "number", "default": 0.98},
            "var_hi": {"type": "number", "default": 1.02}
          }
        },
        "consistency": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "which": {"type": "array",
                      "items": {"enum": ["bayes", "marginal", "reverse_from_one",
                                         "terminal_gaussian"]},
                      "default": ["bayes", "marginal", "reverse_from_one", "terminal_gaussian"]},
            "tuples": {"type": "integer", "minimum": 1, "default": 10000},
            "samples": {"type": "integer", "minimum": 10, "default": 10000},
            "times": {"type": "array", "items": {"type": "number"},
                      "default": [0.25, 0.5, 0.75]},
            "x_one_probes": {"type": "array", "items": {"type": "number"},
                             "default": [-1.5, 0.0, 0.7]},
            "terminal_times": {"type": "array", "items": {"type": "number"},
                               "default": [0.9, 0.99, 0.999]},
            "grid_lo": {"type": "number", "default": -6},
            "grid_hi": {"type": "number", "default": 6},
            "grid_points": {"type": "integer", "minimum": 2, "default": 1201}
          }
        },
        "lipschitz": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "t_values": {"type": "array", "items": {"type": "number"},
                         "description": "strictly decreasing toward 0",
                         "default": [0.2, 0.1, 0.05, 0.02]},
            "x_lo": {"type": "number", "default": -3},
            "x_hi": {"type": "number", "default": 3},
            "x_step": {"type": "number", "default": 0.01},
            "fd_h": {"type": "number", "default": 1e-6},
            "growth_min": {"type": "number", "default": 50,
                           "description": "required max-derivative growth over the time list"}
          }
        },
        "brightness": {
          "type": "object",
          "additionalProperties": false,
          "properties": {
            "epsilon": {"type": "number", "default": 0.05},
            "n": {"type": "integer", "minimum": 100, "default": 10000,
                  "description": "ensemble size per (mode, class) for energy distances"},
            "moments_n": {"type": "integer", "minimum": 100, "default": 1000000,
                          "description": "draws behind each mean-brightness estimate"},
            "hit_chains": {"type": "integer", "minimum": 0, "default": 2000},
            "steps": {"type": "integer", "minimum": 0, "default": 0,
                      "description": "0 selects round(1/epsilon)"}
          }
        }
      }
    },
    "output_dir": {"type": "string", "default": "out"},
    "seed": {"type": "integer", "minimum": 0, "default": 0},
    "threads": {"type": "integer", "minimum": 0, "default": 0,
                "description": "0 selects the hardware concurrency; outputs are identical for any value"}
  }
}
)SCHEMA";
}

}  // namespace singlab
