#pragma once
// Command-line front end. Subcommands cover sampling, trainer fitting, and
// every verification harness; each one reads a JSON experiment config, writes
// CSV + JSON reports atomically into the output directory, prints a one-line
// summary per check, and exits 0 (all pass), 1 (a check failed; reports are
// still written), or 2 (config or usage error).

#include <singlab/config.hpp>
#include <singlab/report_io.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace singlab {

namespace cli_detail {

namespace fs = std::filesystem;
using nlohmann::json;

struct Common {
    CLI::App* sub = nullptr;
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 0;
    std::string outdir;
};

inline void add_common(CLI::App& app, Common& c, const char* name, std::string desc) {
    c.sub = app.add_subcommand(name, std::move(desc));
    c.sub->add_option("--config", c.config_path, "Path to the experiment config JSON (required)")
        ->required();
    c.sub->add_option("--seed", c.seed,
                      "Master seed; overrides the SINGLAB_SEED environment variable, which "
                      "overrides the config value");
    c.sub->add_option("--threads", c.threads,
                      "Worker threads; 0 selects the hardware concurrency. Results are "
                      "byte-identical for any value (summary.json records the count used)")
        ->check(CLI::NonNegativeNumber);
    c.sub->add_option("--output-dir", c.outdir, "Output directory; overrides the config value");
}

inline std::uint64_t parse_seed_env(const char* text) {
    char* end = nullptr;
    errno = 0;
    unsigned long long v = std::strtoull(text, &end, 10);
    if (errno != 0 || end == text || *end != '\0')
        throw ConfigError("SINGLAB_SEED must be a nonnegative integer, got '" +
                          std::string(text) + "'");
    return static_cast<std::uint64_t>(v);
}

// Apply the flag > environment > config precedence and resolve thread count.
inline ExperimentConfig resolve(const Common& c) {
    ExperimentConfig cfg = load_experiment_config(c.config_path);
    if (c.sub->count("--seed") > 0)
        cfg.seed = c.seed;
    else if (const char* env = std::getenv("SINGLAB_SEED"))
        cfg.seed = parse_seed_env(env);
    if (c.sub->count("--threads") > 0) cfg.threads = c.threads;
    if (c.sub->count("--output-dir") > 0) cfg.output_dir = c.outdir;
    if (cfg.threads <= 0) {
        unsigned hc = std::thread::hardware_concurrency();
        cfg.threads = hc > 0 ? static_cast<int>(hc) : 1;
    }
    return cfg;
}

inline void write_summary(const fs::path& dir, const json& j) {
    atomic_write_text(dir / "summary.json", j.dump(2) + "\n");
}

inline json checks_json(const std::vector<StatCheck>& checks) {
    json arr = json::array();
    for (const auto& c : checks)
        arr.push_back({{"name", c.name},
                       {"n", c.n},
                       {"statistic", c.statistic},
                       {"threshold", c.threshold},
                       {"pass", c.pass}});
    return arr;
}

inline void print_checks(const std::vector<StatCheck>& checks) {
    for (const auto& c : checks)
        std::printf("%-36s n=%-8zu stat=%-14.8g thr=%-14.8g %s\n", c.name.c_str(), c.n,
                    c.statistic, c.threshold, c.pass ? "PASS" : "FAIL");
}

inline std::vector<std::string> coord_columns(std::size_t d, std::vector<std::string> head) {
    for (std::size_t k = 0; k < d; ++k) head.push_back("x" + std::to_string(k));
    return head;
}

// --- subcommand bodies -----------------------------------------------------

inline int run_sample(ExperimentConfig cfg) {
    MixtureModel m(cfg.training, cfg.schedule);
    cfg.sampler.seed = cfg.seed;
    std::optional<InitModel> init_model;
    if (cfg.init_model_path) {
        std::ifstream in(*cfg.init_model_path);
        if (!in) throw ConfigError("cannot open init model file: " + *cfg.init_model_path);
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception& e) {
            throw ConfigError("init model is not valid JSON: " + std::string(e.what()));
        }
        init_model = InitModel::from_json(j);
    }
    BatchResult br = run_batch(m, cfg.sampler, cfg.sample_label, cfg.record_trajectories,
                               cfg.threads, init_model ? &*init_model : nullptr);

    const std::size_t d = br.dim;
    CsvTable terminal(coord_columns(d, {"chain", "nearest_index"}));
    for (std::size_t i = 0; i < br.nearest.size(); ++i) {
        std::vector<std::string> row{fmt(i), fmt(br.nearest[i])};
        for (std::size_t k = 0; k < d; ++k) row.push_back(fmt(br.terminal[i * d + k]));
        terminal.add_row(std::move(row));
    }
    atomic_write_text(cfg.output_dir / "terminal.csv", terminal.to_string());

    if (cfg.record_trajectories) {
        CsvTable traj(coord_columns(d, {"chain", "time"}));
        for (const auto& tr : br.trajectories)
            for (std::size_t s = 0; s < tr.times.size(); ++s) {
                std::vector<std::string> row{fmt(tr.chain_index), fmt(tr.times[s])};
                for (std::size_t k = 0; k < d; ++k) row.push_back(fmt(tr.states[s][k]));
                traj.add_row(std::move(row));
            }
        atomic_write_text(cfg.output_dir / "trajectories.csv", traj.to_string());
    }

    std::map<std::size_t, std::size_t> counts;
    for (std::size_t idx : br.nearest) ++counts[idx];
    json hist = json::array();
    for (const auto& [idx, cnt] : counts)
        hist.push_back({{"index", idx},
                        {"count", cnt},
                        {"fraction", static_cast<double>(cnt) /
                                         static_cast<double>(br.nearest.size())}});

    json summary{{"subcommand", "sample"},
                 {"seed", cfg.seed},
                 {"threads", cfg.threads},
                 {"method", method_name(cfg.sampler.method)},
                 {"steps", cfg.sampler.steps},
                 {"init_mode", init_mode_name(cfg.sampler.init_mode)},
                 {"final_mode", final_mode_name(cfg.sampler.final_mode)},
                 {"chains", cfg.sampler.chains},
                 {"dim", d},
                 {"grid_points", br.times.size()},
                 {"nearest_histogram", hist},
                 {"pass", true}};
    if (cfg.sample_label) summary["label"] = *cfg.sample_label;
    write_summary(cfg.output_dir, summary);
    std::printf("sample[%s]: chains=%d grid=%zu distinct_endpoints=%zu -> PASS\n",
                method_name(cfg.sampler.method), cfg.sampler.chains, br.times.size(),
                counts.size());
    return 0;
}

inline int run_train_init(ExperimentConfig cfg) {
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    TrainResult result;
    try {
        result = fit_init_model(cfg.training, tc);
    } catch (const DivergenceDetected& e) {
        json summary{{"subcommand", "train-init"}, {"seed", cfg.seed},
                     {"diverged", true},          {"error", e.what()},
                     {"learning_rate", tc.learning_rate}, {"pass", false}};
        write_summary(cfg.output_dir, summary);
        std::printf("train-init: diverged (%s) -> FAIL\n", e.what());
        return 1;
    }

    atomic_write_text(cfg.output_dir / "init_model.json", result.model.to_json().dump(2) + "\n");
    CsvTable log({"step", "loss", "smoothed_loss"});
    for (std::size_t i = 0; i < result.loss_history.size(); ++i)
        log.add_row({fmt(i), fmt(result.loss_history[i]), fmt(result.smoothed_history[i])});
    atomic_write_text(cfg.output_dir / "train_log.csv", log.to_string());

    json heads = json::object();
    if (!result.model.unconditional_mu.empty()) heads["unconditional"] = result.model.unconditional_mu;
    for (const auto& [lab, mu] : result.model.class_mu) heads[std::to_string(lab)] = mu;
    json summary{{"subcommand", "train-init"},
                 {"seed", cfg.seed},
                 {"diverged", false},
                 {"steps", tc.steps},
                 {"learning_rate", tc.learning_rate},
                 {"batch_size", tc.batch_size},
                 {"final_loss", result.loss_history.back()},
                 {"final_smoothed_loss", result.smoothed_history.back()},
                 {"heads", heads},
                 {"pass", true}};
    write_summary(cfg.output_dir, summary);
    std::printf("train-init: steps=%d final_smoothed_loss=%.8g -> PASS\n", tc.steps,
                result.smoothed_history.back());
    return 0;
}

inline int run_verify_bounds(ExperimentConfig cfg) {
    MixtureModel m(cfg.training, cfg.schedule);
    cfg.bounds.mc_seed = cfg.seed;
    BoundReport rep = bound_sweep(m, cfg.bound_kind, cfg.bounds, std::nullopt, cfg.threads);

    CsvTable table({"s", "t", "probe", "gap", "quad_error", "sigma_s_given_t", "alpha_s",
                    "alpha_t", "ratio_sqrt_sigma", "ratio_sqrt_alpha", "ratio_pow23_sigma",
                    "ratio_sq_sigma", "flagged"});
    std::size_t flagged = 0;
    for (const auto& r : rep.rows) {
        flagged += r.flagged ? 1 : 0;
        table.add_row({fmt(r.s), fmt(r.t), fmt(r.probe), fmt(r.gap), fmt(r.quad_error),
                       fmt(r.sigma_s_given_t), fmt(r.alpha_s), fmt(r.alpha_t),
                       fmt(r.ratio_sqrt_sigma), fmt(r.ratio_sqrt_alpha),
                       fmt(r.ratio_pow23_sigma), fmt(r.ratio_sq_sigma), fmt(r.flagged)});
    }
    atomic_write_text(cfg.output_dir / "bound_report.csv", table.to_string());

    const bool pass = flagged == 0 && rep.gap_monotone;
    json summary{{"subcommand", "verify-bounds"},
                 {"seed", cfg.seed},
                 {"kind", bound_kind_name(rep.kind)},
                 {"rows", rep.rows.size()},
                 {"flagged_rows", flagged},
                 {"fitted_C", rep.fitted_C},
                 {"ratio_band", rep.ratio_band},
                 {"gap_span", rep.gap_span},
                 {"gap_monotone", rep.gap_monotone},
                 {"pass", pass}};
    write_summary(cfg.output_dir, summary);
    std::printf(
        "bounds[%s]: rows=%zu flagged=%zu fitted_C=%.6g ratio_band=%.4gx gap_span=%.4gx "
        "monotone=%s -> %s\n",
        bound_kind_name(rep.kind), rep.rows.size(), flagged, rep.fitted_C, rep.ratio_band,
        rep.gap_span, rep.gap_monotone ? "yes" : "no", pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

inline int run_verify_prop3(ExperimentConfig cfg) {
    MixtureModel m(cfg.training, cfg.schedule);
    cfg.prop3.seed = cfg.seed;
    Prop3Report rep = prop3_check(m, cfg.prop3_mode, cfg.prop3);

    CsvTable table({"dim", "implied_mean", "implied_var"});
    for (std::size_t k = 0; k < rep.implied_mean.size(); ++k)
        table.add_row({fmt(k), fmt(rep.implied_mean[k]), fmt(rep.implied_var[k])});
    atomic_write_text(cfg.output_dir / "prop3_report.csv", table.to_string());

    json summary{{"subcommand", "verify-prop3"},
                 {"seed", cfg.seed},
                 {"mode", init_mode_name(rep.mode)},
                 {"epsilon", rep.epsilon},
                 {"n", rep.n},
                 {"alpha_start", rep.alpha_start},
                 {"sigma_start", rep.sigma_start},
                 {"max_abs_mean", rep.max_abs_mean},
                 {"min_var", rep.min_var},
                 {"max_var", rep.max_var},
                 {"ill_conditioned", rep.ill_conditioned},
                 {"pass", rep.pass}};
    if (rep.mode == InitMode::sing_step) summary["constant_exact"] = rep.constant_exact;
    write_summary(cfg.output_dir, summary);
    std::printf("prop3[%s]: n=%zu max|mean|=%.6g var=[%.6g, %.6g]%s -> %s\n",
                init_mode_name(rep.mode), rep.n, rep.max_abs_mean, rep.min_var, rep.max_var,
                rep.ill_conditioned ? " ILL-CONDITIONED" : "", rep.pass ? "PASS" : "FAIL");
    return rep.pass ? 0 : 1;
}

inline int run_verify_consistency(ExperimentConfig cfg) {
    MixtureModel m(cfg.training, cfg.schedule);
    ConsistencySpec spec = cfg.consistency;
    spec.seed = cfg.seed;
    std::vector<StatCheck> checks;
    for (ConsistencyKind kind : cfg.consistency_which) {
        StatReport r = consistency_checks(m, kind, spec);
        checks.insert(checks.end(), r.checks.begin(), r.checks.end());
    }
    CsvTable table({"name", "n", "statistic", "threshold", "pass"});
    bool pass = true;
    for (const auto& c : checks) {
        pass = pass && c.pass;
        table.add_row({c.name, fmt(c.n), fmt(c.statistic), fmt(c.threshold), fmt(c.pass)});
    }
    atomic_write_text(cfg.output_dir / "consistency.csv", table.to_string());
    json summary{{"subcommand", "verify-consistency"},
                 {"seed", cfg.seed},
                 {"checks", checks_json(checks)},
                 {"pass", pass}};
    write_summary(cfg.output_dir, summary);
    print_checks(checks);
    std::printf("consistency: %zu checks -> %s\n", checks.size(), pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

inline int run_lipschitz(ExperimentConfig cfg) {
    MixtureModel m(cfg.training, cfg.schedule);
    LipschitzReport rep = lipschitz_probe(m, cfg.lipschitz);

    CsvTable table({"t", "max_abs_fd", "max_abs_analytic", "argmax_x", "growth_from_prev",
                    "fd_rel_err"});
    double worst_fd_err = 0.0;
    for (const auto& r : rep.rows) {
        worst_fd_err = std::max(worst_fd_err, r.fd_rel_err);
        table.add_row({fmt(r.t), fmt(r.max_abs_fd), fmt(r.max_abs_analytic), fmt(r.argmax_x),
                       fmt(r.growth_from_prev), fmt(r.fd_rel_err)});
    }
    atomic_write_text(cfg.output_dir / "lipschitz.csv", table.to_string());

    const bool fd_ok = worst_fd_err < 1e-3;
    const bool growth_ok = rep.total_growth >= cfg.lipschitz_growth_min;
    const bool pass = fd_ok && growth_ok;
    json summary{{"subcommand", "lipschitz"},
                 {"total_growth", rep.total_growth},
                 {"growth_min", cfg.lipschitz_growth_min},
                 {"worst_fd_rel_err", worst_fd_err},
                 {"rows", rep.rows.size()},
                 {"pass", pass}};
    write_summary(cfg.output_dir, summary);
    std::printf("lipschitz: total_growth=%.6g (need >= %.4g) fd_rel_err=%.3g -> %s\n",
                rep.total_growth, cfg.lipschitz_growth_min, worst_fd_err,
                pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

inline int run_brightness(ExperimentConfig cfg) {
    MixtureModel m(cfg.training, cfg.schedule);
    BrightnessConfig bc = cfg.brightness;
    bc.seed = cfg.seed;
    bc.threads = cfg.threads;
    BrightnessReport rep = brightness_experiment(m, bc);

    CsvTable table({"mode", "class", "mean_brightness", "expected_brightness", "energy_to_true",
                    "hit_rate"});
    for (const auto& r : rep.rows)
        table.add_row({init_mode_name(r.mode), fmt(r.label), fmt(r.mean_brightness),
                       fmt(r.expected_brightness), fmt(r.energy_to_true), fmt(r.hit_rate)});
    atomic_write_text(cfg.output_dir / "brightness.csv", table.to_string());

    const bool pass = rep.stats.all_pass();
    json summary{{"subcommand", "brightness"},
                 {"seed", cfg.seed},
                 {"epsilon", rep.epsilon},
                 {"n", rep.n},
                 {"alpha_start", rep.alpha_start},
                 {"energy_ratio", rep.energy_ratio},
                 {"checks", checks_json(rep.stats.checks)},
                 {"pass", pass}};
    write_summary(cfg.output_dir, summary);
    print_checks(rep.stats.checks);
    std::printf("brightness: energy_ratio=%.4g -> %s\n", rep.energy_ratio,
                pass ? "PASS" : "FAIL");
    return pass ? 0 : 1;
}

}  // namespace cli_detail

inline int run_cli(int argc, char** argv) {
    using namespace cli_detail;

    CLI::App app{
        "singlab — a closed-form laboratory for diffusion sampling on finite training sets"};
    app.require_subcommand(1);

    Common c_sample, c_train, c_bounds, c_prop3, c_consistency, c_lipschitz, c_brightness;
    add_common(app, c_sample, "sample",
               "Run a batch of reverse-time chains.\n"
               "Writes terminal.csv (chain, nearest_index, x0..x{d-1}), trajectories.csv when\n"
               "record_trajectories is set (chain, time, x0..x{d-1}), and summary.json with a\n"
               "nearest-training-point histogram.");
    add_common(app, c_train, "train-init",
               "Fit the constant initial-step predictor by SGD.\n"
               "Writes init_model.json, train_log.csv (step, loss, smoothed_loss), and\n"
               "summary.json; exits 1 if training diverges.");
    add_common(app, c_bounds, "verify-bounds",
               "Sweep the L1 gap between the exact reverse kernel and its Gaussian\n"
               "approximation (kinds: prop1, prop2, terminal_marginal).\n"
               "Writes bound_report.csv (s, t, probe, gap, quad_error, sigma_s_given_t,\n"
               "alpha_s, alpha_t, ratio_sqrt_sigma, ratio_sqrt_alpha, ratio_pow23_sigma,\n"
               "ratio_sq_sigma, flagged) and summary.json with the fitted constant and ratio\n"
               "band.");
    add_common(app, c_prop3, "verify-prop3",
               "Check the initial-step statistics: naive_gaussian recovers mean 0 and unit\n"
               "variance for the implied noise; sing_step reproduces the class mean exactly.\n"
               "Writes prop3_report.csv (dim, implied_mean, implied_var) and summary.json.");
    add_common(app, c_consistency, "verify-consistency",
               "Identity checks: bayes (forward/reverse density identity), marginal\n"
               "(KS of simulated forward samples vs the closed-form CDF), reverse_from_one\n"
               "(the reverse kernel from t=1 equals the time-s marginal), terminal_gaussian\n"
               "(the t->1 marginal approaches the standard normal).\n"
               "Writes consistency.csv (name, n, statistic, threshold, pass) and summary.json.");
    add_common(app, c_lipschitz, "lipschitz",
               "Probe the score derivative on a 1-D grid as t -> 0 and compare the\n"
               "finite-difference and analytic derivatives.\n"
               "Writes lipschitz.csv (t, max_abs_fd, max_abs_analytic, argmax_x,\n"
               "growth_from_prev, fd_rel_err) and summary.json.");
    add_common(app, c_brightness, "brightness",
               "Run the mean-brightness initialization experiment per init mode and class.\n"
               "Writes brightness.csv (mode, class, mean_brightness, expected_brightness,\n"
               "energy_to_true, hit_rate) and summary.json.");
    CLI::App* c_schema = app.add_subcommand(
        "schema", "Print the JSON schema every config file is validated against and exit 0.");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (c_schema->parsed()) {
            std::cout << experiment_config_schema();
            return 0;
        }
        if (c_sample.sub->parsed()) return run_sample(resolve(c_sample));
        if (c_train.sub->parsed()) return run_train_init(resolve(c_train));
        if (c_bounds.sub->parsed()) return run_verify_bounds(resolve(c_bounds));
        if (c_prop3.sub->parsed()) return run_verify_prop3(resolve(c_prop3));
        if (c_consistency.sub->parsed()) return run_verify_consistency(resolve(c_consistency));
        if (c_lipschitz.sub->parsed()) return run_lipschitz(resolve(c_lipschitz));
        if (c_brightness.sub->parsed()) return run_brightness(resolve(c_brightness));
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 2;
}

}  // namespace singlab
