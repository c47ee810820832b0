#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "singlab/errors.hpp"
#include "singlab/guidance.hpp"
#include "singlab/init_trainer.hpp"
#include "singlab/mixture.hpp"
#include "singlab/parallel.hpp"
#include "singlab/rng.hpp"
#include "singlab/schedule.hpp"

namespace singlab {

// Reverse-time stepping rules. All of them consume the closed-form posterior
// mean (or the noise prediction derived from it) of the mixture model:
//
//   ddpm      Gaussian approximation to the exact reverse kernel: mean
//             a x_t + b ybar, stdev sigma_{s|t}.
//   ddpm_eps  the same step re-parameterized through the noise prediction;
//             structurally divides by alpha_t and is singular at t = 1.
//   ddim      deterministic update (alpha_s - (sigma_s/sigma_t) alpha_t) ybar
//             + (sigma_s/sigma_t) x_t.
//   sde_em    Euler-Maruyama on the reverse SDE; its coefficients f and g^2
//             diverge at t = 1.
//   ode_euler / ode_rk4
//             the probability-flow ODE dx/dt = (alpha'/sigma^2)(ybar - alpha x),
//             which stays finite at t = 1.
enum class Method { ddpm, ddpm_eps, ddim, sde_em, ode_euler, ode_rk4 };

// How a chain leaves the pure-noise endpoint t = 1:
//   naive_gaussian  start at 1-eps from a plain standard Gaussian (ignores
//                   that the true marginal there is alpha ybar-shifted);
//   sing_step       the closed-form initial step x_{1-eps} =
//                   alpha_{1-eps} ybar(x_1, 1) + sigma_{1-eps} x_1;
//   true_forward    diffuse a real training point forward to 1-eps
//                   (reference distribution; the chain then starts at 1-eps);
//   step_from_one   take an ordinary reverse step of the configured method
//                   from t = 1 (well defined for ddpm/ddim; ddpm_eps raises
//                   SingularStep and sde_em DivergentCoefficient there).
enum class InitMode { naive_gaussian, sing_step, true_forward, step_from_one };

// How a chain reaches t = 0 from the last positive grid time eps:
//   ybar_collapse    append x_0 = ybar(x_eps, eps), the exact posterior mean
//                    (the reverse conditional collapses onto the training
//                    points as t -> 0);
//   plain_last_step  stop at eps.
enum class FinalMode { ybar_collapse, plain_last_step };

struct SamplerConfig {
    Method method = Method::ddpm;
    int steps = 1000;       // number of reverse transitions T
    double epsilon = 0.0;   // early-stopping margin; 0 selects 1/steps
    InitMode init_mode = InitMode::sing_step;
    FinalMode final_mode = FinalMode::ybar_collapse;
    int chains = 1;
    std::uint64_t seed = 0;
    std::optional<GuidanceConfig> guidance;
};

inline void validate(const SamplerConfig& cfg) {
    if (cfg.steps < 2) throw DomainError("sampler needs steps >= 2");
    if (cfg.epsilon != 0.0 && !(cfg.epsilon > 0.0 && cfg.epsilon < 0.5))
        throw DomainError("sampler epsilon must lie in (0, 0.5)");
    if (cfg.chains < 1) throw DomainError("sampler needs at least one chain");
    if (cfg.guidance && !(cfg.guidance->scale >= 1.0))
        throw DomainError("guidance scale must satisfy w >= 1");
}

// The descending time grid {1, 1-eps, 1-2eps, ..., eps} (+ 0 under
// ybar_collapse; without the leading 1 under true_forward). With the default
// epsilon = 1/steps the grid is computed as (T-k)/T so the endpoints and
// spacing carry no accumulated rounding.
inline std::vector<double> time_grid(const SamplerConfig& cfg) {
    validate(cfg);
    std::vector<double> ts;
    if (cfg.epsilon == 0.0) {
        int T_ = cfg.steps;
        for (int k = 0; k < T_; ++k)
            ts.push_back(static_cast<double>(T_ - k) / static_cast<double>(T_));
    } else {
        double eps = cfg.epsilon;
        for (int k = 0;; ++k) {
            double t = 1.0 - static_cast<double>(k) * eps;
            if (t < eps - 1e-12) {
                // non-integer 1/eps: finish the grid at eps exactly
                if (ts.back() > eps) ts.push_back(eps);
                break;
            }
            ts.push_back(std::max(t, eps));
            if (t <= eps + 1e-12) break;
        }
    }
    if (cfg.init_mode == InitMode::true_forward) ts.erase(ts.begin());
    if (cfg.final_mode == FinalMode::ybar_collapse) ts.push_back(0.0);
    if (ts.size() < 2) throw DomainError("time grid degenerate; increase steps");
    return ts;
}

struct Trajectory {
    std::vector<double> times;                 // strictly decreasing
    std::vector<std::vector<double>> states;   // one state per time
    std::vector<double> x_one;                 // the t=1 noise (for true_forward: the
                                               // noise component of the start state)
    std::optional<int> label;
    std::uint64_t seed = 0;
    std::uint64_t chain_index = 0;
};

// Scratch buffers reused across the steps of one chain.
struct ChainWorkspace {
    std::vector<double> w;                      // posterior weights
    std::vector<double> ypos, yneg, ytmp, eps;  // d-vectors
    std::vector<double> k1, k2, k3, k4, xtmp;   // ODE stages
    void ensure(std::size_t max_sel, std::size_t d) {
        if (w.size() < max_sel) w.resize(max_sel);
        for (auto* v : {&ypos, &yneg, &ytmp, &eps, &k1, &k2, &k3, &k4, &xtmp})
            if (v->size() < d) v->resize(d);
    }
};

// Draw x_t | x_s through the forward kernel alpha_{t|s} x_s + sigma_{t|s} z.
inline void forward_sample(const MixtureModel& m, std::span<const double> x_s, double s, double t,
                           RandomStream& rng, std::span<double> out) {
    auto tr = eval_transition(m.schedule(), s, t);
    for (std::size_t k = 0; k < out.size(); ++k)
        out[k] = tr.alpha_t_given_s * x_s[k] + tr.sigma_t_given_s * rng.normal();
}

inline std::vector<double> forward_sample(const MixtureModel& m, std::span<const double> x_s,
                                          double s, double t, RandomStream& rng) {
    std::vector<double> out(m.dim());
    forward_sample(m, x_s, s, t, rng, out);
    return out;
}

namespace detail {

// Posterior mean at state x with schedule values (alpha, sigma), honoring
// guidance. With no guidance (or w == 1, where the combination is the
// identity) this is the plain conditional posterior mean, bitwise. With
// guidance at alpha == 0 — the pure-noise endpoint — the positive and
// negative means are combined directly, normalized per the config; elsewhere
// the combination acts on the noise predictions (unnormalized) and maps back
// through ybar = (x - sigma eps)/alpha.
inline void eval_ybar(const MixtureModel& m, std::span<const double> x, double alpha, double sigma,
                      std::optional<int> label, const GuidanceConfig* g, ChainWorkspace& ws,
                      std::span<double> out) {
    const std::size_t d = m.dim();
    if (!g || g->scale == 1.0) {
        auto sel = m.selection(g ? std::optional<int>(g->pos_label) : label);
        ws.ensure(sel.size(), d);
        m.ybar_core(x, alpha, sigma, sel, std::span<double>(ws.w.data(), sel.size()), out);
        return;
    }
    auto pos = m.selection(g->pos_label);
    auto neg = m.selection(g->neg_label);
    ws.ensure(std::max(pos.size(), neg.size()), d);
    m.ybar_core(x, alpha, sigma, pos, std::span<double>(ws.w.data(), pos.size()),
                std::span<double>(ws.ypos.data(), d));
    m.ybar_core(x, alpha, sigma, neg, std::span<double>(ws.w.data(), neg.size()),
                std::span<double>(ws.yneg.data(), d));
    const double w = g->scale;
    if (alpha == 0.0) {
        auto comb = guided_combine(std::span<const double>(ws.ypos.data(), d),
                                   std::span<const double>(ws.yneg.data(), d), w,
                                   g->normalize_initial);
        for (std::size_t k = 0; k < d; ++k) out[k] = comb[k];
        return;
    }
    for (std::size_t k = 0; k < d; ++k) {
        double e_pos = (x[k] - alpha * ws.ypos[k]) / sigma;
        double e_neg = (x[k] - alpha * ws.yneg[k]) / sigma;
        double e_g = e_neg + w * (e_pos - e_neg);
        out[k] = (x[k] - sigma * e_g) / alpha;
    }
}

// Guided noise prediction at (x, alpha, sigma); requires sigma > 0.
inline void eval_eps(const MixtureModel& m, std::span<const double> x, double alpha, double sigma,
                     std::optional<int> label, const GuidanceConfig* g, ChainWorkspace& ws,
                     std::span<double> out) {
    const std::size_t d = m.dim();
    if (!g || g->scale == 1.0) {
        auto sel = m.selection(g ? std::optional<int>(g->pos_label) : label);
        ws.ensure(sel.size(), d);
        m.ybar_core(x, alpha, sigma, sel, std::span<double>(ws.w.data(), sel.size()),
                    std::span<double>(ws.ytmp.data(), d));
        for (std::size_t k = 0; k < d; ++k) out[k] = (x[k] - alpha * ws.ytmp[k]) / sigma;
        return;
    }
    auto pos = m.selection(g->pos_label);
    auto neg = m.selection(g->neg_label);
    ws.ensure(std::max(pos.size(), neg.size()), d);
    m.ybar_core(x, alpha, sigma, pos, std::span<double>(ws.w.data(), pos.size()),
                std::span<double>(ws.ypos.data(), d));
    m.ybar_core(x, alpha, sigma, neg, std::span<double>(ws.w.data(), neg.size()),
                std::span<double>(ws.yneg.data(), d));
    const double w = g->scale;
    for (std::size_t k = 0; k < d; ++k) {
        double e_pos = (x[k] - alpha * ws.ypos[k]) / sigma;
        double e_neg = (x[k] - alpha * ws.yneg[k]) / sigma;
        out[k] = e_neg + w * (e_pos - e_neg);
    }
}

}  // namespace detail

// Precomputed per-transition coefficients; only the fields the method uses
// are populated.
struct StepCoeffs {
    double s = 0.0, t = 0.0;
    double alpha_t = 0.0, sigma_t = 0.0, alpha_s = 0.0, sigma_s = 0.0;
    double a = 0.0, b = 0.0, sig_st = 0.0;      // ddpm / ddpm_eps kernel
    double ddim_xt = 0.0, ddim_yb = 0.0;        // ddim coefficients
    double f = 0.0, g2 = 0.0;                   // sde_em coefficients at t
    double ap_t = 0.0, ap_s = 0.0;              // alpha' at t and s (ODE)
    double alpha_mid = 0.0, sigma_mid = 0.0, ap_mid = 0.0;  // RK4 midpoint
};

inline StepCoeffs make_step_coeffs(const NoiseSchedule& sched, Method method, double s, double t) {
    if (!(s >= 0.0 && s < t && t <= 1.0))
        throw DomainError("reverse step needs 0 <= s < t <= 1");
    StepCoeffs c;
    c.s = s;
    c.t = t;
    c.alpha_t = sched.alpha(t);
    c.sigma_t = sched.sigma(t);
    c.alpha_s = sched.alpha(s);
    c.sigma_s = sched.sigma(s);
    switch (method) {
        case Method::ddpm:
        case Method::ddpm_eps: {
            auto rc = detail::reverse_coeffs(sched, s, t);
            c.a = rc.a;
            c.b = rc.b;
            c.sig_st = rc.sig_st;
            break;
        }
        case Method::ddim: {
            c.ddim_xt = c.sigma_s / c.sigma_t;
            c.ddim_yb = c.alpha_s - c.ddim_xt * c.alpha_t;
            break;
        }
        case Method::sde_em: {
            auto sv = eval_schedule(sched, t);  // throws DivergentCoefficient at alpha = 0
            c.f = sv.drift_f;
            c.g2 = sv.diffusion_g_sq;
            break;
        }
        case Method::ode_rk4: {
            double mid = 0.5 * (s + t);
            c.alpha_mid = sched.alpha(mid);
            c.sigma_mid = sched.sigma(mid);
            c.ap_mid = sched.alpha_prime(mid);
            c.ap_s = sched.alpha_prime(s);
            [[fallthrough]];
        }
        case Method::ode_euler:
            c.ap_t = sched.alpha_prime(t);
            break;
    }
    return c;
}

namespace detail {

// Probability-flow right-hand side dx/dt = (alpha'/sigma^2)(ybar - alpha x),
// algebraically equal to f x - (1/2) g^2 score but finite at t = 1.
inline void ode_rhs(const MixtureModel& m, std::span<const double> x, double alpha, double sigma,
                    double alpha_prime, std::optional<int> label, const GuidanceConfig* g,
                    ChainWorkspace& ws, std::span<double> out) {
    eval_ybar(m, x, alpha, sigma, label, g, ws, std::span<double>(ws.ytmp.data(), x.size()));
    double ccoef = alpha_prime / (sigma * sigma);
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = ccoef * (ws.ytmp[k] - alpha * x[k]);
}

inline void reverse_step_core(const MixtureModel& m, Method method, std::span<const double> x,
                              const StepCoeffs& c, std::optional<int> label,
                              const GuidanceConfig* g, RandomStream& rng, ChainWorkspace& ws,
                              std::span<double> out) {
    const std::size_t d = m.dim();
    ws.ensure(m.set().size(), d);
    switch (method) {
        case Method::ddpm: {
            eval_ybar(m, x, c.alpha_t, c.sigma_t, label, g, ws,
                      std::span<double>(ws.ytmp.data(), d));
            for (std::size_t k = 0; k < d; ++k)
                out[k] = c.a * x[k] + c.b * ws.ytmp[k] + c.sig_st * rng.normal();
            break;
        }
        case Method::ddpm_eps: {
            if (c.alpha_t == 0.0)
                throw SingularStep(
                    "noise-prediction step divides by alpha_t, which is 0 at t = " +
                    std::to_string(c.t));
            eval_eps(m, x, c.alpha_t, c.sigma_t, label, g, ws, std::span<double>(ws.eps.data(), d));
            for (std::size_t k = 0; k < d; ++k) {
                double y_hat = (x[k] - c.sigma_t * ws.eps[k]) / c.alpha_t;
                out[k] = c.a * x[k] + c.b * y_hat + c.sig_st * rng.normal();
            }
            break;
        }
        case Method::ddim: {
            eval_ybar(m, x, c.alpha_t, c.sigma_t, label, g, ws,
                      std::span<double>(ws.ytmp.data(), d));
            for (std::size_t k = 0; k < d; ++k)
                out[k] = c.ddim_yb * ws.ytmp[k] + c.ddim_xt * x[k];
            break;
        }
        case Method::sde_em: {
            eval_eps(m, x, c.alpha_t, c.sigma_t, label, g, ws, std::span<double>(ws.eps.data(), d));
            double h = c.t - c.s;
            double gh = std::sqrt(c.g2) * std::sqrt(h);
            for (std::size_t k = 0; k < d; ++k) {
                double score = -ws.eps[k] / c.sigma_t;
                out[k] = x[k] - (c.f * x[k] - c.g2 * score) * h + gh * rng.normal();
            }
            break;
        }
        case Method::ode_euler: {
            ode_rhs(m, x, c.alpha_t, c.sigma_t, c.ap_t, label, g, ws,
                    std::span<double>(ws.k1.data(), d));
            double h = c.t - c.s;
            for (std::size_t k = 0; k < d; ++k) out[k] = x[k] - h * ws.k1[k];
            break;
        }
        case Method::ode_rk4: {
            double hh = c.s - c.t;  // negative: integrating backward
            auto stage = [&](std::span<double> kv, double alpha, double sigma, double ap,
                             std::span<const double> xin) {
                ode_rhs(m, xin, alpha, sigma, ap, label, g, ws, kv);
            };
            stage(std::span<double>(ws.k1.data(), d), c.alpha_t, c.sigma_t, c.ap_t, x);
            for (std::size_t k = 0; k < d; ++k) ws.xtmp[k] = x[k] + 0.5 * hh * ws.k1[k];
            stage(std::span<double>(ws.k2.data(), d), c.alpha_mid, c.sigma_mid, c.ap_mid,
                  std::span<const double>(ws.xtmp.data(), d));
            for (std::size_t k = 0; k < d; ++k) ws.xtmp[k] = x[k] + 0.5 * hh * ws.k2[k];
            stage(std::span<double>(ws.k3.data(), d), c.alpha_mid, c.sigma_mid, c.ap_mid,
                  std::span<const double>(ws.xtmp.data(), d));
            for (std::size_t k = 0; k < d; ++k) ws.xtmp[k] = x[k] + hh * ws.k3[k];
            stage(std::span<double>(ws.k4.data(), d), c.alpha_s, c.sigma_s, c.ap_s,
                  std::span<const double>(ws.xtmp.data(), d));
            for (std::size_t k = 0; k < d; ++k)
                out[k] = x[k] + hh / 6.0 * (ws.k1[k] + 2.0 * ws.k2[k] + 2.0 * ws.k3[k] + ws.k4[k]);
            break;
        }
    }
}

}  // namespace detail

// One reverse transition x_t -> x_s of the given method. Throws SingularStep
// (ddpm_eps) or DivergentCoefficient (sde_em) when the update is undefined at
// t, i.e. at the pure-noise endpoint.
inline std::vector<double> reverse_step(const MixtureModel& m, Method method,
                                        std::span<const double> x_t, double t, double s,
                                        std::optional<int> label, RandomStream& rng,
                                        const std::optional<GuidanceConfig>& guidance = {}) {
    detail::check_dim(m, x_t, "reverse_step");
    StepCoeffs c = make_step_coeffs(m.schedule(), method, s, t);
    ChainWorkspace ws;
    std::vector<double> out(m.dim());
    detail::reverse_step_core(m, method, x_t, c, label, guidance ? &*guidance : nullptr, rng, ws,
                              out);
    return out;
}

struct InitResult {
    std::vector<double> x_one;    // the recorded pure-noise draw (or, for
                                  // true_forward, the noise used in diffusion)
    std::vector<double> x_start;  // the state at the first positive grid time
};

// Leave the endpoint: produce the state at t_start (the 1-eps grid time).
// step_from_one is realized by run_chain through an ordinary reverse step and
// is rejected here.
inline InitResult initial_step(const MixtureModel& m, InitMode mode, std::optional<int> label,
                               const InitModel* init_model, const GuidanceConfig* g,
                               double t_start, RandomStream& rng, ChainWorkspace& ws) {
    if (!(t_start > 0.0 && t_start < 1.0))
        throw DomainError("initial step needs a start time inside (0, 1)");
    const std::size_t d = m.dim();
    InitResult r;
    r.x_one.resize(d);
    r.x_start.resize(d);
    double alpha_e = m.schedule().alpha(t_start);
    double sigma_e = m.schedule().sigma(t_start);
    switch (mode) {
        case InitMode::naive_gaussian:
            rng.fill_normals(r.x_one);
            rng.fill_normals(r.x_start);  // independent of the recorded noise
            break;
        case InitMode::sing_step: {
            rng.fill_normals(r.x_one);
            ws.ensure(m.set().size(), d);
            std::span<double> yhat(ws.ytmp.data(), d);
            if (init_model) {
                // trained constant heads instead of the closed form
                if (g && g->scale != 1.0) {
                    auto comb = guided_combine(init_model->predict(g->pos_label),
                                               init_model->predict(g->neg_label), g->scale,
                                               g->normalize_initial);
                    for (std::size_t k = 0; k < d; ++k) yhat[k] = comb[k];
                } else {
                    const auto& mu = init_model->predict(g ? std::optional<int>(g->pos_label) : label);
                    for (std::size_t k = 0; k < d; ++k) yhat[k] = mu[k];
                }
            } else {
                detail::eval_ybar(m, r.x_one, 0.0, 1.0, label, g, ws, yhat);
            }
            for (std::size_t k = 0; k < d; ++k)
                r.x_start[k] = alpha_e * yhat[k] + sigma_e * r.x_one[k];
            break;
        }
        case InitMode::true_forward: {
            auto sel = m.selection(g ? std::optional<int>(g->pos_label) : label);
            auto y = m.set().point(sel[rng.uniform_index(sel.size())]);
            rng.fill_normals(r.x_one);
            for (std::size_t k = 0; k < d; ++k)
                r.x_start[k] = alpha_e * y[k] + sigma_e * r.x_one[k];
            break;
        }
        case InitMode::step_from_one:
            throw DomainError("step_from_one is taken by run_chain via reverse_step");
    }
    return r;
}

inline InitResult initial_step(const MixtureModel& m, InitMode mode, std::optional<int> label,
                               const InitModel* init_model, const GuidanceConfig* g,
                               double t_start, RandomStream& rng) {
    ChainWorkspace ws;
    return initial_step(m, mode, label, init_model, g, t_start, rng, ws);
}

// The terminal collapse x_0 = ybar(x_t, t): the exact conditional mean of the
// clean point given the state at the last positive time.
inline std::vector<double> final_step(const MixtureModel& m, std::span<const double> x_t, double t,
                                      std::optional<int> label = std::nullopt,
                                      const std::optional<GuidanceConfig>& guidance = {}) {
    detail::check_dim(m, x_t, "final_step");
    ChainWorkspace ws;
    std::vector<double> out(m.dim());
    detail::eval_ybar(m, x_t, m.schedule().alpha(t), m.schedule().sigma(t), label,
                      guidance ? &*guidance : nullptr, ws, out);
    return out;
}

namespace detail {

// Sink protocol: noise(x_one) once, then state(t, x) for every grid time in
// descending order.
template <class Sink>
inline void run_chain_into(const MixtureModel& m, const SamplerConfig& cfg,
                           std::optional<int> label, std::uint64_t chain_index,
                           const InitModel* init_model, const std::vector<double>& grid,
                           const std::vector<StepCoeffs>& table, std::size_t table_first,
                           ChainWorkspace& ws, Sink&& sink) {
    RandomStream rng(cfg.seed, chain_index);
    const GuidanceConfig* g = cfg.guidance ? &*cfg.guidance : nullptr;
    const std::size_t d = m.dim();
    std::vector<double> x(d), xn(d);
    std::size_t gi = 0;

    if (cfg.init_mode == InitMode::step_from_one) {
        std::vector<double> x_one(d);
        rng.fill_normals(x_one);
        sink.noise(std::span<const double>(x_one));
        sink.state(grid[0], std::span<const double>(x_one));
        x = std::move(x_one);
        gi = 1;
    } else if (cfg.init_mode == InitMode::true_forward) {
        InitResult ir = initial_step(m, cfg.init_mode, label, init_model, g, grid[0], rng, ws);
        sink.noise(std::span<const double>(ir.x_one));
        x = std::move(ir.x_start);
        sink.state(grid[0], std::span<const double>(x));
        gi = 1;
    } else {
        InitResult ir = initial_step(m, cfg.init_mode, label, init_model, g, grid[1], rng, ws);
        sink.noise(std::span<const double>(ir.x_one));
        sink.state(grid[0], std::span<const double>(ir.x_one));
        x = std::move(ir.x_start);
        sink.state(grid[1], std::span<const double>(x));
        gi = 2;
    }

    for (; gi < grid.size(); ++gi) {
        double target = grid[gi];
        if (target == 0.0) {
            // terminal collapse onto the posterior mean at the previous time
            double t_prev = grid[gi - 1];
            eval_ybar(m, x, m.schedule().alpha(t_prev), m.schedule().sigma(t_prev), label, g, ws,
                      std::span<double>(xn.data(), d));
        } else {
            const StepCoeffs& c = table[(gi - 1) - table_first];
            reverse_step_core(m, cfg.method, x, c, label, g, rng, ws,
                              std::span<double>(xn.data(), d));
        }
        std::swap(x, xn);
        sink.state(target, std::span<const double>(x));
    }
}

struct TrajectorySink {
    Trajectory* tr;
    void noise(std::span<const double> z) { tr->x_one.assign(z.begin(), z.end()); }
    void state(double t, std::span<const double> x) {
        tr->times.push_back(t);
        tr->states.emplace_back(x.begin(), x.end());
    }
};

struct TerminalSink {
    double* terminal;   // d slots
    double* x_one;      // d slots
    void noise(std::span<const double> z) {
        for (std::size_t k = 0; k < z.size(); ++k) x_one[k] = z[k];
    }
    void state(double, std::span<const double> x) {
        for (std::size_t k = 0; k < x.size(); ++k) terminal[k] = x[k];
    }
};

// Coefficients for the grid transitions the stepping loop will actually
// take: entry k covers grid[k] -> grid[k+1]. The first used entry depends on
// the init mode (the 1 -> 1-eps transition is a reverse step only for
// step_from_one), and a final collapse transition needs none.
inline std::pair<std::vector<StepCoeffs>, std::size_t> build_step_table(
    const NoiseSchedule& sched, const SamplerConfig& cfg, const std::vector<double>& grid) {
    std::size_t first =
        (cfg.init_mode == InitMode::true_forward || cfg.init_mode == InitMode::step_from_one) ? 0
                                                                                              : 1;
    std::size_t last_excl = grid.size() - 1;           // transitions end at grid.size()-2
    if (cfg.final_mode == FinalMode::ybar_collapse) --last_excl;  // skip the -> 0 transition
    std::vector<StepCoeffs> table;
    table.reserve(last_excl > first ? last_excl - first : 0);
    for (std::size_t k = first; k < last_excl; ++k)
        table.push_back(make_step_coeffs(sched, cfg.method, grid[k + 1], grid[k]));
    return {std::move(table), first};
}

}  // namespace detail

// Run one chain, recording the full trajectory.
inline Trajectory run_chain(const MixtureModel& m, const SamplerConfig& cfg,
                            std::optional<int> label, std::uint64_t chain_index,
                            const InitModel* init_model = nullptr) {
    validate(cfg);
    auto grid = time_grid(cfg);
    auto [table, first] = detail::build_step_table(m.schedule(), cfg, grid);
    Trajectory tr;
    tr.label = cfg.guidance ? std::optional<int>(cfg.guidance->pos_label) : label;
    tr.seed = cfg.seed;
    tr.chain_index = chain_index;
    ChainWorkspace ws;
    detail::run_chain_into(m, cfg, label, chain_index, init_model, grid, table, first, ws,
                           detail::TrajectorySink{&tr});
    return tr;
}

struct BatchResult {
    std::size_t dim = 0;
    std::vector<double> times;              // the shared grid
    std::vector<double> terminal;           // chains x dim, ordered by chain index
    std::vector<double> x_one;              // chains x dim
    std::vector<std::size_t> nearest;       // nearest training point to each terminal state
    std::vector<Trajectory> trajectories;   // filled only when record_full
};

// Run cfg.chains chains on cfg.seed with per-chain counter-based streams.
// Results are byte-identical for any thread count: chain i always draws from
// stream i and writes only its own slots.
inline BatchResult run_batch(const MixtureModel& m, const SamplerConfig& cfg,
                             std::optional<int> label, bool record_full = false, int threads = 1,
                             const InitModel* init_model = nullptr) {
    validate(cfg);
    auto grid = time_grid(cfg);
    auto [table, first] = detail::build_step_table(m.schedule(), cfg, grid);
    const std::size_t n = static_cast<std::size_t>(cfg.chains);
    const std::size_t d = m.dim();
    BatchResult out;
    out.dim = d;
    out.times = grid;
    out.terminal.resize(n * d);
    out.x_one.resize(n * d);
    out.nearest.resize(n);
    if (record_full) out.trajectories.resize(n);
    double t_term = grid.back();
    parallel_for(n, threads, [&](std::size_t i) {
        ChainWorkspace ws;
        if (record_full) {
            Trajectory& tr = out.trajectories[i];
            tr.label = cfg.guidance ? std::optional<int>(cfg.guidance->pos_label) : label;
            tr.seed = cfg.seed;
            tr.chain_index = i;
            detail::run_chain_into(m, cfg, label, i, init_model, grid, table, first, ws,
                                   detail::TrajectorySink{&tr});
            const auto& xT = tr.states.back();
            for (std::size_t k = 0; k < d; ++k) out.terminal[i * d + k] = xT[k];
            for (std::size_t k = 0; k < d; ++k) out.x_one[i * d + k] = tr.x_one[k];
        } else {
            detail::run_chain_into(m, cfg, label, i, init_model, grid, table, first, ws,
                                   detail::TerminalSink{&out.terminal[i * d], &out.x_one[i * d]});
        }
        // nearest over the whole set (not the conditioning class): it reports
        // where the chain actually landed
        out.nearest[i] =
            nearest_index(m, std::span<const double>(&out.terminal[i * d], d), t_term);
    });
    return out;
}

}  // namespace singlab
