#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "singlab/errors.hpp"

namespace singlab {

// A variance-preserving noise schedule on t in [0, 1]:
//
//     x_t = alpha(t) * x_0 + sigma(t) * z,   alpha^2 + sigma^2 = 1,
//
// with alpha continuous and strictly decreasing, alpha(0) = 1 (no noise) and
// alpha(1) = 0 (pure noise). The endpoint values are exact in floating point,
// not merely close: downstream code branches on alpha == 0 and sigma == 0.
enum class ScheduleKind {
    cosine,                // alpha = sin(pi/2 (1-t)) == cos(pi/2 t)
    linear_alpha_squared,  // alpha^2 = 1 - t
    tabular,               // piecewise-linear alpha between knots
};

inline constexpr double half_pi = std::numbers::pi / 2.0;

struct NoiseSchedule {
    ScheduleKind kind = ScheduleKind::cosine;
    // Knots for the tabular kind; unused otherwise.
    std::vector<double> knot_t;
    std::vector<double> knot_alpha;

    static NoiseSchedule cosine() { return NoiseSchedule{ScheduleKind::cosine, {}, {}}; }

    static NoiseSchedule linear_alpha_squared() {
        return NoiseSchedule{ScheduleKind::linear_alpha_squared, {}, {}};
    }

    // Piecewise-linear alpha through (t_i, alpha_i). Requires t_0 = 0 with
    // alpha_0 = 1, t_last = 1 with alpha_last = 0, t strictly increasing and
    // alpha strictly decreasing, so the interpolant is a valid schedule.
    static NoiseSchedule tabular(std::vector<double> t, std::vector<double> a) {
        if (t.size() != a.size() || t.size() < 2)
            throw DomainError("tabular schedule needs matching knot vectors of size >= 2");
        if (t.front() != 0.0 || t.back() != 1.0)
            throw DomainError("tabular schedule knots must start at t=0 and end at t=1");
        if (a.front() != 1.0 || a.back() != 0.0)
            throw DomainError("tabular schedule must have alpha(0)=1 and alpha(1)=0");
        for (std::size_t i = 1; i < t.size(); ++i) {
            if (!(t[i] > t[i - 1]))
                throw DomainError("tabular schedule times must be strictly increasing");
            if (!(a[i] < a[i - 1]))
                throw DomainError("tabular schedule alphas must be strictly decreasing");
        }
        for (double ai : a)
            if (!(ai >= 0.0 && ai <= 1.0) || !std::isfinite(ai))
                throw DomainError("tabular schedule alphas must lie in [0,1]");
        return NoiseSchedule{ScheduleKind::tabular, std::move(t), std::move(a)};
    }

    // Index of the knot segment [t_i, t_{i+1}) containing t (t=1 maps to the
    // last segment).
    std::size_t segment(double t) const {
        auto it = std::upper_bound(knot_t.begin(), knot_t.end(), t);
        std::size_t i = static_cast<std::size_t>(it - knot_t.begin());
        if (i == 0) return 0;
        if (i >= knot_t.size()) return knot_t.size() - 2;
        return i - 1;
    }

    double alpha(double t) const {
        check_time(t);
        switch (kind) {
            case ScheduleKind::cosine:
                // sin(pi/2 (1-t)) rather than cos(pi/2 t): sin(0) == 0 exactly,
                // so alpha(1) == 0 holds bitwise (cos(pi/2) does not round to 0).
                return std::sin(half_pi * (1.0 - t));
            case ScheduleKind::linear_alpha_squared:
                return std::sqrt(1.0 - t);
            case ScheduleKind::tabular: {
                std::size_t i = segment(t);
                double u = (t - knot_t[i]) / (knot_t[i + 1] - knot_t[i]);
                return knot_alpha[i] + u * (knot_alpha[i + 1] - knot_alpha[i]);
            }
        }
        throw DomainError("unknown schedule kind");
    }

    double sigma(double t) const {
        check_time(t);
        switch (kind) {
            case ScheduleKind::cosine:
                return std::sin(half_pi * t);  // sigma(0) == 0 exactly
            case ScheduleKind::linear_alpha_squared:
                return std::sqrt(t);
            case ScheduleKind::tabular: {
                double a = alpha(t);
                return std::sqrt(std::max(0.0, 1.0 - a * a));
            }
        }
        throw DomainError("unknown schedule kind");
    }

    // d alpha / dt. Defined everywhere for cosine and tabular (piecewise slope,
    // right-continuous at interior knots); diverges at t = 1 for the
    // linear-alpha-squared kind.
    double alpha_prime(double t) const {
        check_time(t);
        switch (kind) {
            case ScheduleKind::cosine:
                return -half_pi * std::sin(half_pi * t);
            case ScheduleKind::linear_alpha_squared:
                if (t == 1.0)
                    throw DivergentCoefficient(
                        "alpha'(t) = -1/(2 sqrt(1-t)) diverges at t = 1 for the "
                        "linear-alpha-squared schedule");
                return -0.5 / std::sqrt(1.0 - t);
            case ScheduleKind::tabular: {
                std::size_t i = segment(t);
                return (knot_alpha[i + 1] - knot_alpha[i]) / (knot_t[i + 1] - knot_t[i]);
            }
        }
        throw DomainError("unknown schedule kind");
    }

    static void check_time(double t) {
        if (!(t >= 0.0 && t <= 1.0))
            throw DomainError("schedule time t = " + std::to_string(t) +
                              " outside the closed interval [0,1]");
    }
};

// Full coefficient record at one time: the schedule pair, its derivative, and
// the SDE coefficients f(t) = d log alpha / dt (drift) and g^2(t) = -2 f(t)
// (squared diffusion). f and g^2 diverge where alpha = 0, i.e. at t = 1.
struct ScheduleValues {
    double alpha = 0.0;
    double sigma = 0.0;
    double alpha_prime = 0.0;
    double drift_f = 0.0;
    double diffusion_g_sq = 0.0;
};

inline ScheduleValues eval_schedule(const NoiseSchedule& sched, double t) {
    NoiseSchedule::check_time(t);
    double a = sched.alpha(t);
    if (a == 0.0)
        throw DivergentCoefficient("drift f = alpha'/alpha diverges where alpha(t) = 0 (t = " +
                                   std::to_string(t) + ")");
    double ap = sched.alpha_prime(t);
    double f = ap / a;
    return ScheduleValues{a, sched.sigma(t), ap, f, -2.0 * f};
}

// Two-time transition coefficients for 0 <= s < t <= 1:
//
//     alpha_{t|s} = alpha_t / alpha_s,      sigma_{t|s}^2 = 1 - alpha_{t|s}^2,
//     sigma_{s|t} = sigma_{t|s} sigma_s / sigma_t,
//     beta_hat    = 1 - alpha_{t|s}^2  (the discrete-step noise variance).
//
// These are the coefficients of the forward kernel x_t | x_s and of the
// reverse conditional's width; they are finite for every valid (s, t) pair,
// including t = 1.
struct TransitionValues {
    double alpha_t_given_s = 0.0;
    double sigma_t_given_s = 0.0;
    double sigma_s_given_t = 0.0;
    double beta_hat = 0.0;
};

inline TransitionValues eval_transition(const NoiseSchedule& sched, double s, double t) {
    if (!(s >= 0.0 && s < t && t <= 1.0))
        throw DomainError("transition needs 0 <= s < t <= 1, got s = " + std::to_string(s) +
                          ", t = " + std::to_string(t));
    double alpha_s = sched.alpha(s);
    if (alpha_s == 0.0) throw DomainError("transition start must have alpha(s) > 0");
    double a_ts = sched.alpha(t) / alpha_s;
    double beta_hat = std::max(0.0, 1.0 - a_ts * a_ts);
    double sig_ts = std::sqrt(beta_hat);
    // t > s >= 0 implies t > 0, and alpha is strictly below 1 there, so
    // sigma(t) > 0 and the ratio is well defined.
    double sig_st = sig_ts * sched.sigma(s) / sched.sigma(t);
    return TransitionValues{a_ts, sig_ts, sig_st, beta_hat};
}

}  // namespace singlab
