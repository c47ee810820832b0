#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "singlab/errors.hpp"
#include "singlab/schedule.hpp"
#include "singlab/training_set.hpp"

namespace singlab {

// The exact diffused distribution of a finite training set Y = {y_i} under a
// variance-preserving schedule is the Gaussian mixture
//
//     p(x, t) = (1/n) sum_i N(x; alpha_t y_i, sigma_t^2 I),
//
// and every quantity a sampler needs — posterior weights over the training
// points, the posterior mean ybar, the score, noise prediction, and the
// one-step reverse conditionals — has a closed form in terms of it. All
// computations run in the log domain with max-subtraction so they stay finite
// for ||x|| up to ~1e3 at any t with sigma > 0.
class MixtureModel {
  public:
    MixtureModel(TrainingSet set, NoiseSchedule schedule)
        : set_(std::move(set)), schedule_(std::move(schedule)) {
        all_.resize(set_.size());
        for (std::size_t i = 0; i < all_.size(); ++i) all_[i] = i;
    }

    const TrainingSet& set() const { return set_; }
    const NoiseSchedule& schedule() const { return schedule_; }
    std::size_t dim() const { return set_.dim(); }

    // The candidate points: the whole set, or one class when a label is given.
    std::span<const std::size_t> selection(std::optional<int> label) const {
        if (!label) return all_;
        return set_.class_indices(*label);
    }

    // Posterior weights w_i proportional to exp(-||x - alpha y_i||^2 / (2 sigma^2))
    // over the selected points, written into w (same length as sel). Returns the
    // position in sel of the heaviest component (lowest index on ties). At
    // sigma == 0 the weights degenerate to the indicator of the nearest point,
    // which is the exact limit.
    std::size_t weights_core(std::span<const double> x, double alpha, double sigma,
                             std::span<const std::size_t> sel, std::span<double> w) const {
        const std::size_t n = sel.size();
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_pos = 0;
        if (sigma == 0.0) {
            for (std::size_t k = 0; k < n; ++k) {
                double l = -sq_dist_to_scaled(x, sel[k], alpha);
                w[k] = 0.0;
                if (l > best) {
                    best = l;
                    best_pos = k;
                }
            }
            w[best_pos] = 1.0;
            return best_pos;
        }
        const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
        for (std::size_t k = 0; k < n; ++k) {
            double l = -sq_dist_to_scaled(x, sel[k], alpha) * inv_two_var;
            w[k] = l;
            if (l > best) {
                best = l;
                best_pos = k;
            }
        }
        double sum = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            w[k] = std::exp(w[k] - best);
            sum += w[k];
        }
        for (std::size_t k = 0; k < n; ++k) w[k] /= sum;
        return best_pos;
    }

    // Posterior mean ybar(x, t) = sum_i w_i y_i over the selected points.
    // w_scratch must have sel.size() entries; out must have dim() entries.
    void ybar_core(std::span<const double> x, double alpha, double sigma,
                   std::span<const std::size_t> sel, std::span<double> w_scratch,
                   std::span<double> out) const {
        weights_core(x, alpha, sigma, sel, w_scratch);
        const std::size_t d = set_.dim();
        for (std::size_t k = 0; k < d; ++k) out[k] = 0.0;
        for (std::size_t k = 0; k < sel.size(); ++k) {
            double wk = w_scratch[k];
            if (wk == 0.0) continue;
            auto y = set_.point(sel[k]);
            for (std::size_t j = 0; j < d; ++j) out[j] += wk * y[j];
        }
    }

    // log sum_i exp(-||x - alpha y_i||^2 / (2 sigma^2)) - log n over the
    // selection: the mixture log-density at (x, t) up to the Gaussian
    // normalization constant, which callers add.
    double log_kernel_sum(std::span<const double> x, double alpha, double sigma,
                          std::span<const std::size_t> sel) const {
        const double inv_two_var = 1.0 / (2.0 * sigma * sigma);
        double m = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < sel.size(); ++k)
            m = std::max(m, -sq_dist_to_scaled(x, sel[k], alpha) * inv_two_var);
        double sum = 0.0;
        for (std::size_t k = 0; k < sel.size(); ++k)
            sum += std::exp(-sq_dist_to_scaled(x, sel[k], alpha) * inv_two_var - m);
        return m + std::log(sum) - std::log(static_cast<double>(sel.size()));
    }

    double sq_dist_to_scaled(std::span<const double> x, std::size_t i, double alpha) const {
        auto y = set_.point(i);
        double s = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            double dk = x[k] - alpha * y[k];
            s += dk * dk;
        }
        return s;
    }

  private:
    TrainingSet set_;
    NoiseSchedule schedule_;
    std::vector<std::size_t> all_;
};

namespace detail {

inline void check_dim(const MixtureModel& m, std::span<const double> x, const char* what) {
    if (x.size() != m.dim())
        throw DomainError(std::string(what) + ": point has dimension " + std::to_string(x.size()) +
                          ", model has " + std::to_string(m.dim()));
}

inline double log_normal_const(std::size_t d, double variance) {
    return -0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi * variance);
}

}  // namespace detail

inline std::vector<double> posterior_weights(const MixtureModel& m, std::span<const double> x,
                                             double t, std::optional<int> label = std::nullopt) {
    detail::check_dim(m, x, "posterior_weights");
    NoiseSchedule::check_time(t);
    auto sel = m.selection(label);
    std::vector<double> w(sel.size());
    m.weights_core(x, m.schedule().alpha(t), m.schedule().sigma(t), sel, w);
    return w;
}

inline std::vector<double> ybar(const MixtureModel& m, std::span<const double> x, double t,
                                std::optional<int> label = std::nullopt) {
    detail::check_dim(m, x, "ybar");
    NoiseSchedule::check_time(t);
    auto sel = m.selection(label);
    std::vector<double> w(sel.size()), out(m.dim());
    m.ybar_core(x, m.schedule().alpha(t), m.schedule().sigma(t), sel, w, out);
    return out;
}

struct ScoreEps {
    std::vector<double> score;  // grad_x log p(x, t) = (alpha ybar - x) / sigma^2
    std::vector<double> eps;    // implied noise (x - alpha ybar) / sigma
};

inline ScoreEps score_and_eps(const MixtureModel& m, std::span<const double> x, double t,
                              std::optional<int> label = std::nullopt) {
    detail::check_dim(m, x, "score_and_eps");
    NoiseSchedule::check_time(t);
    double sigma = m.schedule().sigma(t);
    if (sigma == 0.0)
        throw DomainError("score_and_eps undefined at t = " + std::to_string(t) +
                          " where sigma = 0 (the score diverges)");
    double alpha = m.schedule().alpha(t);
    auto yb = ybar(m, x, t, label);
    ScoreEps out;
    out.score.resize(m.dim());
    out.eps.resize(m.dim());
    double inv_var = 1.0 / (sigma * sigma);
    for (std::size_t k = 0; k < m.dim(); ++k) {
        double r = alpha * yb[k] - x[k];
        out.score[k] = r * inv_var;
        out.eps[k] = -r / sigma;
    }
    return out;
}

// Index (into the full training set) of the point minimizing ||x - alpha_t y_j||
// over the selection; ties resolve to the lowest index.
inline std::size_t nearest_index(const MixtureModel& m, std::span<const double> x, double t,
                                 std::optional<int> label = std::nullopt) {
    detail::check_dim(m, x, "nearest_index");
    NoiseSchedule::check_time(t);
    double alpha = m.schedule().alpha(t);
    auto sel = m.selection(label);
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = sel.empty() ? 0 : sel[0];
    for (std::size_t k = 0; k < sel.size(); ++k) {
        double d2 = m.sq_dist_to_scaled(x, sel[k], alpha);
        if (d2 < best) {
            best = d2;
            best_idx = sel[k];
        }
    }
    return best_idx;
}

// log p(x, t): density of the diffused mixture. t must lie in (0, 1]; at t = 0
// the distribution is a sum of point masses and has no density.
inline double log_marginal(const MixtureModel& m, std::span<const double> x, double t,
                           std::optional<int> label = std::nullopt) {
    detail::check_dim(m, x, "log_marginal");
    NoiseSchedule::check_time(t);
    double sigma = m.schedule().sigma(t);
    if (sigma == 0.0)
        throw DegenerateDensity("the mixture at t = 0 is a sum of point masses with no density");
    auto sel = m.selection(label);
    return m.log_kernel_sum(x, m.schedule().alpha(t), sigma, sel) +
           detail::log_normal_const(m.dim(), sigma * sigma);
}

// log p(x_t | x_s): forward transition density N(alpha_{t|s} x_s, sigma_{t|s}^2 I).
inline double log_forward_cond(const MixtureModel& m, std::span<const double> x_t, double t,
                               std::span<const double> x_s, double s) {
    detail::check_dim(m, x_t, "log_forward_cond");
    detail::check_dim(m, x_s, "log_forward_cond");
    auto tr = eval_transition(m.schedule(), s, t);
    double d2 = 0.0;
    for (std::size_t k = 0; k < x_t.size(); ++k) {
        double dk = x_t[k] - tr.alpha_t_given_s * x_s[k];
        d2 += dk * dk;
    }
    double var = tr.sigma_t_given_s * tr.sigma_t_given_s;
    return -d2 / (2.0 * var) + detail::log_normal_const(m.dim(), var);
}

namespace detail {

struct ReverseCoeffs {
    double a = 0.0;       // coefficient of x_t in the component means
    double b = 0.0;       // coefficient of y_i (or ybar) in the component means
    double sig_st = 0.0;  // common component standard deviation sigma_{s|t}
};

inline ReverseCoeffs reverse_coeffs(const NoiseSchedule& sched, double s, double t) {
    if (s <= 0.0)
        throw DomainError("reverse conditional needs s > 0 (at s = 0 it degenerates)");
    auto tr = eval_transition(sched, s, t);
    double sig_s = sched.sigma(s);
    double sig_t = sched.sigma(t);
    double inv_var_t = 1.0 / (sig_t * sig_t);
    return ReverseCoeffs{tr.alpha_t_given_s * sig_s * sig_s * inv_var_t,
                         sched.alpha(s) * tr.sigma_t_given_s * tr.sigma_t_given_s * inv_var_t,
                         tr.sigma_s_given_t};
}

}  // namespace detail

// log p(x_s | x_t): the exact one-step reverse conditional, computed as the
// explicit mixture
//
//     sum_i w_i(x_t, t) N(x_s; a x_t + b y_i, sigma_{s|t}^2 I),
//     a = alpha_{t|s} sigma_s^2 / sigma_t^2,  b = alpha_s sigma_{t|s}^2 / sigma_t^2,
//
// rather than as a Bayes quotient of densities. Requires 0 < s < t <= 1. At
// t = 1 the coefficients collapse to (a, b) = (0, alpha_s) with uniform
// weights, so the value equals log p(x_s, s): the reverse conditional from
// pure noise forgets x_t entirely.
inline double log_reverse_exact(const MixtureModel& m, std::span<const double> x_s, double s,
                                std::span<const double> x_t, double t,
                                std::optional<int> label = std::nullopt) {
    detail::check_dim(m, x_s, "log_reverse_exact");
    detail::check_dim(m, x_t, "log_reverse_exact");
    auto rc = detail::reverse_coeffs(m.schedule(), s, t);
    auto sel = m.selection(label);
    double alpha_t = m.schedule().alpha(t);
    double sigma_t = m.schedule().sigma(t);

    // log posterior weights at (x_t, t)
    std::vector<double> lw(sel.size());
    if (sigma_t == 0.0) throw DomainError("reverse conditional needs t > 0");
    double inv_two_var = 1.0 / (2.0 * sigma_t * sigma_t);
    double mx = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < sel.size(); ++k) {
        lw[k] = -m.sq_dist_to_scaled(x_t, sel[k], alpha_t) * inv_two_var;
        mx = std::max(mx, lw[k]);
    }
    double lse = 0.0;
    for (double l : lw) lse += std::exp(l - mx);
    double log_norm = mx + std::log(lse);
    for (double& l : lw) l -= log_norm;

    // mixture over component Gaussians
    double var = rc.sig_st * rc.sig_st;
    double best = -std::numeric_limits<double>::infinity();
    std::vector<double> comp(sel.size());
    const std::size_t d = m.dim();
    for (std::size_t k = 0; k < sel.size(); ++k) {
        auto y = m.set().point(sel[k]);
        double d2 = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            double dk = x_s[j] - rc.a * x_t[j] - rc.b * y[j];
            d2 += dk * dk;
        }
        comp[k] = lw[k] - d2 / (2.0 * var);
        best = std::max(best, comp[k]);
    }
    double sum = 0.0;
    for (double c : comp) sum += std::exp(c - best);
    return best + std::log(sum) + detail::log_normal_const(d, var);
}

// log of the Gaussian approximation to the reverse conditional: a single
// Gaussian with the same width whose mean substitutes the posterior mean ybar
// for the individual training points.
inline double log_reverse_gauss(const MixtureModel& m, std::span<const double> x_s, double s,
                                std::span<const double> x_t, double t,
                                std::optional<int> label = std::nullopt) {
    detail::check_dim(m, x_s, "log_reverse_gauss");
    detail::check_dim(m, x_t, "log_reverse_gauss");
    auto rc = detail::reverse_coeffs(m.schedule(), s, t);
    auto yb = ybar(m, x_t, t, label);
    double var = rc.sig_st * rc.sig_st;
    double d2 = 0.0;
    for (std::size_t k = 0; k < m.dim(); ++k) {
        double dk = x_s[k] - rc.a * x_t[k] - rc.b * yb[k];
        d2 += dk * dk;
    }
    return -d2 / (2.0 * var) + detail::log_normal_const(m.dim(), var);
}

enum class DensityKind { marginal, forward_cond, reverse_exact, reverse_gauss };

// Generic dispatcher used by the verification drivers: x2/s are ignored for
// the marginal; for the conditionals x is the point whose density is taken
// and x2 the conditioning point.
inline double log_density(const MixtureModel& m, DensityKind which, std::span<const double> x,
                          double t, std::span<const double> x2 = {}, double s = 0.0,
                          std::optional<int> label = std::nullopt) {
    switch (which) {
        case DensityKind::marginal:
            return log_marginal(m, x, t, label);
        case DensityKind::forward_cond:
            return log_forward_cond(m, x, t, x2, s);
        case DensityKind::reverse_exact:
            return log_reverse_exact(m, x, s, x2, t, label);
        case DensityKind::reverse_gauss:
            return log_reverse_gauss(m, x, s, x2, t, label);
    }
    throw DomainError("unknown density kind");
}

// Geometry constants of the training set that control the error-bound
// propositions: the largest pairwise distance, the largest norm, and their sum.
struct LemmaConstants {
    double max_pairwise_dist = 0.0;
    double max_norm = 0.0;
    double sum = 0.0;
};

inline LemmaConstants lemma_constants(const TrainingSet& set) {
    LemmaConstants out;
    std::size_t n = set.size();
    for (std::size_t i = 0; i < n; ++i) {
        auto yi = set.point(i);
        double norm2 = 0.0;
        for (double v : yi) norm2 += v * v;
        out.max_norm = std::max(out.max_norm, std::sqrt(norm2));
        for (std::size_t j = i + 1; j < n; ++j) {
            auto yj = set.point(j);
            double d2 = 0.0;
            for (std::size_t k = 0; k < yi.size(); ++k) {
                double dk = yi[k] - yj[k];
                d2 += dk * dk;
            }
            out.max_pairwise_dist = std::max(out.max_pairwise_dist, std::sqrt(d2));
        }
    }
    out.sum = out.max_pairwise_dist + out.max_norm;
    return out;
}

// Marginal CDF of the first (only) coordinate for one-dimensional models:
// sum_i (1/n) Phi((x - alpha y_i) / sigma). Used by goodness-of-fit checks.
inline double mixture_cdf_1d(const MixtureModel& m, double x, double t,
                             std::optional<int> label = std::nullopt) {
    if (m.dim() != 1) throw DomainError("mixture_cdf_1d needs a one-dimensional model");
    NoiseSchedule::check_time(t);
    double alpha = m.schedule().alpha(t);
    double sigma = m.schedule().sigma(t);
    auto sel = m.selection(label);
    double acc = 0.0;
    for (std::size_t k = 0; k < sel.size(); ++k) {
        double y = m.set().point(sel[k])[0];
        if (sigma == 0.0) {
            acc += (x >= alpha * y) ? 1.0 : 0.0;
        } else {
            double z = (x - alpha * y) / sigma;
            acc += 0.5 * std::erfc(-z / std::numbers::sqrt2);
        }
    }
    return acc / static_cast<double>(sel.size());
}

}  // namespace singlab
