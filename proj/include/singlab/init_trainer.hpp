#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "singlab/errors.hpp"
#include "singlab/rng.hpp"
#include "singlab/training_set.hpp"

namespace singlab {

// A trained initial-step predictor: one constant vector per class plus an
// unconditional one. The predictor approximates the posterior mean at the
// pure-noise endpoint, which is constant in the state there (it equals the
// class mean), so a per-class constant is the exact function class.
struct InitModel {
    std::size_t dim = 0;
    std::vector<double> unconditional_mu;
    std::map<int, std::vector<double>> class_mu;

    // training metadata, carried for reports
    int steps_run = 0;
    double final_loss = 0.0;
    double learning_rate = 0.0;
    int batch_size = 0;
    std::uint64_t seed = 0;

    const std::vector<double>& predict(std::optional<int> label) const {
        if (!label) {
            if (unconditional_mu.empty()) throw UnknownLabel("model has no unconditional head");
            return unconditional_mu;
        }
        auto it = class_mu.find(*label);
        if (it == class_mu.end())
            throw UnknownLabel("init model has no class " + std::to_string(*label));
        return it->second;
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["dim"] = dim;
        j["unconditional"] = unconditional_mu;
        nlohmann::json cls = nlohmann::json::object();
        for (const auto& [lab, mu] : class_mu) cls[std::to_string(lab)] = mu;
        j["classes"] = cls;
        j["training"] = {{"steps", steps_run},
                         {"final_loss", final_loss},
                         {"learning_rate", learning_rate},
                         {"batch_size", batch_size},
                         {"seed", seed}};
        return j;
    }

    static InitModel from_json(const nlohmann::json& j) {
        InitModel m;
        try {
            m.dim = j.at("dim").get<std::size_t>();
            m.unconditional_mu = j.at("unconditional").get<std::vector<double>>();
            for (auto it = j.at("classes").begin(); it != j.at("classes").end(); ++it)
                m.class_mu[std::stoi(it.key())] = it.value().get<std::vector<double>>();
            if (j.contains("training")) {
                const auto& t = j.at("training");
                m.steps_run = t.value("steps", 0);
                m.final_loss = t.value("final_loss", 0.0);
                m.learning_rate = t.value("learning_rate", 0.0);
                m.batch_size = t.value("batch_size", 0);
                m.seed = t.value("seed", std::uint64_t{0});
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("invalid init model JSON: ") + e.what());
        }
        if (m.unconditional_mu.size() != m.dim)
            throw ConfigError("init model unconditional head has wrong dimension");
        for (const auto& [lab, mu] : m.class_mu)
            if (mu.size() != m.dim)
                throw ConfigError("init model class " + std::to_string(lab) +
                                  " head has wrong dimension");
        return m;
    }
};

struct TrainConfig {
    double learning_rate = 0.1;
    int steps = 5000;
    int batch_size = 128;
    std::uint64_t seed = 0;
};

struct TrainResult {
    InitModel model;
    std::vector<double> loss_history;      // total minibatch loss per step
    std::vector<double> smoothed_history;  // window-100 moving average
};

// Fit the per-class constants by plain SGD from zero initialization on the
// squared-error objective E||mu - x0||^2 over minibatches of training points.
// The minimizer is the (class) mean; SGD with a fixed step approaches it
// geometrically with O(lr/sqrt(batch)) stationary noise. Throws
// DivergenceDetected after 100 consecutive increases of the total loss.
inline TrainResult fit_init_model(const TrainingSet& set, const TrainConfig& cfg) {
    if (cfg.steps < 1) throw DomainError("training needs at least one step");
    if (cfg.batch_size < 1) throw DomainError("training batch size must be positive");
    if (!(cfg.learning_rate > 0.0) || !(cfg.learning_rate < 1.0))
        throw DomainError("learning rate must lie in (0, 1) for the quadratic objective");

    const std::size_t d = set.dim();

    // One SGD target per head: the unconditional head draws from all points,
    // each class head from its class. Heads step simultaneously; the logged
    // loss is the sum over heads of the minibatch loss.
    struct Head {
        std::optional<int> label;
        std::vector<std::size_t> pool;
        std::vector<double> mu;
        RandomStream rng;
    };
    std::vector<Head> heads;
    {
        std::vector<std::size_t> all(set.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        heads.push_back(Head{std::nullopt, std::move(all), std::vector<double>(d, 0.0),
                             RandomStream(cfg.seed, 0)});
        std::uint64_t sub = 1;
        for (int lab : set.distinct_labels()) {
            std::vector<std::size_t> pool = set.class_indices(lab);
            heads.push_back(
                Head{lab, std::move(pool), std::vector<double>(d, 0.0), RandomStream(cfg.seed, sub++)});
        }
    }

    TrainResult out;
    out.loss_history.reserve(cfg.steps);
    std::vector<double> batch_mean(d);
    int rising = 0;
    double prev_loss = std::numeric_limits<double>::infinity();
    for (int step = 0; step < cfg.steps; ++step) {
        double total_loss = 0.0;
        for (auto& h : heads) {
            std::fill(batch_mean.begin(), batch_mean.end(), 0.0);
            double sq_sum = 0.0;
            for (int b = 0; b < cfg.batch_size; ++b) {
                auto p = set.point(h.pool[h.rng.uniform_index(h.pool.size())]);
                for (std::size_t k = 0; k < d; ++k) {
                    batch_mean[k] += p[k];
                    sq_sum += p[k] * p[k];
                }
            }
            for (double& v : batch_mean) v /= cfg.batch_size;
            // minibatch loss mean_i ||mu - x_i||^2 = ||mu||^2 - 2 mu.xbar + mean||x_i||^2
            double loss = sq_sum / cfg.batch_size;
            for (std::size_t k = 0; k < d; ++k)
                loss += h.mu[k] * h.mu[k] - 2.0 * h.mu[k] * batch_mean[k];
            total_loss += loss;
            // gradient of the minibatch loss: 2 (mu - xbar)
            for (std::size_t k = 0; k < d; ++k)
                h.mu[k] -= cfg.learning_rate * 2.0 * (h.mu[k] - batch_mean[k]);
        }
        out.loss_history.push_back(total_loss);
        rising = (total_loss > prev_loss) ? rising + 1 : 0;
        prev_loss = total_loss;
        if (rising >= 100)
            throw DivergenceDetected("training loss increased for 100 consecutive steps (step " +
                                     std::to_string(step) + ")");
    }

    // window-100 moving average (prefix windows shrink at the start)
    out.smoothed_history.resize(out.loss_history.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < out.loss_history.size(); ++i) {
        acc += out.loss_history[i];
        if (i >= 100) acc -= out.loss_history[i - 100];
        out.smoothed_history[i] = acc / static_cast<double>(std::min<std::size_t>(i + 1, 100));
    }

    InitModel& model = out.model;
    model.dim = d;
    for (auto& h : heads) {
        if (h.label)
            model.class_mu[*h.label] = std::move(h.mu);
        else
            model.unconditional_mu = std::move(h.mu);
    }
    model.steps_run = cfg.steps;
    model.final_loss = out.loss_history.back();
    model.learning_rate = cfg.learning_rate;
    model.batch_size = cfg.batch_size;
    model.seed = cfg.seed;
    return out;
}

inline const std::vector<double>& predict_init(const InitModel& model, std::optional<int> label) {
    return model.predict(label);
}

}  // namespace singlab
