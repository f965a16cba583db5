#pragma once
/**
 * @file train.hpp
 * Mini-batch Adam training on MSE with best-validation retention and early
 * stopping, and MSE / MAE evaluation over window sets.
 *
 * Metrics average squared (absolute) errors over samples, channels and
 * horizon steps. Per-horizon arrays keep the step-wise breakdown, so the
 * horizon-summed form is recoverable as T * mse.
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "data.hpp"
#include "error.hpp"
#include "models.hpp"
#include "nn.hpp"

namespace qultsf::train {

struct TrainConfig {
    std::size_t batch_size = 32;
    std::size_t max_epochs = 100;
    double learning_rate = 1e-3;
    /// Consecutive non-improving validation epochs tolerated before stopping.
    std::size_t early_stop_patience = 5;
    std::uint64_t seed = 0;
    bool shuffle = true;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    void validate() const {
        if (batch_size < 1) {
            throw ConfigError("train.batch_size must be >= 1");
        }
        if (max_epochs < 1) {
            throw ConfigError("train.max_epochs must be >= 1");
        }
        if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
            throw ConfigError("train.learning_rate must be positive");
        }
    }
};

struct EpochRecord {
    std::size_t epoch;  ///< 1-based
    double train_loss;  ///< mean per-sample loss seen during the epoch
    double val_mse;     ///< NaN when there is no validation split
    double seconds;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val_mse = std::numeric_limits<double>::quiet_NaN();
    bool early_stopped = false;
    /// Train-split MSE of the returned (best-validation) parameters.
    double final_train_loss = std::numeric_limits<double>::quiet_NaN();
};

struct MetricsReport {
    double mse = 0.0;
    double mae = 0.0;
    std::vector<double> horizon_mse;
    std::vector<double> horizon_mae;
    std::size_t samples = 0;
    /// Filled only when requested.
    std::vector<double> sample_mse;
    std::vector<double> sample_mae;
};

/// MSE and MAE of `model` over `windows`.
template <models::Forecaster M>
MetricsReport evaluate(const M &model,
                       std::span<const data::WindowSample> windows,
                       bool keep_per_sample = false) {
    if (windows.empty()) {
        throw InvalidInput("evaluate: empty split");
    }
    const std::size_t horizon = model.horizon();
    MetricsReport r;
    r.samples = windows.size();
    r.horizon_mse.assign(horizon, 0.0);
    r.horizon_mae.assign(horizon, 0.0);
    if (keep_per_sample) {
        r.sample_mse.reserve(windows.size());
        r.sample_mae.reserve(windows.size());
    }
    for (const auto &w : windows) {
        const auto pred = model.predict(w.lookback);
        qultsf::detail::require(pred.size() == horizon &&
                                    w.target.size() == horizon,
                                "evaluate: horizon mismatch");
        double sq = 0.0;
        double ab = 0.0;
        for (std::size_t h = 0; h < horizon; ++h) {
            const double e = pred[h] - w.target[h];
            r.horizon_mse[h] += e * e;
            r.horizon_mae[h] += std::abs(e);
            sq += e * e;
            ab += std::abs(e);
        }
        if (keep_per_sample) {
            r.sample_mse.push_back(sq / static_cast<double>(horizon));
            r.sample_mae.push_back(ab / static_cast<double>(horizon));
        }
    }
    const auto n = static_cast<double>(windows.size());
    for (std::size_t h = 0; h < horizon; ++h) {
        r.horizon_mse[h] /= n;
        r.horizon_mae[h] /= n;
    }
    r.mse = std::accumulate(r.horizon_mse.begin(), r.horizon_mse.end(), 0.0) /
            static_cast<double>(horizon);
    r.mae = std::accumulate(r.horizon_mae.begin(), r.horizon_mae.end(), 0.0) /
            static_cast<double>(horizon);
    return r;
}

using EpochCallback = std::function<void(const EpochRecord &)>;

/// Trains in place and leaves `model` at its best-validation parameters
/// (the last epoch's when `val` is empty).
template <models::TrainableForecaster M>
TrainLog train(M &model, std::span<const data::WindowSample> train_windows,
               std::span<const data::WindowSample> val_windows,
               const TrainConfig &config, const EpochCallback &on_epoch = {}) {
    config.validate();
    if (train_windows.empty()) {
        throw InvalidInput("train: empty train split");
    }
    using Clock = std::chrono::steady_clock;

    nn::AdamState adam(nn::AdamConfig{config.learning_rate, config.beta1,
                                      config.beta2, config.epsilon});
    std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<std::size_t> order(train_windows.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    TrainLog log;
    std::optional<M> best;
    std::size_t non_improving = 0;

    for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const auto t0 = Clock::now();
        if (config.shuffle) {
            std::shuffle(order.begin(), order.end(), rng);
        }
        double epoch_loss = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size();
             start += config.batch_size, ++batch_index) {
            const std::size_t stop =
                std::min(order.size(), start + config.batch_size);
            const double scale = 1.0 / static_cast<double>(stop - start);
            model.zero_grad();
            double batch_loss = 0.0;
            for (std::size_t i = start; i < stop; ++i) {
                const auto &w = train_windows[order[i]];
                const auto trace = model.forward(w.lookback);
                auto loss = nn::mse_loss(trace.prediction, w.target);
                for (auto &g : loss.gradient) {
                    g *= scale;
                }
                model.backward(w.lookback, trace, loss.gradient);
                batch_loss += loss.loss;
            }
            if (!std::isfinite(batch_loss)) {
                throw TrainingDiverged("train: non-finite loss at epoch " +
                                       std::to_string(epoch) + ", batch " +
                                       std::to_string(batch_index));
            }
            epoch_loss += batch_loss;
            const auto blocks = model.parameters();
            nn::adam_step(blocks, adam);
        }

        EpochRecord rec{epoch, epoch_loss / static_cast<double>(order.size()),
                        std::numeric_limits<double>::quiet_NaN(), 0.0};
        bool stop = false;
        if (!val_windows.empty()) {
            rec.val_mse = evaluate(model, val_windows).mse;
            if (!std::isfinite(rec.val_mse)) {
                throw TrainingDiverged("train: non-finite validation MSE at "
                                       "epoch " +
                                       std::to_string(epoch));
            }
            if (!best || rec.val_mse < log.best_val_mse) {
                best = model;
                log.best_val_mse = rec.val_mse;
                log.best_epoch = epoch;
                non_improving = 0;
            } else if (++non_improving > config.early_stop_patience) {
                stop = true;
            }
        } else {
            log.best_epoch = epoch;
        }
        rec.seconds =
            std::chrono::duration<double>(Clock::now() - t0).count();
        log.epochs.push_back(rec);
        if (on_epoch) {
            on_epoch(rec);
        }
        if (stop) {
            log.early_stopped = true;
            break;
        }
    }

    if (best) {
        model = std::move(*best);
    }
    model.zero_grad();
    log.final_train_loss = evaluate(model, train_windows).mse;
    return log;
}

} // namespace qultsf::train
