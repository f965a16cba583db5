#pragma once
/**
 * @file experiment.hpp
 * End-to-end runs: load + split + standardize, train one model, evaluate on
 * the test split, and write run artifacts; plus the (model, L, T, seed) grid
 * runner with table and plot-data emission.
 *
 * Run directory layout (<output_dir>/<model>_L<L>_T<T>_seed<seed>/):
 *   manifest.ini   resolved configuration plus derived facts
 *   train_log.csv  epoch,train_loss,val_mse,seconds
 *   checkpoint.txt nn checkpoint (version 1)
 *   metrics.txt    key = value
 *   metrics.csv    model,L,T,seed,mse,mae
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "config.hpp"
#include "data.hpp"
#include "error.hpp"
#include "models.hpp"
#include "nn.hpp"
#include "train.hpp"

namespace qultsf::experiment {

namespace fs = std::filesystem;
using config::ExperimentConfig;
using config::ModelType;

/// Standardized table with its split and scaler; shared across grid cells.
struct PreparedData {
    data::TimeSeriesTable table;
    data::SplitSpec split;
    data::Standardizer scaler;
};

inline PreparedData prepare_data(const config::DatasetConfig &cfg) {
    auto raw = data::load_csv(cfg.path, cfg.csv_options());
    auto split = data::make_splits(raw, cfg.train_fraction, cfg.val_fraction,
                                   cfg.test_fraction);
    auto [table, scaler] = data::standardize(raw, split);
    table.timestamps = std::move(raw.timestamps);
    table.rejected_rows = raw.rejected_rows;
    return {std::move(table), split, std::move(scaler)};
}

using AnyModel = std::variant<models::QuLTSFModel, models::LinearModel,
                              models::NLinearModel, models::DLinearModel>;

inline AnyModel make_model(const ExperimentConfig &c) {
    std::mt19937_64 rng(c.seed);
    switch (c.model) {
    case ModelType::QuLTSF:
        return models::QuLTSFModel::initialized(c.lookback, c.horizon,
                                                c.qubits, c.layers, rng);
    case ModelType::Linear:
        return models::LinearModel::initialized(c.lookback, c.horizon, rng);
    case ModelType::NLinear:
        return models::NLinearModel::initialized(c.lookback, c.horizon, rng);
    case ModelType::DLinear:
        return models::DLinearModel::initialized(c.lookback, c.horizon,
                                                 c.kernel, rng);
    }
    throw ConfigError("model.type: unsupported");
}

struct ResultRow {
    std::string model;
    std::size_t lookback = 0;
    std::size_t horizon = 0;
    std::uint64_t seed = 0;
    double mse = std::numeric_limits<double>::quiet_NaN();
    double mae = std::numeric_limits<double>::quiet_NaN();
    bool ok = false;
    std::string error;
    std::string run_dir;
};

struct ExperimentResult {
    ResultRow row;
    train::MetricsReport test;
    train::TrainLog log;
    std::size_t parameter_count = 0;
    std::size_t circuit_parameters = 0;
};

inline std::string run_name(const ExperimentConfig &c) {
    return std::string(config::to_string(c.model)) + "_L" +
           std::to_string(c.lookback) + "_T" + std::to_string(c.horizon) +
           "_seed" + std::to_string(c.seed);
}

namespace detail {

inline std::string fmt(double v) { return config::detail::format_double(v); }

inline std::ofstream open_out(const fs::path &p) {
    std::ofstream os(p);
    if (!os) {
        throw std::runtime_error("cannot write '" + p.string() + "'");
    }
    return os;
}

inline void write_metrics_csv_header(std::ostream &os) {
    os << "model,L,T,seed,mse,mae\n";
}

inline void write_metrics_csv_row(std::ostream &os, const ResultRow &r) {
    os << r.model << ',' << r.lookback << ',' << r.horizon << ',' << r.seed
       << ',' << fmt(r.mse) << ',' << fmt(r.mae) << '\n';
}

} // namespace detail

/// Trains and evaluates one configuration on already prepared data.
inline ExperimentResult run_experiment(const ExperimentConfig &cfg,
                                       const PreparedData &prepared) {
    cfg.validate();
    const auto &table = prepared.table;
    const auto &split = prepared.split;
    const auto train_w =
        data::windows(table, split.train, cfg.lookback, cfg.horizon);
    const auto val_w = data::windows(table, split.val, cfg.lookback, cfg.horizon);
    const auto test_w =
        data::windows(table, split.test, cfg.lookback, cfg.horizon);
    if (train_w.empty()) {
        throw ConfigError("model.lookback/horizon: train split too short for "
                          "any window");
    }
    if (test_w.empty()) {
        throw ConfigError("model.horizon: test split too short for any "
                          "window");
    }

    const fs::path dir = fs::path(cfg.output_dir) / run_name(cfg);
    fs::create_directories(dir);

    const auto tcfg = cfg.resolved_train();
    AnyModel model = make_model(cfg);
    ExperimentResult result;

    {
        auto log_os = detail::open_out(dir / "train_log.csv");
        log_os << "epoch,train_loss,val_mse,seconds\n";
        auto on_epoch = [&](const train::EpochRecord &e) {
            log_os << e.epoch << ',' << detail::fmt(e.train_loss) << ','
                   << detail::fmt(e.val_mse) << ',' << std::fixed
                   << std::setprecision(3) << e.seconds << '\n'
                   << std::defaultfloat;
            log_os.flush();
        };
        std::visit(
            [&](auto &m) {
                result.log = train::train(m, train_w, val_w, tcfg, on_epoch);
                result.test = train::evaluate(m, test_w);
                result.parameter_count = m.parameter_count();
                auto ckpt = detail::open_out(dir / "checkpoint.txt");
                nn::save_checkpoint(ckpt, m.parameters());
            },
            model);
    }
    if (const auto *q = std::get_if<models::QuLTSFModel>(&model)) {
        result.circuit_parameters = q->circuit_parameter_count();
    }

    result.row = {std::string(config::to_string(cfg.model)),
                  cfg.lookback,
                  cfg.horizon,
                  cfg.seed,
                  result.test.mse,
                  result.test.mae,
                  true,
                  {},
                  dir.string()};

    {
        auto os = detail::open_out(dir / "manifest.ini");
        config::write_config(os, cfg);
        os << "\n[resolved]\n"
           << "max_epochs = " << tcfg.max_epochs << '\n'
           << "learning_rate = " << detail::fmt(tcfg.learning_rate) << '\n'
           << "optimizer = adam\n"
           << "init = fan_in_uniform weights, zero biases, angles U(0, 2pi)\n"
           << "rotation = RZ(omega) RY(theta) RZ(phi)\n"
           << "entangler = CNOT(i, (i+1) mod N), ascending i\n"
           << "parameter_count = " << result.parameter_count << '\n'
           << "circuit_parameters = " << result.circuit_parameters << '\n'
           << "\n[dataset]\n"
           << "timestamps = " << table.num_timestamps() << '\n'
           << "channels = " << table.num_channels() << '\n'
           << "rejected_rows = " << table.rejected_rows << '\n'
           << "train_range = " << split.train.begin << ':' << split.train.end
           << '\n'
           << "val_range = " << split.val.begin << ':' << split.val.end << '\n'
           << "test_range = " << split.test.begin << ':' << split.test.end
           << '\n'
           << "train_windows = " << train_w.size() << '\n'
           << "val_windows = " << val_w.size() << '\n'
           << "test_windows = " << test_w.size() << '\n'
           << "\n[standardizer]\n";
        for (std::size_t m = 0; m < table.num_channels(); ++m) {
            os << "channel" << m << " = " << table.channel_names()[m] << " "
               << detail::fmt(prepared.scaler.mean()[m]) << " "
               << detail::fmt(prepared.scaler.stddev()[m]) << '\n';
        }
        os << "\n[training]\n"
           << "epochs_run = " << result.log.epochs.size() << '\n'
           << "best_epoch = " << result.log.best_epoch << '\n'
           << "early_stopped = " << (result.log.early_stopped ? "true" : "false")
           << '\n'
           << "final_train_mse = " << detail::fmt(result.log.final_train_loss)
           << '\n';
    }
    {
        auto os = detail::open_out(dir / "metrics.txt");
        os << "model = " << result.row.model << '\n'
           << "lookback = " << cfg.lookback << '\n'
           << "horizon = " << cfg.horizon << '\n'
           << "seed = " << cfg.seed << '\n'
           << "mse = " << detail::fmt(result.test.mse) << '\n'
           << "mae = " << detail::fmt(result.test.mae) << '\n'
           << "samples = " << result.test.samples << '\n';
        os << "horizon_mse =";
        for (double v : result.test.horizon_mse) {
            os << ' ' << detail::fmt(v);
        }
        os << "\nhorizon_mae =";
        for (double v : result.test.horizon_mae) {
            os << ' ' << detail::fmt(v);
        }
        os << '\n';
    }
    {
        auto os = detail::open_out(dir / "metrics.csv");
        detail::write_metrics_csv_header(os);
        detail::write_metrics_csv_row(os, result.row);
    }
    return result;
}

inline ExperimentResult run_experiment(const ExperimentConfig &cfg) {
    cfg.validate();
    return run_experiment(cfg, prepare_data(cfg.dataset));
}

// ---------------------------------------------------------------------------
// Grid
// ---------------------------------------------------------------------------

struct GridSpec {
    std::vector<ModelType> models;
    std::vector<std::size_t> lookbacks;
    std::vector<std::size_t> horizons;
    std::vector<std::uint64_t> seeds;
};

struct GridResult {
    std::vector<ResultRow> rows;
    std::size_t failures = 0;
    [[nodiscard]] bool ok() const { return failures == 0; }
};

/// Mean and sample standard deviation of successful cells per
/// (model, L, T).
struct CellSummary {
    double mse_mean = 0, mse_std = 0, mae_mean = 0, mae_std = 0;
    std::size_t count = 0;
};

inline std::map<std::tuple<std::string, std::size_t, std::size_t>,
                CellSummary>
summarize(const std::vector<ResultRow> &rows) {
    std::map<std::tuple<std::string, std::size_t, std::size_t>,
             std::vector<const ResultRow *>>
        groups;
    for (const auto &r : rows) {
        if (r.ok) {
            groups[{r.model, r.lookback, r.horizon}].push_back(&r);
        }
    }
    std::map<std::tuple<std::string, std::size_t, std::size_t>, CellSummary>
        out;
    for (const auto &[key, members] : groups) {
        CellSummary s;
        s.count = members.size();
        for (const auto *r : members) {
            s.mse_mean += r->mse;
            s.mae_mean += r->mae;
        }
        s.mse_mean /= static_cast<double>(s.count);
        s.mae_mean /= static_cast<double>(s.count);
        if (s.count > 1) {
            for (const auto *r : members) {
                s.mse_std += (r->mse - s.mse_mean) * (r->mse - s.mse_mean);
                s.mae_std += (r->mae - s.mae_mean) * (r->mae - s.mae_mean);
            }
            s.mse_std = std::sqrt(s.mse_std / static_cast<double>(s.count - 1));
            s.mae_std = std::sqrt(s.mae_std / static_cast<double>(s.count - 1));
        }
        out[key] = s;
    }
    return out;
}

/// Rows (L, T); columns model x {MSE, MAE}. Multi-seed cells show mean±std.
inline void write_comparison_table(std::ostream &os, const GridSpec &spec,
                                   const std::vector<ResultRow> &rows) {
    const auto summary = summarize(rows);
    const bool multi_seed = spec.seeds.size() > 1;
    const int width = multi_seed ? 17 : 9;
    if (multi_seed) {
        os << "# cells are mean ± sample std over " << spec.seeds.size()
           << " seeds (extension: single-run numbers are not averaged)\n";
    }
    os << std::setw(5) << "L" << std::setw(6) << "T";
    for (auto m : spec.models) {
        const std::string name(config::to_string(m));
        os << " | " << std::setw(width) << (name + " MSE") << ' '
           << std::setw(width) << (name + " MAE");
    }
    os << '\n';
    auto cell = [&](double mean, double sd) {
        std::ostringstream c;
        c << std::fixed << std::setprecision(4) << mean;
        if (multi_seed) {
            c << "±" << std::setprecision(4) << sd;
        }
        return c.str();
    };
    for (auto lookback : spec.lookbacks) {
        for (auto horizon : spec.horizons) {
            os << std::setw(5) << lookback << std::setw(6) << horizon;
            for (auto m : spec.models) {
                const auto it =
                    summary.find({std::string(config::to_string(m)), lookback,
                                  horizon});
                if (it == summary.end()) {
                    os << " | " << std::setw(width) << "failed" << ' '
                       << std::setw(width) << "failed";
                } else {
                    os << " | " << std::setw(width)
                       << cell(it->second.mse_mean, it->second.mse_std) << ' '
                       << std::setw(width)
                       << cell(it->second.mae_mean, it->second.mae_std);
                }
            }
            os << '\n';
        }
    }
}

/// Cross product of models x lookbacks x horizons x seeds. Failing cells are
/// recorded and the grid continues.
inline GridResult run_grid(const ExperimentConfig &base, const GridSpec &spec,
                           std::ostream *progress = nullptr) {
    if (spec.models.empty()) {
        throw ConfigError("grid: model list is empty");
    }
    if (spec.lookbacks.empty()) {
        throw ConfigError("grid: lookback list is empty");
    }
    if (spec.horizons.empty()) {
        throw ConfigError("grid: horizon list is empty");
    }
    if (spec.seeds.empty()) {
        throw ConfigError("grid: seed list is empty");
    }
    const PreparedData prepared = prepare_data(base.dataset);
    fs::create_directories(base.output_dir);

    GridResult result;
    for (auto horizon : spec.horizons) {
        for (auto lookback : spec.lookbacks) {
            for (auto model : spec.models) {
                for (auto seed : spec.seeds) {
                    ExperimentConfig cell = base;
                    cell.model = model;
                    cell.lookback = lookback;
                    cell.horizon = horizon;
                    cell.seed = seed;
                    ResultRow row{std::string(config::to_string(model)),
                                  lookback,
                                  horizon,
                                  seed,
                                  std::numeric_limits<double>::quiet_NaN(),
                                  std::numeric_limits<double>::quiet_NaN(),
                                  false,
                                  {},
                                  {}};
                    try {
                        row = run_experiment(cell, prepared).row;
                    } catch (const std::exception &e) {
                        row.error = e.what();
                        ++result.failures;
                    }
                    if (progress != nullptr) {
                        *progress << run_name(cell) << ": "
                                  << (row.ok ? "mse=" + detail::fmt(row.mse) +
                                                   " mae=" +
                                                   detail::fmt(row.mae)
                                             : "FAILED: " + row.error)
                                  << '\n';
                    }
                    result.rows.push_back(std::move(row));
                }
            }
        }
    }

    const fs::path out(base.output_dir);
    {
        auto os = detail::open_out(out / "results.csv");
        os << "model,L,T,seed,mse,mae,status\n";
        for (const auto &r : result.rows) {
            os << r.model << ',' << r.lookback << ',' << r.horizon << ','
               << r.seed << ',' << detail::fmt(r.mse) << ','
               << detail::fmt(r.mae) << ',' << (r.ok ? "ok" : "failed")
               << '\n';
        }
    }
    {
        auto os = detail::open_out(out / "results.txt");
        write_comparison_table(os, spec, result.rows);
    }
    const auto summary = summarize(result.rows);
    for (auto horizon : spec.horizons) {
        for (auto model : spec.models) {
            const std::string name(config::to_string(model));
            auto os = detail::open_out(out / ("plot_T" + std::to_string(horizon) +
                                              "_" + name + ".csv"));
            os << "L,mse\n";
            std::vector<std::size_t> ls = spec.lookbacks;
            std::sort(ls.begin(), ls.end());
            ls.erase(std::unique(ls.begin(), ls.end()), ls.end());
            for (auto lookback : ls) {
                const auto it = summary.find({name, lookback, horizon});
                if (it != summary.end()) {
                    os << lookback << ',' << detail::fmt(it->second.mse_mean)
                       << '\n';
                }
            }
        }
    }
    return result;
}

} // namespace qultsf::experiment
