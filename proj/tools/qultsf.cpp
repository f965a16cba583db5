// qultsf: train/evaluate forecasters and run experiment grids.
//
//   qultsf run    -c exp.ini [--set section.key=value]... [-o DIR] [--seed N]
//   qultsf grid   -c exp.ini --models qultsf,linear --lookbacks 336
//                 --horizons 96,192,336,720 [--seeds 0,1,2]
//   qultsf config -c exp.ini [--set ...]     print the resolved configuration
//   qultsf synth  -o data.csv [--rows N] [--channels M] [--seed S]

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qultsf/config.hpp"
#include "qultsf/experiment.hpp"
#include "qultsf/synthetic.hpp"

namespace {

using qultsf::config::ExperimentConfig;

struct CommonOptions {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> output_dir;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App *cmd, CommonOptions &opts) {
    cmd->add_option("-c,--config", opts.config_path, "experiment config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", opts.overrides,
                    "override a config field, e.g. --set train.max_epochs=5");
    cmd->add_option("-o,--output", opts.output_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "random seed");
}

ExperimentConfig resolve(const CommonOptions &opts) {
    ExperimentConfig cfg;
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path);
        cfg = qultsf::config::parse_config(in);
    }
    for (const auto &o : opts.overrides) {
        qultsf::config::apply_override(cfg, o);
    }
    if (opts.output_dir) {
        cfg.output_dir = *opts.output_dir;
    }
    if (opts.seed) {
        cfg.seed = *opts.seed;
    }
    return cfg;
}

void warn_scaler(const qultsf::data::Standardizer &scaler) {
    for (const auto &w : scaler.warnings()) {
        std::cerr << "warning: " << w << '\n';
    }
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"Hybrid quantum-classical long-term forecasting toolkit"};
    app.require_subcommand(1);

    CommonOptions run_opts;
    auto *run = app.add_subcommand("run", "train and evaluate one model");
    add_common(run, run_opts);

    CommonOptions grid_opts;
    std::vector<std::string> grid_models;
    std::vector<std::size_t> grid_lookbacks;
    std::vector<std::size_t> grid_horizons;
    std::vector<std::uint64_t> grid_seeds;
    auto *grid = app.add_subcommand("grid", "run a model x L x T x seed grid");
    add_common(grid, grid_opts);
    grid->add_option("--models", grid_models, "model list")
        ->delimiter(',')
        ->required();
    grid->add_option("--lookbacks", grid_lookbacks, "lookback (L) list")
        ->delimiter(',');
    grid->add_option("--horizons", grid_horizons, "horizon (T) list")
        ->delimiter(',');
    grid->add_option("--seeds", grid_seeds, "seed list")->delimiter(',');

    CommonOptions show_opts;
    auto *show = app.add_subcommand("config", "print the resolved config");
    add_common(show, show_opts);

    std::string synth_out;
    std::size_t synth_rows = 52696;
    std::size_t synth_channels = 21;
    std::uint64_t synth_seed = 0;
    auto *synth =
        app.add_subcommand("synth", "write a synthetic weather-like CSV");
    synth->add_option("-o,--output", synth_out, "output CSV path")->required();
    synth->add_option("--rows", synth_rows, "timestamps");
    synth->add_option("--channels", synth_channels, "channels");
    synth->add_option("--seed", synth_seed, "seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            const auto cfg = resolve(run_opts);
            cfg.validate();
            const auto prepared = qultsf::experiment::prepare_data(cfg.dataset);
            warn_scaler(prepared.scaler);
            const auto res = qultsf::experiment::run_experiment(cfg, prepared);
            std::cout << qultsf::experiment::run_name(cfg)
                      << ": mse=" << res.row.mse << " mae=" << res.row.mae
                      << " epochs=" << res.log.epochs.size()
                      << " dir=" << res.row.run_dir << '\n';
            return 0;
        }
        if (*grid) {
            auto cfg = resolve(grid_opts);
            if (cfg.dataset.path.empty()) {
                throw qultsf::ConfigError("data.path must be set");
            }
            qultsf::experiment::GridSpec spec;
            for (const auto &m : grid_models) {
                spec.models.push_back(qultsf::config::parse_model_type(m));
            }
            spec.lookbacks = grid_lookbacks.empty()
                                 ? std::vector<std::size_t>{cfg.lookback}
                                 : grid_lookbacks;
            spec.horizons = grid_horizons.empty()
                                ? std::vector<std::size_t>{cfg.horizon}
                                : grid_horizons;
            spec.seeds = grid_seeds.empty()
                             ? std::vector<std::uint64_t>{cfg.seed}
                             : grid_seeds;
            const auto res =
                qultsf::experiment::run_grid(cfg, spec, &std::cout);
            std::ifstream table(cfg.output_dir + "/results.txt");
            std::cout << table.rdbuf();
            if (!res.ok()) {
                std::cerr << res.failures << " grid cell(s) failed\n";
                return 1;
            }
            return 0;
        }
        if (*show) {
            qultsf::config::write_config(std::cout, resolve(show_opts));
            return 0;
        }
        if (*synth) {
            const auto parent = std::filesystem::path(synth_out).parent_path();
            if (!parent.empty()) {
                std::filesystem::create_directories(parent);
            }
            std::ofstream os(synth_out);
            if (!os) {
                std::cerr << "cannot write " << synth_out << '\n';
                return 1;
            }
            qultsf::data::write_csv(
                os, qultsf::data::synthetic_series(synth_rows, synth_channels,
                                                   synth_seed));
            return 0;
        }
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
