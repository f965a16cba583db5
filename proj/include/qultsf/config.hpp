#pragma once
/**
 * @file config.hpp
 * Experiment configuration and its INI-style text form.
 *
 *   [data]   path, delimiter (char or "tab"), timestamp (auto|yes|no),
 *            max_rows, skip_bad_rows, train_fraction, val_fraction,
 *            test_fraction
 *   [model]  type (qultsf|linear|nlinear|dlinear), lookback, horizon,
 *            qubits, layers, kernel
 *   [train]  batch_size, max_epochs, learning_rate, patience, shuffle,
 *            beta1, beta2, epsilon
 *   [run]    seed, output_dir
 *
 * learning_rate and max_epochs default per model type when left empty.
 */

#include <charconv>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "data.hpp"
#include "error.hpp"
#include "train.hpp"

namespace qultsf::config {

enum class ModelType { QuLTSF, Linear, NLinear, DLinear };

inline std::string_view to_string(ModelType t) {
    switch (t) {
    case ModelType::QuLTSF:
        return "qultsf";
    case ModelType::Linear:
        return "linear";
    case ModelType::NLinear:
        return "nlinear";
    case ModelType::DLinear:
        return "dlinear";
    }
    return "?";
}

inline ModelType parse_model_type(std::string_view s) {
    for (auto t : {ModelType::QuLTSF, ModelType::Linear, ModelType::NLinear,
                   ModelType::DLinear}) {
        if (s == to_string(t)) {
            return t;
        }
    }
    throw ConfigError("model.type: unknown model '" + std::string(s) +
                      "' (expected qultsf, linear, nlinear or dlinear)");
}

struct DatasetConfig {
    std::string path;
    char delimiter = ',';
    data::TimestampColumn timestamp = data::TimestampColumn::Auto;
    std::size_t max_rows = 0;
    bool skip_bad_rows = false;
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;

    [[nodiscard]] data::CsvOptions csv_options() const {
        return {delimiter, timestamp, max_rows, skip_bad_rows};
    }
    friend bool operator==(const DatasetConfig &,
                           const DatasetConfig &) = default;
};

struct ExperimentConfig {
    DatasetConfig dataset;
    ModelType model = ModelType::QuLTSF;
    std::size_t lookback = 336;
    std::size_t horizon = 96;
    std::size_t qubits = 10;
    std::size_t layers = 3;
    std::size_t kernel = 25;

    std::size_t batch_size = 32;
    std::optional<std::size_t> max_epochs;
    std::optional<double> learning_rate;
    std::size_t patience = 5;
    bool shuffle = true;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    std::uint64_t seed = 0;
    std::string output_dir = "runs";

    /// Training settings with model-dependent defaults filled in.
    [[nodiscard]] train::TrainConfig resolved_train() const {
        const bool hybrid = model == ModelType::QuLTSF;
        train::TrainConfig t;
        t.batch_size = batch_size;
        t.max_epochs = max_epochs.value_or(hybrid ? 100 : 20);
        t.learning_rate = learning_rate.value_or(hybrid ? 1e-3 : 5e-3);
        t.early_stop_patience = patience;
        t.seed = seed;
        t.shuffle = shuffle;
        t.beta1 = beta1;
        t.beta2 = beta2;
        t.epsilon = epsilon;
        return t;
    }

    void validate() const {
        if (dataset.path.empty()) {
            throw ConfigError("data.path must be set");
        }
        if (lookback < 1) {
            throw ConfigError("model.lookback must be >= 1");
        }
        if (horizon < 1) {
            throw ConfigError("model.horizon must be >= 1");
        }
        if (model == ModelType::QuLTSF) {
            if (qubits < 1 || qubits > 20) {
                throw ConfigError("model.qubits must be in [1, 20]");
            }
            if (layers < 1) {
                throw ConfigError("model.layers must be >= 1");
            }
        }
        if (model == ModelType::DLinear &&
            (kernel % 2 == 0 || kernel > 2 * lookback - 1)) {
            throw ConfigError("model.kernel must be odd and <= 2*lookback-1");
        }
        if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) ||
            !(epsilon > 0)) {
            throw ConfigError("train.beta1/beta2/epsilon out of range");
        }
        resolved_train().validate();
    }

    friend bool operator==(const ExperimentConfig &,
                           const ExperimentConfig &) = default;
};

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

template <class T> T parse_number(const std::string &key, std::string_view s) {
    T out{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ConfigError(key + ": invalid number '" + std::string(s) + "'");
    }
    return out;
}

inline bool parse_bool(const std::string &key, std::string_view s) {
    if (s == "true" || s == "yes" || s == "1" || s == "on") {
        return true;
    }
    if (s == "false" || s == "no" || s == "0" || s == "off") {
        return false;
    }
    throw ConfigError(key + ": expected true/false, got '" + std::string(s) +
                      "'");
}

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

} // namespace detail

/// Sets one `section.key` from its text value; unknown keys are errors.
inline void set_field(ExperimentConfig &c, const std::string &key,
                      const std::string &raw) {
    using detail::parse_bool;
    using detail::parse_number;
    const std::string v = detail::trim(raw);
    auto size = [&] { return parse_number<std::size_t>(key, v); };
    auto real = [&] { return parse_number<double>(key, v); };

    if (key == "data.path") {
        c.dataset.path = v;
    } else if (key == "data.delimiter") {
        if (v == "tab" || v == "\\t") {
            c.dataset.delimiter = '\t';
        } else if (v == "comma" || v == ",") {
            c.dataset.delimiter = ',';
        } else if (v == "semicolon" || v == ";") {
            c.dataset.delimiter = ';';
        } else if (v.size() == 1) {
            c.dataset.delimiter = v.front();
        } else {
            throw ConfigError("data.delimiter: expected a single character");
        }
    } else if (key == "data.timestamp") {
        if (v == "auto") {
            c.dataset.timestamp = data::TimestampColumn::Auto;
        } else {
            c.dataset.timestamp = parse_bool(key, v)
                                      ? data::TimestampColumn::Present
                                      : data::TimestampColumn::Absent;
        }
    } else if (key == "data.max_rows") {
        c.dataset.max_rows = size();
    } else if (key == "data.skip_bad_rows") {
        c.dataset.skip_bad_rows = parse_bool(key, v);
    } else if (key == "data.train_fraction") {
        c.dataset.train_fraction = real();
    } else if (key == "data.val_fraction") {
        c.dataset.val_fraction = real();
    } else if (key == "data.test_fraction") {
        c.dataset.test_fraction = real();
    } else if (key == "model.type") {
        c.model = parse_model_type(v);
    } else if (key == "model.lookback") {
        c.lookback = size();
    } else if (key == "model.horizon") {
        c.horizon = size();
    } else if (key == "model.qubits") {
        c.qubits = size();
    } else if (key == "model.layers") {
        c.layers = size();
    } else if (key == "model.kernel") {
        c.kernel = size();
    } else if (key == "train.batch_size") {
        c.batch_size = size();
    } else if (key == "train.max_epochs") {
        c.max_epochs = v.empty() ? std::nullopt : std::optional{size()};
    } else if (key == "train.learning_rate") {
        c.learning_rate = v.empty() ? std::nullopt : std::optional{real()};
    } else if (key == "train.patience") {
        c.patience = size();
    } else if (key == "train.shuffle") {
        c.shuffle = parse_bool(key, v);
    } else if (key == "train.beta1") {
        c.beta1 = real();
    } else if (key == "train.beta2") {
        c.beta2 = real();
    } else if (key == "train.epsilon") {
        c.epsilon = real();
    } else if (key == "run.seed") {
        c.seed = parse_number<std::uint64_t>(key, v);
    } else if (key == "run.output_dir") {
        c.output_dir = v;
    } else {
        throw ConfigError("unknown configuration key '" + key + "'");
    }
}

/// Applies a `section.key=value` override.
inline void apply_override(ExperimentConfig &c, std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos) {
        throw ConfigError("override '" + std::string(assignment) +
                          "' is not of the form section.key=value");
    }
    set_field(c, detail::trim(assignment.substr(0, eq)),
              std::string(assignment.substr(eq + 1)));
}

inline ExperimentConfig parse_config(std::istream &in,
                                     ExperimentConfig base = {}) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::ini_parser::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error &e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    for (const auto &[section, keys] : tree) {
        if (keys.empty() && !keys.data().empty()) {
            throw ConfigError("config: key '" + section +
                              "' must be inside a [section]");
        }
        for (const auto &[key, value] : keys) {
            set_field(base, section + "." + key, value.data());
        }
    }
    return base;
}

inline ExperimentConfig parse_config(const std::string &text) {
    std::istringstream in(text);
    return parse_config(in);
}

inline void write_config(std::ostream &os, const ExperimentConfig &c) {
    using detail::format_double;
    const auto delim = c.dataset.delimiter == '\t'   ? std::string("tab")
                       : c.dataset.delimiter == ';' ? std::string("semicolon")
                                                    : std::string(1, c.dataset.delimiter);
    const char *stamp = c.dataset.timestamp == data::TimestampColumn::Auto
                            ? "auto"
                        : c.dataset.timestamp == data::TimestampColumn::Present
                            ? "yes"
                            : "no";
    os << "[data]\n"
       << "path = " << c.dataset.path << '\n'
       << "delimiter = " << delim << '\n'
       << "timestamp = " << stamp << '\n'
       << "max_rows = " << c.dataset.max_rows << '\n'
       << "skip_bad_rows = " << (c.dataset.skip_bad_rows ? "true" : "false")
       << '\n'
       << "train_fraction = " << format_double(c.dataset.train_fraction) << '\n'
       << "val_fraction = " << format_double(c.dataset.val_fraction) << '\n'
       << "test_fraction = " << format_double(c.dataset.test_fraction) << '\n'
       << "\n[model]\n"
       << "type = " << to_string(c.model) << '\n'
       << "lookback = " << c.lookback << '\n'
       << "horizon = " << c.horizon << '\n'
       << "qubits = " << c.qubits << '\n'
       << "layers = " << c.layers << '\n'
       << "kernel = " << c.kernel << '\n'
       << "\n[train]\n"
       << "batch_size = " << c.batch_size << '\n'
       << "max_epochs = "
       << (c.max_epochs ? std::to_string(*c.max_epochs) : std::string()) << '\n'
       << "learning_rate = "
       << (c.learning_rate ? format_double(*c.learning_rate) : std::string())
       << '\n'
       << "patience = " << c.patience << '\n'
       << "shuffle = " << (c.shuffle ? "true" : "false") << '\n'
       << "beta1 = " << format_double(c.beta1) << '\n'
       << "beta2 = " << format_double(c.beta2) << '\n'
       << "epsilon = " << format_double(c.epsilon) << '\n'
       << "\n[run]\n"
       << "seed = " << c.seed << '\n'
       << "output_dir = " << c.output_dir << '\n';
}

inline std::string to_text(const ExperimentConfig &c) {
    std::ostringstream os;
    write_config(os, c);
    return os.str();
}

} // namespace qultsf::config
