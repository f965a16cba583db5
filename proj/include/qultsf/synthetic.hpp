#pragma once
/**
 * @file synthetic.hpp
 * Weather-like stand-in series for smoke runs and tests: per-channel daily
 * and slower seasonal cycles plus AR(1) noise at 10-minute resolution.
 */

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "data.hpp"

namespace qultsf::data {

inline TimeSeriesTable synthetic_series(std::size_t rows, std::size_t channels,
                                        std::uint64_t seed) {
    std::vector<std::string> names;
    for (std::size_t m = 0; m < channels; ++m) {
        names.push_back("ch" + std::to_string(m));
    }
    TimeSeriesTable table(std::move(names), rows);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr double day = 144.0; // 10-minute steps
    for (std::size_t m = 0; m < channels; ++m) {
        const double level = 10.0 * unit(rng) - 5.0;
        const double scale = 0.5 + 4.0 * unit(rng);
        const double phase = 2.0 * std::numbers::pi * unit(rng);
        const double slow = 2.0 + 10.0 * unit(rng);
        const double rho = 0.8 + 0.19 * unit(rng);
        double ar = 0.0;
        auto col = table.channel(m);
        for (std::size_t t = 0; t < rows; ++t) {
            const double tt = static_cast<double>(t);
            ar = rho * ar + 0.3 * noise(rng);
            col[t] = level +
                     scale * std::sin(2.0 * std::numbers::pi * tt / day + phase) +
                     0.5 * scale *
                         std::sin(2.0 * std::numbers::pi * tt / (slow * day)) +
                     scale * ar;
        }
    }
    for (std::size_t t = 0; t < rows; ++t) {
        table.timestamps.push_back("t" + std::to_string(t));
    }
    return table;
}

/// Writes `table` as CSV with a leading `date` column.
inline void write_csv(std::ostream &os, const TimeSeriesTable &table) {
    os << "date";
    for (const auto &n : table.channel_names()) {
        os << ',' << n;
    }
    os << '\n' << std::setprecision(17);
    for (std::size_t t = 0; t < table.num_timestamps(); ++t) {
        os << (t < table.timestamps.size() ? table.timestamps[t]
                                           : std::to_string(t));
        for (std::size_t m = 0; m < table.num_channels(); ++m) {
            os << ',' << table.value(t, m);
        }
        os << '\n';
    }
}

} // namespace qultsf::data
