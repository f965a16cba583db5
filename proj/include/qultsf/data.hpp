#pragma once
/**
 * @file data.hpp
 * Multivariate series ingestion, chronological splits, train-only
 * standardization and stride-1 sliding windows per channel.
 */

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace qultsf::data {

/// Values stored channel-major so each channel's history is contiguous.
class TimeSeriesTable {
  public:
    TimeSeriesTable() = default;

    TimeSeriesTable(std::vector<std::string> channel_names,
                    std::size_t num_timestamps)
        : channel_names_(std::move(channel_names)),
          num_timestamps_{num_timestamps},
          values_(channel_names_.size() * num_timestamps, 0.0) {}

    [[nodiscard]] std::size_t num_channels() const {
        return channel_names_.size();
    }
    [[nodiscard]] std::size_t num_timestamps() const { return num_timestamps_; }
    [[nodiscard]] const std::vector<std::string> &channel_names() const {
        return channel_names_;
    }

    [[nodiscard]] double value(std::size_t t, std::size_t channel) const {
        return values_[channel * num_timestamps_ + t];
    }
    [[nodiscard]] double &value(std::size_t t, std::size_t channel) {
        return values_[channel * num_timestamps_ + t];
    }

    [[nodiscard]] std::span<const double> channel(std::size_t m) const {
        return std::span<const double>(values_).subspan(m * num_timestamps_,
                                                        num_timestamps_);
    }
    [[nodiscard]] std::span<double> channel(std::size_t m) {
        return std::span<double>(values_).subspan(m * num_timestamps_,
                                                  num_timestamps_);
    }

    /// Timestamp strings when the source had a timestamp column.
    std::vector<std::string> timestamps;
    /// Rows dropped during lenient ingestion.
    std::size_t rejected_rows = 0;

    /// First `rows` timestamps.
    [[nodiscard]] TimeSeriesTable head(std::size_t rows) const {
        rows = std::min(rows, num_timestamps_);
        TimeSeriesTable out(channel_names_, rows);
        for (std::size_t m = 0; m < num_channels(); ++m) {
            const auto src = channel(m).first(rows);
            std::copy(src.begin(), src.end(), out.channel(m).begin());
        }
        if (!timestamps.empty()) {
            out.timestamps.assign(timestamps.begin(),
                                  timestamps.begin() +
                                      static_cast<std::ptrdiff_t>(rows));
        }
        return out;
    }

    friend bool operator==(const TimeSeriesTable &,
                           const TimeSeriesTable &) = default;

  private:
    std::vector<std::string> channel_names_;
    std::size_t num_timestamps_ = 0;
    std::vector<double> values_;
};

enum class TimestampColumn { Auto, Present, Absent };

struct CsvOptions {
    char delimiter = ',';
    TimestampColumn timestamp = TimestampColumn::Auto;
    /// Keep only the first `max_rows` data rows (0 = all).
    std::size_t max_rows = 0;
    /// Drop rows with unparseable cells (counted in rejected_rows) instead of
    /// failing.
    bool skip_bad_rows = false;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    s = s.substr(first, last - first + 1);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') {
        s = s.substr(1, s.size() - 2);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line,
                                           char delimiter) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delimiter, start);
        out.push_back(trim(line.substr(start, pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

inline bool parse_double(std::string_view s, double &out) {
    if (s.empty()) {
        return false;
    }
    if (s.front() == '+') {
        s.remove_prefix(1);
    }
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

} // namespace detail

/// Reads a delimited file with a header row. The first column is treated as
/// a timestamp when configured so, or (Auto) when its first data cell is not
/// numeric. Errors carry the 1-based line number.
inline TimeSeriesTable load_csv(std::istream &in, const CsvOptions &opts = {}) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw IngestError("load_csv: missing header row");
    }
    ++line_no;
    std::vector<std::string> header;
    for (auto cell : detail::split(line, opts.delimiter)) {
        header.emplace_back(cell);
    }

    std::vector<std::vector<double>> rows;
    std::vector<std::string> stamps;
    std::size_t rejected = 0;
    bool has_timestamp = opts.timestamp == TimestampColumn::Present;
    bool decided = opts.timestamp != TimestampColumn::Auto;
    std::size_t expected = header.size();

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        if (opts.max_rows != 0 && rows.size() >= opts.max_rows) {
            break;
        }
        const auto cells = detail::split(line, opts.delimiter);
        if (cells.size() != expected) {
            throw IngestError("load_csv: line " + std::to_string(line_no) +
                              " has " + std::to_string(cells.size()) +
                              " columns, header has " +
                              std::to_string(expected));
        }
        if (!decided) {
            double probe = 0.0;
            has_timestamp = !detail::parse_double(cells.front(), probe);
            decided = true;
        }
        const std::size_t first = has_timestamp ? 1 : 0;
        if (cells.size() <= first) {
            throw IngestError("load_csv: no numeric columns");
        }
        std::vector<double> row(cells.size() - first);
        bool ok = true;
        std::size_t bad_col = 0;
        for (std::size_t c = first; c < cells.size(); ++c) {
            if (!detail::parse_double(cells[c], row[c - first])) {
                ok = false;
                bad_col = c;
                break;
            }
        }
        if (!ok) {
            if (opts.skip_bad_rows) {
                ++rejected;
                continue;
            }
            throw IngestError("load_csv: line " + std::to_string(line_no) +
                              ", column '" + header[bad_col] +
                              "': non-numeric value '" +
                              std::string(cells[bad_col]) + "'");
        }
        if (has_timestamp) {
            stamps.emplace_back(cells.front());
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw IngestError("load_csv: no data rows");
    }

    std::vector<std::string> names;
    for (std::size_t c = has_timestamp ? 1 : 0; c < header.size(); ++c) {
        names.push_back(header[c]);
    }
    TimeSeriesTable table(std::move(names), rows.size());
    for (std::size_t t = 0; t < rows.size(); ++t) {
        for (std::size_t m = 0; m < rows[t].size(); ++m) {
            table.value(t, m) = rows[t][m];
        }
    }
    table.timestamps = std::move(stamps);
    table.rejected_rows = rejected;
    return table;
}

inline TimeSeriesTable load_csv(const std::string &path,
                                const CsvOptions &opts = {}) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("load_csv: cannot open '" + path + "'");
    }
    return load_csv(in, opts);
}

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

/// Half-open index range [begin, end).
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;
    [[nodiscard]] std::size_t size() const { return end - begin; }
    friend bool operator==(const IndexRange &, const IndexRange &) = default;
};

struct SplitSpec {
    double train_fraction = 0.7;
    double val_fraction = 0.1;
    double test_fraction = 0.2;
    IndexRange train;
    IndexRange val;
    IndexRange test;
};

/// Chronological train | val | test with boundaries at
/// floor(train_fraction * n) and floor((train_fraction + val_fraction) * n).
inline SplitSpec make_splits(std::size_t num_timestamps, double train_fraction,
                             double val_fraction, double test_fraction) {
    const bool positive =
        train_fraction > 0 && val_fraction > 0 && test_fraction > 0;
    const double total = train_fraction + val_fraction + test_fraction;
    if (!positive || std::abs(total - 1.0) > 1e-9) {
        throw InvalidInput("make_splits: fractions must be positive and sum "
                           "to 1");
    }
    const auto n = static_cast<double>(num_timestamps);
    // guard against 0.7 + 0.1 = 0.7999... landing one row short
    constexpr double slack = 1e-9;
    const auto b1 =
        static_cast<std::size_t>(std::floor(train_fraction * n + slack));
    const auto b2 = static_cast<std::size_t>(
        std::floor((train_fraction + val_fraction) * n + slack));
    SplitSpec s{train_fraction, val_fraction, test_fraction, {}, {}, {}};
    s.train = {0, std::min(b1, num_timestamps)};
    s.val = {s.train.end, std::min(b2, num_timestamps)};
    s.test = {s.val.end, num_timestamps};
    return s;
}

inline SplitSpec make_splits(const TimeSeriesTable &table,
                             double train_fraction = 0.7,
                             double val_fraction = 0.1,
                             double test_fraction = 0.2) {
    return make_splits(table.num_timestamps(), train_fraction, val_fraction,
                       test_fraction);
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

class Standardizer {
  public:
    Standardizer() = default;
    Standardizer(std::vector<double> mean, std::vector<double> stddev,
                 std::vector<std::string> warnings = {})
        : mean_(std::move(mean)), stddev_(std::move(stddev)),
          warnings_(std::move(warnings)) {}

    /// Per-channel mean and population standard deviation over `train`.
    /// Channels that are constant on the train range get deviation 1.
    static Standardizer fit(const TimeSeriesTable &table, IndexRange train) {
        if (train.size() == 0 || train.end > table.num_timestamps()) {
            throw InvalidInput("Standardizer::fit: empty or invalid train "
                               "range");
        }
        std::vector<double> mean(table.num_channels());
        std::vector<double> stddev(table.num_channels());
        std::vector<std::string> warnings;
        const auto count = static_cast<double>(train.size());
        for (std::size_t m = 0; m < table.num_channels(); ++m) {
            const auto col = table.channel(m);
            double sum = 0.0;
            for (std::size_t t = train.begin; t < train.end; ++t) {
                sum += col[t];
            }
            const double mu = sum / count;
            double sq = 0.0;
            for (std::size_t t = train.begin; t < train.end; ++t) {
                sq += (col[t] - mu) * (col[t] - mu);
            }
            double sd = std::sqrt(sq / count);
            if (!(sd > 1e-12)) {
                warnings.push_back("channel '" + table.channel_names()[m] +
                                   "' is constant on the train range; using "
                                   "standard deviation 1");
                sd = 1.0;
            }
            mean[m] = mu;
            stddev[m] = sd;
        }
        return {std::move(mean), std::move(stddev), std::move(warnings)};
    }

    [[nodiscard]] TimeSeriesTable transform(TimeSeriesTable table) const {
        check(table);
        for (std::size_t m = 0; m < table.num_channels(); ++m) {
            for (auto &v : table.channel(m)) {
                v = (v - mean_[m]) / stddev_[m];
            }
        }
        return table;
    }

    [[nodiscard]] TimeSeriesTable inverse(TimeSeriesTable table) const {
        check(table);
        for (std::size_t m = 0; m < table.num_channels(); ++m) {
            for (auto &v : table.channel(m)) {
                v = v * stddev_[m] + mean_[m];
            }
        }
        return table;
    }

    [[nodiscard]] const std::vector<double> &mean() const { return mean_; }
    [[nodiscard]] const std::vector<double> &stddev() const { return stddev_; }
    [[nodiscard]] const std::vector<std::string> &warnings() const {
        return warnings_;
    }

    friend bool operator==(const Standardizer &, const Standardizer &) = default;

  private:
    void check(const TimeSeriesTable &table) const {
        if (table.num_channels() != mean_.size()) {
            throw InvalidInput("Standardizer: channel count mismatch");
        }
    }

    std::vector<double> mean_;
    std::vector<double> stddev_;
    std::vector<std::string> warnings_;
};

inline std::pair<TimeSeriesTable, Standardizer>
standardize(const TimeSeriesTable &table, const SplitSpec &split) {
    auto scaler = Standardizer::fit(table, split.train);
    auto transformed = scaler.transform(table);
    return {std::move(transformed), std::move(scaler)};
}

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

/// One (lookback, target) pair. The spans view the table they were cut from,
/// which must outlive the sample.
struct WindowSample {
    std::span<const double> lookback;
    std::span<const double> target;
    std::size_t channel;
    std::size_t start_time;
};

/// Number of stride-1 windows whose target lies inside `range`; lookbacks
/// may reach back before range.begin but never before index 0.
inline std::size_t window_count(IndexRange range, std::size_t lookback,
                                std::size_t horizon) {
    const std::size_t first_target = std::max(range.begin, lookback);
    if (range.end < horizon || first_target + horizon > range.end) {
        return 0;
    }
    return range.end - horizon - first_target + 1;
}

inline std::vector<WindowSample> window_iter(const TimeSeriesTable &table,
                                             IndexRange range,
                                             std::size_t lookback,
                                             std::size_t horizon,
                                             std::size_t channel) {
    qultsf::detail::require(lookback >= 1 && horizon >= 1,
                            "window_iter: L and T must be positive");
    qultsf::detail::require(channel < table.num_channels(),
                            "window_iter: channel out of range");
    qultsf::detail::require(range.begin <= range.end &&
                                range.end <= table.num_timestamps(),
                            "window_iter: range outside table");
    const auto count = window_count(range, lookback, horizon);
    std::vector<WindowSample> out;
    out.reserve(count);
    const auto series = table.channel(channel);
    const std::size_t first_start = std::max(range.begin, lookback) - lookback;
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t s = first_start + i;
        out.push_back({series.subspan(s, lookback),
                       series.subspan(s + lookback, horizon), channel, s});
    }
    return out;
}

/// Windows of every channel, channel-major then start_time ascending.
inline std::vector<WindowSample> windows(const TimeSeriesTable &table,
                                         IndexRange range,
                                         std::size_t lookback,
                                         std::size_t horizon) {
    std::vector<WindowSample> out;
    out.reserve(window_count(range, lookback, horizon) *
                table.num_channels());
    for (std::size_t m = 0; m < table.num_channels(); ++m) {
        auto w = window_iter(table, range, lookback, horizon, m);
        out.insert(out.end(), w.begin(), w.end());
    }
    return out;
}

} // namespace qultsf::data
