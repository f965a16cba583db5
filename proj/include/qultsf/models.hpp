#pragma once
/**
 * @file models.hpp
 * Univariate forecasters mapping a length-L lookback to a length-T forecast:
 * the hybrid quantum model and the Linear / NLinear / DLinear baselines.
 *
 * Every trainable model exposes the same surface, captured by the
 * TrainableForecaster concept: forward() returns a Trace whose `prediction`
 * member is the forecast, backward() accumulates parameter gradients from
 * d(loss)/d(prediction) and returns d(loss)/d(x), parameters() lists the
 * tensors for the optimizer and checkpoints.
 */

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "nn.hpp"
#include "qsim.hpp"

namespace qultsf::models {

template <class M>
concept Forecaster = requires(const M &m, std::span<const double> x) {
    { m.lookback() } -> std::convertible_to<std::size_t>;
    { m.horizon() } -> std::convertible_to<std::size_t>;
    { m.predict(x) } -> std::same_as<std::vector<double>>;
};

template <class M>
concept TrainableForecaster =
    Forecaster<M> &&
    requires(M &m, const M &cm, std::span<const double> x,
             const typename M::Trace &trace, std::span<const double> up) {
        { cm.forward(x) } -> std::same_as<typename M::Trace>;
        { trace.prediction } -> std::convertible_to<std::vector<double>>;
        { m.backward(x, trace, up) } -> std::same_as<std::vector<double>>;
        { m.parameters() } -> std::same_as<std::vector<nn::ParamBlock>>;
        m.zero_grad();
        { cm.parameter_count() } -> std::convertible_to<std::size_t>;
    };

namespace detail {

inline void check_input(std::size_t expected, std::size_t got,
                        const char *who) {
    qultsf::detail::require(expected == got,
                            std::string(who) + ": lookback length mismatch");
}

} // namespace detail

/// 2^N*L + 2^N + 3NK + T*N + T.
constexpr std::size_t qultsf_parameter_count(std::size_t qubits,
                                             std::size_t layers,
                                             std::size_t lookback,
                                             std::size_t horizon) {
    const std::size_t dim = std::size_t{1} << qubits;
    return dim * lookback + dim + 3 * qubits * layers + horizon * qubits +
           horizon;
}

// ---------------------------------------------------------------------------
// Hybrid model: Linear(L -> 2^N) -> amplitude embedding -> ansatz -> <Z_q>
//               -> Linear(N -> T)
// ---------------------------------------------------------------------------

class QuLTSFModel {
  public:
    static constexpr std::string_view kind = "qultsf";

    struct Trace {
        std::vector<double> y1;         ///< input layer output, length 2^N
        std::vector<double> y2;         ///< <Z_q>, length N
        std::vector<double> prediction; ///< length T
    };

    QuLTSFModel(std::size_t lookback, std::size_t horizon, std::size_t qubits,
                std::size_t layers)
        : input_layer_(lookback, qsim::Statevector::dimension_for(qubits)),
          circuit_(layers, qubits), output_layer_(qubits, horizon),
          circuit_grad_(circuit_.size(), 0.0) {}

    /// Fan-in uniform classical weights, zero biases, angles ~ U(0, 2 pi).
    template <class Rng>
    static QuLTSFModel initialized(std::size_t lookback, std::size_t horizon,
                                   std::size_t qubits, std::size_t layers,
                                   Rng &rng) {
        QuLTSFModel m(lookback, horizon, qubits, layers);
        m.input_layer_ = nn::LinearLayer::fan_in_uniform(
            lookback, qsim::Statevector::dimension_for(qubits), rng);
        std::uniform_real_distribution<double> angle(0.0,
                                                     2.0 * std::numbers::pi);
        for (auto &a : m.circuit_.angles()) {
            a = angle(rng);
        }
        m.output_layer_ = nn::LinearLayer::fan_in_uniform(qubits, horizon, rng);
        return m;
    }

    [[nodiscard]] std::size_t lookback() const {
        return input_layer_.in_dim();
    }
    [[nodiscard]] std::size_t horizon() const {
        return output_layer_.out_dim();
    }
    [[nodiscard]] std::size_t qubits() const { return circuit_.num_qubits(); }
    [[nodiscard]] std::size_t layers() const { return circuit_.num_layers(); }

    [[nodiscard]] Trace forward(std::span<const double> x) const {
        detail::check_input(lookback(), x.size(), "QuLTSFModel::forward");
        Trace t;
        t.y1 = input_layer_.forward(x);
        t.y2 = qsim::expectations(t.y1, circuit_);
        t.prediction = output_layer_.forward(t.y2);
        return t;
    }

    [[nodiscard]] std::vector<double>
    predict(std::span<const double> x) const {
        return forward(x).prediction;
    }

    std::vector<double> backward(std::span<const double> x, const Trace &trace,
                                 std::span<const double> upstream) {
        detail::check_input(lookback(), x.size(), "QuLTSFModel::backward");
        qultsf::detail::require(upstream.size() == horizon() &&
                                    trace.y1.size() ==
                                        input_layer_.out_dim() &&
                                    trace.y2.size() == qubits(),
                                "QuLTSFModel::backward: shape mismatch");
        const auto dy2 = output_layer_.backward(trace.y2, upstream);
        const auto vjp = qsim::vjp_adjoint(trace.y1, circuit_, dy2);
        if (!circuit_frozen_) {
            for (std::size_t i = 0; i < circuit_grad_.size(); ++i) {
                circuit_grad_[i] += vjp.d_params[i];
            }
        }
        return input_layer_.backward(x, vjp.d_input);
    }

    [[nodiscard]] std::vector<nn::ParamBlock> parameters() {
        std::vector<nn::ParamBlock> out;
        input_layer_.append_parameters("input", out);
        if (!circuit_frozen_) {
            out.push_back({"circuit.angles", circuit_.num_layers(),
                           3 * circuit_.num_qubits(), circuit_.angles(),
                           circuit_grad_});
        }
        output_layer_.append_parameters("output", out);
        return out;
    }

    void zero_grad() {
        input_layer_.zero_grad();
        output_layer_.zero_grad();
        std::fill(circuit_grad_.begin(), circuit_grad_.end(), 0.0);
    }

    /// Excludes the circuit angles from training and checkpoints.
    void freeze_circuit(bool frozen) { circuit_frozen_ = frozen; }

    [[nodiscard]] std::size_t parameter_count() const {
        return input_layer_.parameter_count() + circuit_.size() +
               output_layer_.parameter_count();
    }
    [[nodiscard]] std::size_t circuit_parameter_count() const {
        return circuit_.size();
    }

    [[nodiscard]] nn::LinearLayer &input_layer() { return input_layer_; }
    [[nodiscard]] const nn::LinearLayer &input_layer() const {
        return input_layer_;
    }
    [[nodiscard]] qsim::CircuitParams &circuit() { return circuit_; }
    [[nodiscard]] const qsim::CircuitParams &circuit() const {
        return circuit_;
    }
    [[nodiscard]] nn::LinearLayer &output_layer() { return output_layer_; }
    [[nodiscard]] const nn::LinearLayer &output_layer() const {
        return output_layer_;
    }
    [[nodiscard]] std::span<const double> circuit_grad() const {
        return circuit_grad_;
    }

  private:
    nn::LinearLayer input_layer_;
    qsim::CircuitParams circuit_;
    nn::LinearLayer output_layer_;
    std::vector<double> circuit_grad_;
    bool circuit_frozen_ = false;
};

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

/// Output of a single-layer baseline; DLinear also keeps its decomposition.
struct LinearTrace {
    std::vector<double> prediction;
};

class LinearModel {
  public:
    static constexpr std::string_view kind = "linear";
    using Trace = LinearTrace;

    LinearModel(std::size_t lookback, std::size_t horizon)
        : layer_(lookback, horizon) {}

    template <class Rng>
    static LinearModel initialized(std::size_t lookback, std::size_t horizon,
                                   Rng &rng) {
        LinearModel m(lookback, horizon);
        m.layer_ = nn::LinearLayer::fan_in_uniform(lookback, horizon, rng);
        return m;
    }

    [[nodiscard]] std::size_t lookback() const { return layer_.in_dim(); }
    [[nodiscard]] std::size_t horizon() const { return layer_.out_dim(); }

    [[nodiscard]] Trace forward(std::span<const double> x) const {
        detail::check_input(lookback(), x.size(), "LinearModel::forward");
        return {layer_.forward(x)};
    }
    [[nodiscard]] std::vector<double>
    predict(std::span<const double> x) const {
        return forward(x).prediction;
    }
    std::vector<double> backward(std::span<const double> x, const Trace &,
                                 std::span<const double> upstream) {
        return layer_.backward(x, upstream);
    }

    [[nodiscard]] std::vector<nn::ParamBlock> parameters() {
        std::vector<nn::ParamBlock> out;
        layer_.append_parameters("linear", out);
        return out;
    }
    void zero_grad() { layer_.zero_grad(); }
    [[nodiscard]] std::size_t parameter_count() const {
        return layer_.parameter_count();
    }

    [[nodiscard]] nn::LinearLayer &layer() { return layer_; }
    [[nodiscard]] const nn::LinearLayer &layer() const { return layer_; }

  private:
    nn::LinearLayer layer_;
};

/// Subtracts the last lookback value, applies a linear map, adds it back.
class NLinearModel {
  public:
    static constexpr std::string_view kind = "nlinear";
    using Trace = LinearTrace;

    NLinearModel(std::size_t lookback, std::size_t horizon)
        : layer_(lookback, horizon) {}

    template <class Rng>
    static NLinearModel initialized(std::size_t lookback, std::size_t horizon,
                                    Rng &rng) {
        NLinearModel m(lookback, horizon);
        m.layer_ = nn::LinearLayer::fan_in_uniform(lookback, horizon, rng);
        return m;
    }

    [[nodiscard]] std::size_t lookback() const { return layer_.in_dim(); }
    [[nodiscard]] std::size_t horizon() const { return layer_.out_dim(); }

    [[nodiscard]] Trace forward(std::span<const double> x) const {
        detail::check_input(lookback(), x.size(), "NLinearModel::forward");
        const double last = x.back();
        std::vector<double> shifted(x.begin(), x.end());
        for (auto &v : shifted) {
            v -= last;
        }
        auto y = layer_.forward(shifted);
        for (auto &v : y) {
            v += last;
        }
        return {std::move(y)};
    }
    [[nodiscard]] std::vector<double>
    predict(std::span<const double> x) const {
        return forward(x).prediction;
    }

    std::vector<double> backward(std::span<const double> x, const Trace &,
                                 std::span<const double> upstream) {
        detail::check_input(lookback(), x.size(), "NLinearModel::backward");
        const double last = x.back();
        std::vector<double> shifted(x.begin(), x.end());
        for (auto &v : shifted) {
            v -= last;
        }
        auto dx = layer_.backward(shifted, upstream);
        double through_shift = 0.0;
        for (double g : dx) {
            through_shift += g;
        }
        double through_skip = 0.0;
        for (double u : upstream) {
            through_skip += u;
        }
        dx.back() += through_skip - through_shift;
        return dx;
    }

    [[nodiscard]] std::vector<nn::ParamBlock> parameters() {
        std::vector<nn::ParamBlock> out;
        layer_.append_parameters("linear", out);
        return out;
    }
    void zero_grad() { layer_.zero_grad(); }
    [[nodiscard]] std::size_t parameter_count() const {
        return layer_.parameter_count();
    }

    [[nodiscard]] nn::LinearLayer &layer() { return layer_; }
    [[nodiscard]] const nn::LinearLayer &layer() const { return layer_; }

  private:
    nn::LinearLayer layer_;
};

struct DecompositionPair {
    std::vector<double> trend;
    std::vector<double> seasonal;
};

/// Centered moving average over an edge-replicated series; seasonal = x - trend.
inline DecompositionPair decompose(std::span<const double> x,
                                   std::size_t kernel) {
    qultsf::detail::require(!x.empty(), "decompose: empty input");
    qultsf::detail::require(kernel % 2 == 1,
                            "decompose: kernel must be odd and positive");
    qultsf::detail::require(kernel <= 2 * x.size() - 1,
                            "decompose: kernel exceeds 2L-1");
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto half = static_cast<std::ptrdiff_t>(kernel / 2);
    DecompositionPair out{std::vector<double>(x.size()),
                          std::vector<double>(x.size())};
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::ptrdiff_t o = -half; o <= half; ++o) {
            acc += x[static_cast<std::size_t>(std::clamp(i + o, std::ptrdiff_t{0},
                                                         n - 1))];
        }
        const auto u = static_cast<std::size_t>(i);
        out.trend[u] = acc / static_cast<double>(kernel);
        out.seasonal[u] = x[u] - out.trend[u];
    }
    return out;
}

/// Separate linear maps on the trend and seasonal parts, summed.
class DLinearModel {
  public:
    static constexpr std::string_view kind = "dlinear";
    static constexpr std::size_t kDefaultKernel = 25;

    struct Trace {
        DecompositionPair parts;
        std::vector<double> prediction;
    };

    DLinearModel(std::size_t lookback, std::size_t horizon,
                 std::size_t kernel = kDefaultKernel)
        : trend_(lookback, horizon), seasonal_(lookback, horizon),
          kernel_{kernel} {
        qultsf::detail::require(kernel % 2 == 1 && kernel <= 2 * lookback - 1,
                                "DLinearModel: kernel must be odd and <= 2L-1");
    }

    template <class Rng>
    static DLinearModel initialized(std::size_t lookback, std::size_t horizon,
                                    std::size_t kernel, Rng &rng) {
        DLinearModel m(lookback, horizon, kernel);
        m.trend_ = nn::LinearLayer::fan_in_uniform(lookback, horizon, rng);
        m.seasonal_ = nn::LinearLayer::fan_in_uniform(lookback, horizon, rng);
        return m;
    }

    [[nodiscard]] std::size_t lookback() const { return trend_.in_dim(); }
    [[nodiscard]] std::size_t horizon() const { return trend_.out_dim(); }
    [[nodiscard]] std::size_t kernel() const { return kernel_; }

    [[nodiscard]] Trace forward(std::span<const double> x) const {
        detail::check_input(lookback(), x.size(), "DLinearModel::forward");
        Trace t{decompose(x, kernel_), {}};
        t.prediction = trend_.forward(t.parts.trend);
        const auto s = seasonal_.forward(t.parts.seasonal);
        for (std::size_t i = 0; i < s.size(); ++i) {
            t.prediction[i] += s[i];
        }
        return t;
    }
    [[nodiscard]] std::vector<double>
    predict(std::span<const double> x) const {
        return forward(x).prediction;
    }

    std::vector<double> backward(std::span<const double> x, const Trace &trace,
                                 std::span<const double> upstream) {
        detail::check_input(lookback(), x.size(), "DLinearModel::backward");
        const auto g_trend = trend_.backward(trace.parts.trend, upstream);
        const auto g_seasonal =
            seasonal_.backward(trace.parts.seasonal, upstream);
        // x enters seasonal directly and trend through the moving average
        std::vector<double> through_avg(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            through_avg[i] = g_trend[i] - g_seasonal[i];
        }
        std::vector<double> dx(g_seasonal);
        const auto n = static_cast<std::ptrdiff_t>(x.size());
        const auto half = static_cast<std::ptrdiff_t>(kernel_ / 2);
        const double inv_k = 1.0 / static_cast<double>(kernel_);
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            for (std::ptrdiff_t o = -half; o <= half; ++o) {
                dx[static_cast<std::size_t>(std::clamp(i + o, std::ptrdiff_t{0},
                                                       n - 1))] +=
                    through_avg[static_cast<std::size_t>(i)] * inv_k;
            }
        }
        return dx;
    }

    [[nodiscard]] std::vector<nn::ParamBlock> parameters() {
        std::vector<nn::ParamBlock> out;
        trend_.append_parameters("trend", out);
        seasonal_.append_parameters("seasonal", out);
        return out;
    }
    void zero_grad() {
        trend_.zero_grad();
        seasonal_.zero_grad();
    }
    [[nodiscard]] std::size_t parameter_count() const {
        return trend_.parameter_count() + seasonal_.parameter_count();
    }

    [[nodiscard]] nn::LinearLayer &trend_layer() { return trend_; }
    [[nodiscard]] const nn::LinearLayer &trend_layer() const { return trend_; }
    [[nodiscard]] nn::LinearLayer &seasonal_layer() { return seasonal_; }
    [[nodiscard]] const nn::LinearLayer &seasonal_layer() const {
        return seasonal_;
    }

  private:
    nn::LinearLayer trend_;
    nn::LinearLayer seasonal_;
    std::size_t kernel_;
};

static_assert(TrainableForecaster<QuLTSFModel>);
static_assert(TrainableForecaster<LinearModel>);
static_assert(TrainableForecaster<NLinearModel>);
static_assert(TrainableForecaster<DLinearModel>);

} // namespace qultsf::models
