#pragma once
/**
 * @file nn.hpp
 * Linear layers, MSE loss, Adam, and a small text checkpoint format.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <istream>
#include <limits>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"

namespace qultsf::nn {

/// A trainable tensor exposed to the optimizer and to checkpoints.
struct ParamBlock {
    std::string name;
    std::size_t rows;
    std::size_t cols;
    std::span<double> values;
    std::span<const double> grads;
};

/// y = W x + b with W stored row-major (out_dim x in_dim).
class LinearLayer {
  public:
    LinearLayer(std::size_t in_dim, std::size_t out_dim)
        : in_dim_{in_dim}, out_dim_{out_dim}, weights_(in_dim * out_dim, 0.0),
          bias_(out_dim, 0.0), grad_weights_(in_dim * out_dim, 0.0),
          grad_bias_(out_dim, 0.0) {
        detail::require(in_dim >= 1 && out_dim >= 1,
                        "LinearLayer: dimensions must be positive");
    }

    /// Weights ~ U(-1/sqrt(in_dim), 1/sqrt(in_dim)), zero bias.
    template <class Rng>
    static LinearLayer fan_in_uniform(std::size_t in_dim, std::size_t out_dim,
                                      Rng &rng) {
        LinearLayer layer(in_dim, out_dim);
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_dim));
        std::uniform_real_distribution<double> dist(-bound, bound);
        for (auto &w : layer.weights_) {
            w = dist(rng);
        }
        return layer;
    }

    [[nodiscard]] std::size_t in_dim() const { return in_dim_; }
    [[nodiscard]] std::size_t out_dim() const { return out_dim_; }

    [[nodiscard]] double &weight(std::size_t row, std::size_t col) {
        return weights_[row * in_dim_ + col];
    }
    [[nodiscard]] double weight(std::size_t row, std::size_t col) const {
        return weights_[row * in_dim_ + col];
    }

    [[nodiscard]] std::span<double> weights() { return weights_; }
    [[nodiscard]] std::span<const double> weights() const { return weights_; }
    [[nodiscard]] std::span<double> bias() { return bias_; }
    [[nodiscard]] std::span<const double> bias() const { return bias_; }
    [[nodiscard]] std::span<const double> grad_weights() const {
        return grad_weights_;
    }
    [[nodiscard]] std::span<const double> grad_bias() const {
        return grad_bias_;
    }

    [[nodiscard]] std::vector<double>
    forward(std::span<const double> x) const {
        detail::require(x.size() == in_dim_,
                        "LinearLayer::forward: input dimension mismatch");
        std::vector<double> y(bias_.begin(), bias_.end());
        for (std::size_t r = 0; r < out_dim_; ++r) {
            const double *row = weights_.data() + r * in_dim_;
            // four partial sums so the reduction is not one serial chain
            double acc[4] = {0.0, 0.0, 0.0, 0.0};
            std::size_t c = 0;
            for (; c + 4 <= in_dim_; c += 4) {
                acc[0] += row[c] * x[c];
                acc[1] += row[c + 1] * x[c + 1];
                acc[2] += row[c + 2] * x[c + 2];
                acc[3] += row[c + 3] * x[c + 3];
            }
            for (; c < in_dim_; ++c) {
                acc[0] += row[c] * x[c];
            }
            y[r] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
        }
        return y;
    }

    /// Accumulates dW += u x^T, db += u; returns W^T u.
    std::vector<double> backward(std::span<const double> x,
                                 std::span<const double> upstream) {
        detail::require(x.size() == in_dim_ && upstream.size() == out_dim_,
                        "LinearLayer::backward: dimension mismatch");
        std::vector<double> dx(in_dim_, 0.0);
        for (std::size_t r = 0; r < out_dim_; ++r) {
            const double u = upstream[r];
            grad_bias_[r] += u;
            if (u == 0.0) {
                continue;
            }
            const double *row = weights_.data() + r * in_dim_;
            double *grow = grad_weights_.data() + r * in_dim_;
            for (std::size_t c = 0; c < in_dim_; ++c) {
                grow[c] += u * x[c];
                dx[c] += row[c] * u;
            }
        }
        return dx;
    }

    void zero_grad() {
        std::fill(grad_weights_.begin(), grad_weights_.end(), 0.0);
        std::fill(grad_bias_.begin(), grad_bias_.end(), 0.0);
    }

    void append_parameters(const std::string &prefix,
                           std::vector<ParamBlock> &out) {
        out.push_back(
            {prefix + ".weights", out_dim_, in_dim_, weights_, grad_weights_});
        out.push_back({prefix + ".bias", out_dim_, 1, bias_, grad_bias_});
    }

    [[nodiscard]] std::size_t parameter_count() const {
        return weights_.size() + bias_.size();
    }

  private:
    std::size_t in_dim_;
    std::size_t out_dim_;
    std::vector<double> weights_;
    std::vector<double> bias_;
    std::vector<double> grad_weights_;
    std::vector<double> grad_bias_;
};

struct LossResult {
    double loss;
    std::vector<double> gradient;
};

/// loss = mean((pred - target)^2), gradient = 2 (pred - target) / n.
inline LossResult mse_loss(std::span<const double> pred,
                           std::span<const double> target) {
    detail::require(!pred.empty() && pred.size() == target.size(),
                    "mse_loss: length mismatch");
    const auto n = static_cast<double>(pred.size());
    LossResult out{0.0, std::vector<double>(pred.size())};
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        out.loss += d * d;
        out.gradient[i] = 2.0 * d / n;
    }
    out.loss /= n;
    return out;
}

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamConfig config;
    std::size_t step = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;

    AdamState() = default;
    explicit AdamState(AdamConfig cfg) : config{cfg} {}
};

/// One bias-corrected Adam update over every block. Moments are allocated on
/// the first call; subsequent calls must pass blocks of identical shapes.
inline void adam_step(std::span<const ParamBlock> blocks, AdamState &state) {
    if (state.step == 0 && state.first_moment.empty()) {
        for (const auto &b : blocks) {
            state.first_moment.emplace_back(b.values.size(), 0.0);
            state.second_moment.emplace_back(b.values.size(), 0.0);
        }
    }
    detail::require(state.first_moment.size() == blocks.size(),
                    "adam_step: block count does not match optimizer state");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        detail::require(blocks[i].values.size() == blocks[i].grads.size() &&
                            blocks[i].values.size() ==
                                state.first_moment[i].size(),
                        "adam_step: shape mismatch in block " + blocks[i].name);
    }

    ++state.step;
    const auto &c = state.config;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        auto &m = state.first_moment[i];
        auto &v = state.second_moment[i];
        const auto values = blocks[i].values;
        const auto grads = blocks[i].grads;
        for (std::size_t j = 0; j < values.size(); ++j) {
            const double g = grads[j];
            m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
            v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
            const double m_hat = m[j] / correction1;
            const double v_hat = v[j] / correction2;
            values[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

/*
 * Checkpoint format, version 1 (plain text, one token per whitespace):
 *
 *   qultsf-checkpoint 1
 *   blocks <count>
 *   <name> <rows> <cols>
 *   <rows*cols values, row-major, 17 significant digits>
 *   ...
 */
inline constexpr int kCheckpointVersion = 1;

inline void save_checkpoint(std::ostream &os,
                            std::span<const ParamBlock> blocks) {
    const auto old_precision = os.precision();
    os.precision(std::numeric_limits<double>::max_digits10);
    os << "qultsf-checkpoint " << kCheckpointVersion << '\n';
    os << "blocks " << blocks.size() << '\n';
    for (const auto &b : blocks) {
        os << b.name << ' ' << b.rows << ' ' << b.cols << '\n';
        for (std::size_t i = 0; i < b.values.size(); ++i) {
            os << b.values[i]
               << ((i + 1) % b.cols == 0 || i + 1 == b.values.size() ? '\n'
                                                                     : ' ');
        }
    }
    os.precision(old_precision);
}

/// Restores values into `blocks`; names and shapes must match exactly.
inline void load_checkpoint(std::istream &is,
                            std::span<const ParamBlock> blocks) {
    std::string magic;
    int version = 0;
    std::string tag;
    std::size_t count = 0;
    if (!(is >> magic >> version) || magic != "qultsf-checkpoint") {
        throw InvalidInput("load_checkpoint: not a qultsf checkpoint");
    }
    if (version != kCheckpointVersion) {
        throw InvalidInput("load_checkpoint: unsupported version " +
                           std::to_string(version));
    }
    if (!(is >> tag >> count) || tag != "blocks" || count != blocks.size()) {
        throw InvalidInput("load_checkpoint: block count mismatch");
    }
    for (const auto &b : blocks) {
        std::string name;
        std::size_t rows = 0;
        std::size_t cols = 0;
        if (!(is >> name >> rows >> cols) || name != b.name || rows != b.rows ||
            cols != b.cols) {
            throw InvalidInput("load_checkpoint: expected block " + b.name +
                               " with shape " + std::to_string(b.rows) + "x" +
                               std::to_string(b.cols) + ", found " + name);
        }
        for (auto &v : b.values) {
            // strtod rather than operator>> so subnormals parse
            std::string token;
            char *end = nullptr;
            if (is >> token) {
                v = std::strtod(token.c_str(), &end);
            }
            if (end == nullptr || *end != '\0' || !std::isfinite(v)) {
                throw InvalidInput("load_checkpoint: bad value in block " +
                                   b.name);
            }
        }
    }
}

} // namespace qultsf::nn
