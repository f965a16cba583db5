#include <cmath>
#include <random>
#include <sstream>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "qultsf/nn.hpp"
#include "support/oracles.hpp"

using namespace qultsf;
using namespace qultsf::nn;
using Catch::Approx;

TEST_CASE("linear_forward", "[nn]") {
    SECTION("identity weights, zero bias") {
        LinearLayer l(3, 3);
        for (std::size_t i = 0; i < 3; ++i) {
            l.weight(i, i) = 1.0;
        }
        CHECK(l.forward(std::vector<double>{1, 2, 3}) ==
              std::vector<double>{1, 2, 3});
    }
    SECTION("zero weights return the bias") {
        LinearLayer l(4, 2);
        l.bias()[0] = 5;
        l.bias()[1] = 5;
        CHECK(l.forward(std::vector<double>{9, -3, 2, 1}) ==
              std::vector<double>{5, 5});
    }
    SECTION("hand arithmetic") {
        LinearLayer l(2, 2);
        l.weight(0, 0) = 1;
        l.weight(0, 1) = 1;
        l.weight(1, 0) = 1;
        l.weight(1, 1) = -1;
        l.bias()[1] = 1;
        CHECK(l.forward(std::vector<double>{2, 3}) == std::vector<double>{5, 0});
    }
    SECTION("dimension mismatch") {
        LinearLayer l(2, 2);
        CHECK_THROWS_AS(l.forward(std::vector<double>{1, 2, 3}), InvalidInput);
    }
}

TEST_CASE("linear_backward", "[nn]") {
    SECTION("zero upstream accumulates nothing") {
        std::mt19937_64 rng(1);
        auto l = LinearLayer::fan_in_uniform(3, 2, rng);
        const auto dx = l.backward(std::vector<double>{1, 2, 3},
                                   std::vector<double>{0, 0});
        CHECK(dx == std::vector<double>{0, 0, 0});
        for (double g : l.grad_weights()) {
            CHECK(g == 0.0);
        }
        for (double g : l.grad_bias()) {
            CHECK(g == 0.0);
        }
    }
    SECTION("scalar chain rule") {
        LinearLayer l(1, 1);
        l.weight(0, 0) = 1.5;
        const auto dx =
            l.backward(std::vector<double>{2.0}, std::vector<double>{-3.0});
        CHECK(l.grad_weights()[0] == -6.0);
        CHECK(l.grad_bias()[0] == -3.0);
        CHECK(dx[0] == -4.5);
    }
    SECTION("gradients accumulate until zero_grad") {
        LinearLayer l(1, 1);
        l.backward(std::vector<double>{1.0}, std::vector<double>{1.0});
        l.backward(std::vector<double>{2.0}, std::vector<double>{1.0});
        CHECK(l.grad_weights()[0] == 3.0);
        l.zero_grad();
        CHECK(l.grad_weights()[0] == 0.0);
        CHECK(l.grad_bias()[0] == 0.0);
    }
    SECTION("random 5x7 layer matches finite differences of a scalar loss") {
        std::mt19937_64 rng(7);
        auto l = LinearLayer::fan_in_uniform(7, 5, rng);
        for (auto &b : l.bias()) {
            b = 0.3;
        }
        auto x = oracle::random_vector(7, rng);
        const auto target = oracle::random_vector(5, rng);
        auto loss = [&] { return mse_loss(l.forward(x), target).loss; };

        const auto res = mse_loss(l.forward(x), target);
        const auto dx = l.backward(x, res.gradient);
        for (std::size_t i = 0; i < l.weights().size(); ++i) {
            const double fd =
                oracle::central_difference(loss, l.weights()[i], 1e-6);
            CHECK(oracle::relative_close(fd, l.grad_weights()[i], 1e-6));
        }
        for (std::size_t i = 0; i < l.bias().size(); ++i) {
            const double fd = oracle::central_difference(loss, l.bias()[i], 1e-6);
            CHECK(oracle::relative_close(fd, l.grad_bias()[i], 1e-6));
        }
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double fd = oracle::central_difference(loss, x[i], 1e-6);
            CHECK(oracle::relative_close(fd, dx[i], 1e-6));
        }
    }
    SECTION("dimension mismatch") {
        LinearLayer l(2, 3);
        CHECK_THROWS_AS(
            l.backward(std::vector<double>{1, 2}, std::vector<double>{1, 2}),
            InvalidInput);
    }
}

TEST_CASE("fan-in initialization bounds", "[nn]") {
    std::mt19937_64 rng(3);
    const auto l = LinearLayer::fan_in_uniform(16, 8, rng);
    for (double w : l.weights()) {
        CHECK(std::abs(w) <= 0.25);
    }
    for (double b : l.bias()) {
        CHECK(b == 0.0);
    }
}

TEST_CASE("mse_loss", "[nn]") {
    SECTION("equal vectors") {
        const std::vector<double> a{1, 2, 3};
        const auto r = mse_loss(a, a);
        CHECK(r.loss == 0.0);
        CHECK(r.gradient == std::vector<double>{0, 0, 0});
    }
    SECTION("hand arithmetic") {
        const auto r =
            mse_loss(std::vector<double>{1, 3}, std::vector<double>{1, 1});
        CHECK(r.loss == 2.0);
        CHECK(r.gradient == std::vector<double>{0, 2});
    }
    SECTION("gradient matches finite differences") {
        std::mt19937_64 rng(5);
        auto p = oracle::random_vector(6, rng);
        const auto t = oracle::random_vector(6, rng);
        const auto r = mse_loss(p, t);
        for (std::size_t i = 0; i < p.size(); ++i) {
            const double fd = oracle::central_difference(
                [&] { return mse_loss(p, t).loss; }, p[i], 1e-6);
            CHECK(std::abs(fd - r.gradient[i]) <= 1e-7);
        }
    }
    SECTION("length mismatch") {
        CHECK_THROWS_AS(
            mse_loss(std::vector<double>{1}, std::vector<double>{1, 2}),
            InvalidInput);
        CHECK_THROWS_AS(mse_loss(std::vector<double>{}, std::vector<double>{}),
                        InvalidInput);
    }
}

namespace {

struct Scalar {
    std::vector<double> value{0.0};
    std::vector<double> grad{0.0};
    std::vector<ParamBlock> blocks() {
        return {{"x", 1, 1, value, grad}};
    }
};

} // namespace

TEST_CASE("adam_step", "[nn]") {
    SECTION("zero gradient leaves parameters unchanged") {
        Scalar s;
        s.value[0] = 1.25;
        AdamState state;
        for (int i = 0; i < 10; ++i) {
            adam_step(s.blocks(), state);
        }
        CHECK(s.value[0] == 1.25);
        CHECK(state.step == 10);
    }
    SECTION("constant gradient: step size approaches the learning rate") {
        for (double g : {1e-4, 1.0, 1e3}) {
            Scalar s;
            s.grad[0] = g;
            AdamState state(AdamConfig{1e-2, 0.9, 0.999, 1e-8});
            double previous = s.value[0];
            double last_step = 0.0;
            for (int i = 0; i < 1000; ++i) {
                adam_step(s.blocks(), state);
                last_step = previous - s.value[0];
                previous = s.value[0];
            }
            // m_hat = g and v_hat = g^2 exactly, so each step is
            // lr * g / (|g| + eps)
            CHECK(last_step == Approx(1e-2 * g / (g + 1e-8)).epsilon(1e-9));
            CHECK(last_step == Approx(1e-2).epsilon(1e-3));
        }
    }
    SECTION("step counter increments by one per update") {
        Scalar s;
        s.grad[0] = 0.5;
        AdamState state;
        for (std::size_t i = 1; i <= 5; ++i) {
            adam_step(s.blocks(), state);
            CHECK(state.step == i);
            CHECK(state.first_moment.size() == 1);
        }
    }
    SECTION("gradients are left untouched") {
        Scalar s;
        s.grad[0] = 0.5;
        AdamState state;
        adam_step(s.blocks(), state);
        CHECK(s.grad[0] == 0.5);
    }
    SECTION("identical runs are bit-identical") {
        auto run = [] {
            std::mt19937_64 rng(99);
            std::vector<double> w = oracle::random_vector(8, rng);
            std::vector<double> g(8);
            AdamState state;
            for (int i = 0; i < 50; ++i) {
                for (std::size_t j = 0; j < 8; ++j) {
                    g[j] = std::sin(w[j] * (i + 1));
                }
                std::vector<ParamBlock> b{{"w", 8, 1, w, g}};
                adam_step(b, state);
            }
            return w;
        };
        CHECK(run() == run());
    }
    SECTION("shape mismatch") {
        Scalar s;
        AdamState state;
        adam_step(s.blocks(), state);
        std::vector<double> two(2), gtwo(2);
        std::vector<ParamBlock> wrong{{"x", 2, 1, two, gtwo}};
        CHECK_THROWS_AS(adam_step(wrong, state), InvalidInput);
        std::vector<double> g3(3);
        std::vector<ParamBlock> mismatched{{"x", 2, 1, two, g3}};
        AdamState fresh;
        CHECK_THROWS_AS(adam_step(mismatched, fresh), InvalidInput);
    }
}

TEST_CASE("checkpoint save/load restores parameters exactly", "[nn]") {
    std::mt19937_64 rng(13);
    auto a = LinearLayer::fan_in_uniform(5, 3, rng);
    a.bias()[1] = 4.9406564584124654e-324; // subnormal survives
    std::vector<ParamBlock> blocks;
    a.append_parameters("layer", blocks);
    std::stringstream ss;
    save_checkpoint(ss, blocks);

    LinearLayer b(5, 3);
    std::vector<ParamBlock> target;
    b.append_parameters("layer", target);
    load_checkpoint(ss, target);
    CHECK(std::equal(a.weights().begin(), a.weights().end(),
                     b.weights().begin()));
    CHECK(std::equal(a.bias().begin(), a.bias().end(), b.bias().begin()));

    SECTION("shape mismatch is rejected") {
        std::stringstream again;
        save_checkpoint(again, blocks);
        LinearLayer c(4, 3);
        std::vector<ParamBlock> other;
        c.append_parameters("layer", other);
        CHECK_THROWS_AS(load_checkpoint(again, other), InvalidInput);
    }
    SECTION("foreign file is rejected") {
        std::stringstream junk("hello 1\n");
        CHECK_THROWS_AS(load_checkpoint(junk, target), InvalidInput);
    }
}
