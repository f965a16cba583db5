#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "qultsf/qsim.hpp"
#include "support/oracles.hpp"

using namespace qultsf;
using namespace qultsf::qsim;
using Catch::Approx;

namespace {

Statevector basis(std::size_t num_qubits, std::size_t index) {
    std::vector<Complex> amps(std::size_t{1} << num_qubits, 0.0);
    amps[index] = 1.0;
    return Statevector(num_qubits, std::move(amps));
}

CircuitParams random_params(std::size_t layers, std::size_t qubits,
                            std::mt19937_64 &rng) {
    return CircuitParams(layers, qubits,
                         oracle::random_vector(3 * layers * qubits, rng,
                                               -std::numbers::pi,
                                               std::numbers::pi));
}

} // namespace

TEST_CASE("amplitude_embed normalizes real vectors", "[qsim]") {
    SECTION("basis state is unchanged") {
        const std::vector<double> v{1, 0, 0, 0};
        const auto s = amplitude_embed(v);
        CHECK(s.num_qubits() == 2);
        CHECK(s[0] == Complex{1, 0});
        CHECK(std::abs(s[1]) + std::abs(s[2]) + std::abs(s[3]) == 0.0);
    }
    SECTION("3-4-5 normalization") {
        const std::vector<double> v{3, 4, 0, 0};
        const auto s = amplitude_embed(v);
        CHECK(s[0].real() == Approx(0.6).margin(1e-15));
        CHECK(s[1].real() == Approx(0.8).margin(1e-15));
        CHECK(s[0].imag() == 0.0);
        CHECK(s[1].imag() == 0.0);
    }
    SECTION("zero vector falls back to |0...0>") {
        const std::vector<double> v(8, 0.0);
        const auto s = amplitude_embed(v);
        CHECK(s.num_qubits() == 3);
        CHECK(s[0] == Complex{1, 0});
        CHECK(s.norm() == Approx(1.0));
    }
    SECTION("invalid inputs") {
        CHECK_THROWS_AS(amplitude_embed(std::vector<double>{1, 2, 3}),
                        InvalidInput);
        CHECK_THROWS_AS(amplitude_embed(std::vector<double>{1}), InvalidInput);
        CHECK_THROWS_AS(
            amplitude_embed(std::vector<double>{1, std::nan(""), 0, 0}),
            InvalidInput);
        CHECK_THROWS_AS(amplitude_embed(std::vector<double>{
                            1, std::numeric_limits<double>::infinity()}),
                        InvalidInput);
    }
}

TEST_CASE("amplitude_embed is scale invariant", "[qsim][property]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> scale(1e-3, 1e3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto v = oracle::random_vector(16, rng);
        auto w = v;
        const double c = scale(rng);
        for (auto &x : w) {
            x *= c;
        }
        const auto a = amplitude_embed(v);
        const auto b = amplitude_embed(w);
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(std::abs(a[i] - b[i]) <= 1e-12);
        }
        REQUIRE(std::abs(a.norm() - 1.0) <= 1e-10);
    }
}

TEST_CASE("apply_rot", "[qsim]") {
    SECTION("identity rotation") {
        const auto s = apply_rot(Statevector(1), 0, 0, 0, 0);
        CHECK(s[0] == Complex{1, 0});
        CHECK(s[1] == Complex{0, 0});
    }
    SECTION("RY(pi) maps |0> to |1> with real amplitude 1") {
        const auto s = apply_rot(Statevector(1), 0, 0, std::numbers::pi, 0);
        CHECK(std::abs(s[0]) == Approx(0.0).margin(1e-15));
        CHECK(s[1].real() == Approx(1.0));
        CHECK(s[1].imag() == Approx(0.0).margin(1e-15));
    }
    SECTION("matches dense I (x) U (x) I on a random 3-qubit state") {
        std::mt19937_64 rng(3);
        const auto amps = oracle::random_state(3, rng);
        const auto out = apply_rot(Statevector(3, amps), 1, 0.3, 1.1, -0.7);
        const auto expected = oracle::apply_dense(
            oracle::embed_single(oracle::rot2(0.3, 1.1, -0.7), 1, 3), amps);
        for (std::size_t i = 0; i < 8; ++i) {
            CHECK(std::abs(out[i] - expected[i]) <= 1e-12);
        }
    }
    SECTION("out-of-range qubit") {
        CHECK_THROWS_AS(apply_rot(Statevector(2), 2, 0, 0, 0), InvalidInput);
    }
}

TEST_CASE("apply_cnot", "[qsim]") {
    // qubit 0 is the most significant bit: |10> is index 2
    SECTION("truth table") {
        CHECK(apply_cnot(basis(2, 0b10), 0, 1)[0b11] == Complex{1, 0});
        CHECK(apply_cnot(basis(2, 0b01), 0, 1)[0b01] == Complex{1, 0});
        CHECK(apply_cnot(basis(2, 0b11), 0, 1)[0b10] == Complex{1, 0});
        CHECK(apply_cnot(basis(2, 0b00), 0, 1)[0b00] == Complex{1, 0});
    }
    SECTION("qubit 0 is the most significant bit") {
        // control on qubit 1 (LSB) flips qubit 0 (MSB): |01> -> |11>
        CHECK(apply_cnot(basis(2, 0b01), 1, 0)[0b11] == Complex{1, 0});
    }
    SECTION("matches dense permutation oracle on a random 4-qubit state") {
        std::mt19937_64 rng(5);
        const auto amps = oracle::random_state(4, rng);
        for (std::size_t c = 0; c < 4; ++c) {
            for (std::size_t t = 0; t < 4; ++t) {
                if (c == t) {
                    continue;
                }
                const auto out = apply_cnot(Statevector(4, amps), c, t);
                const auto expected =
                    oracle::apply_dense(oracle::cnot(c, t, 4), amps);
                for (std::size_t i = 0; i < 16; ++i) {
                    REQUIRE(std::abs(out[i] - expected[i]) == 0.0);
                }
            }
        }
    }
    SECTION("invalid indices") {
        CHECK_THROWS_AS(apply_cnot(Statevector(2), 1, 1), InvalidInput);
        CHECK_THROWS_AS(apply_cnot(Statevector(2), 0, 2), InvalidInput);
    }
}

TEST_CASE("run_ansatz", "[qsim]") {
    SECTION("zero angles leave |0...0> fixed") {
        for (std::size_t k = 1; k <= 3; ++k) {
            const auto out = run_ansatz(Statevector(4), CircuitParams(k, 4));
            CHECK(out[0] == Complex{1, 0});
            CHECK(out.norm() == Approx(1.0).epsilon(1e-14));
        }
    }
    SECTION("N=2, K=1 matches dense oracle") {
        std::mt19937_64 rng(21);
        const auto params = random_params(1, 2, rng);
        const auto amps = oracle::random_state(2, rng);
        const auto out = run_ansatz(Statevector(2, amps), params);
        const auto expected = oracle::apply_dense(
            oracle::ansatz_unitary(params.angles(), 1, 2), amps);
        for (std::size_t i = 0; i < 4; ++i) {
            CHECK(std::abs(out[i] - expected[i]) <= 1e-12);
        }
    }
    SECTION("N=1 skips the entangler") {
        const CircuitParams p(2, 1, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
        const auto out = run_ansatz(Statevector(1), p);
        const auto expected = oracle::apply_dense(
            oracle::multiply(oracle::rot2(0.4, 0.5, 0.6),
                             oracle::rot2(0.1, 0.2, 0.3)),
            std::vector<Complex>{1.0, 0.0});
        CHECK(std::abs(out[0] - expected[0]) <= 1e-14);
        CHECK(std::abs(out[1] - expected[1]) <= 1e-14);
    }
    SECTION("N=10, K=3 uses 3NK = 90 angles") {
        CHECK(CircuitParams(3, 10).size() == 90);
    }
    SECTION("shape mismatch") {
        CHECK_THROWS_AS(run_ansatz(Statevector(3), CircuitParams(1, 2)),
                        InvalidInput);
        CHECK_THROWS_AS(CircuitParams(1, 2, std::vector<double>(5)),
                        InvalidInput);
    }
}

TEST_CASE("run_ansatz agrees with dense oracle and preserves norm",
          "[qsim][property]") {
    std::mt19937_64 rng(1234);
    for (std::size_t n = 1; n <= 4; ++n) {
        for (int draw = 0; draw < 20; ++draw) {
            const std::size_t k = 1 + static_cast<std::size_t>(draw % 3);
            const auto params = random_params(k, n, rng);
            const auto amps = oracle::random_state(n, rng);
            const auto out = run_ansatz(Statevector(n, amps), params);
            const auto expected = oracle::apply_dense(
                oracle::ansatz_unitary(params.angles(), k, n), amps);
            for (std::size_t i = 0; i < out.size(); ++i) {
                REQUIRE(std::abs(out[i] - expected[i]) <= 1e-10);
            }
            REQUIRE(std::abs(out.norm() - 1.0) <= 1e-10);
        }
    }
}

TEST_CASE("pauli_z_expectations", "[qsim]") {
    SECTION("|0...0> gives all +1") {
        for (double z : pauli_z_expectations(Statevector(5))) {
            CHECK(z == 1.0);
        }
    }
    SECTION("|1> (x) |0> gives (-1, +1)") {
        const auto z = pauli_z_expectations(basis(2, 0b10));
        CHECK(z[0] == -1.0);
        CHECK(z[1] == 1.0);
    }
    SECTION("uniform superposition gives zeros") {
        const std::vector<double> v(16, 1.0);
        for (double z : pauli_z_expectations(amplitude_embed(v))) {
            CHECK(z == Approx(0.0).margin(1e-15));
        }
    }
    SECTION("bounded on random states") {
        std::mt19937_64 rng(8);
        for (int i = 0; i < 50; ++i) {
            const auto s = Statevector(5, oracle::random_state(5, rng));
            for (double z : pauli_z_expectations(s)) {
                REQUIRE(z >= -1.0 - 1e-12);
                REQUIRE(z <= 1.0 + 1e-12);
            }
        }
    }
}

TEST_CASE("adjoint gradient: zero angles on |0...0>", "[qsim][gradient]") {
    constexpr std::size_t n = 3;
    const CircuitParams params(2, n);
    std::vector<double> v(8, 0.0);
    v[0] = 1.0;
    const auto g = gradients_adjoint(v, params);
    for (std::size_t q = 0; q < n; ++q) {
        const auto p = CircuitParams::index(n, 0, q, 1);
        CHECK(g.param(q, p) == Approx(0.0).margin(1e-12));

        // finite-difference oracle on the dense simulator
        auto angles = std::vector<double>(params.angles().begin(),
                                          params.angles().end());
        const double fd = oracle::central_difference(
            [&] {
                return oracle::circuit_expectations(v, angles, 2, n)[q];
            },
            angles[p], 1e-6);
        CHECK(std::abs(fd - g.param(q, p)) <= 1e-6);
    }
}

TEST_CASE("parameter-shift: single-qubit <Z> = cos theta", "[qsim][gradient]") {
    const std::vector<double> v{1.0, 0.0};
    for (double theta : {-2.0, -0.4, 0.0, 0.9, 2.5}) {
        const CircuitParams p(1, 1, {0.0, theta, 0.0});
        CHECK(expectations(v, p)[0] == Approx(std::cos(theta)));
        const auto shift = gradients_parameter_shift(v, p);
        CHECK(shift.param(0, 1) == Approx(-std::sin(theta)).margin(1e-14));
        CHECK(shift.d_input.empty());
        const auto adj = gradients_adjoint(v, p);
        CHECK(adj.param(0, 1) == Approx(-std::sin(theta)).margin(1e-14));
    }
}

TEST_CASE("parameter-shift: zero angles give zero theta gradients",
          "[qsim][gradient]") {
    std::vector<double> v(16, 0.0);
    v[0] = 1.0;
    const auto g = gradients_parameter_shift(v, CircuitParams(2, 4));
    for (std::size_t q = 0; q < 4; ++q) {
        for (std::size_t j = 0; j < 4; ++j) {
            CHECK(g.param(q, CircuitParams::index(4, 0, j, 1)) ==
                  Approx(0.0).margin(1e-12));
        }
    }
}

TEST_CASE("adjoint vs parameter-shift vs finite differences on N=4, K=2",
          "[qsim][gradient]") {
    std::mt19937_64 rng(42);
    constexpr std::size_t n = 4;
    constexpr std::size_t k = 2;
    const auto params = random_params(k, n, rng);
    auto v = oracle::random_vector(16, rng);

    const auto adj = gradients_adjoint(v, params);
    const auto shift = gradients_parameter_shift(v, params);
    REQUIRE(adj.num_observables == n);
    REQUIRE(adj.d_params.size() == n * 3 * n * k);
    REQUIRE(adj.d_input.size() == n * 16);

    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t p = 0; p < params.size(); ++p) {
            CHECK(std::abs(adj.param(q, p) - shift.param(q, p)) <= 1e-8);
        }
    }

    auto angles =
        std::vector<double>(params.angles().begin(), params.angles().end());
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double fd = oracle::central_difference(
                [&] {
                    return oracle::circuit_expectations(v, angles, k, n)[q];
                },
                v[i], 1e-6);
            const double an = adj.input(q, i);
            if (std::max(std::abs(fd), std::abs(an)) > 1e-8) {
                CHECK(oracle::relative_close(fd, an, 1e-5));
            }
        }
        for (std::size_t p = 0; p < angles.size(); ++p) {
            const double fd = oracle::central_difference(
                [&] {
                    return oracle::circuit_expectations(v, angles, k, n)[q];
                },
                angles[p], 1e-6);
            const double an = adj.param(q, p);
            if (std::max(std::abs(fd), std::abs(an)) > 1e-8) {
                CHECK(oracle::relative_close(fd, an, 1e-5));
            }
        }
    }
}

TEST_CASE("adjoint and parameter-shift agree on 100 random instances",
          "[qsim][gradient][property]") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> qubits(1, 6);
    std::uniform_int_distribution<std::size_t> layers(1, 3);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const auto n = qubits(rng);
        const auto k = layers(rng);
        const auto params = random_params(k, n, rng);
        const auto v = oracle::random_vector(std::size_t{1} << n, rng);
        const auto adj = gradients_adjoint(v, params);
        const auto shift = gradients_parameter_shift(v, params);
        for (std::size_t i = 0; i < adj.d_params.size(); ++i) {
            REQUIRE(std::isfinite(adj.d_params[i]));
            worst = std::max(worst,
                             std::abs(adj.d_params[i] - shift.d_params[i]));
        }
    }
    CHECK(worst <= 1e-8);
}

TEST_CASE("zero embedded vector has zero input gradient", "[qsim][gradient]") {
    std::mt19937_64 rng(9);
    const auto params = random_params(2, 3, rng);
    const std::vector<double> v(8, 0.0);
    const auto g = gradients_adjoint(v, params);
    for (double d : g.d_input) {
        CHECK(d == 0.0);
    }
    const std::vector<double> w{0.2, -0.1, 0.7};
    const auto vjp = vjp_adjoint(v, params, w);
    for (double d : vjp.d_input) {
        CHECK(d == 0.0);
    }
}

TEST_CASE("vjp_adjoint equals the weighted Jacobian contraction",
          "[qsim][gradient]") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 4);
        const std::size_t k = 1 + static_cast<std::size_t>(trial % 3);
        const auto params = random_params(k, n, rng);
        const auto v = oracle::random_vector(std::size_t{1} << n, rng);
        const auto w = oracle::random_vector(n, rng);
        const auto full = gradients_adjoint(v, params);
        const auto vjp = vjp_adjoint(v, params, w);
        for (std::size_t p = 0; p < params.size(); ++p) {
            double expected = 0.0;
            for (std::size_t q = 0; q < n; ++q) {
                expected += w[q] * full.param(q, p);
            }
            REQUIRE(std::abs(vjp.d_params[p] - expected) <= 1e-12);
        }
        for (std::size_t i = 0; i < v.size(); ++i) {
            double expected = 0.0;
            for (std::size_t q = 0; q < n; ++q) {
                expected += w[q] * full.input(q, i);
            }
            REQUIRE(std::abs(vjp.d_input[i] - expected) <= 1e-12);
        }
    }
}

TEST_CASE("gradient routines reject mismatched shapes", "[qsim]") {
    const std::vector<double> v(8, 1.0);
    CHECK_THROWS_AS(gradients_adjoint(v, CircuitParams(1, 2)), InvalidInput);
    CHECK_THROWS_AS(gradients_parameter_shift(v, CircuitParams(1, 4)),
                    InvalidInput);
    CHECK_THROWS_AS(vjp_adjoint(v, CircuitParams(1, 3), std::vector<double>(2)),
                    InvalidInput);
}
