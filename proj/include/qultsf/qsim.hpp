#pragma once
/**
 * @file qsim.hpp
 * Dense statevector simulation of the hidden quantum layer: amplitude
 * embedding, a layered Rot/CNOT hardware-efficient ansatz and per-qubit
 * Pauli-Z readout, together with adjoint and parameter-shift gradients.
 *
 * Conventions:
 *  - qubit 0 is the most significant bit of a basis-state index;
 *  - Rot(phi, theta, omega) = RZ(omega) RY(theta) RZ(phi), with
 *    RZ(a) = diag(e^{-ia/2}, e^{ia/2}) and
 *    RY(a) = [[cos a/2, -sin a/2], [sin a/2, cos a/2]];
 *  - every ansatz layer applies Rot to qubits 0..N-1 and then
 *    CNOT(i, (i+1) mod N) for i = 0..N-1 (skipped when N == 1).
 */

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"

namespace qultsf::qsim {

using Complex = std::complex<double>;

/// Norm below which an embedded vector is treated as zero.
inline constexpr double kZeroNormThreshold = 1e-12;

class Statevector {
  public:
    /// |0...0> on `num_qubits` qubits.
    explicit Statevector(std::size_t num_qubits)
        : num_qubits_{num_qubits}, amplitudes_(dimension_for(num_qubits)) {
        amplitudes_[0] = 1.0;
    }

    Statevector(std::size_t num_qubits, std::vector<Complex> amplitudes)
        : num_qubits_{num_qubits}, amplitudes_(std::move(amplitudes)) {
        qultsf::detail::require(amplitudes_.size() == dimension_for(num_qubits),
                        "Statevector: amplitude count must be 2^num_qubits");
    }

    [[nodiscard]] std::size_t num_qubits() const { return num_qubits_; }
    [[nodiscard]] std::size_t size() const { return amplitudes_.size(); }

    [[nodiscard]] std::span<const Complex> amplitudes() const {
        return amplitudes_;
    }
    [[nodiscard]] std::span<Complex> amplitudes() { return amplitudes_; }

    [[nodiscard]] const Complex &operator[](std::size_t i) const {
        return amplitudes_[i];
    }
    [[nodiscard]] Complex &operator[](std::size_t i) { return amplitudes_[i]; }

    [[nodiscard]] double norm() const {
        double sum = 0.0;
        for (const auto &a : amplitudes_) {
            sum += std::norm(a);
        }
        return std::sqrt(sum);
    }

    static std::size_t dimension_for(std::size_t num_qubits) {
        qultsf::detail::require(num_qubits >= 1 && num_qubits <= 30,
                        "Statevector: num_qubits must be in [1, 30]");
        return std::size_t{1} << num_qubits;
    }

  private:
    std::size_t num_qubits_;
    std::vector<Complex> amplitudes_;
};

/// Trainable angles of the ansatz, stored layer-major as
/// angles[(layer * num_qubits + qubit) * 3 + {0: phi, 1: theta, 2: omega}].
class CircuitParams {
  public:
    CircuitParams(std::size_t num_layers, std::size_t num_qubits)
        : num_layers_{num_layers}, num_qubits_{num_qubits},
          angles_(3 * num_layers * num_qubits, 0.0) {
        qultsf::detail::require(num_layers >= 1 && num_qubits >= 1,
                        "CircuitParams: layers and qubits must be positive");
    }

    CircuitParams(std::size_t num_layers, std::size_t num_qubits,
                  std::vector<double> angles)
        : num_layers_{num_layers}, num_qubits_{num_qubits},
          angles_(std::move(angles)) {
        qultsf::detail::require(num_layers >= 1 && num_qubits >= 1,
                        "CircuitParams: layers and qubits must be positive");
        qultsf::detail::require(angles_.size() == 3 * num_layers * num_qubits,
                        "CircuitParams: expected 3*N*K angles");
    }

    [[nodiscard]] std::size_t num_layers() const { return num_layers_; }
    [[nodiscard]] std::size_t num_qubits() const { return num_qubits_; }
    [[nodiscard]] std::size_t size() const { return angles_.size(); }

    [[nodiscard]] static std::size_t index(std::size_t num_qubits,
                                           std::size_t layer,
                                           std::size_t qubit,
                                           std::size_t which) {
        return (layer * num_qubits + qubit) * 3 + which;
    }

    [[nodiscard]] double &at(std::size_t layer, std::size_t qubit,
                             std::size_t which) {
        return angles_[index(num_qubits_, layer, qubit, which)];
    }
    [[nodiscard]] double at(std::size_t layer, std::size_t qubit,
                            std::size_t which) const {
        return angles_[index(num_qubits_, layer, qubit, which)];
    }

    [[nodiscard]] std::span<const double> angles() const { return angles_; }
    [[nodiscard]] std::span<double> angles() { return angles_; }

  private:
    std::size_t num_layers_;
    std::size_t num_qubits_;
    std::vector<double> angles_;
};

/// Jacobian of the N Pauli-Z expectations.
///  d_params: N x (3NK), row q holds d<Z_q>/d angle (CircuitParams layout).
///  d_input:  N x 2^N, row q holds d<Z_q>/d v_i for the pre-normalization
///            embedded vector v. Empty for parameter-shift results.
struct GradientResult {
    std::size_t num_observables{};
    std::size_t num_params{};
    std::size_t input_dim{};
    std::vector<double> d_params;
    std::vector<double> d_input;

    [[nodiscard]] double param(std::size_t obs, std::size_t p) const {
        return d_params[obs * num_params + p];
    }
    [[nodiscard]] double input(std::size_t obs, std::size_t i) const {
        return d_input[obs * input_dim + i];
    }
};

using Mat2 = std::array<Complex, 4>; // row-major 2x2

namespace detail {

inline Mat2 rz_matrix(double angle) {
    const double h = angle / 2;
    return {Complex{std::cos(h), -std::sin(h)}, 0.0, 0.0,
            Complex{std::cos(h), std::sin(h)}};
}

inline Mat2 ry_matrix(double angle) {
    const double c = std::cos(angle / 2);
    const double s = std::sin(angle / 2);
    return {c, -s, s, c};
}

/// Plain complex product. Skips the NaN/inf recovery of operator*, which
/// otherwise dominates the gate kernels.
inline Complex cmul(Complex a, Complex b) {
    return {a.real() * b.real() - a.imag() * b.imag(),
            a.real() * b.imag() + a.imag() * b.real()};
}

inline Mat2 adjoint(const Mat2 &m) {
    return {std::conj(m[0]), std::conj(m[2]), std::conj(m[1]),
            std::conj(m[3])};
}

inline std::size_t qubit_stride(std::size_t num_qubits, std::size_t qubit) {
    return std::size_t{1} << (num_qubits - 1 - qubit);
}

inline void apply_matrix(std::span<Complex> amps, std::size_t num_qubits,
                         std::size_t qubit, const Mat2 &m) {
    const std::size_t stride = qubit_stride(num_qubits, qubit);
    for (std::size_t block = 0; block < amps.size(); block += 2 * stride) {
        for (std::size_t i0 = block; i0 < block + stride; ++i0) {
            const Complex a0 = amps[i0];
            const Complex a1 = amps[i0 + stride];
            amps[i0] = cmul(m[0], a0) + cmul(m[1], a1);
            amps[i0 + stride] = cmul(m[2], a0) + cmul(m[3], a1);
        }
    }
}

/// diag(d0, d1) on `qubit`.
inline void apply_diagonal(std::span<Complex> amps, std::size_t num_qubits,
                           std::size_t qubit, Complex d0, Complex d1) {
    const std::size_t stride = qubit_stride(num_qubits, qubit);
    for (std::size_t block = 0; block < amps.size(); block += 2 * stride) {
        for (std::size_t i0 = block; i0 < block + stride; ++i0) {
            amps[i0] = cmul(d0, amps[i0]);
            amps[i0 + stride] = cmul(d1, amps[i0 + stride]);
        }
    }
}

/// [[c, -s], [s, c]] on `qubit`.
inline void apply_real_rotation(std::span<Complex> amps,
                                std::size_t num_qubits, std::size_t qubit,
                                double c, double s) {
    const std::size_t stride = qubit_stride(num_qubits, qubit);
    for (std::size_t block = 0; block < amps.size(); block += 2 * stride) {
        for (std::size_t i0 = block; i0 < block + stride; ++i0) {
            const Complex a0 = amps[i0];
            const Complex a1 = amps[i0 + stride];
            amps[i0] = c * a0 - s * a1;
            amps[i0 + stride] = s * a0 + c * a1;
        }
    }
}

inline Mat2 multiply(const Mat2 &a, const Mat2 &b) {
    return {cmul(a[0], b[0]) + cmul(a[1], b[2]),
            cmul(a[0], b[1]) + cmul(a[1], b[3]),
            cmul(a[2], b[0]) + cmul(a[3], b[2]),
            cmul(a[2], b[1]) + cmul(a[3], b[3])};
}

/// RZ(omega) RY(theta) RZ(phi) as one matrix.
inline Mat2 rot_matrix(double phi, double theta, double omega) {
    return multiply(rz_matrix(omega), multiply(ry_matrix(theta), rz_matrix(phi)));
}

inline void apply_cnot_unchecked(std::span<Complex> amps,
                                 std::size_t num_qubits, std::size_t control,
                                 std::size_t target) {
    const std::size_t cmask = qubit_stride(num_qubits, control);
    const std::size_t tmask = qubit_stride(num_qubits, target);
    for (std::size_t i = 0; i < amps.size(); ++i) {
        // visit each swapped pair once, from its target-bit-clear member
        if ((i & cmask) != 0 && (i & tmask) == 0) {
            std::swap(amps[i], amps[i | tmask]);
        }
    }
}

inline void check_qubit(std::size_t num_qubits, std::size_t qubit) {
    qultsf::detail::require(qubit < num_qubits, "qubit index out of range");
}

inline void check_shapes(std::size_t input_dim, const CircuitParams &params) {
    qultsf::detail::require(
        input_dim == Statevector::dimension_for(params.num_qubits()),
        "embedded vector length must be 2^N for the circuit's N");
}

/// One primitive gate of the decomposed ansatz.
struct Op {
    enum class Kind { RZ, RY, CNOT } kind;
    std::size_t wire;   // rotation qubit, or CNOT control
    std::size_t target; // CNOT only
    std::size_t param;  // index into CircuitParams, rotations only
};

/// Flattened gate sequence: Rot split into RZ(phi), RY(theta), RZ(omega).
inline std::vector<Op> decompose(std::size_t num_layers,
                                 std::size_t num_qubits) {
    std::vector<Op> ops;
    ops.reserve(num_layers * num_qubits * 4);
    for (std::size_t k = 0; k < num_layers; ++k) {
        for (std::size_t q = 0; q < num_qubits; ++q) {
            const auto base = CircuitParams::index(num_qubits, k, q, 0);
            ops.push_back({Op::Kind::RZ, q, 0, base + 0});
            ops.push_back({Op::Kind::RY, q, 0, base + 1});
            ops.push_back({Op::Kind::RZ, q, 0, base + 2});
        }
        if (num_qubits > 1) {
            for (std::size_t i = 0; i < num_qubits; ++i) {
                ops.push_back({Op::Kind::CNOT, i, (i + 1) % num_qubits, 0});
            }
        }
    }
    return ops;
}

inline void apply_op(Statevector &s, const Op &op,
                     std::span<const double> angles, bool inverse) {
    if (op.kind == Op::Kind::CNOT) {
        apply_cnot_unchecked(s.amplitudes(), s.num_qubits(), op.wire,
                             op.target);
        return;
    }
    const double half = (inverse ? -0.5 : 0.5) * angles[op.param];
    switch (op.kind) {
    case Op::Kind::CNOT:
        break;
    case Op::Kind::RZ:
        apply_diagonal(s.amplitudes(), s.num_qubits(), op.wire,
                       {std::cos(half), -std::sin(half)},
                       {std::cos(half), std::sin(half)});
        break;
    case Op::Kind::RY:
        apply_real_rotation(s.amplitudes(), s.num_qubits(), op.wire,
                            std::cos(half), std::sin(half));
        break;
    }
}

/// <bra| (-i/2) P |ket> for P the generator (Z or Y) of `op`.
inline Complex generator_overlap(const Statevector &bra, const Statevector &ket,
                                 const Op &op) {
    const std::size_t n = bra.num_qubits();
    const std::size_t stride = qubit_stride(n, op.wire);
    Complex acc{0.0, 0.0};
    for (std::size_t block = 0; block < bra.size(); block += 2 * stride) {
        for (std::size_t i0 = block; i0 < block + stride; ++i0) {
            const std::size_t i1 = i0 + stride;
            if (op.kind == Op::Kind::RZ) {
                acc += cmul(std::conj(bra[i0]), ket[i0]) -
                       cmul(std::conj(bra[i1]), ket[i1]);
            } else {
                // -i * Y = [[0, -1], [1, 0]]
                acc += cmul(std::conj(bra[i1]), ket[i0]) -
                       cmul(std::conj(bra[i0]), ket[i1]);
            }
        }
    }
    if (op.kind == Op::Kind::RZ) {
        acc *= Complex{0.0, -0.5};
    } else {
        acc *= 0.5;
    }
    return acc;
}

inline double z_sign(std::size_t num_qubits, std::size_t qubit,
                     std::size_t basis) {
    return (basis & qubit_stride(num_qubits, qubit)) != 0 ? -1.0 : 1.0;
}

} // namespace detail

/// Encodes v / ||v|| as real amplitudes; a (near-)zero vector maps to |0...0>.
inline Statevector amplitude_embed(std::span<const double> v) {
    const std::size_t n = v.size();
    qultsf::detail::require(n >= 2 && (n & (n - 1)) == 0,
                            "amplitude_embed: length must be a power of two "
                            ">= 2");
    double sq = 0.0;
    for (double x : v) {
        qultsf::detail::require(std::isfinite(x),
                                "amplitude_embed: non-finite entry");
        sq += x * x;
    }
    const auto num_qubits = static_cast<std::size_t>(std::countr_zero(n));
    const double norm = std::sqrt(sq);
    if (norm < kZeroNormThreshold) {
        return Statevector(num_qubits);
    }
    std::vector<Complex> amps(n);
    for (std::size_t i = 0; i < n; ++i) {
        amps[i] = v[i] / norm;
    }
    return Statevector(num_qubits, std::move(amps));
}

inline Statevector apply_rot(Statevector state, std::size_t qubit, double phi,
                             double theta, double omega) {
    detail::check_qubit(state.num_qubits(), qubit);
    const auto n = state.num_qubits();
    detail::apply_matrix(state.amplitudes(), n, qubit, detail::rz_matrix(phi));
    detail::apply_matrix(state.amplitudes(), n, qubit,
                         detail::ry_matrix(theta));
    detail::apply_matrix(state.amplitudes(), n, qubit,
                         detail::rz_matrix(omega));
    return state;
}

inline Statevector apply_cnot(Statevector state, std::size_t control,
                              std::size_t target) {
    detail::check_qubit(state.num_qubits(), control);
    detail::check_qubit(state.num_qubits(), target);
    qultsf::detail::require(control != target,
                            "apply_cnot: control and target must differ");
    detail::apply_cnot_unchecked(state.amplitudes(), state.num_qubits(),
                                 control, target);
    return state;
}

[[nodiscard]] inline Statevector run_ansatz(Statevector state,
                                         const CircuitParams &params) {
    qultsf::detail::require(state.num_qubits() == params.num_qubits(),
                            "run_ansatz: circuit/state qubit count mismatch");
    const auto n = state.num_qubits();
    for (std::size_t k = 0; k < params.num_layers(); ++k) {
        for (std::size_t q = 0; q < n; ++q) {
            detail::apply_matrix(state.amplitudes(), n, q,
                                 detail::rot_matrix(params.at(k, q, 0),
                                                    params.at(k, q, 1),
                                                    params.at(k, q, 2)));
        }
        if (n > 1) {
            for (std::size_t i = 0; i < n; ++i) {
                detail::apply_cnot_unchecked(state.amplitudes(), n, i,
                                             (i + 1) % n);
            }
        }
    }
    return state;
}

/// <Z_q> for q = 0..N-1.
inline std::vector<double> pauli_z_expectations(const Statevector &state) {
    const auto n = state.num_qubits();
    std::vector<double> out(n, 0.0);
    for (std::size_t b = 0; b < state.size(); ++b) {
        const double p = std::norm(state[b]);
        for (std::size_t q = 0; q < n; ++q) {
            out[q] += detail::z_sign(n, q, b) * p;
        }
    }
    return out;
}

/// Embeds, runs the ansatz and reads out <Z_q>.
inline std::vector<double> expectations(std::span<const double> input_v,
                                        const CircuitParams &params) {
    detail::check_shapes(input_v.size(), params);
    return pauli_z_expectations(run_ansatz(amplitude_embed(input_v), params));
}

namespace detail {

/// Backward sweep shared by the adjoint routines. `lambdas` enter holding
/// O_j |psi_out> and leave holding U^dag O_j U |psi_in>. For every rotation,
/// `on_param(j, p, dvalue)` receives d<O_j>/d angle_p.
template <class OnParam>
void adjoint_sweep(Statevector psi, std::vector<Statevector> &lambdas,
                   const CircuitParams &params, OnParam &&on_param) {
    const auto ops = decompose(params.num_layers(), params.num_qubits());
    const auto angles = params.angles();
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) {
        const Op &op = *it;
        if (op.kind != Op::Kind::CNOT) {
            for (std::size_t j = 0; j < lambdas.size(); ++j) {
                const Complex ov = generator_overlap(lambdas[j], psi, op);
                on_param(j, op.param, 2.0 * ov.real());
            }
        }
        apply_op(psi, op, angles, /*inverse=*/true);
        for (auto &lam : lambdas) {
            apply_op(lam, op, angles, /*inverse=*/true);
        }
    }
}

/// Chains d<O>/d(amplitude) = 2 Re(lambda_0) through v -> v / ||v||.
inline void input_gradient(std::span<const double> input_v,
                           const Statevector &lambda0,
                           std::span<double> out) {
    double sq = 0.0;
    for (double x : input_v) {
        sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (norm < kZeroNormThreshold) {
        std::fill(out.begin(), out.end(), 0.0);
        return;
    }
    double dot = 0.0;
    for (std::size_t i = 0; i < input_v.size(); ++i) {
        dot += (input_v[i] / norm) * 2.0 * lambda0[i].real();
    }
    for (std::size_t i = 0; i < input_v.size(); ++i) {
        const double a = input_v[i] / norm;
        out[i] = (2.0 * lambda0[i].real() - a * dot) / norm;
    }
}

} // namespace detail

/// Full Jacobian of all N Pauli-Z expectations by adjoint differentiation.
inline GradientResult gradients_adjoint(std::span<const double> input_v,
                                        const CircuitParams &params) {
    detail::check_shapes(input_v.size(), params);
    const auto n = params.num_qubits();
    const Statevector psi = run_ansatz(amplitude_embed(input_v), params);

    std::vector<Statevector> lambdas(n, psi);
    for (std::size_t q = 0; q < n; ++q) {
        for (std::size_t b = 0; b < psi.size(); ++b) {
            lambdas[q][b] *= detail::z_sign(n, q, b);
        }
    }

    GradientResult out{n, params.size(), input_v.size(),
                       std::vector<double>(n * params.size(), 0.0),
                       std::vector<double>(n * input_v.size(), 0.0)};
    detail::adjoint_sweep(psi, lambdas, params,
                          [&](std::size_t j, std::size_t p, double d) {
                              out.d_params[j * out.num_params + p] += d;
                          });
    for (std::size_t q = 0; q < n; ++q) {
        detail::input_gradient(
            input_v, lambdas[q],
            std::span<double>(out.d_input).subspan(q * out.input_dim,
                                                   out.input_dim));
    }
    return out;
}

/// Vector-Jacobian product of the readout: gradients of sum_q w_q <Z_q>,
/// from one adjoint sweep with a single weighted observable.
struct ReadoutVjp {
    std::vector<double> d_params;
    std::vector<double> d_input;
};

inline ReadoutVjp vjp_adjoint(std::span<const double> input_v,
                              const CircuitParams &params,
                              std::span<const double> weights) {
    detail::check_shapes(input_v.size(), params);
    const auto n = params.num_qubits();
    qultsf::detail::require(weights.size() == n,
                            "vjp_adjoint: one weight per qubit required");
    const Statevector psi = run_ansatz(amplitude_embed(input_v), params);

    std::vector<Statevector> lambdas(1, psi);
    auto &lam = lambdas.front();
    for (std::size_t b = 0; b < psi.size(); ++b) {
        double w = 0.0;
        for (std::size_t q = 0; q < n; ++q) {
            w += weights[q] * detail::z_sign(n, q, b);
        }
        lam[b] *= w;
    }

    ReadoutVjp out{std::vector<double>(params.size(), 0.0),
                   std::vector<double>(input_v.size(), 0.0)};
    detail::adjoint_sweep(
        psi, lambdas, params,
        [&](std::size_t, std::size_t p, double d) { out.d_params[p] += d; });
    detail::input_gradient(input_v, lam, out.d_input);
    return out;
}

/// d<Z_q>/d angle by the two-term +-pi/2 shift rule; d_input is left empty.
inline GradientResult gradients_parameter_shift(std::span<const double> input_v,
                                                const CircuitParams &params) {
    detail::check_shapes(input_v.size(), params);
    const auto n = params.num_qubits();
    const Statevector embedded = amplitude_embed(input_v);
    GradientResult out{n, params.size(), input_v.size(),
                       std::vector<double>(n * params.size(), 0.0),
                       {}};
    CircuitParams shifted = params;
    constexpr double shift = std::numbers::pi / 2;
    for (std::size_t p = 0; p < params.size(); ++p) {
        const double original = params.angles()[p];
        shifted.angles()[p] = original + shift;
        const auto plus = pauli_z_expectations(run_ansatz(embedded, shifted));
        shifted.angles()[p] = original - shift;
        const auto minus = pauli_z_expectations(run_ansatz(embedded, shifted));
        shifted.angles()[p] = original;
        for (std::size_t q = 0; q < n; ++q) {
            out.d_params[q * out.num_params + p] = 0.5 * (plus[q] - minus[q]);
        }
    }
    return out;
}

} // namespace qultsf::qsim
