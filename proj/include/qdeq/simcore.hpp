#pragma once

// Dense statevector simulation of parametrized circuits.
//
// Qubit 0 is the most significant bit of a basis index, so for Q qubits the
// amplitude of |b_0 b_1 ... b_{Q-1}> lives at index sum_k b_k 2^{Q-1-k}.
// Gates act in place through stride-indexed amplitude pairs; no 2^Q x 2^Q
// matrix is ever formed.

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qdeq/errors.hpp"

namespace qdeq {

enum class GateKind { RX, RY, RZ, CNOT, PauliX, Hadamard };

constexpr bool is_rotation(GateKind k) {
  return k == GateKind::RX || k == GateKind::RY || k == GateKind::RZ;
}

std::string to_string(GateKind k);
GateKind gate_kind_from_string(const std::string& name);

struct GateOp {
  GateKind kind = GateKind::PauliX;
  int target = 0;
  std::optional<int> control;
  std::optional<int> param_slot;
  std::optional<double> fixed_angle;

  static GateOp rotation(GateKind kind, int target, int slot) {
    return GateOp{kind, target, std::nullopt, slot, std::nullopt};
  }
  static GateOp fixed(GateKind kind, int target, double angle) {
    return GateOp{kind, target, std::nullopt, std::nullopt, angle};
  }
  static GateOp cnot(int control, int target) {
    return GateOp{GateKind::CNOT, target, control, std::nullopt, std::nullopt};
  }
  static GateOp pauli_x(int target) { return GateOp{GateKind::PauliX, target, {}, {}, {}}; }
  static GateOp hadamard(int target) { return GateOp{GateKind::Hadamard, target, {}, {}, {}}; }

  friend bool operator==(const GateOp&, const GateOp&) = default;
};

/// Ordered gate list over `num_qubits` qubits with `num_params` trainable slots.
struct ParamCircuit {
  int num_qubits = 1;
  std::vector<GateOp> gates;
  int num_params = 0;

  friend bool operator==(const ParamCircuit&, const ParamCircuit&) = default;
};

/// Throws InvalidArgument (naming the offending gate index) when a gate
/// violates the GateOp / ParamCircuit invariants.
void validate(const ParamCircuit& circuit);

/// Appends `src` to `dst`, shifting qubits by `qubit_offset` and parameter
/// slots by dst.num_params. dst.num_params grows by src.num_params.
void append_remapped(ParamCircuit& dst, const ParamCircuit& src, int qubit_offset);

template <typename Scalar>
class BasicStateVector {
 public:
  using Complex = std::complex<Scalar>;
  using Amplitudes = Eigen::Matrix<Complex, Eigen::Dynamic, 1>;

  /// |0...0> on `num_qubits` qubits.
  explicit BasicStateVector(int num_qubits) : num_qubits_(num_qubits) {
    if (num_qubits < 1 || num_qubits > 30) {
      throw InvalidArgument("StateVector: num_qubits must be in [1, 30], got " +
                            std::to_string(num_qubits));
    }
    amplitudes_ = Amplitudes::Zero(Eigen::Index{1} << num_qubits);
    amplitudes_[0] = Complex(1);
  }

  BasicStateVector(int num_qubits, Amplitudes amplitudes)
      : num_qubits_(num_qubits), amplitudes_(std::move(amplitudes)) {
    if (num_qubits < 1 || num_qubits > 30 ||
        amplitudes_.size() != (Eigen::Index{1} << num_qubits)) {
      throw InvalidArgument("StateVector: amplitude length " +
                            std::to_string(amplitudes_.size()) + " != 2^" +
                            std::to_string(num_qubits));
    }
  }

  static BasicStateVector basis(int num_qubits, Eigen::Index index) {
    BasicStateVector s(num_qubits);
    if (index < 0 || index >= s.dim()) throw InvalidArgument("basis index out of range");
    s.amplitudes_[0] = Complex(0);
    s.amplitudes_[index] = Complex(1);
    return s;
  }

  int num_qubits() const { return num_qubits_; }
  Eigen::Index dim() const { return amplitudes_.size(); }
  const Amplitudes& amplitudes() const { return amplitudes_; }
  Amplitudes& amplitudes() { return amplitudes_; }
  Complex operator[](Eigen::Index i) const { return amplitudes_[i]; }

  Scalar norm() const { return amplitudes_.norm(); }

  /// <this|other>
  Complex inner(const BasicStateVector& other) const {
    return amplitudes_.dot(other.amplitudes_);
  }

  /// |<i|psi>|^2 for every basis state.
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> probabilities() const {
    return amplitudes_.cwiseAbs2();
  }

 private:
  int num_qubits_;
  Amplitudes amplitudes_;
};

using StateVector = BasicStateVector<double>;

namespace kernels {

template <typename Scalar>
using Amps = typename BasicStateVector<Scalar>::Amplitudes;

inline Eigen::Index qubit_mask(int num_qubits, int qubit) {
  return Eigen::Index{1} << (num_qubits - 1 - qubit);
}

template <typename Scalar>
void apply_single(Amps<Scalar>& a, int num_qubits, int target, std::complex<Scalar> u00,
                  std::complex<Scalar> u01, std::complex<Scalar> u10, std::complex<Scalar> u11) {
  const Eigen::Index m = qubit_mask(num_qubits, target);
  const Eigen::Index n = a.size();
  for (Eigen::Index base = 0; base < n; base += 2 * m) {
    for (Eigen::Index i = base; i < base + m; ++i) {
      const auto a0 = a[i];
      const auto a1 = a[i + m];
      a[i] = u00 * a0 + u01 * a1;
      a[i + m] = u10 * a0 + u11 * a1;
    }
  }
}

template <typename Scalar>
void apply_cnot(Amps<Scalar>& a, int num_qubits, int control, int target) {
  const Eigen::Index cm = qubit_mask(num_qubits, control);
  const Eigen::Index tm = qubit_mask(num_qubits, target);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if ((i & cm) && !(i & tm)) std::swap(a[i], a[i | tm]);
  }
}

/// Rotation exp(-i angle P / 2) with P the Pauli generator of `kind`.
template <typename Scalar>
void apply_rotation(Amps<Scalar>& a, int num_qubits, GateKind kind, int target, Scalar angle) {
  using C = std::complex<Scalar>;
  const Scalar c = std::cos(angle / 2);
  const Scalar s = std::sin(angle / 2);
  switch (kind) {
    case GateKind::RX:
      apply_single<Scalar>(a, num_qubits, target, C(c), C(0, -s), C(0, -s), C(c));
      break;
    case GateKind::RY:
      apply_single<Scalar>(a, num_qubits, target, C(c), C(-s), C(s), C(c));
      break;
    case GateKind::RZ: {
      const Eigen::Index m = qubit_mask(num_qubits, target);
      const C lo(c, -s), hi(c, s);
      for (Eigen::Index i = 0; i < a.size(); ++i) a[i] *= (i & m) ? hi : lo;
      break;
    }
    default:
      throw UnsupportedGate("apply_rotation: " + to_string(kind) + " is not a rotation");
  }
}

template <typename Scalar>
void apply_gate(Amps<Scalar>& a, int num_qubits, const GateOp& g, Scalar angle) {
  using C = std::complex<Scalar>;
  switch (g.kind) {
    case GateKind::RX:
    case GateKind::RY:
    case GateKind::RZ:
      apply_rotation<Scalar>(a, num_qubits, g.kind, g.target, angle);
      break;
    case GateKind::CNOT:
      apply_cnot<Scalar>(a, num_qubits, *g.control, g.target);
      break;
    case GateKind::PauliX:
      apply_single<Scalar>(a, num_qubits, g.target, C(0), C(1), C(1), C(0));
      break;
    case GateKind::Hadamard: {
      const Scalar h = Scalar(1) / std::sqrt(Scalar(2));
      apply_single<Scalar>(a, num_qubits, g.target, C(h), C(h), C(h), C(-h));
      break;
    }
  }
}

template <typename Scalar>
void apply_gate_inverse(Amps<Scalar>& a, int num_qubits, const GateOp& g, Scalar angle) {
  // Rotations invert by negating the angle; the fixed gates are involutions.
  apply_gate<Scalar>(a, num_qubits, g, is_rotation(g.kind) ? -angle : angle);
}

/// <lambda| P |psi> for the Pauli generator P of a rotation gate.
template <typename Scalar>
std::complex<Scalar> generator_overlap(const Amps<Scalar>& lambda, const Amps<Scalar>& psi,
                                       int num_qubits, const GateOp& g) {
  using C = std::complex<Scalar>;
  const Eigen::Index m = qubit_mask(num_qubits, g.target);
  C acc(0);
  switch (g.kind) {
    case GateKind::RX:
      for (Eigen::Index i = 0; i < psi.size(); ++i) acc += std::conj(lambda[i]) * psi[i ^ m];
      break;
    case GateKind::RY:
      // Y|0> = i|1>, Y|1> = -i|0>
      for (Eigen::Index i = 0; i < psi.size(); ++i) {
        const C py = (i & m) ? C(0, 1) * psi[i ^ m] : C(0, -1) * psi[i ^ m];
        acc += std::conj(lambda[i]) * py;
      }
      break;
    case GateKind::RZ:
      for (Eigen::Index i = 0; i < psi.size(); ++i) {
        acc += (i & m) ? -std::conj(lambda[i]) * psi[i] : std::conj(lambda[i]) * psi[i];
      }
      break;
    default:
      throw UnsupportedGate("generator_overlap: " + to_string(g.kind) + " has no generator");
  }
  return acc;
}

}  // namespace kernels

template <typename Scalar>
Scalar gate_angle(const GateOp& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta) {
  if (g.param_slot) return theta[*g.param_slot];
  if (g.fixed_angle) return static_cast<Scalar>(*g.fixed_angle);
  return Scalar(0);
}

namespace detail {
template <typename Scalar>
void check_shapes(const ParamCircuit& circuit,
                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta, int state_qubits) {
  validate(circuit);
  if (theta.size() != circuit.num_params) {
    throw InvalidArgument("theta has length " + std::to_string(theta.size()) +
                          " but circuit has " + std::to_string(circuit.num_params) +
                          " parameters");
  }
  if (state_qubits != circuit.num_qubits) {
    throw InvalidArgument("state has " + std::to_string(state_qubits) +
                          " qubits but circuit acts on " + std::to_string(circuit.num_qubits));
  }
}
}  // namespace detail

/// U(theta)|state>. The input is not modified.
template <typename Scalar>
BasicStateVector<Scalar> apply_circuit(const ParamCircuit& circuit,
                                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta,
                                       const BasicStateVector<Scalar>& state) {
  detail::check_shapes(circuit, theta, state.num_qubits());
  BasicStateVector<Scalar> out = state;
  for (const auto& g : circuit.gates) {
    kernels::apply_gate<Scalar>(out.amplitudes(), circuit.num_qubits, g, gate_angle(g, theta));
  }
  return out;
}

/// <psi| D |psi> for a real diagonal observable D (one entry per basis state).
template <typename Scalar>
Scalar expect_diagonal(const BasicStateVector<Scalar>& psi,
                       const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diagonal) {
  return psi.amplitudes().cwiseAbs2().dot(diagonal);
}

template <typename Scalar>
struct AdjointResult {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> dtheta;
  /// 2 U^dagger D U |input>, so that df = Re <dinput | d input>.
  typename BasicStateVector<Scalar>::Amplitudes dinput;
  Scalar value = 0;
};

/// Reverse-mode gradient of f = <input| U^dagger D U |input> for a real
/// diagonal observable D, with respect to every parameter slot and to the
/// input amplitudes. One forward sweep plus one backward sweep.
template <typename Scalar>
AdjointResult<Scalar> adjoint_gradients(const ParamCircuit& circuit,
                                        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta,
                                        const BasicStateVector<Scalar>& input,
                                        const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& diagonal) {
  BasicStateVector<Scalar> forward = apply_circuit(circuit, theta, input);
  if (diagonal.size() != forward.dim()) {
    throw InvalidArgument("observable diagonal has length " + std::to_string(diagonal.size()) +
                          ", expected " + std::to_string(forward.dim()));
  }
  auto psi = std::move(forward.amplitudes());
  typename BasicStateVector<Scalar>::Amplitudes lambda = diagonal.template cast<std::complex<Scalar>>().cwiseProduct(psi);

  AdjointResult<Scalar> out;
  out.value = psi.cwiseAbs2().dot(diagonal);
  out.dtheta = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(circuit.num_params);
  const int nq = circuit.num_qubits;
  for (auto it = circuit.gates.rbegin(); it != circuit.gates.rend(); ++it) {
    const GateOp& g = *it;
    const Scalar angle = gate_angle(g, theta);
    if (g.param_slot) {
      // d/dθ exp(-iθP/2) = -i/2 P exp(-iθP/2); 2 Re<λ|-i/2 P ψ> = Im<λ|Pψ>.
      out.dtheta[*g.param_slot] += std::imag(kernels::generator_overlap<Scalar>(lambda, psi, nq, g));
    }
    kernels::apply_gate_inverse<Scalar>(psi, nq, g, angle);
    kernels::apply_gate_inverse<Scalar>(lambda, nq, g, angle);
  }
  out.dinput = Scalar(2) * lambda;
  return out;
}

/// Expectations of each column of `diagonals` for U(theta)|input> with the
/// gate at `gate_index` shifted by `shift` radians.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> shifted_expectations(
    const ParamCircuit& circuit, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta,
    const BasicStateVector<Scalar>& input,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& diagonals, std::size_t gate_index,
    Scalar shift) {
  BasicStateVector<Scalar> out = input;
  for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
    const GateOp& g = circuit.gates[i];
    const Scalar angle = gate_angle(g, theta) + (i == gate_index ? shift : Scalar(0));
    kernels::apply_gate<Scalar>(out.amplitudes(), circuit.num_qubits, g, angle);
  }
  return diagonals.transpose() * out.probabilities();
}

/// Two-term parameter-shift derivative of every observable (column of
/// `diagonals`) with respect to parameter `slot`:
///   (f(θ + π/2) − f(θ − π/2)) / 2
/// applied to each gate that reads the slot, summed by the product rule.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> parameter_shift_grad(
    const ParamCircuit& circuit, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& theta,
    const BasicStateVector<Scalar>& input,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& diagonals, int slot) {
  if (slot < 0 || slot >= circuit.num_params) {
    throw InvalidArgument("parameter_shift_grad: slot " + std::to_string(slot) + " out of range");
  }
  for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
    const GateOp& g = circuit.gates[i];
    if (g.param_slot == slot && !is_rotation(g.kind)) {
      throw UnsupportedGate("parameter_shift_grad: slot " + std::to_string(slot) +
                            " is bound to non-rotation gate " + std::to_string(i) + " (" +
                            to_string(g.kind) + ")");
    }
  }
  detail::check_shapes(circuit, theta, input.num_qubits());
  const Scalar half_pi = Scalar(std::acos(-1.0L) / 2);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> grad =
      Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(diagonals.cols());
  for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
    if (circuit.gates[i].param_slot != slot) continue;
    grad += (shifted_expectations(circuit, theta, input, diagonals, i, half_pi) -
             shifted_expectations(circuit, theta, input, diagonals, i, -half_pi)) /
            Scalar(2);
  }
  return grad;
}

struct RandomLayer {
  std::vector<GateOp> gates;  // slots numbered 0..num_params-1 in order of appearance
  int num_params = 0;
  Eigen::VectorXd initial_theta;
};

/// Seeded random layer over {RX, RY, RZ, CNOT}, each kind drawn uniformly.
/// Rotations get fresh trainable slots initialised uniformly in [0, 2π).
/// With a single qubit, a CNOT draw is redrawn.
RandomLayer random_layer(std::uint64_t seed, int num_qubits, int num_ops);

}  // namespace qdeq
