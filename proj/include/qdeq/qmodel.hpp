#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "qdeq/encoding.hpp"
#include "qdeq/measurement.hpp"
#include "qdeq/simcore.hpp"

namespace qdeq {

struct SeededCircuit {
  ParamCircuit circuit;
  Eigen::VectorXd theta;
};

/// Four-qubit classifier block: random_layer(seed, 4, random_ops) followed by
/// the trainable layer [RY x4, RZ x4, CNOT ring 0->1->2->3->0, RY x4].
/// All parameters are initialised uniformly in [0, 2π) from `seed`.
SeededCircuit build_block4(std::uint64_t seed, int random_ops = 50);

/// Offsets of 4-qubit windows laid out with the given stride: {0, 2, 4, 6} for 10 qubits.
std::vector<int> staircase_offsets(int num_qubits, int block_width = 4, int stride = 2);

/// Seed of the b-th block of a staircase built from `master_seed`; block 0 reuses
/// the master seed itself.
std::uint64_t staircase_block_seed(std::uint64_t master_seed, int block);

/// build_block4 copies placed on staircase windows, each with its own block seed.
SeededCircuit build_staircase(std::uint64_t seed, int num_qubits, int random_ops_per_block = 50);

inline SeededCircuit build_staircase10(std::uint64_t seed, int random_ops_per_block = 50) {
  return build_staircase(seed, 10, random_ops_per_block);
}

/// f_θ(z; x) = upsample(<M_k> of U(θ) S(inject(z, x)) |0>).
class QuantumModel {
 public:
  QuantumModel(EncodingSpec encoding, ParamCircuit circuit, Eigen::VectorXd theta,
               ObservableEnsemble ensemble, UpsampleScale upsample_scale = UpsampleScale::Isometric,
               InjectionMode injection = InjectionMode::Add);

  const EncodingSpec& encoding() const { return encoding_; }
  const ParamCircuit& circuit() const { return circuit_; }
  const ObservableEnsemble& ensemble() const { return ensemble_; }
  const UpsampleMap& upsample_map() const { return upsample_; }
  UpsampleScale upsample_scale() const { return upsample_scale_; }
  InjectionMode injection() const { return injection_; }

  const Eigen::VectorXd& theta() const { return theta_; }
  void set_theta(const Eigen::VectorXd& theta);

  int input_dim() const { return encoding_.input_dim; }
  int num_qubits() const { return encoding_.num_qubits; }
  int num_params() const { return circuit_.num_params; }

  /// Same model with a different injection mode (shares circuit and θ).
  QuantumModel with_injection(InjectionMode mode) const;

  /// For angle encoding: encoding gates (slots num_params()..num_params()+n-1)
  /// followed by the circuit. For amplitude encoding: the circuit itself.
  const ParamCircuit& full_circuit() const { return full_circuit_; }

 private:
  EncodingSpec encoding_;
  ParamCircuit circuit_;
  Eigen::VectorXd theta_;
  ObservableEnsemble ensemble_;
  UpsampleScale upsample_scale_;
  UpsampleMap upsample_;
  InjectionMode injection_;
  ParamCircuit full_circuit_;
};

/// MNIST-4 style model: Q = 4, n = 16, one Z per qubit, block4 circuit.
QuantumModel make_block4_model(EncodingKind encoding, std::uint64_t circuit_seed,
                               int random_ops = 50,
                               UpsampleScale scale = UpsampleScale::Isometric);

/// Ten-class model: Q = 10, n = 100, one Z per qubit, amplitude encoding, staircase circuit.
QuantumModel make_staircase_model(std::uint64_t circuit_seed, int random_ops_per_block = 50,
                                  UpsampleScale scale = UpsampleScale::Isometric);

/// State U(θ) S(inject(z, x))|0>.
StateVector model_state(const QuantumModel& model, const Eigen::VectorXd& z,
                        const Eigen::VectorXd& x);

Eigen::VectorXd forward(const QuantumModel& model, const Eigen::VectorXd& z,
                        const Eigen::VectorXd& x);

struct LayerVjp {
  Eigen::VectorXd dz;
  Eigen::VectorXd dtheta;
};

/// cotangentᵀ ∂f/∂z and cotangentᵀ ∂f/∂θ from a single adjoint sweep.
LayerVjp vjp(const QuantumModel& model, const Eigen::VectorXd& z, const Eigen::VectorXd& x,
             const Eigen::VectorXd& cotangent);

Eigen::VectorXd model_vjp_z(const QuantumModel& model, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& cotangent);

Eigen::VectorXd model_grad_theta(const QuantumModel& model, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& cotangent);

inline int num_params(const QuantumModel& model) { return model.num_params(); }
inline const Eigen::VectorXd& parameters(const QuantumModel& model) { return model.theta(); }
inline void set_parameters(QuantumModel& model, const Eigen::VectorXd& theta) {
  model.set_theta(theta);
}

}  // namespace qdeq
