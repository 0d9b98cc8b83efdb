#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "qdeq/simcore.hpp"

namespace qdeq {

enum class EncodingKind { Amplitude, Angle };

std::string to_string(EncodingKind k);
EncodingKind encoding_kind_from_string(const std::string& name);

struct EncodingSpec {
  EncodingKind kind = EncodingKind::Amplitude;
  int num_qubits = 1;
  int input_dim = 1;

  friend bool operator==(const EncodingSpec&, const EncodingSpec&) = default;
};

/// Amplitude: input_dim <= 2^Q. Angle: input_dim == 4 Q.
void validate(const EncodingSpec& spec);

/// x zero-padded to 2^Q entries and divided by its l2 norm.
/// Throws DegenerateInput for the zero vector.
StateVector amplitude_encode(const Eigen::VectorXd& x, int num_qubits);

/// Per qubit k: RY(x[4k]), RZ(x[4k+1]), RX(x[4k+2]), RY(x[4k+3]) as fixed-angle
/// gates, qubit 0 first.
std::vector<GateOp> angle_encode(const Eigen::VectorXd& x, int num_qubits);

/// The angle-encoding gates applied to |0...0>.
StateVector angle_encode_state(const Eigen::VectorXd& x, int num_qubits);

/// How the solver iterate z and the input x are combined before encoding.
///   Add       z + x (the DEQ input injection)
///   None      z alone, for plain layer stacks without injection
///   InputOnly x alone; the layer ignores z (constant-in-z diagnostic mode)
enum class InjectionMode { Add, None, InputOnly };

std::string to_string(InjectionMode m);
InjectionMode injection_mode_from_string(const std::string& name);

Eigen::VectorXd inject(const Eigen::VectorXd& z, const Eigen::VectorXd& x,
                       InjectionMode mode = InjectionMode::Add);

/// Pull a cotangent on inject()'s output back to z.
Eigen::VectorXd inject_vjp_z(const Eigen::VectorXd& d_injected, InjectionMode mode);

}  // namespace qdeq
