#include "qdeq/encoding.hpp"

namespace qdeq {

std::string to_string(EncodingKind k) {
  return k == EncodingKind::Amplitude ? "amplitude" : "angle";
}

EncodingKind encoding_kind_from_string(const std::string& name) {
  if (name == "amplitude") return EncodingKind::Amplitude;
  if (name == "angle") return EncodingKind::Angle;
  throw InvalidArgument("unknown encoding '" + name + "' (expected amplitude|angle)");
}

void validate(const EncodingSpec& spec) {
  if (spec.num_qubits < 1 || spec.num_qubits > 30) {
    throw InvalidArgument("encoding: num_qubits out of range");
  }
  if (spec.input_dim < 1) throw InvalidArgument("encoding: input_dim must be positive");
  if (spec.kind == EncodingKind::Amplitude &&
      spec.input_dim > (std::int64_t{1} << spec.num_qubits)) {
    throw InvalidArgument("amplitude encoding: input_dim " + std::to_string(spec.input_dim) +
                          " exceeds 2^" + std::to_string(spec.num_qubits));
  }
  if (spec.kind == EncodingKind::Angle && spec.input_dim != 4 * spec.num_qubits) {
    throw InvalidArgument("angle encoding: input_dim must equal 4 * num_qubits");
  }
}

StateVector amplitude_encode(const Eigen::VectorXd& x, int num_qubits) {
  validate(EncodingSpec{EncodingKind::Amplitude, num_qubits, static_cast<int>(x.size())});
  const double norm = x.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw DegenerateInput("amplitude_encode: cannot normalise a vector of norm " +
                          std::to_string(norm));
  }
  StateVector::Amplitudes amps = StateVector::Amplitudes::Zero(Eigen::Index{1} << num_qubits);
  amps.head(x.size()) = (x / norm).cast<std::complex<double>>();
  return StateVector(num_qubits, std::move(amps));
}

std::vector<GateOp> angle_encode(const Eigen::VectorXd& x, int num_qubits) {
  if (x.size() != 4 * num_qubits) {
    throw InvalidArgument("angle_encode: expected " + std::to_string(4 * num_qubits) +
                          " angles, got " + std::to_string(x.size()));
  }
  static constexpr GateKind kOrder[] = {GateKind::RY, GateKind::RZ, GateKind::RX, GateKind::RY};
  std::vector<GateOp> gates;
  gates.reserve(static_cast<std::size_t>(x.size()));
  for (int q = 0; q < num_qubits; ++q) {
    for (int j = 0; j < 4; ++j) gates.push_back(GateOp::fixed(kOrder[j], q, x[4 * q + j]));
  }
  return gates;
}

StateVector angle_encode_state(const Eigen::VectorXd& x, int num_qubits) {
  StateVector s(num_qubits);
  for (const GateOp& g : angle_encode(x, num_qubits)) {
    kernels::apply_gate<double>(s.amplitudes(), num_qubits, g, *g.fixed_angle);
  }
  return s;
}

std::string to_string(InjectionMode m) {
  switch (m) {
    case InjectionMode::Add: return "add";
    case InjectionMode::None: return "none";
    case InjectionMode::InputOnly: return "input_only";
  }
  return "?";
}

InjectionMode injection_mode_from_string(const std::string& name) {
  if (name == "add") return InjectionMode::Add;
  if (name == "none") return InjectionMode::None;
  if (name == "input_only") return InjectionMode::InputOnly;
  throw InvalidArgument("unknown injection mode '" + name + "'");
}

Eigen::VectorXd inject(const Eigen::VectorXd& z, const Eigen::VectorXd& x, InjectionMode mode) {
  if (z.size() != x.size()) {
    throw InvalidArgument("inject: z has length " + std::to_string(z.size()) + ", x has " +
                          std::to_string(x.size()));
  }
  switch (mode) {
    case InjectionMode::Add: return z + x;
    case InjectionMode::None: return z;
    case InjectionMode::InputOnly: return x;
  }
  return z + x;
}

Eigen::VectorXd inject_vjp_z(const Eigen::VectorXd& d_injected, InjectionMode mode) {
  if (mode == InjectionMode::InputOnly) return Eigen::VectorXd::Zero(d_injected.size());
  return d_injected;
}

}  // namespace qdeq
