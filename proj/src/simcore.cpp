#include "qdeq/simcore.hpp"

#include <numbers>
#include <random>

namespace qdeq {

std::string to_string(GateKind k) {
  switch (k) {
    case GateKind::RX: return "RX";
    case GateKind::RY: return "RY";
    case GateKind::RZ: return "RZ";
    case GateKind::CNOT: return "CNOT";
    case GateKind::PauliX: return "PauliX";
    case GateKind::Hadamard: return "Hadamard";
  }
  return "?";
}

GateKind gate_kind_from_string(const std::string& name) {
  for (GateKind k : {GateKind::RX, GateKind::RY, GateKind::RZ, GateKind::CNOT, GateKind::PauliX,
                     GateKind::Hadamard}) {
    if (to_string(k) == name) return k;
  }
  throw InvalidArgument("unknown gate kind '" + name + "'");
}

void validate(const ParamCircuit& circuit) {
  if (circuit.num_qubits < 1) throw InvalidArgument("circuit needs at least one qubit");
  if (circuit.num_params < 0) throw InvalidArgument("negative parameter count");
  for (std::size_t i = 0; i < circuit.gates.size(); ++i) {
    const GateOp& g = circuit.gates[i];
    const auto fail = [&](const std::string& why) {
      throw InvalidArgument("gate " + std::to_string(i) + " (" + to_string(g.kind) + "): " + why);
    };
    if (g.target < 0 || g.target >= circuit.num_qubits) fail("target qubit out of range");
    if (is_rotation(g.kind)) {
      if (g.param_slot.has_value() == g.fixed_angle.has_value()) {
        fail("rotation needs exactly one of param_slot / fixed_angle");
      }
      if (g.param_slot && (*g.param_slot < 0 || *g.param_slot >= circuit.num_params)) {
        fail("param_slot out of range");
      }
      if (g.control) fail("rotation cannot have a control");
    } else {
      if (g.param_slot || g.fixed_angle) fail("non-rotation gate cannot carry an angle");
      if (g.kind == GateKind::CNOT) {
        if (!g.control) fail("CNOT needs a control qubit");
        if (*g.control < 0 || *g.control >= circuit.num_qubits) fail("control qubit out of range");
        if (*g.control == g.target) fail("control equals target");
      } else if (g.control) {
        fail("only CNOT takes a control");
      }
    }
  }
}

void append_remapped(ParamCircuit& dst, const ParamCircuit& src, int qubit_offset) {
  const int slot_offset = dst.num_params;
  for (GateOp g : src.gates) {
    g.target += qubit_offset;
    if (g.control) *g.control += qubit_offset;
    if (g.param_slot) *g.param_slot += slot_offset;
    dst.gates.push_back(g);
  }
  dst.num_params += src.num_params;
}

RandomLayer random_layer(std::uint64_t seed, int num_qubits, int num_ops) {
  if (num_ops < 0) throw InvalidArgument("random_layer: num_ops must be >= 0");
  if (num_qubits < 1) throw InvalidArgument("random_layer: num_qubits must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_kind(0, 3);
  std::uniform_int_distribution<int> pick_qubit(0, num_qubits - 1);
  std::uniform_real_distribution<double> pick_angle(0.0, 2.0 * std::numbers::pi);

  RandomLayer layer;
  std::vector<double> init;
  for (int op = 0; op < num_ops; ++op) {
    int kind = pick_kind(rng);
    while (kind == 3 && num_qubits < 2) kind = pick_kind(rng);
    if (kind == 3) {
      const int control = pick_qubit(rng);
      // uniform over the num_qubits - 1 remaining targets
      int target = std::uniform_int_distribution<int>(0, num_qubits - 2)(rng);
      if (target >= control) ++target;
      layer.gates.push_back(GateOp::cnot(control, target));
    } else {
      static constexpr GateKind kRot[] = {GateKind::RX, GateKind::RY, GateKind::RZ};
      layer.gates.push_back(GateOp::rotation(kRot[kind], pick_qubit(rng), layer.num_params++));
      init.push_back(pick_angle(rng));
    }
  }
  layer.initial_theta = Eigen::Map<const Eigen::VectorXd>(init.data(), static_cast<Eigen::Index>(init.size()));
  return layer;
}

}  // namespace qdeq
