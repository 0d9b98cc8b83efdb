#include "qdeq/qmodel.hpp"

#include <numbers>
#include <random>

#include "qdeq/rng.hpp"

namespace qdeq {

SeededCircuit build_block4(std::uint64_t seed, int random_ops) {
  constexpr int kQubits = 4;
  RandomLayer random = random_layer(seed, kQubits, random_ops);

  SeededCircuit out;
  out.circuit.num_qubits = kQubits;
  out.circuit.gates = std::move(random.gates);
  out.circuit.num_params = random.num_params;

  auto add_wall = [&](GateKind kind) {
    for (int q = 0; q < kQubits; ++q) {
      out.circuit.gates.push_back(GateOp::rotation(kind, q, out.circuit.num_params++));
    }
  };
  add_wall(GateKind::RY);
  add_wall(GateKind::RZ);
  for (int q = 0; q < kQubits; ++q) out.circuit.gates.push_back(GateOp::cnot(q, (q + 1) % kQubits));
  add_wall(GateKind::RY);

  // Trainable-layer initial values come from a stream independent of the
  // random layer's draws so that random_ops does not shift them.
  Rng rng(substream_seed(seed, "block4-trainable"));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
  out.theta.resize(out.circuit.num_params);
  out.theta.head(random.num_params) = random.initial_theta;
  for (int i = random.num_params; i < out.circuit.num_params; ++i) out.theta[i] = angle(rng);
  return out;
}

std::vector<int> staircase_offsets(int num_qubits, int block_width, int stride) {
  if (num_qubits < block_width) throw InvalidArgument("staircase: fewer qubits than block width");
  if (stride < 1) throw InvalidArgument("staircase: stride must be positive");
  std::vector<int> offsets;
  for (int off = 0; off + block_width <= num_qubits; off += stride) offsets.push_back(off);
  if (offsets.back() + block_width != num_qubits) {
    throw InvalidArgument("staircase: windows do not tile " + std::to_string(num_qubits) +
                          " qubits");
  }
  return offsets;
}

std::uint64_t staircase_block_seed(std::uint64_t master_seed, int block) {
  return master_seed + static_cast<std::uint64_t>(block) * 0x9E3779B97F4A7C15ULL;
}

SeededCircuit build_staircase(std::uint64_t seed, int num_qubits, int random_ops_per_block) {
  SeededCircuit out;
  out.circuit.num_qubits = num_qubits;
  std::vector<double> theta;
  const auto offsets = staircase_offsets(num_qubits);
  for (std::size_t b = 0; b < offsets.size(); ++b) {
    SeededCircuit block = build_block4(staircase_block_seed(seed, static_cast<int>(b)),
                                       random_ops_per_block);
    append_remapped(out.circuit, block.circuit, offsets[b]);
    theta.insert(theta.end(), block.theta.begin(), block.theta.end());
  }
  out.theta = Eigen::Map<Eigen::VectorXd>(theta.data(), static_cast<Eigen::Index>(theta.size()));
  return out;
}

QuantumModel::QuantumModel(EncodingSpec encoding, ParamCircuit circuit, Eigen::VectorXd theta,
                           ObservableEnsemble ensemble, UpsampleScale upsample_scale,
                           InjectionMode injection)
    : encoding_(encoding),
      circuit_(std::move(circuit)),
      theta_(std::move(theta)),
      ensemble_(std::move(ensemble)),
      upsample_scale_(upsample_scale),
      upsample_(UpsampleMap::make(ensemble_.size(), encoding.input_dim, upsample_scale)),
      injection_(injection) {
  validate(encoding_);
  validate(circuit_);
  if (circuit_.num_qubits != encoding_.num_qubits || ensemble_.num_qubits() != encoding_.num_qubits) {
    throw InvalidArgument("QuantumModel: encoding, circuit and ensemble qubit counts differ");
  }
  if (theta_.size() != circuit_.num_params) {
    throw InvalidArgument("QuantumModel: theta length does not match circuit parameters");
  }
  if (encoding_.kind == EncodingKind::Angle) {
    // Encoding rotations read slots p .. p+n-1 of an augmented parameter vector.
    ParamCircuit enc{encoding_.num_qubits, {}, encoding_.input_dim};
    const auto gates = angle_encode(Eigen::VectorXd::Zero(encoding_.input_dim), encoding_.num_qubits);
    for (std::size_t i = 0; i < gates.size(); ++i) {
      enc.gates.push_back(GateOp::rotation(gates[i].kind, gates[i].target, static_cast<int>(i)));
    }
    ParamCircuit combined{encoding_.num_qubits, {}, circuit_.num_params};
    append_remapped(combined, enc, 0);
    combined.gates.insert(combined.gates.end(), circuit_.gates.begin(), circuit_.gates.end());
    full_circuit_ = std::move(combined);
  } else {
    full_circuit_ = circuit_;
  }
}

void QuantumModel::set_theta(const Eigen::VectorXd& theta) {
  if (theta.size() != circuit_.num_params) {
    throw InvalidArgument("set_theta: expected " + std::to_string(circuit_.num_params) +
                          " parameters, got " + std::to_string(theta.size()));
  }
  theta_ = theta;
}

QuantumModel QuantumModel::with_injection(InjectionMode mode) const {
  QuantumModel copy = *this;
  copy.injection_ = mode;
  return copy;
}

QuantumModel make_block4_model(EncodingKind encoding, std::uint64_t circuit_seed, int random_ops,
                               UpsampleScale scale) {
  SeededCircuit c = build_block4(circuit_seed, random_ops);
  return QuantumModel(EncodingSpec{encoding, 4, 16}, std::move(c.circuit), std::move(c.theta),
                      ObservableEnsemble::pauli_z_all(4), scale);
}

QuantumModel make_staircase_model(std::uint64_t circuit_seed, int random_ops_per_block,
                                  UpsampleScale scale) {
  SeededCircuit c = build_staircase10(circuit_seed, random_ops_per_block);
  return QuantumModel(EncodingSpec{EncodingKind::Amplitude, 10, 100}, std::move(c.circuit),
                      std::move(c.theta), ObservableEnsemble::pauli_z_all(10), scale);
}

namespace {

void check_lengths(const QuantumModel& model, const Eigen::VectorXd& z, const Eigen::VectorXd& x) {
  if (z.size() != model.input_dim() || x.size() != model.input_dim()) {
    throw InvalidArgument("model expects vectors of length " + std::to_string(model.input_dim()) +
                          ", got z=" + std::to_string(z.size()) + " x=" + std::to_string(x.size()));
  }
}

// Input state and parameter vector for full_circuit().
struct Prepared {
  StateVector input;
  Eigen::VectorXd theta;
};

Prepared prepare(const QuantumModel& model, const Eigen::VectorXd& u) {
  const int q = model.num_qubits();
  if (model.encoding().kind == EncodingKind::Amplitude) {
    return {amplitude_encode(u, q), model.theta()};
  }
  Eigen::VectorXd theta(model.num_params() + u.size());
  theta << model.theta(), u;
  return {StateVector(q), std::move(theta)};
}

}  // namespace

StateVector model_state(const QuantumModel& model, const Eigen::VectorXd& z,
                        const Eigen::VectorXd& x) {
  check_lengths(model, z, x);
  Prepared p = prepare(model, inject(z, x, model.injection()));
  return apply_circuit(model.full_circuit(), p.theta, p.input);
}

Eigen::VectorXd forward(const QuantumModel& model, const Eigen::VectorXd& z,
                        const Eigen::VectorXd& x) {
  return upsample(expect_ensemble(model_state(model, z, x), model.ensemble()),
                  model.upsample_map());
}

LayerVjp vjp(const QuantumModel& model, const Eigen::VectorXd& z, const Eigen::VectorXd& x,
             const Eigen::VectorXd& cotangent) {
  check_lengths(model, z, x);
  if (cotangent.size() != model.input_dim()) throw InvalidArgument("vjp: cotangent length mismatch");
  const Eigen::VectorXd u = inject(z, x, model.injection());
  Prepared p = prepare(model, u);
  const Eigen::VectorXd ct_obs = upsample_transpose(cotangent, model.upsample_map());
  AdjointResult<double> adj = adjoint_gradients<double>(
      model.full_circuit(), p.theta, p.input, model.ensemble().weighted_diagonal(ct_obs));

  const int np = model.num_params();
  Eigen::VectorXd du;
  if (model.encoding().kind == EncodingKind::Amplitude) {
    // a = u / |u|;  du = (I - a aᵀ) da / |u|
    const double norm = u.norm();
    const Eigen::VectorXd a = u / norm;
    const Eigen::VectorXd da = adj.dinput.head(u.size()).real();
    du = (da - a * a.dot(da)) / norm;
  } else {
    du = adj.dtheta.tail(u.size());
  }
  return LayerVjp{inject_vjp_z(du, model.injection()), adj.dtheta.head(np)};
}

Eigen::VectorXd model_vjp_z(const QuantumModel& model, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& cotangent) {
  return vjp(model, z, x, cotangent).dz;
}

Eigen::VectorXd model_grad_theta(const QuantumModel& model, const Eigen::VectorXd& z,
                                 const Eigen::VectorXd& x, const Eigen::VectorXd& cotangent) {
  return vjp(model, z, x, cotangent).dtheta;
}

}  // namespace qdeq
