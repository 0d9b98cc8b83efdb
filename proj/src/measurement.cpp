#include "qdeq/measurement.hpp"

#include <cmath>

namespace qdeq {

std::string to_string(EnsembleKind k) {
  return k == EnsembleKind::PauliZ ? "pauli_z" : "basis_projector";
}

EnsembleKind ensemble_kind_from_string(const std::string& name) {
  if (name == "pauli_z") return EnsembleKind::PauliZ;
  if (name == "basis_projector") return EnsembleKind::BasisProjector;
  throw InvalidArgument("unknown ensemble kind '" + name + "'");
}

ObservableEnsemble::ObservableEnsemble(EnsembleKind kind, int num_qubits,
                                       std::vector<Eigen::Index> sites)
    : kind_(kind), num_qubits_(num_qubits), sites_(std::move(sites)) {
  if (num_qubits < 1 || num_qubits > 30) throw InvalidArgument("ensemble: bad qubit count");
  if (sites_.empty()) throw InvalidArgument("ensemble: needs at least one observable");
  const Eigen::Index dim = Eigen::Index{1} << num_qubits;
  diagonals_ = Eigen::MatrixXd::Zero(dim, static_cast<Eigen::Index>(sites_.size()));
  for (std::size_t k = 0; k < sites_.size(); ++k) {
    const Eigen::Index site = sites_[k];
    const auto col = static_cast<Eigen::Index>(k);
    if (kind == EnsembleKind::PauliZ) {
      if (site < 0 || site >= num_qubits) {
        throw InvalidArgument("ensemble: Z site " + std::to_string(site) + " out of range");
      }
      const Eigen::Index m = kernels::qubit_mask(num_qubits, static_cast<int>(site));
      for (Eigen::Index i = 0; i < dim; ++i) diagonals_(i, col) = (i & m) ? -1.0 : 1.0;
    } else {
      if (site < 0 || site >= dim) {
        throw InvalidArgument("ensemble: basis state " + std::to_string(site) + " out of range");
      }
      diagonals_(site, col) = 1.0;
    }
  }
}

ObservableEnsemble ObservableEnsemble::pauli_z(int num_qubits, std::vector<Eigen::Index> qubits) {
  return ObservableEnsemble(EnsembleKind::PauliZ, num_qubits, std::move(qubits));
}

ObservableEnsemble ObservableEnsemble::pauli_z_all(int num_qubits) {
  std::vector<Eigen::Index> q(static_cast<std::size_t>(num_qubits));
  for (int i = 0; i < num_qubits; ++i) q[static_cast<std::size_t>(i)] = i;
  return pauli_z(num_qubits, std::move(q));
}

ObservableEnsemble ObservableEnsemble::basis_projectors(int num_qubits,
                                                        std::vector<Eigen::Index> states) {
  return ObservableEnsemble(EnsembleKind::BasisProjector, num_qubits, std::move(states));
}

Eigen::VectorXd ObservableEnsemble::weighted_diagonal(const Eigen::VectorXd& cotangent) const {
  if (cotangent.size() != size()) {
    throw InvalidArgument("ensemble cotangent has length " + std::to_string(cotangent.size()) +
                          ", expected " + std::to_string(size()));
  }
  return diagonals_ * cotangent;
}

Eigen::VectorXd expect_ensemble(const StateVector& state, const ObservableEnsemble& ensemble) {
  if (state.num_qubits() != ensemble.num_qubits()) {
    throw InvalidArgument("expect_ensemble: state/ensemble qubit count mismatch");
  }
  return ensemble.diagonals().transpose() * state.probabilities();
}

std::string to_string(UpsampleScale s) {
  return s == UpsampleScale::Isometric ? "isometric" : "unscaled";
}

UpsampleScale upsample_scale_from_string(const std::string& name) {
  if (name == "isometric") return UpsampleScale::Isometric;
  if (name == "unscaled") return UpsampleScale::Unscaled;
  throw InvalidArgument("unknown upsample_scale '" + name + "'");
}

UpsampleMap UpsampleMap::make(int source_dim, int target_dim, UpsampleScale mode) {
  if (source_dim < 1 || target_dim < 1) throw InvalidArgument("upsample: dims must be positive");
  if (source_dim > target_dim) {
    throw InvalidArgument("upsample: " + std::to_string(source_dim) + " outcomes exceed target length " +
                          std::to_string(target_dim));
  }
  UpsampleMap m;
  m.source_dim = source_dim;
  m.target_dim = target_dim;
  m.repeat = (target_dim + source_dim - 1) / source_dim;
  m.scale = mode == UpsampleScale::Isometric ? 1.0 / std::sqrt(static_cast<double>(m.repeat)) : 1.0;
  return m;
}

Eigen::VectorXd upsample(const Eigen::VectorXd& v, const UpsampleMap& map) {
  if (v.size() != map.source_dim) {
    throw InvalidArgument("upsample: expected length " + std::to_string(map.source_dim));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(map.target_dim);
  const Eigen::Index filled = std::min<Eigen::Index>(map.target_dim,
                                                     Eigen::Index{map.repeat} * map.source_dim);
  for (Eigen::Index j = 0; j < filled; ++j) out[j] = map.scale * v[j / map.repeat];
  return out;
}

Eigen::VectorXd upsample_transpose(const Eigen::VectorXd& g, const UpsampleMap& map) {
  if (g.size() != map.target_dim) {
    throw InvalidArgument("upsample_transpose: expected length " + std::to_string(map.target_dim));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(map.source_dim);
  const Eigen::Index filled = std::min<Eigen::Index>(map.target_dim,
                                                     Eigen::Index{map.repeat} * map.source_dim);
  for (Eigen::Index j = 0; j < filled; ++j) out[j / map.repeat] += map.scale * g[j];
  return out;
}

AdjointResult<double> adjoint_gradients(const ParamCircuit& circuit, const Eigen::VectorXd& theta,
                                        const StateVector& input, const Eigen::VectorXd& cotangent,
                                        const ObservableEnsemble& ensemble) {
  return adjoint_gradients<double>(circuit, theta, input, ensemble.weighted_diagonal(cotangent));
}

Eigen::VectorXd parameter_shift_grad(const ParamCircuit& circuit, const Eigen::VectorXd& theta,
                                     const StateVector& input, const ObservableEnsemble& ensemble,
                                     int slot) {
  return parameter_shift_grad<double>(circuit, theta, input, ensemble.diagonals(), slot);
}

}  // namespace qdeq
