#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "qdeq/simcore.hpp"

namespace qdeq {

enum class EnsembleKind { PauliZ, BasisProjector };

std::string to_string(EnsembleKind k);
EnsembleKind ensemble_kind_from_string(const std::string& name);

/// K observables that are all diagonal in the computational basis: Z on a
/// chosen qubit, or the projector |k><k| onto a basis state. Both have unit
/// spectral norm.
class ObservableEnsemble {
 public:
  ObservableEnsemble(EnsembleKind kind, int num_qubits, std::vector<Eigen::Index> sites);

  static ObservableEnsemble pauli_z(int num_qubits, std::vector<Eigen::Index> qubits);
  /// Z on every qubit, qubit 0 first.
  static ObservableEnsemble pauli_z_all(int num_qubits);
  static ObservableEnsemble basis_projectors(int num_qubits, std::vector<Eigen::Index> states);

  EnsembleKind kind() const { return kind_; }
  int num_qubits() const { return num_qubits_; }
  const std::vector<Eigen::Index>& sites() const { return sites_; }
  int size() const { return static_cast<int>(sites_.size()); }

  /// 2^Q x K; column k is the diagonal of M_k.
  const Eigen::MatrixXd& diagonals() const { return diagonals_; }

  /// Diagonal of sum_k c_k M_k.
  Eigen::VectorXd weighted_diagonal(const Eigen::VectorXd& cotangent) const;

  friend bool operator==(const ObservableEnsemble& a, const ObservableEnsemble& b) {
    return a.kind_ == b.kind_ && a.num_qubits_ == b.num_qubits_ && a.sites_ == b.sites_;
  }

 private:
  EnsembleKind kind_;
  int num_qubits_;
  std::vector<Eigen::Index> sites_;
  Eigen::MatrixXd diagonals_;
};

/// <psi|M_k|psi> for every observable.
Eigen::VectorXd expect_ensemble(const StateVector& state, const ObservableEnsemble& ensemble);

enum class UpsampleScale { Isometric, Unscaled };

std::string to_string(UpsampleScale s);
UpsampleScale upsample_scale_from_string(const std::string& name);

/// Entry-repetition map R^K -> R^n: each source entry is repeated
/// r = ceil(n / K) times and multiplied by `scale` (1/sqrt(r) when isometric).
/// Output beyond r K is zero; repetitions past n are dropped.
struct UpsampleMap {
  int source_dim = 1;  // K
  int target_dim = 1;  // n
  int repeat = 1;      // r
  double scale = 1.0;

  static UpsampleMap make(int source_dim, int target_dim,
                          UpsampleScale mode = UpsampleScale::Isometric);

  friend bool operator==(const UpsampleMap&, const UpsampleMap&) = default;
};

Eigen::VectorXd upsample(const Eigen::VectorXd& v, const UpsampleMap& map);

/// Adjoint of upsample(): R^n -> R^K.
Eigen::VectorXd upsample_transpose(const Eigen::VectorXd& g, const UpsampleMap& map);

/// Gradient of sum_k cotangent_k <M_k> with respect to the circuit
/// parameters and the input amplitudes.
AdjointResult<double> adjoint_gradients(const ParamCircuit& circuit, const Eigen::VectorXd& theta,
                                        const StateVector& input, const Eigen::VectorXd& cotangent,
                                        const ObservableEnsemble& ensemble);

/// Parameter-shift derivative of each <M_k> with respect to `slot`.
Eigen::VectorXd parameter_shift_grad(const ParamCircuit& circuit, const Eigen::VectorXd& theta,
                                     const StateVector& input, const ObservableEnsemble& ensemble,
                                     int slot);

}  // namespace qdeq
