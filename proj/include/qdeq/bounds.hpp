#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "qdeq/deqsolve.hpp"
#include "qdeq/qmodel.hpp"
#include "qdeq/rng.hpp"

namespace qdeq {

/// Violations count samples whose slack (bound side minus observed side) is below −kBoundSlack.
inline constexpr double kBoundSlack = 1e-12;

struct BoundReport {
  std::string name;
  long num_samples = 0;
  long violations = 0;
  double worst_margin = std::numeric_limits<double>::infinity();
  std::string csv;                 // empty unless the suite emits one
  std::vector<std::string> notes;  // informational diagnostics, not asserted

  /// Folds one slack value (bound − observed) into the report.
  void record(double margin) {
    ++num_samples;
    if (margin < -kBoundSlack) ++violations;
    if (margin < worst_margin) worst_margin = margin;
  }
  bool passed() const { return violations == 0; }
};

/// √(1 − |⟨a|b⟩|²) for unit states.
double trace_distance(const StateVector& a, const StateVector& b);

/// Unit z, z′ with ‖z − z′‖ ≤ 1: identity |⟨z|z′⟩| = 1 − ½‖z−z′‖² and
/// bound 1 − |⟨z|z′⟩|² ≤ ‖z−z′‖².
BoundReport verify_amplitude_overlap(long num_pairs, std::uint64_t seed, int dim = 16);

/// Single-qubit YZXY encoding, z ∈ [0,2π]⁴, ‖z − z′‖ ≤ 1:
/// |⟨z|z′⟩| ≥ 1 − sin(‖z−z′‖²). CSV `dist_sq,overlap,bound`. Also checks the
/// product composition on 2 and 4 qubits (notes carry those counts; they are
/// folded into the violation total).
BoundReport verify_angle_overlap(long num_pairs, std::uint64_t seed);

/// (1 − sin a)(1 − sin b) ≥ 1 − sin(a + b) for a, b uniform in (0,1).
BoundReport verify_trig_inequality(long num_samples, std::uint64_t seed);

/// Per observable: Δ ≤ 2·T (Pauli Z) or Δ ≤ T (basis projector), T the trace
/// distance of the two circuit output states.
BoundReport verify_contraction_bound(const QuantumModel& model, long num_pairs, std::uint64_t seed);

enum class LipschitzNorm { L2, Max };
enum class PairConstraint { Any, UnitFar };

namespace detail {

inline double vec_norm(const Eigen::VectorXd& v, LipschitzNorm n) {
  return n == LipschitzNorm::L2 ? v.norm() : v.lpNorm<Eigen::Infinity>();
}

}  // namespace detail

/// Sampled max of ‖f(z; x) − f(z′; x)‖ / ‖z − z′‖ in the chosen norm. z, x
/// uniform in [0,1]ⁿ; z′ = z + δ with a random direction and ‖δ‖ uniform in
/// (0,1] (Any) or [1,2] (UnitFar).
template <EquilibriumLayer L>
double estimate_lipschitz(const L& layer, Eigen::Index dim, long num_pairs, LipschitzNorm norm,
                          PairConstraint constraint, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss;
  double best = 0.0;
  for (long k = 0; k < num_pairs; ++k) {
    Eigen::VectorXd x(dim), z(dim), dir(dim);
    for (Eigen::Index i = 0; i < dim; ++i) x[i] = unit(rng);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = unit(rng);
    for (Eigen::Index i = 0; i < dim; ++i) dir[i] = gauss(rng);
    const double len = constraint == PairConstraint::UnitFar ? 1.0 + unit(rng) : 1.0 - unit(rng);
    const double dn = detail::vec_norm(dir, norm);
    if (dn == 0.0 || len == 0.0) continue;
    const Eigen::VectorXd delta = dir * (len / dn);
    const Eigen::VectorXd df = forward(layer, Eigen::VectorXd(z + delta), x) - forward(layer, z, x);
    best = std::max(best, detail::vec_norm(df, norm) / detail::vec_norm(delta, norm));
  }
  return best;
}

}  // namespace qdeq
