#pragma once

#include <Eigen/Dense>

#include <concepts>
#include <random>
#include <string>
#include <vector>

#include "qdeq/broyden.hpp"
#include "qdeq/errors.hpp"
#include "qdeq/qmodel.hpp"

namespace qdeq {

/// A weight-tied layer f(z; x) with reverse-mode products. Found by ADL:
///   forward(layer, z, x) -> VectorXd
///   vjp(layer, z, x, cotangent) -> LayerVjp {cᵀ ∂f/∂z, cᵀ ∂f/∂θ}
///   num_params(layer) -> int
template <typename L>
concept EquilibriumLayer = requires(const L& layer, const Eigen::VectorXd& v) {
  { forward(layer, v, v) } -> std::convertible_to<Eigen::VectorXd>;
  { vjp(layer, v, v, v) } -> std::convertible_to<LayerVjp>;
  { num_params(layer) } -> std::convertible_to<int>;
};

/// f(z; x) = A z + B θ + x.
struct AffineLayer {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  Eigen::VectorXd theta;
};

inline Eigen::VectorXd forward(const AffineLayer& l, const Eigen::VectorXd& z,
                               const Eigen::VectorXd& x) {
  return l.A * z + l.B * l.theta + x;
}

inline LayerVjp vjp(const AffineLayer& l, const Eigen::VectorXd&, const Eigen::VectorXd&,
                    const Eigen::VectorXd& c) {
  return LayerVjp{l.A.transpose() * c, l.B.transpose() * c};
}

inline int num_params(const AffineLayer& l) { return static_cast<int>(l.theta.size()); }

struct SolverMode {
  enum class Kind { Implicit, ImplicitWarmup, Direct };
  Kind kind = Kind::Implicit;
  int depth = 1;  // Direct only

  static SolverMode implicit() { return {Kind::Implicit, 1}; }
  static SolverMode implicit_warmup() { return {Kind::ImplicitWarmup, 1}; }
  static SolverMode direct(int depth) {
    if (depth < 1) throw InvalidArgument("direct solver depth must be >= 1");
    return {Kind::Direct, depth};
  }
  bool is_implicit() const { return kind != Kind::Direct; }
  friend bool operator==(const SolverMode&, const SolverMode&) = default;
};

/// "implicit", "implicit_warmup", "direct<L>" (e.g. "direct10").
std::string to_string(const SolverMode& mode);
SolverMode solver_mode_from_string(const std::string& name);

/// Solves g(z) = f(z; x) − z = 0 from z0 = 0. An encoding failure on the
/// iterate path (zero-norm amplitude input) is reported as divergence.
template <EquilibriumLayer L>
FixedPointResult forward_fixed_point(const L& layer, const Eigen::VectorXd& x,
                                     const BroydenConfig& cfg = {}) {
  int evaluations = 0;
  auto g = [&](const Eigen::VectorXd& z) -> Eigen::VectorXd {
    try {
      Eigen::VectorXd out = forward(layer, z, x) - z;
      ++evaluations;
      return out;
    } catch (const DegenerateInput& e) {
      throw SolverDiverged(std::string("forward_fixed_point: ") + e.what(), evaluations);
    }
  };
  return broyden_root<double>(g, Eigen::VectorXd::Zero(x.size()), cfg);
}

struct BackwardResult {
  Eigen::VectorXd dtheta;
  Eigen::VectorXd q;          // solves q = J_fᵀ q + loss_grad
  double residual = 0;        // relative residual of the linear solve
  int steps_taken = 0;
  bool used_neumann = false;  // Broyden diverged; q is a truncated Neumann series
};

/// Σ_{k=0}^{terms} (J_fᵀ)^k loss_grad at z.
template <EquilibriumLayer L>
Eigen::VectorXd neumann_adjoint(const L& layer, const Eigen::VectorXd& z, const Eigen::VectorXd& x,
                                const Eigen::VectorXd& loss_grad, int terms) {
  Eigen::VectorXd q = loss_grad;
  Eigen::VectorXd term = loss_grad;
  for (int k = 0; k < terms; ++k) {
    term = vjp(layer, z, x, term).dz;
    q += term;
  }
  return q;
}

/// dℓ/dθ at the equilibrium via the implicit function theorem: solve
/// h(q) = J_fᵀ q − q + loss_grad = 0, then dθ = (∂f/∂θ)ᵀ q.
template <EquilibriumLayer L>
BackwardResult implicit_backward(const L& layer, const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& z_star, const Eigen::VectorXd& loss_grad,
                                 const BroydenConfig& cfg = {}) {
  if (loss_grad.size() != z_star.size()) throw InvalidArgument("implicit_backward: length mismatch");
  BackwardResult out;
  auto h = [&](const Eigen::VectorXd& q) -> Eigen::VectorXd {
    return vjp(layer, z_star, x, q).dz - q + loss_grad;
  };
  try {
    FixedPointResult r = broyden_root<double>(h, loss_grad, cfg);
    out.q = std::move(r.z_star);
    out.residual = r.residual;
    out.steps_taken = r.steps_taken;
  } catch (const SolverDiverged&) {
    out.q = neumann_adjoint(layer, z_star, x, loss_grad, cfg.max_steps);
    out.residual = relative_residual(out.q, h(out.q));
    out.steps_taken = cfg.max_steps;
    out.used_neumann = true;
  }
  out.dtheta = vjp(layer, z_star, x, out.q).dtheta;
  return out;
}

struct DirectResult {
  std::vector<Eigen::VectorXd> trajectory;  // z⁽⁰⁾ = 0, …, z⁽ᴸ⁾
  double residual = 0;

  const Eigen::VectorXd& z_final() const { return trajectory.back(); }
  int depth() const { return static_cast<int>(trajectory.size()) - 1; }
};

/// z⁽ⁱ⁺¹⁾ = f(z⁽ⁱ⁾; x) from z⁽⁰⁾ = 0. Residual: ‖z⁽ᴸ⁾ − z⁽ᴸ⁻¹⁾‖ / (‖z⁽ᴸ⁾‖ + 1e-9)
/// for L ≥ 2; for L = 1 the fixed-point residual at z⁽¹⁾ (one extra forward).
template <EquilibriumLayer L>
DirectResult direct_unroll(const L& layer, const Eigen::VectorXd& x, int depth,
                           bool with_residual = true) {
  if (depth < 1) throw InvalidArgument("direct_unroll: depth must be >= 1");
  DirectResult out;
  out.trajectory.reserve(depth + 1);
  out.trajectory.push_back(Eigen::VectorXd::Zero(x.size()));
  for (int i = 0; i < depth; ++i) out.trajectory.push_back(forward(layer, out.trajectory.back(), x));
  if (with_residual) {
    const Eigen::VectorXd& zl = out.trajectory.back();
    if (depth >= 2) {
      out.residual = (zl - out.trajectory[depth - 1]).norm() / (zl.norm() + 1e-9);
    } else {
      out.residual = relative_residual(zl, Eigen::VectorXd(forward(layer, zl, x) - zl));
    }
  }
  return out;
}

/// Reverse accumulation through the unrolled weight-tied layers; per-layer
/// θ contributions are summed. Returns {dℓ/dz⁽⁰⁾, dℓ/dθ}.
template <EquilibriumLayer L>
LayerVjp direct_backward(const L& layer, const Eigen::VectorXd& x, const DirectResult& fwd,
                         const Eigen::VectorXd& loss_grad) {
  LayerVjp out{loss_grad, Eigen::VectorXd::Zero(num_params(layer))};
  for (int i = fwd.depth() - 1; i >= 0; --i) {
    LayerVjp step = vjp(layer, fwd.trajectory[i], x, out.dz);
    out.dtheta += step.dtheta;
    out.dz = std::move(step.dz);
  }
  return out;
}

/// n × k matrix of independent ±1 entries.
template <typename Urbg>
Eigen::MatrixXd rademacher_probes(Eigen::Index n, int num_probes, Urbg& rng) {
  if (num_probes < 1) throw InvalidArgument("rademacher_probes: num_probes must be >= 1");
  std::bernoulli_distribution coin(0.5);
  Eigen::MatrixXd probes(n, num_probes);
  for (Eigen::Index j = 0; j < num_probes; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) probes(i, j) = coin(rng) ? 1.0 : -1.0;
  }
  return probes;
}

/// (1/k) Σ_j ‖J_fᵀ ε_j‖² for the probe columns ε_j.
template <EquilibriumLayer L>
double jacobian_frobenius_with_probes(const L& layer, const Eigen::VectorXd& z,
                                      const Eigen::VectorXd& x, const Eigen::MatrixXd& probes) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j < probes.cols(); ++j) {
    acc += vjp(layer, z, x, Eigen::VectorXd(probes.col(j))).dz.squaredNorm();
  }
  return acc / static_cast<double>(probes.cols());
}

/// Hutchinson estimate of ‖∂f/∂z‖_F² with Rademacher probes.
template <EquilibriumLayer L, typename Urbg>
double jacobian_frobenius_estimate(const L& layer, const Eigen::VectorXd& z,
                                   const Eigen::VectorXd& x, int num_probes, Urbg& rng) {
  return jacobian_frobenius_with_probes(layer, z, x, rademacher_probes(z.size(), num_probes, rng));
}

/// Input of the first layer in the stacked map: the zero block (layers that
/// add x themselves) or the x block (layers that ignore x).
enum class StackSeed { Zero, Input };

/// Weight-tied evaluation of a depth-L network. The stacked state holds blocks
/// (b₀, …, b_L); one application of the shared map sets b₀ = x and
/// b_{i+1} = f_i((E_z b)_i; x), where E_z shifts blocks down by one and the
/// first slot is seeded per `seed`. Iterating L times from b = (x, …, x)
/// makes every block exact. Returns the blocks after L iterations.
template <EquilibriumLayer L>
std::vector<Eigen::VectorXd> universality_stack(const std::vector<L>& layers,
                                                const Eigen::VectorXd& x, StackSeed seed) {
  if (layers.empty()) throw InvalidArgument("universality_stack: no layers");
  const int p = num_params(layers.front());
  for (const L& l : layers) {
    if (num_params(l) != p) throw InvalidArgument("universality_stack: layers differ in shape");
  }
  const std::size_t depth = layers.size();
  std::vector<Eigen::VectorXd> blocks(depth + 1, x);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(x.size());
  for (std::size_t iter = 0; iter < depth; ++iter) {
    std::vector<Eigen::VectorXd> next(depth + 1);
    next[0] = x;
    for (std::size_t i = 0; i < depth; ++i) {
      const Eigen::VectorXd& in = i == 0 ? (seed == StackSeed::Input ? x : zero) : blocks[i];
      next[i + 1] = forward(layers[i], in, x);
      if (next[i + 1].size() != x.size()) {
        throw InvalidArgument("universality_stack: layer output length differs from input");
      }
    }
    blocks = std::move(next);
  }
  return blocks;
}

/// QuantumModel stack: models must share encoding, circuit, ensemble and
/// injection; the seed follows the injection mode.
std::vector<Eigen::VectorXd> universality_stack(const std::vector<QuantumModel>& models,
                                                const Eigen::VectorXd& x);

}  // namespace qdeq
