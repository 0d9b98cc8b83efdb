#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

#include "qdeq/errors.hpp"

namespace qdeq {

struct BroydenConfig {
  int max_steps = 10;
  double abs_tol = 1e-6;  // on ‖g(z)‖₂
  int memory = -1;        // rank of the inverse-Jacobian correction; < 1 means max_steps

  int effective_memory() const { return memory < 1 ? max_steps : memory; }
};

inline void validate(const BroydenConfig& cfg) {
  if (cfg.max_steps < 1) throw InvalidArgument("broyden: max_steps must be >= 1");
  if (!(cfg.abs_tol > 0.0)) throw InvalidArgument("broyden: abs_tol must be > 0");
}

template <typename Scalar>
struct BasicFixedPointResult {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Vector z_star;
  Vector g_star;               // g(z_star)
  Scalar residual = 0;         // ‖g‖ / (‖g + z‖ + 1e-9), i.e. ‖f(z)−z‖ / (‖f(z)‖ + 1e-9)
  Scalar abs_residual = 0;     // ‖g(z_star)‖
  int steps_taken = 0;
  bool converged = false;
  std::vector<Scalar> trace;   // relative residual of every visited iterate, z0 first
};

using FixedPointResult = BasicFixedPointResult<double>;

template <typename Derived, typename DerivedG>
typename Derived::Scalar relative_residual(const Eigen::MatrixBase<Derived>& z,
                                           const Eigen::MatrixBase<DerivedG>& g) {
  using Scalar = typename Derived::Scalar;
  return g.norm() / ((g + z).norm() + Scalar(1e-9));
}

namespace detail {

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& v) {
  return v.allFinite();
}

}  // namespace detail

/// Root of g by "good" Broyden updates of an inverse-Jacobian estimate
/// H = −I + U Vᵀ, stepping z ← z − H g(z) without damping.
/// Returns the visited iterate with the smallest relative residual.
template <typename Scalar, typename G>
BasicFixedPointResult<Scalar> broyden_root(G&& g, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& z0,
                                           const BroydenConfig& cfg = {}) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  validate(cfg);
  const Eigen::Index n = z0.size();
  const int memory = cfg.effective_memory();

  Vector z = z0;
  Vector gz = g(z);
  if (gz.size() != n) throw InvalidArgument("broyden: g changed the vector length");
  if (!detail::all_finite(gz)) throw SolverDiverged("broyden: non-finite residual", 0);

  Matrix U(n, memory), V(n, memory);
  int rank = 0;
  const auto apply_h = [&](const Vector& v) -> Vector {
    return -v + U.leftCols(rank) * (V.leftCols(rank).transpose() * v);
  };
  const auto apply_ht = [&](const Vector& v) -> Vector {
    return -v + V.leftCols(rank) * (U.leftCols(rank).transpose() * v);
  };

  BasicFixedPointResult<Scalar> out;
  out.z_star = z;
  out.g_star = gz;
  out.residual = relative_residual(z, gz);
  out.trace.push_back(out.residual);

  for (int step = 1; step <= cfg.max_steps; ++step) {
    if (gz.norm() <= cfg.abs_tol) break;
    const Vector dz = -apply_h(gz);
    Vector z_next = z + dz;
    Vector g_next = g(z_next);
    if (!detail::all_finite(g_next) || !detail::all_finite(z_next)) {
      throw SolverDiverged("broyden: non-finite residual at step " + std::to_string(step), step);
    }
    out.steps_taken = step;

    const Vector dg = g_next - gz;
    const Vector h_dg = apply_h(dg);
    const Scalar denom = dz.dot(h_dg);
    if (std::abs(denom) > Scalar(1e-14) * dz.squaredNorm()) {
      if (rank == memory) {
        // drop the oldest correction
        U.leftCols(memory - 1) = U.rightCols(memory - 1).eval();
        V.leftCols(memory - 1) = V.rightCols(memory - 1).eval();
        --rank;
      }
      const Vector v = apply_ht(dz);
      U.col(rank) = (dz - h_dg) / denom;
      V.col(rank) = v;
      ++rank;
    }

    z = std::move(z_next);
    gz = std::move(g_next);
    const Scalar res = relative_residual(z, gz);
    out.trace.push_back(res);
    if (res < out.residual) {
      out.residual = res;
      out.z_star = z;
      out.g_star = gz;
    }
  }
  out.abs_residual = out.g_star.norm();
  out.converged = out.abs_residual <= cfg.abs_tol;
  return out;
}

}  // namespace qdeq
