#include "qdeq/bounds.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "qdeq/encoding.hpp"
#include "qdeq/errors.hpp"

namespace qdeq {

namespace {

Eigen::VectorXd gaussian_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> g;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = g(rng);
  return v;
}

// Uniform in the n-ball of the given radius.
Eigen::VectorXd ball_vector(Eigen::Index n, double radius, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd d = gaussian_vector(n, rng);
  while (d.norm() == 0.0) d = gaussian_vector(n, rng);
  return d.normalized() * (radius * std::pow(u(rng), 1.0 / static_cast<double>(n)));
}

Eigen::VectorXd uniform_angles(Eigen::Index n, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

double trace_distance(const StateVector& a, const StateVector& b) {
  const double ov = std::abs(a.inner(b));
  return std::sqrt(std::max(0.0, 1.0 - ov * ov));
}

BoundReport verify_amplitude_overlap(long num_pairs, std::uint64_t seed, int dim) {
  if (dim < 2) throw InvalidArgument("verify_amplitude_overlap: dim must be >= 2");
  BoundReport rep;
  rep.name = "amplitude-overlap";
  Rng rng(seed);
  long sin_step_failures = 0;
  long sin_form_violations = 0;
  long drawn = 0;
  while (drawn < num_pairs) {
    const Eigen::VectorXd z = gaussian_vector(dim, rng).normalized();
    const Eigen::VectorXd zp = (z + ball_vector(dim, 1.0, rng)).normalized();
    const double d2 = (z - zp).squaredNorm();
    if (d2 > 1.0) continue;  // outside the range the identity is stated for
    ++drawn;
    const double ov = std::abs(z.dot(zp));
    const double identity_gap = std::abs(ov - (1.0 - 0.5 * d2));
    rep.record(-identity_gap);
    rep.record(d2 - (1.0 - ov * ov));
    if (1.0 - 0.5 * d2 < 1.0 - 0.5 * std::sin(d2) - kBoundSlack) ++sin_step_failures;
    if (std::sin(d2) - (1.0 - ov * ov) < -kBoundSlack) ++sin_form_violations;
  }
  rep.notes.push_back("pairs: " + std::to_string(num_pairs) + " (two checks each)");
  rep.notes.push_back("informational: 1-|ov|^2 <= sin(d^2) violated on " +
                      std::to_string(sin_form_violations) + " pairs");
  rep.notes.push_back("informational: 1-d^2/2 >= 1-sin(d^2)/2 violated on " +
                      std::to_string(sin_step_failures) + " pairs (fails whenever d > 0, since sin t < t)");
  return rep;
}

BoundReport verify_angle_overlap(long num_pairs, std::uint64_t seed) {
  BoundReport rep;
  rep.name = "angle-overlap";
  Rng rng(seed);
  std::ostringstream csv;
  csv << "dist_sq,overlap,bound\n";
  char line[96];
  for (long k = 0; k < num_pairs; ++k) {
    const Eigen::VectorXd z = uniform_angles(4, rng);
    const Eigen::VectorXd zp = z + ball_vector(4, 1.0, rng);
    const double d2 = (z - zp).squaredNorm();
    const double ov = std::abs(angle_encode_state(z, 1).inner(angle_encode_state(zp, 1)));
    const double bound = 1.0 - std::sin(d2);
    rep.record(ov - bound);
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", d2, ov, bound);
    csv << line;
  }
  rep.csv = csv.str();
  const long single_violations = rep.violations;
  rep.notes.push_back("single-qubit pairs: " + std::to_string(num_pairs) + ", violations " +
                      std::to_string(single_violations) + ", worst margin " + fmt("%.6g", rep.worst_margin));

  for (int q : {2, 4}) {
    long factor_gap = 0, product_viol = 0, total_viol = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (long k = 0; k < num_pairs; ++k) {
      const Eigen::VectorXd z = uniform_angles(4 * q, rng);
      const Eigen::VectorXd zp = z + ball_vector(4 * q, 1.0, rng);
      const double ov = std::abs(angle_encode_state(z, q).inner(angle_encode_state(zp, q)));
      double factors = 1.0, sin_product = 1.0;
      for (int b = 0; b < q; ++b) {
        const Eigen::VectorXd zb = z.segment(4 * b, 4), zpb = zp.segment(4 * b, 4);
        factors *= std::abs(angle_encode_state(zb, 1).inner(angle_encode_state(zpb, 1)));
        sin_product *= 1.0 - std::sin((zb - zpb).squaredNorm());
      }
      const double m0 = -std::abs(ov - factors);
      const double m1 = ov - sin_product;
      const double m2 = ov - (1.0 - std::sin((z - zp).squaredNorm()));
      rep.record(m0);
      rep.record(m1);
      rep.record(m2);
      factor_gap += m0 < -1e-12;
      product_viol += m1 < -kBoundSlack;
      total_viol += m2 < -kBoundSlack;
      worst = std::min({worst, m1, m2});
    }
    rep.notes.push_back(std::to_string(q) + " qubits: product-factorisation mismatches " +
                        std::to_string(factor_gap) + ", per-qubit product bound violations " +
                        std::to_string(product_viol) + ", 1-sin(|dz|^2) violations " +
                        std::to_string(total_viol) + ", worst margin " + fmt("%.6g", worst));
  }
  return rep;
}

BoundReport verify_trig_inequality(long num_samples, std::uint64_t seed) {
  BoundReport rep;
  rep.name = "trig-inequality";
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  long small_sum = 0, small_sum_viol = 0;
  for (long k = 0; k < num_samples; ++k) {
    double a = u(rng), b = u(rng);
    while (a == 0.0) a = u(rng);
    while (b == 0.0) b = u(rng);
    const double margin = (1.0 - std::sin(a)) * (1.0 - std::sin(b)) - (1.0 - std::sin(a + b));
    rep.record(margin);
    if (a + b <= 1.0) {
      ++small_sum;
      small_sum_viol += margin < -kBoundSlack;
    }
  }
  rep.notes.push_back("informational: restricted to a+b <= 1: " + std::to_string(small_sum_viol) +
                      " violations in " + std::to_string(small_sum) + " samples");
  return rep;
}

BoundReport verify_contraction_bound(const QuantumModel& model, long num_pairs, std::uint64_t seed) {
  const ObservableEnsemble& ens = model.ensemble();
  const double factor = ens.kind() == EnsembleKind::PauliZ ? 2.0 : 1.0;
  BoundReport rep;
  rep.name = std::string("contraction-") + to_string(ens.kind());
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const Eigen::Index n = model.input_dim();
  double norm_ratio_sum = 0.0;
  long norm_ratio_count = 0;
  for (long k = 0; k < num_pairs; ++k) {
    Eigen::VectorXd x(n), z(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = u(rng);
    for (Eigen::Index i = 0; i < n; ++i) z[i] = u(rng);
    const Eigen::VectorXd zp = z + ball_vector(n, 1.0, rng);
    StateVector a = model_state(model, z, x);
    StateVector b = model_state(model, zp, x);
    const double t = trace_distance(a, b);
    const Eigen::VectorXd delta =
        (expect_ensemble(a, ens) - expect_ensemble(b, ens)).cwiseAbs();
    for (Eigen::Index m = 0; m < delta.size(); ++m) rep.record(factor * t - delta[m]);

    if (model.encoding().kind == EncodingKind::Amplitude) {
      const Eigen::VectorXd u1 = inject(z, x, model.injection());
      const Eigen::VectorXd u2 = inject(zp, x, model.injection());
      const double raw = (u1 - u2).norm();
      if (raw > 0) {
        norm_ratio_sum += (u1.normalized() - u2.normalized()).norm() / raw;
        ++norm_ratio_count;
      }
    }
  }
  if (norm_ratio_count > 0) {
    rep.notes.push_back("informational: mean |u/|u| - u'/|u'|| / |u - u'| = " +
                        fmt("%.6g", norm_ratio_sum / norm_ratio_count) + " (re-normalisation effect)");
  }
  return rep;
}

}  // namespace qdeq
