#include <gtest/gtest.h>

#include <numbers>
#include <set>

#include "oracles.hpp"
#include "qdeq/qmodel.hpp"

using namespace qdeq;

namespace {

Eigen::VectorXd pixels(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  Eigen::VectorXd x(n);
  for (auto& v : x) v = u(rng);
  return x;
}

// Dense-matrix evaluation of the full model, independent of the simulator.
Eigen::VectorXd dense_forward(const QuantumModel& m, const Eigen::VectorXd& z, const Eigen::VectorXd& x) {
  const Eigen::VectorXd u = m.injection() == InjectionMode::Add ? Eigen::VectorXd(z + x) : z;
  const int q = m.num_qubits();
  const Eigen::Index dim = Eigen::Index{1} << q;
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(dim);
  if (m.encoding().kind == EncodingKind::Amplitude) {
    psi.head(u.size()) = (u / u.norm()).cast<std::complex<double>>();
  } else {
    psi[0] = 1;
    ParamCircuit enc{q, {}, 0};
    const GateKind pattern[] = {GateKind::RY, GateKind::RZ, GateKind::RX, GateKind::RY};
    for (int i = 0; i < u.size(); ++i) enc.gates.push_back(GateOp::fixed(pattern[i % 4], i / 4, u[i]));
    psi = oracle::unitary(enc, Eigen::VectorXd()) * psi;
  }
  psi = oracle::unitary(m.circuit(), m.theta()) * psi;
  const Eigen::VectorXd e = oracle::z_expectations(psi, q);
  const int r = m.input_dim() / m.ensemble().size();
  Eigen::VectorXd out(m.input_dim());
  for (int j = 0; j < out.size(); ++j) out[j] = e[j / r] / std::sqrt(static_cast<double>(r));
  return out;
}

}  // namespace

TEST(Block4, Structure) {
  const SeededCircuit c = build_block4(42, 50);
  EXPECT_EQ(c.circuit.num_qubits, 4);
  ASSERT_EQ(c.circuit.gates.size(), 50u + 16u);
  const RandomLayer r = random_layer(42, 4, 50);
  EXPECT_EQ(c.circuit.num_params, r.num_params + 12);
  EXPECT_EQ(c.theta.head(r.num_params), r.initial_theta);
  const auto tail = std::vector<GateOp>(c.circuit.gates.end() - 16, c.circuit.gates.end());
  int slot = r.num_params;
  for (int q = 0; q < 4; ++q) EXPECT_EQ(tail[q], GateOp::rotation(GateKind::RY, q, slot++));
  for (int q = 0; q < 4; ++q) EXPECT_EQ(tail[4 + q], GateOp::rotation(GateKind::RZ, q, slot++));
  for (int q = 0; q < 4; ++q) EXPECT_EQ(tail[8 + q], GateOp::cnot(q, (q + 1) % 4));
  for (int q = 0; q < 4; ++q) EXPECT_EQ(tail[12 + q], GateOp::rotation(GateKind::RY, q, slot++));
  EXPECT_GE(c.theta.minCoeff(), 0.0);
  EXPECT_LT(c.theta.maxCoeff(), 2 * std::numbers::pi);
}

TEST(Staircase, OffsetsAndSeeds) {
  EXPECT_EQ(staircase_offsets(10), (std::vector<int>{0, 2, 4, 6}));
  EXPECT_EQ(staircase_offsets(4), (std::vector<int>{0}));
  EXPECT_THROW(staircase_offsets(5), InvalidArgument);
  EXPECT_EQ(staircase_block_seed(77, 0), 77u);
  const SeededCircuit s = build_staircase10(77, 20);
  const SeededCircuit b0 = build_block4(77, 20);
  const SeededCircuit b3 = build_block4(staircase_block_seed(77, 3), 20);
  EXPECT_EQ(s.circuit.num_params, s.theta.size());
  EXPECT_EQ(s.theta.head(b0.theta.size()), b0.theta);
  EXPECT_EQ(s.theta.tail(b3.theta.size()), b3.theta);
  // last block acts on qubits 6..9
  std::set<int> touched;
  for (auto it = s.circuit.gates.end() - static_cast<long>(b3.circuit.gates.size()); it != s.circuit.gates.end(); ++it) {
    touched.insert(it->target);
  }
  EXPECT_EQ(*touched.begin(), 6);
  EXPECT_EQ(*touched.rbegin(), 9);
  EXPECT_NO_THROW(validate(s.circuit));
}

TEST(QuantumModel, ForwardMatchesDenseOracle) {
  for (EncodingKind enc : {EncodingKind::Amplitude, EncodingKind::Angle}) {
    const QuantumModel m = make_block4_model(enc, 9, 30);
    const Eigen::VectorXd x = pixels(16, 1), z = pixels(16, 2) * 0.3;
    EXPECT_LT((forward(m, z, x) - dense_forward(m, z, x)).norm(), 1e-12) << to_string(enc);
  }
}

TEST(QuantumModel, VjpMatchesFiniteDifferences) {
  for (EncodingKind enc : {EncodingKind::Amplitude, EncodingKind::Angle}) {
    const QuantumModel m = make_block4_model(enc, 10, 40);
    const Eigen::VectorXd x = pixels(16, 3), z = pixels(16, 4) * 0.5 - Eigen::VectorXd::Constant(16, 0.1);
    const Eigen::VectorXd c = Eigen::VectorXd::Random(16);
    const LayerVjp v = vjp(m, z, x, c);
    const Eigen::MatrixXd jz = oracle::fd_jacobian([&](const Eigen::VectorXd& zz) { return forward(m, zz, x); }, z);
    EXPECT_LT((v.dz - jz.transpose() * c).norm(), 1e-7) << to_string(enc);
    QuantumModel scratch = m;
    const Eigen::MatrixXd jt = oracle::fd_jacobian(
        [&](const Eigen::VectorXd& t) {
          scratch.set_theta(t);
          return forward(scratch, z, x);
        },
        m.theta());
    EXPECT_LT((v.dtheta - jt.transpose() * c).norm(), 1e-7) << to_string(enc);
    EXPECT_EQ(model_vjp_z(m, z, x, c), v.dz);
    EXPECT_EQ(model_grad_theta(m, z, x, c), v.dtheta);
  }
}

TEST(QuantumModel, StaircaseVjpMatchesFiniteDifferencesOnAFewDirections) {
  const QuantumModel m = make_staircase_model(5, 10);
  EXPECT_EQ(m.input_dim(), 100);
  const Eigen::VectorXd x = pixels(100, 6), z = pixels(100, 7) * 0.2;
  const Eigen::VectorXd c = Eigen::VectorXd::Random(100);
  const LayerVjp v = vjp(m, z, x, c);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd d(100);
    for (auto& e : d) e = g(rng);
    const double h = 1e-6;
    const double fd = c.dot(forward(m, z + h * d, x) - forward(m, z - h * d, x)) / (2 * h);
    EXPECT_NEAR(v.dz.dot(d), fd, 1e-6);
  }
}

TEST(QuantumModel, InjectionModes) {
  const QuantumModel add = make_block4_model(EncodingKind::Amplitude, 3, 20);
  const QuantumModel none = add.with_injection(InjectionMode::None);
  const QuantumModel only = add.with_injection(InjectionMode::InputOnly);
  const Eigen::VectorXd x = pixels(16, 1), z = pixels(16, 2);
  EXPECT_LT((forward(none, Eigen::VectorXd(z + x), x) - forward(add, z, x)).norm(), 1e-14);
  EXPECT_LT((forward(only, z, x) - forward(only, Eigen::VectorXd::Zero(16), x)).norm(), 1e-14);
  EXPECT_EQ(vjp(only, z, x, Eigen::VectorXd::Ones(16)).dz, Eigen::VectorXd::Zero(16));
}

TEST(QuantumModel, RejectsInconsistentShapes) {
  const SeededCircuit c = build_block4(1, 10);
  EXPECT_THROW(QuantumModel(EncodingSpec{EncodingKind::Amplitude, 4, 16}, c.circuit, Eigen::VectorXd::Zero(3),
                            ObservableEnsemble::pauli_z_all(4)),
               InvalidArgument);
  EXPECT_THROW(QuantumModel(EncodingSpec{EncodingKind::Amplitude, 3, 8}, c.circuit, c.theta,
                            ObservableEnsemble::pauli_z_all(3)),
               InvalidArgument);
  QuantumModel m(EncodingSpec{EncodingKind::Amplitude, 4, 16}, c.circuit, c.theta, ObservableEnsemble::pauli_z_all(4));
  EXPECT_THROW(forward(m, Eigen::VectorXd::Zero(15), Eigen::VectorXd::Zero(16)), InvalidArgument);
  EXPECT_THROW(m.set_theta(Eigen::VectorXd::Zero(2)), InvalidArgument);
  EXPECT_THROW(forward(m, Eigen::VectorXd::Zero(16), Eigen::VectorXd::Zero(16)), DegenerateInput);
}

TEST(QuantumModel, OutputBoundedByUpsampleScale) {
  const QuantumModel m = make_block4_model(EncodingKind::Angle, 12, 50);
  for (unsigned s = 0; s < 20; ++s) {
    EXPECT_LE(forward(m, pixels(16, s), pixels(16, s + 100)).lpNorm<Eigen::Infinity>(), 0.5 + 1e-12);
  }
}
