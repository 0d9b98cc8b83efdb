#include "qdeq/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "qdeq/errors.hpp"

namespace qdeq {

ClassifierHead make_head(int num_classes, int input_dim, double dropout_p, std::uint64_t seed) {
  if (num_classes < 1 || input_dim < 1) throw InvalidArgument("make_head: empty shape");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw InvalidArgument("dropout_p must be in [0,1)");
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  std::uniform_real_distribution<double> u(-bound, bound);
  ClassifierHead head;
  head.weight.resize(num_classes, input_dim);
  for (Eigen::Index j = 0; j < head.weight.cols(); ++j) {
    for (Eigen::Index i = 0; i < head.weight.rows(); ++i) head.weight(i, j) = u(rng);
  }
  head.bias.resize(num_classes);
  for (Eigen::Index i = 0; i < head.bias.size(); ++i) head.bias[i] = u(rng);
  head.dropout_p = dropout_p;
  return head;
}

Eigen::VectorXd dropout_mask(int n, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw InvalidArgument("dropout_p must be in [0,1)");
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(n);
  if (p == 0.0) return mask;
  std::bernoulli_distribution drop(p);
  const double keep_scale = 1.0 / (1.0 - p);
  for (int i = 0; i < n; ++i) mask[i] = drop(rng) ? 0.0 : keep_scale;
  return mask;
}

Eigen::VectorXd head_forward_masked(const ClassifierHead& head, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& mask) {
  return head.weight * z.cwiseProduct(mask) + head.bias;
}

Eigen::VectorXd head_forward(const ClassifierHead& head, const Eigen::VectorXd& z, bool train_mode,
                             Rng& rng) {
  if (!train_mode) return head.weight * z + head.bias;
  return head_forward_masked(head, z, dropout_mask(static_cast<int>(z.size()), head.dropout_p, rng));
}

double cross_entropy(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size()) throw InvalidArgument("cross_entropy: label out of range");
  Eigen::Index top = 0;
  const double m = logits.maxCoeff(&top);
  // log1p keeps precision when the loss is tiny
  double rest = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    if (i != top) rest += std::exp(logits[i] - m);
  }
  return std::log1p(rest) - (logits[label] - m);
}

Eigen::VectorXd cross_entropy_grad(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size()) throw InvalidArgument("cross_entropy: label out of range");
  Eigen::VectorXd p = (logits.array() - logits.maxCoeff()).exp();
  p /= p.sum();
  p[label] -= 1.0;
  return p;
}

AdamState make_adam_state(Eigen::Index num_params) {
  return AdamState{Eigen::VectorXd::Zero(num_params), Eigen::VectorXd::Zero(num_params), 0, 0};
}

bool adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const AdamConfig& cfg) {
  if (grads.size() != params.size() || state.m.size() != params.size() ||
      state.v.size() != params.size()) {
    throw InvalidArgument("adam_step: shape mismatch");
  }
  if (!grads.allFinite()) {
    ++state.skipped;
    return false;
  }
  ++state.t;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  params.array() -= cfg.learning_rate * (state.m.array() / c1) /
                    ((state.v.array() / c2).sqrt() + cfg.eps);
  return true;
}

void validate(const TrainConfig& cfg) {
  const auto fail = [](const std::string& why) { throw InvalidArgument("config: " + why); };
  if (!(cfg.learning_rate > 0)) fail("learning_rate must be > 0");
  if (cfg.epochs < 0) fail("epochs must be >= 0");
  if (cfg.batch_size < 1) fail("batch_size must be >= 1");
  if (cfg.warmup_steps < 0) fail("warmup_steps must be >= 0");
  if (cfg.warmup_depth < 1) fail("warmup_depth must be >= 1");
  if (cfg.jac_loss_weight < 0) fail("jac_loss_weight must be >= 0");
  if (!(cfg.jac_loss_freq >= 0 && cfg.jac_loss_freq <= 1)) fail("jac_loss_freq must be in [0,1]");
  if (cfg.jac_probes < 1) fail("jac_probes must be >= 1");
  if (!(cfg.dropout_p >= 0 && cfg.dropout_p < 1)) fail("dropout_p must be in [0,1)");
  if (!(cfg.adam_beta1 >= 0 && cfg.adam_beta1 < 1)) fail("adam_beta1 must be in [0,1)");
  if (!(cfg.adam_beta2 >= 0 && cfg.adam_beta2 < 1)) fail("adam_beta2 must be in [0,1)");
  if (!(cfg.adam_eps > 0)) fail("adam_eps must be > 0");
  if (cfg.random_ops < 0) fail("random_ops must be >= 0");
  if (cfg.broyden_max_steps < 1) fail("broyden_max_steps must be >= 1");
  if (!(cfg.broyden_tol > 0)) fail("broyden_tol must be > 0");
  if (!(cfg.train_frac > 0 && cfg.train_frac < 1)) fail("train_frac must be in (0,1)");
  if (cfg.train_limit < 0 || cfg.val_limit < 0 || cfg.test_limit < 0) fail("limits must be >= 0");
  if (cfg.num_threads < 0) fail("num_threads must be >= 0");
  if (cfg.solver_mode.kind == SolverMode::Kind::Direct && cfg.solver_mode.depth < 1) {
    fail("direct depth must be >= 1");
  }
  if (cfg.dataset != DatasetName::MNIST4 && cfg.encoding != EncodingKind::Amplitude) {
    fail("ten-class tasks use amplitude encoding");
  }
}

BroydenConfig broyden_config(const TrainConfig& cfg) {
  return BroydenConfig{cfg.broyden_max_steps, cfg.broyden_tol, -1};
}

AdamConfig adam_config(const TrainConfig& cfg) {
  return AdamConfig{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
}

Split to_split(const ImageDataset& ds, int limit) {
  const int n = limit > 0 ? std::min(limit, ds.size()) : ds.size();
  return Split{ds.pixels.leftCols(n), std::vector<int>(ds.labels.begin(), ds.labels.begin() + n)};
}

DatasetBundle load_bundle(const TrainConfig& cfg, const std::string& data_dir) {
  const auto root = resolve_data_dir(data_dir);
  const ImageDataset full = load_task(cfg.dataset, root, true);
  auto [train, val] = split(full, cfg.train_frac, substream_seed(cfg.seed, "data-split"));
  DatasetBundle b;
  b.train = to_split(train, cfg.train_limit);
  b.val = to_split(val, cfg.val_limit);
  b.test = to_split(load_task(cfg.dataset, root, false), cfg.test_limit);
  b.num_classes = num_classes(cfg.dataset);
  return b;
}

QuantumModel build_model(const TrainConfig& cfg) {
  const std::uint64_t seed = substream_seed(cfg.seed, "circuit");
  if (cfg.dataset == DatasetName::MNIST4) {
    return make_block4_model(cfg.encoding, seed, cfg.random_ops, cfg.upsample_scale);
  }
  return make_staircase_model(seed, cfg.random_ops, cfg.upsample_scale);
}

TrainState init_state(const TrainConfig& cfg) {
  validate(cfg);
  QuantumModel model = build_model(cfg);
  ClassifierHead head = make_head(num_classes(cfg.dataset), model.input_dim(), cfg.dropout_p,
                                  substream_seed(cfg.seed, "head"));
  const Eigen::Index total = model.num_params() + head.weight.size() + head.bias.size();
  return TrainState{std::move(model), std::move(head), make_adam_state(total), 0};
}

Eigen::VectorXd pack_parameters(const TrainState& s) {
  const Eigen::Index p = s.model.num_params();
  const Eigen::Index w = s.head.weight.size();
  Eigen::VectorXd flat(p + w + s.head.bias.size());
  flat << s.model.theta(), Eigen::Map<const Eigen::VectorXd>(s.head.weight.data(), w), s.head.bias;
  return flat;
}

void unpack_parameters(TrainState& s, const Eigen::VectorXd& flat) {
  const Eigen::Index p = s.model.num_params();
  const Eigen::Index w = s.head.weight.size();
  if (flat.size() != p + w + s.head.bias.size()) throw InvalidArgument("unpack_parameters: length mismatch");
  s.model.set_theta(flat.head(p));
  Eigen::Map<Eigen::VectorXd>(s.head.weight.data(), w) = flat.segment(p, w);
  s.head.bias = flat.tail(s.head.bias.size());
}

void parallel_for(int n, int num_threads, const std::function<void(int)>& fn) {
  int workers = num_threads > 0 ? num_threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (int i = w; i < n; i += workers) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace {

struct SampleResult {
  Eigen::VectorXd grad;
  double loss = 0;
  bool correct = false;
  bool diverged = false;
  double residual = 0;
};

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

// d/dθ of the probe-fixed Frobenius estimate at fixed z, by central differences.
Eigen::VectorXd jacobian_penalty_grad(const QuantumModel& model, const Eigen::VectorXd& z,
                                      const Eigen::VectorXd& x, const Eigen::MatrixXd& probes) {
  constexpr double h = 1e-4;
  QuantumModel scratch = model;
  Eigen::VectorXd theta = model.theta();
  Eigen::VectorXd grad(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double t = theta[i];
    theta[i] = t + h;
    scratch.set_theta(theta);
    const double plus = jacobian_frobenius_with_probes(scratch, z, x, probes);
    theta[i] = t - h;
    scratch.set_theta(theta);
    const double minus = jacobian_frobenius_with_probes(scratch, z, x, probes);
    theta[i] = t;
    grad[i] = (plus - minus) / (2 * h);
  }
  return grad;
}

SampleResult sample_pass(const TrainState& state, const Eigen::VectorXd& x, int label,
                         int explicit_depth, double jac_weight, const TrainConfig& cfg, long step,
                         int sample_index) {
  const QuantumModel& model = state.model;
  const ClassifierHead& head = state.head;
  const BroydenConfig bcfg = broyden_config(cfg);
  SampleResult out;
  try {
    Eigen::VectorXd z;
    FixedPointResult fp;
    DirectResult dr;
    if (explicit_depth > 0) {
      dr = direct_unroll(model, x, explicit_depth, false);
      z = dr.z_final();
    } else {
      fp = forward_fixed_point(model, x, bcfg);
      z = fp.z_star;
      out.residual = fp.residual;
    }

    Rng mask_rng(substream_seed(substream_seed(cfg.seed, "dropout", static_cast<std::uint64_t>(step)),
                                "sample", static_cast<std::uint64_t>(sample_index)));
    const Eigen::VectorXd mask = dropout_mask(static_cast<int>(z.size()), head.dropout_p, mask_rng);
    const Eigen::VectorXd zm = z.cwiseProduct(mask);
    const Eigen::VectorXd logits = head.weight * zm + head.bias;
    out.loss = cross_entropy(logits, label);
    out.correct = argmax(logits) == label;
    const Eigen::VectorXd dlogits = cross_entropy_grad(logits, label);
    const Eigen::VectorXd dz = mask.cwiseProduct(head.weight.transpose() * dlogits);

    Eigen::VectorXd dtheta;
    if (explicit_depth > 0) {
      dtheta = direct_backward(model, x, dr, dz).dtheta;
    } else {
      dtheta = implicit_backward(model, x, z, dz, bcfg).dtheta;
    }
    if (jac_weight > 0) {
      Rng probe_rng(substream_seed(substream_seed(cfg.seed, "jacobian", static_cast<std::uint64_t>(step)),
                                   "sample", static_cast<std::uint64_t>(sample_index)));
      const Eigen::MatrixXd probes = rademacher_probes(z.size(), cfg.jac_probes, probe_rng);
      out.loss += jac_weight * jacobian_frobenius_with_probes(model, z, x, probes);
      dtheta += jac_weight * jacobian_penalty_grad(model, z, x, probes);
    }

    const Eigen::Index p = model.num_params();
    const Eigen::Index w = head.weight.size();
    out.grad.resize(p + w + head.bias.size());
    const Eigen::MatrixXd dW = dlogits * zm.transpose();
    out.grad << dtheta, Eigen::Map<const Eigen::VectorXd>(dW.data(), w), dlogits;
  } catch (const SolverDiverged&) {
    out.diverged = true;
  }
  return out;
}

}  // namespace

BatchGradient batch_gradient(const TrainState& state, const Split& data,
                             const std::vector<int>& indices, int explicit_depth, double jac_weight,
                             const TrainConfig& cfg, long step) {
  const int b = static_cast<int>(indices.size());
  std::vector<SampleResult> results(b);
  parallel_for(b, cfg.num_threads, [&](int k) {
    const int i = indices[k];
    results[k] = sample_pass(state, data.inputs.col(i), data.labels[i], explicit_depth, jac_weight,
                             cfg, step, k);
  });
  BatchGradient out;
  out.grad = Eigen::VectorXd::Zero(state.adam.m.size());
  for (const SampleResult& r : results) {
    if (r.diverged) {
      ++out.diverged;
      continue;
    }
    out.grad += r.grad;
    out.loss += r.loss;
    out.correct += r.correct ? 1 : 0;
    ++out.used;
  }
  if (out.used > 0) {
    out.grad /= out.used;
    out.loss /= out.used;
  }
  return out;
}

EvalResult evaluate(const QuantumModel& model, const ClassifierHead& head, const Split& data,
                    const SolverMode& mode, const BroydenConfig& bcfg, int num_threads) {
  const int n = data.size();
  std::vector<double> residuals(n, std::numeric_limits<double>::quiet_NaN());
  std::vector<char> correct(n, 0);
  parallel_for(n, num_threads, [&](int i) {
    const Eigen::VectorXd x = data.inputs.col(i);
    try {
      Eigen::VectorXd z;
      if (mode.kind == SolverMode::Kind::Direct) {
        DirectResult dr = direct_unroll(model, x, mode.depth, true);
        residuals[i] = dr.residual;
        z = dr.z_final();
      } else {
        FixedPointResult fp = forward_fixed_point(model, x, bcfg);
        residuals[i] = fp.residual;
        z = std::move(fp.z_star);
      }
      correct[i] = argmax(head.weight * z + head.bias) == data.labels[i];
    } catch (const SolverDiverged&) {
      residuals[i] = std::numeric_limits<double>::quiet_NaN();
    }
  });
  EvalResult out;
  double sum = 0;
  int finite = 0;
  for (int i = 0; i < n; ++i) {
    if (std::isnan(residuals[i])) {
      ++out.diverged;
    } else {
      sum += residuals[i];
      ++finite;
    }
  }
  out.mean_residual = finite > 0 ? sum / finite : std::numeric_limits<double>::quiet_NaN();
  out.accuracy = n > 0 ? 100.0 * std::count(correct.begin(), correct.end(), 1) / n : 0.0;
  out.residuals = std::move(residuals);
  return out;
}

int steps_per_epoch(const TrainConfig& cfg, int train_size) {
  return (train_size + cfg.batch_size - 1) / cfg.batch_size;
}

long effective_warmup_steps(const TrainConfig& cfg, int train_size) {
  if (cfg.solver_mode.kind != SolverMode::Kind::ImplicitWarmup) return 0;
  const long total = static_cast<long>(cfg.epochs) * steps_per_epoch(cfg, train_size);
  return std::min(cfg.warmup_steps, total);
}

RunMetrics train(const DatasetBundle& data, TrainState& state, const TrainConfig& cfg,
                 const EpochCallback& on_epoch) {
  validate(cfg);
  if (data.train.size() == 0) throw InvalidArgument("train: empty training split");
  const auto t0 = std::chrono::steady_clock::now();
  const BroydenConfig bcfg = broyden_config(cfg);
  const AdamConfig acfg = adam_config(cfg);
  const int spe = steps_per_epoch(cfg, data.train.size());
  const long warmup = effective_warmup_steps(cfg, data.train.size());
  const bool direct = cfg.solver_mode.kind == SolverMode::Kind::Direct;

  RunMetrics metrics;
  Rng jac_coin(substream_seed(cfg.seed, "jacobian-schedule"));
  std::bernoulli_distribution apply_jac(cfg.jac_loss_freq);
  std::vector<int> order(data.train.size());

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(substream_seed(cfg.seed, "batches", static_cast<std::uint64_t>(epoch)));
    for (int i = static_cast<int>(order.size()) - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle_rng() % static_cast<std::uint64_t>(i + 1)]);
    }
    EpochMetrics em;
    em.epoch = epoch;
    double loss_sum = 0;
    long correct = 0, used = 0;
    bool saw_warmup = false, saw_main = false;
    for (int b = 0; b < spe; ++b) {
      const int lo = b * cfg.batch_size;
      const int hi = std::min(lo + cfg.batch_size, data.train.size());
      const std::vector<int> batch(order.begin() + lo, order.begin() + hi);
      const bool in_warmup = state.step < warmup;
      const int depth = direct ? cfg.solver_mode.depth : (in_warmup ? cfg.warmup_depth : 0);
      const bool jac = cfg.jac_loss_weight > 0 && apply_jac(jac_coin);
      BatchGradient g = batch_gradient(state, data.train, batch, depth,
                                       jac ? cfg.jac_loss_weight : 0.0, cfg, state.step);
      (in_warmup ? saw_warmup : saw_main) = true;
      (in_warmup ? metrics.warmup_steps_run : metrics.main_steps_run) += 1;
      ++state.step;
      if (g.diverged > 0) ++em.diverged_batches;
      if (g.used == 0) continue;
      loss_sum += g.loss * g.used;
      correct += g.correct;
      used += g.used;
      Eigen::VectorXd params = pack_parameters(state);
      if (adam_step(params, g.grad, state.adam, acfg)) unpack_parameters(state, params);
    }
    if (em.diverged_batches * 10 > spe) {
      throw TrainingAborted("epoch " + std::to_string(epoch) + ": " +
                            std::to_string(em.diverged_batches) + " of " + std::to_string(spe) +
                            " batches had a diverged solve");
    }
    em.phase = direct ? to_string(cfg.solver_mode)
                      : (saw_warmup && saw_main ? "warmup+implicit"
                                                : (saw_warmup ? "warmup" : "implicit"));
    em.train_loss = used > 0 ? loss_sum / used : std::numeric_limits<double>::quiet_NaN();
    em.train_acc = used > 0 ? 100.0 * correct / used : 0.0;
    if (data.val.size() > 0) {
      const EvalResult val = evaluate(state.model, state.head, data.val, cfg.solver_mode, bcfg, cfg.num_threads);
      em.val_acc = val.accuracy;
      em.mean_residual = val.mean_residual;
    }
    em.skipped_steps = state.adam.skipped;
    metrics.epochs.push_back(em);
    if (on_epoch) on_epoch(em);
  }
  if (data.test.size() > 0) {
    const EvalResult test = evaluate(state.model, state.head, data.test, cfg.solver_mode, bcfg, cfg.num_threads);
    metrics.test_acc = test.accuracy;
    metrics.test_residual = test.mean_residual;
  }
  metrics.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return metrics;
}

}  // namespace qdeq
