#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qdeq/broyden.hpp"
#include "qdeq/datasets.hpp"
#include "qdeq/deqsolve.hpp"
#include "qdeq/qmodel.hpp"
#include "qdeq/rng.hpp"

namespace qdeq {

struct ClassifierHead {
  Eigen::MatrixXd weight;  // C × n
  Eigen::VectorXd bias;    // C
  double dropout_p = 0.0;

  int num_classes() const { return static_cast<int>(weight.rows()); }
  int input_dim() const { return static_cast<int>(weight.cols()); }
};

/// Weight and bias uniform in (−1/√n, 1/√n).
ClassifierHead make_head(int num_classes, int input_dim, double dropout_p, std::uint64_t seed);

/// Entries 0 with probability p, else 1/(1−p).
Eigen::VectorXd dropout_mask(int n, double p, Rng& rng);

Eigen::VectorXd head_forward_masked(const ClassifierHead& head, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& mask);

/// Training mode draws one dropout mask from `rng`; eval mode is the plain affine map.
Eigen::VectorXd head_forward(const ClassifierHead& head, const Eigen::VectorXd& z, bool train_mode,
                             Rng& rng);

double cross_entropy(const Eigen::VectorXd& logits, int label);
/// softmax(logits) − e_label
Eigen::VectorXd cross_entropy_grad(const Eigen::VectorXd& logits, int label);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long t = 0;        // applied steps
  long skipped = 0;  // steps dropped for non-finite gradients
};

AdamState make_adam_state(Eigen::Index num_params);

/// Bias-corrected Adam update. Returns false (and counts a skip) when `grads`
/// has a non-finite entry; params and moments are then untouched.
bool adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state,
               const AdamConfig& cfg);

struct TrainConfig {
  DatasetName dataset = DatasetName::MNIST4;
  EncodingKind encoding = EncodingKind::Amplitude;
  SolverMode solver_mode = SolverMode::implicit_warmup();
  double learning_rate = 0.05;
  int epochs = 100;
  int batch_size = 256;
  long warmup_steps = 0;
  int warmup_depth = 1;
  double jac_loss_weight = 0.0;
  double jac_loss_freq = 0.0;
  int jac_probes = 1;
  double dropout_p = 0.1;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  // model and run plumbing
  int random_ops = 50;
  UpsampleScale upsample_scale = UpsampleScale::Isometric;
  int broyden_max_steps = 10;
  double broyden_tol = 1e-6;
  double train_frac = 0.8;
  int train_limit = 0;  // 0 = whole split
  int val_limit = 0;
  int test_limit = 0;
  int num_threads = 0;  // 0 = hardware concurrency

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

void validate(const TrainConfig& cfg);
BroydenConfig broyden_config(const TrainConfig& cfg);
AdamConfig adam_config(const TrainConfig& cfg);

/// Flattened inputs (one column per sample) and labels.
struct Split {
  Eigen::MatrixXd inputs;
  std::vector<int> labels;
  int size() const { return static_cast<int>(labels.size()); }
};

Split to_split(const ImageDataset& ds, int limit = 0);

struct DatasetBundle {
  Split train;
  Split val;
  Split test;
  int num_classes = 0;
};

/// Loads the configured task, splits train/val with the "data-split" stream, applies limits.
DatasetBundle load_bundle(const TrainConfig& cfg, const std::string& data_dir);

QuantumModel build_model(const TrainConfig& cfg);

struct TrainState {
  QuantumModel model;
  ClassifierHead head;
  AdamState adam;
  long step = 0;  // optimizer steps attempted
};

/// Model from the "circuit" stream, head from the "head" stream, fresh moments.
TrainState init_state(const TrainConfig& cfg);

/// [θ; vec(W); b]
Eigen::VectorXd pack_parameters(const TrainState& s);
void unpack_parameters(TrainState& s, const Eigen::VectorXd& flat);

struct EpochMetrics {
  int epoch = 0;
  std::string phase;
  double train_loss = 0;
  double train_acc = 0;
  double val_acc = 0;
  double mean_residual = 0;
  int diverged_batches = 0;
  long skipped_steps = 0;
};

struct RunMetrics {
  std::vector<EpochMetrics> epochs;
  double test_acc = 0;
  double test_residual = 0;
  double wall_time_seconds = 0;
  long warmup_steps_run = 0;
  long main_steps_run = 0;
};

struct EvalResult {
  double accuracy = 0;        // percent
  double mean_residual = 0;   // over samples that did not diverge
  std::vector<double> residuals;
  int diverged = 0;
};

/// Accuracy and residual with the solver of `mode` (ImplicitWarmup evaluates implicitly).
EvalResult evaluate(const QuantumModel& model, const ClassifierHead& head, const Split& data,
                    const SolverMode& mode, const BroydenConfig& bcfg, int num_threads = 0);

/// Steps of the explicit warm-up phase: the configured count clamped to the run length.
long effective_warmup_steps(const TrainConfig& cfg, int train_size);
int steps_per_epoch(const TrainConfig& cfg, int train_size);

/// Gradient of the mean batch loss with respect to pack_parameters(state).
struct BatchGradient {
  Eigen::VectorXd grad;
  double loss = 0;       // mean cross-entropy plus applied penalty
  int correct = 0;
  int diverged = 0;
  int used = 0;
};

/// One mini-batch. `explicit_depth` > 0 runs direct unrolling of that depth,
/// otherwise the implicit fixed point. The Jacobian penalty is added when
/// `jac_weight` > 0.
BatchGradient batch_gradient(const TrainState& state, const Split& data,
                             const std::vector<int>& indices, int explicit_depth,
                             double jac_weight, const TrainConfig& cfg, long step);

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Full training run; mutates `state`. Throws TrainingAborted when more than
/// 10% of an epoch's batches contain a diverged solve.
RunMetrics train(const DatasetBundle& data, TrainState& state, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {});

/// Runs fn(i) for i in [0, n) on up to `num_threads` threads (0 = hardware concurrency).
void parallel_for(int n, int num_threads, const std::function<void(int)>& fn);

}  // namespace qdeq
