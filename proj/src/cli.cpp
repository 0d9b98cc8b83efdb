#include "qdeq/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "qdeq/bounds.hpp"
#include "qdeq/checkpoint.hpp"
#include "qdeq/config.hpp"
#include "qdeq/errors.hpp"
#include "qdeq/training.hpp"

namespace qdeq::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::string data_dir;
  std::string output_dir = ".";
  std::optional<std::uint64_t> seed;
  std::string suite = "all";
  long pairs = 0;
  std::string checkpoint;
  std::string split = "test";
};

std::string g10(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  out << text;
}

const Split& pick_split(const DatasetBundle& b, const std::string& name) {
  if (name == "train") return b.train;
  if (name == "val") return b.val;
  return b.test;
}

int cmd_train(const Options& o) {
  TrainConfig cfg = load_config(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  validate(cfg);
  const fs::path out_dir = o.output_dir;
  fs::create_directories(out_dir);
  write_text(out_dir / "config_echo.json", config_to_json(cfg) + "\n");

  const DatasetBundle data = load_bundle(cfg, o.data_dir);
  TrainState state = init_state(cfg);
  std::ofstream metrics(out_dir / "metrics.csv");
  if (!metrics) throw InvalidArgument("cannot write metrics.csv in " + out_dir.string());
  metrics << "epoch,phase,train_loss,train_acc,val_acc,mean_residual\n";
  std::cerr << "train: " << data.train.size() << " train / " << data.val.size() << " val / "
            << data.test.size() << " test samples, " << state.model.num_params()
            << " circuit parameters\n";

  const RunMetrics run = train(data, state, cfg, [&](const EpochMetrics& e) {
    metrics << e.epoch << ',' << e.phase << ',' << g10(e.train_loss) << ',' << g10(e.train_acc)
            << ',' << g10(e.val_acc) << ',' << g10(e.mean_residual) << '\n'
            << std::flush;
    std::cerr << "epoch " << e.epoch << " [" << e.phase << "] loss " << g10(e.train_loss)
              << " train " << g10(e.train_acc) << "% val " << g10(e.val_acc) << "% residual "
              << g10(e.mean_residual) << '\n';
  });
  save_checkpoint(out_dir / "checkpoint.txt", cfg, state);
  std::cout << "test_acc " << g10(run.test_acc) << "\ntest_residual " << g10(run.test_residual)
            << "\nwall_time_seconds " << g10(run.wall_time_seconds) << '\n';
  return kExitOk;
}

int cmd_eval(const Options& o) {
  if (o.checkpoint.empty()) throw InvalidArgument("eval needs --checkpoint");
  Checkpoint ck = load_checkpoint(o.checkpoint);
  if (o.seed) ck.config.seed = *o.seed;
  const DatasetBundle data = load_bundle(ck.config, o.data_dir);
  const Split& s = pick_split(data, o.split);
  const EvalResult r = evaluate(ck.state.model, ck.state.head, s, ck.config.solver_mode,
                                broyden_config(ck.config), ck.config.num_threads);
  std::cout << "split " << o.split << "\nsamples " << s.size() << "\naccuracy " << g10(r.accuracy)
            << "\nmean_residual " << g10(r.mean_residual) << "\ndiverged " << r.diverged << '\n';
  return kExitOk;
}

void print_report(const BoundReport& r) {
  std::cout << r.name << ": samples " << r.num_samples << ", violations " << r.violations
            << ", worst_margin " << g10(r.worst_margin) << (r.passed() ? "  [ok]" : "  [VIOLATED]")
            << '\n';
  for (const auto& n : r.notes) std::cout << "  " << n << '\n';
}

int cmd_verify(const Options& o, bool export_only) {
  const std::uint64_t seed = substream_seed(o.seed.value_or(0), "bounds");
  const auto pairs_or = [&](long d) { return o.pairs > 0 ? o.pairs : d; };
  const fs::path out_dir = o.output_dir;
  const std::string& s = o.suite;
  bool known = false;

  if (export_only) {
    if (s == "residuals") {
      if (o.checkpoint.empty()) throw InvalidArgument("--suite residuals needs --checkpoint");
      Checkpoint ck = load_checkpoint(o.checkpoint);
      const DatasetBundle data = load_bundle(ck.config, o.data_dir);
      const Split& sp = pick_split(data, o.split);
      const EvalResult r = evaluate(ck.state.model, ck.state.head, sp, ck.config.solver_mode,
                                    broyden_config(ck.config), ck.config.num_threads);
      fs::create_directories(out_dir);
      std::ofstream out(out_dir / "residuals.csv");
      out << "index,label,residual\n";
      for (int i = 0; i < sp.size(); ++i) out << i << ',' << sp.labels[i] << ',' << g10(r.residuals[i]) << '\n';
      std::cout << "wrote " << (out_dir / "residuals.csv").string() << '\n';
      return kExitOk;
    }
    if (s != "angle-overlap" && s != "all") throw InvalidArgument("export-plot-data suites: angle-overlap, residuals");
  }

  if (s == "amplitude-overlap" || s == "all") {
    known = true;
    if (!export_only) print_report(verify_amplitude_overlap(pairs_or(10000), seed));
  }
  if (s == "angle-overlap" || s == "all") {
    known = true;
    const BoundReport r = verify_angle_overlap(pairs_or(3000), seed);
    if (!export_only) print_report(r);
    fs::create_directories(out_dir);
    write_text(out_dir / "angle_overlap.csv", r.csv);
    std::cout << "wrote " << (out_dir / "angle_overlap.csv").string() << '\n';
  }
  if (export_only) return kExitOk;
  if (s == "trig-inequality" || s == "all") {
    known = true;
    print_report(verify_trig_inequality(pairs_or(100000), seed));
  }
  if (s == "contraction" || s == "all") {
    known = true;
    const QuantumModel pauli = make_block4_model(EncodingKind::Amplitude, substream_seed(seed, "circuit"));
    const QuantumModel proj(pauli.encoding(), pauli.circuit(), pauli.theta(),
                            ObservableEnsemble::basis_projectors(4, {0, 5, 10, 15}));
    print_report(verify_contraction_bound(pauli, pairs_or(5000), seed));
    print_report(verify_contraction_bound(proj, pairs_or(5000), seed));
  }
  if (s == "lipschitz" || s == "all") {
    known = true;
    const QuantumModel m = make_block4_model(EncodingKind::Amplitude, substream_seed(seed, "circuit"));
    const long n = pairs_or(2000);
    std::cout << "lipschitz (pauli_z, 4 qubits, " << n << " pairs):\n"
              << "  max-norm, unit-far pairs: "
              << g10(estimate_lipschitz(m, 16, n, LipschitzNorm::Max, PairConstraint::UnitFar, seed)) << '\n'
              << "  max-norm, any pairs:      "
              << g10(estimate_lipschitz(m, 16, n, LipschitzNorm::Max, PairConstraint::Any, seed)) << '\n'
              << "  l2, any pairs:            "
              << g10(estimate_lipschitz(m, 16, n, LipschitzNorm::L2, PairConstraint::Any, seed)) << '\n';
  }
  if (!known) {
    throw InvalidArgument("unknown suite '" + s +
                          "' (amplitude-overlap, angle-overlap, trig-inequality, contraction, lipschitz, all)");
  }
  return kExitOk;
}

}  // namespace

int run(int argc, char** argv) {
  CLI::App app{"Quantum deep equilibrium models: training, evaluation and bound checks"};
  app.require_subcommand(1);
  Options o;
  std::uint64_t seed = 0;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--data-dir", o.data_dir, "Dataset root (falls back to QDEQ_DATA_DIR)");
    sub->add_option("--output-dir", o.output_dir, "Directory for outputs");
    sub->add_option("--seed", seed, "Override the master seed");
  };
  CLI::App* train_cmd = app.add_subcommand("train", "Train a model from a config file");
  train_cmd->add_option("--config", o.config_path, "JSON config")->required();
  add_common(train_cmd);

  CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--split", o.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  add_common(eval_cmd);

  CLI::App* verify_cmd = app.add_subcommand("verify-bounds", "Run numerical bound checks");
  verify_cmd->add_option("--suite", o.suite, "Suite name or 'all'");
  verify_cmd->add_option("--pairs", o.pairs, "Samples per suite");
  add_common(verify_cmd);

  CLI::App* export_cmd = app.add_subcommand("export-plot-data", "Write plot-ready CSV files");
  export_cmd->add_option("--suite", o.suite, "angle-overlap or residuals");
  export_cmd->add_option("--pairs", o.pairs, "Samples");
  export_cmd->add_option("--checkpoint", o.checkpoint, "Checkpoint (residuals suite)");
  export_cmd->add_option("--split", o.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  add_common(export_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInvalid;
  }

  for (CLI::App* sub : {train_cmd, eval_cmd, verify_cmd, export_cmd}) {
    if (sub->parsed() && sub->count("--seed") > 0) o.seed = seed;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(o);
    if (eval_cmd->parsed()) return cmd_eval(o);
    if (verify_cmd->parsed()) return cmd_verify(o, false);
    return cmd_verify(o, true);
  } catch (const TrainingAborted& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const SolverDiverged& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDiverged;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  }
}

}  // namespace qdeq::cli
