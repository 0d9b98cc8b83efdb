#include "qdeq/checkpoint.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qdeq/config.hpp"
#include "qdeq/errors.hpp"

namespace qdeq {

using nlohmann::json;

namespace {

std::string real17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Derived>
std::string real_array(const Eigen::DenseBase<Derived>& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += real17(v.derived().data()[i]);
  }
  return s + "]";
}

json gate_list(const ParamCircuit& c) {
  json gates = json::array();
  for (const GateOp& g : c.gates) {
    json e{{"kind", to_string(g.kind)}, {"target", g.target}};
    if (g.control) e["control"] = *g.control;
    if (g.param_slot) e["slot"] = *g.param_slot;
    if (g.fixed_angle) e["angle"] = *g.fixed_angle;
    gates.push_back(std::move(e));
  }
  return gates;
}

Eigen::VectorXd read_vector(const json& doc, const char* key, Eigen::Index expected) {
  if (!doc.contains(key) || !doc[key].is_array()) throw FormatError(std::string("checkpoint: missing array '") + key + "'");
  const json& a = doc[key];
  if (static_cast<Eigen::Index>(a.size()) != expected) {
    throw FormatError(std::string("checkpoint: '") + key + "' has " + std::to_string(a.size()) +
                      " entries, expected " + std::to_string(expected));
  }
  Eigen::VectorXd v(expected);
  for (Eigen::Index i = 0; i < expected; ++i) {
    if (!a[i].is_number()) throw FormatError(std::string("checkpoint: non-number in '") + key + "'");
    v[i] = a[i].get<double>();
  }
  return v;
}

}  // namespace

std::string checkpoint_to_text(const TrainConfig& cfg, const TrainState& s) {
  const QuantumModel& m = s.model;
  json model{{"encoding", to_string(m.encoding().kind)},
             {"num_qubits", m.num_qubits()},
             {"input_dim", m.input_dim()},
             {"ensemble", to_string(m.ensemble().kind())},
             {"upsample_scale", to_string(m.upsample_scale())},
             {"injection", to_string(m.injection())},
             {"num_params", m.num_params()},
             {"gates", gate_list(m.circuit())}};
  // Weight is stored row by row.
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = s.head.weight;

  std::ostringstream out;
  out << "{\n";
  out << "  \"format\": \"qdeq-checkpoint-1\",\n";
  out << "  \"config\": " << json::parse(config_to_json(cfg)).dump() << ",\n";
  out << "  \"model\": " << model.dump() << ",\n";
  out << "  \"theta\": " << real_array(m.theta()) << ",\n";
  out << "  \"head_rows\": " << s.head.weight.rows() << ",\n";
  out << "  \"head_cols\": " << s.head.weight.cols() << ",\n";
  out << "  \"head_weight\": " << real_array(w) << ",\n";
  out << "  \"head_bias\": " << real_array(s.head.bias) << ",\n";
  out << "  \"dropout_p\": " << real17(s.head.dropout_p) << ",\n";
  out << "  \"adam_m\": " << real_array(s.adam.m) << ",\n";
  out << "  \"adam_v\": " << real_array(s.adam.v) << ",\n";
  out << "  \"adam_t\": " << s.adam.t << ",\n";
  out << "  \"adam_skipped\": " << s.adam.skipped << ",\n";
  out << "  \"step\": " << s.step << "\n";
  out << "}\n";
  return out.str();
}

Checkpoint parse_checkpoint(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "qdeq-checkpoint-1") {
    throw FormatError("checkpoint: missing or unknown format tag");
  }
  if (!doc.contains("config")) throw FormatError("checkpoint: missing config");
  TrainConfig cfg = parse_config(doc["config"].dump());
  TrainState state = init_state(cfg);
  QuantumModel& m = state.model;
  if (!doc.contains("model") || doc["model"].value("gates", json()) != gate_list(m.circuit()) ||
      doc["model"].value("encoding", "") != to_string(m.encoding().kind)) {
    throw FormatError("checkpoint: stored circuit does not match the one rebuilt from its config");
  }
  try {
    m.set_theta(read_vector(doc, "theta", m.num_params()));
    const Eigen::Index rows = doc.at("head_rows").get<Eigen::Index>();
    const Eigen::Index cols = doc.at("head_cols").get<Eigen::Index>();
    if (rows != state.head.weight.rows() || cols != state.head.weight.cols()) {
      throw FormatError("checkpoint: head shape does not match config");
    }
    const Eigen::VectorXd w = read_vector(doc, "head_weight", rows * cols);
    state.head.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        w.data(), rows, cols);
    state.head.bias = read_vector(doc, "head_bias", rows);
    state.head.dropout_p = doc.at("dropout_p").get<double>();
    const Eigen::Index total = state.adam.m.size();
    state.adam.m = read_vector(doc, "adam_m", total);
    state.adam.v = read_vector(doc, "adam_v", total);
    state.adam.t = doc.at("adam_t").get<long>();
    state.adam.skipped = doc.at("adam_skipped").get<long>();
    state.step = doc.at("step").get<long>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return Checkpoint{std::move(cfg), std::move(state)};
}

void save_checkpoint(const std::filesystem::path& path, const TrainConfig& cfg,
                     const TrainState& state) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write checkpoint " + path.string());
  out << checkpoint_to_text(cfg, state);
  if (!out) throw InvalidArgument("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open checkpoint " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_checkpoint(ss.str());
}

}  // namespace qdeq
