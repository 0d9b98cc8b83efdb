#include "qdeq/config.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qdeq/errors.hpp"

namespace qdeq {

using nlohmann::json;

namespace {

json to_json_object(const TrainConfig& c) {
  return json{
      {"dataset", to_string(c.dataset)},
      {"encoding", to_string(c.encoding)},
      {"solver_mode", to_string(c.solver_mode)},
      {"learning_rate", c.learning_rate},
      {"epochs", c.epochs},
      {"batch_size", c.batch_size},
      {"warmup_steps", c.warmup_steps},
      {"warmup_depth", c.warmup_depth},
      {"jac_loss_weight", c.jac_loss_weight},
      {"jac_loss_freq", c.jac_loss_freq},
      {"jac_probes", c.jac_probes},
      {"dropout_p", c.dropout_p},
      {"seed", c.seed},
      {"adam_beta1", c.adam_beta1},
      {"adam_beta2", c.adam_beta2},
      {"adam_eps", c.adam_eps},
      {"random_ops", c.random_ops},
      {"upsample_scale", to_string(c.upsample_scale)},
      {"broyden_max_steps", c.broyden_max_steps},
      {"broyden_tol", c.broyden_tol},
      {"train_frac", c.train_frac},
      {"train_limit", c.train_limit},
      {"val_limit", c.val_limit},
      {"test_limit", c.test_limit},
      {"num_threads", c.num_threads},
  };
}

template <typename T>
T get_as(const json& v, const std::string& key) {
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw InvalidArgument("expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned()) return v.get<T>();
        if (v.get<long long>() < 0) throw InvalidArgument("expected a non-negative integer");
      }
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) throw InvalidArgument("expected a number");
    } else {
      if (!v.is_string()) throw InvalidArgument("expected a string");
    }
    return v.get<T>();
  } catch (const InvalidArgument& e) {
    throw InvalidArgument("config key '" + key + "': " + e.what());
  } catch (const json::exception& e) {
    throw InvalidArgument("config key '" + key + "': " + e.what());
  }
}

}  // namespace

TrainConfig parse_config(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidArgument("config must be a JSON object");

  TrainConfig c;
  for (const auto& [key, v] : doc.items()) {
    if (key == "dataset") c.dataset = dataset_name_from_string(get_as<std::string>(v, key));
    else if (key == "encoding") c.encoding = encoding_kind_from_string(get_as<std::string>(v, key));
    else if (key == "solver_mode") c.solver_mode = solver_mode_from_string(get_as<std::string>(v, key));
    else if (key == "learning_rate") c.learning_rate = get_as<double>(v, key);
    else if (key == "epochs") c.epochs = get_as<int>(v, key);
    else if (key == "batch_size") c.batch_size = get_as<int>(v, key);
    else if (key == "warmup_steps") c.warmup_steps = get_as<long>(v, key);
    else if (key == "warmup_depth") c.warmup_depth = get_as<int>(v, key);
    else if (key == "jac_loss_weight") c.jac_loss_weight = get_as<double>(v, key);
    else if (key == "jac_loss_freq") c.jac_loss_freq = get_as<double>(v, key);
    else if (key == "jac_probes") c.jac_probes = get_as<int>(v, key);
    else if (key == "dropout_p") c.dropout_p = get_as<double>(v, key);
    else if (key == "seed") c.seed = get_as<std::uint64_t>(v, key);
    else if (key == "adam_beta1") c.adam_beta1 = get_as<double>(v, key);
    else if (key == "adam_beta2") c.adam_beta2 = get_as<double>(v, key);
    else if (key == "adam_eps") c.adam_eps = get_as<double>(v, key);
    else if (key == "random_ops") c.random_ops = get_as<int>(v, key);
    else if (key == "upsample_scale") c.upsample_scale = upsample_scale_from_string(get_as<std::string>(v, key));
    else if (key == "broyden_max_steps") c.broyden_max_steps = get_as<int>(v, key);
    else if (key == "broyden_tol") c.broyden_tol = get_as<double>(v, key);
    else if (key == "train_frac") c.train_frac = get_as<double>(v, key);
    else if (key == "train_limit") c.train_limit = get_as<int>(v, key);
    else if (key == "val_limit") c.val_limit = get_as<int>(v, key);
    else if (key == "test_limit") c.test_limit = get_as<int>(v, key);
    else if (key == "num_threads") c.num_threads = get_as<int>(v, key);
    else throw InvalidArgument("unknown config key '" + key + "'");
  }
  validate(c);
  return c;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const TrainConfig& cfg) { return to_json_object(cfg).dump(2); }

}  // namespace qdeq
