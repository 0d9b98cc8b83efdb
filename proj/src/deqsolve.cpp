#include "qdeq/deqsolve.hpp"

#include <charconv>

namespace qdeq {

std::string to_string(const SolverMode& mode) {
  switch (mode.kind) {
    case SolverMode::Kind::Implicit: return "implicit";
    case SolverMode::Kind::ImplicitWarmup: return "implicit_warmup";
    case SolverMode::Kind::Direct: return "direct" + std::to_string(mode.depth);
  }
  return "?";
}

SolverMode solver_mode_from_string(const std::string& name) {
  if (name == "implicit") return SolverMode::implicit();
  if (name == "implicit_warmup") return SolverMode::implicit_warmup();
  const std::string prefix = "direct";
  if (name.rfind(prefix, 0) == 0 && name.size() > prefix.size()) {
    int depth = 0;
    const char* first = name.data() + prefix.size();
    const char* last = name.data() + name.size();
    auto [ptr, ec] = std::from_chars(first, last, depth);
    if (ec == std::errc() && ptr == last && depth >= 1) return SolverMode::direct(depth);
  }
  throw InvalidArgument("unknown solver mode '" + name +
                        "' (expected implicit, implicit_warmup or direct<L>)");
}

std::vector<Eigen::VectorXd> universality_stack(const std::vector<QuantumModel>& models,
                                                const Eigen::VectorXd& x) {
  if (models.empty()) throw InvalidArgument("universality_stack: no models");
  const QuantumModel& ref = models.front();
  for (const QuantumModel& m : models) {
    if (!(m.encoding() == ref.encoding()) || !(m.circuit() == ref.circuit()) || !(m.ensemble() == ref.ensemble()) ||
        m.injection() != ref.injection() || !(m.upsample_map() == ref.upsample_map())) {
      throw InvalidArgument("universality_stack: models differ in more than their parameters");
    }
  }
  if (x.size() != ref.input_dim()) throw InvalidArgument("universality_stack: input length mismatch");
  const StackSeed seed = ref.injection() == InjectionMode::Add ? StackSeed::Zero : StackSeed::Input;
  return universality_stack<QuantumModel>(models, x, seed);
}

}  // namespace qdeq
