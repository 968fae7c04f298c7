#include <cmath>
#include <ostream>
#include <sstream>

#include "evorl/env/env.hpp"

namespace evorl::env {

ActionSpace ActionSpace::discrete(int n) {
  if (n < 2) throw std::invalid_argument("discrete action space needs n >= 2");
  ActionSpace s;
  s.kind = Kind::kDiscrete;
  s.n = n;
  return s;
}

ActionSpace ActionSpace::continuous(std::vector<double> low, std::vector<double> high) {
  if (low.empty() || low.size() != high.size()) throw std::invalid_argument("continuous bounds size mismatch");
  for (std::size_t i = 0; i < low.size(); ++i) {
    if (!(low[i] < high[i])) throw std::invalid_argument("continuous bounds require low < high");
  }
  ActionSpace s;
  s.kind = Kind::kContinuous;
  s.low = std::move(low);
  s.high = std::move(high);
  return s;
}

std::pair<EnvState, std::vector<double>> reset(const Dynamics& dynamics, std::uint64_t seed) {
  EnvState state;
  state.rng.seed(seed);
  state.physics = dynamics.initial_physics(state.rng);
  state.elapsed_steps = 0;
  auto obs = dynamics.observe(state.physics);
  return {std::move(state), std::move(obs)};
}

StepResult step(const Dynamics& dynamics, EnvState& state, const Action& action) {
  const EnvSpec& spec = dynamics.spec();
  if (state.elapsed_steps >= spec.max_episode_steps) {
    throw std::logic_error("step() called on a finished episode of " + spec.id);
  }
  StepResult r;
  bool terminated = false;
  r.reward = dynamics.advance(state.physics, action, terminated);
  ++state.elapsed_steps;
  r.done = terminated;
  r.truncated = !terminated && state.elapsed_steps >= spec.max_episode_steps;
  r.observation = dynamics.observe(state.physics);
  return r;
}

Environment::Environment(const std::string& env_id) : dynamics_(make_dynamics(env_id)) {}

std::vector<double> Environment::reset(std::uint64_t seed) {
  auto [state, obs] = env::reset(*dynamics_, seed);
  state_ = std::move(state);
  return obs;
}

StepResult Environment::step(const Action& action) { return env::step(*dynamics_, state_, action); }

// ---- registry -------------------------------------------------------------------

namespace {

struct RegistryEntry {
  const char* id;
  double lower;
  double upper;
};

// Reference bounds (L, U) for fitness normalization. Mirrors data/env_registry.json.
constexpr RegistryEntry kRegistry[] = {
    {kCartPole, 0.0, 500.0},
    {kMountainCar, -200.0, -110.0},
    {kAcrobot, -500.0, -60.0},
    {kLinearReacher, -200.0, 0.0},
};

}  // namespace

const std::vector<EnvSpec>& registered_specs() {
  static const std::vector<EnvSpec> specs = [] {
    std::vector<EnvSpec> out;
    for (const auto& e : kRegistry) out.push_back(make_dynamics(e.id)->spec());
    return out;
  }();
  return specs;
}

const EnvSpec& spec_for(const std::string& env_id) {
  for (const EnvSpec& s : registered_specs()) {
    if (s.id == env_id) return s;
  }
  throw UnknownEnvironment("unknown environment '" + env_id + "'");
}

NormalizationBounds bounds_for(const std::string& env_id) {
  for (const auto& e : kRegistry) {
    if (env_id == e.id) return {e.id, e.lower, e.upper};
  }
  throw UnknownEnvironment("no normalization bounds for '" + env_id + "'");
}

std::vector<std::string> default_suite() { return {kCartPole, kMountainCar, kAcrobot}; }

std::string describe_suite(std::span<const std::string> env_ids) {
  std::ostringstream os;
  for (const auto& id : env_ids) {
    const EnvSpec& s = spec_for(id);
    os << s.id << " (";
    if (s.action_space.is_discrete()) {
      os << "discrete, obs.shape = (" << s.obs_dim << ",), actions = {";
      for (int a = 0; a < s.action_space.n; ++a) os << (a ? ", " : "") << a;
      os << "}";
    } else {
      os << "continuous, obs.shape = (" << s.obs_dim << ",), action.shape = (" << s.action_space.dim()
         << ",), range = [" << s.action_space.low[0] << ", " << s.action_space.high[0] << "]";
    }
    os << ", max_episode_steps = " << s.max_episode_steps << ")\n";
  }
  return os.str();
}

// ---- traces -----------------------------------------------------------------------

std::string format_action(const Action& action) {
  if (action.index >= 0) return std::to_string(action.index);
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < action.values.size(); ++i) os << (i ? ";" : "") << action.values[i];
  return os.str();
}

void write_episode_csv(std::ostream& out, std::span<const EpisodeRecord> records) {
  out << "step,action,reward,done\n";
  out.precision(17);
  for (const auto& r : records) {
    out << r.step << ',' << r.action << ',' << r.reward << ',' << (r.done ? 1 : 0) << '\n';
  }
}

}  // namespace evorl::env
