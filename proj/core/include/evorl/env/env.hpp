#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "evorl/random.hpp"

namespace evorl::env {

class UnknownEnvironment : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class InvalidAction : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct ActionSpace {
  enum class Kind { kDiscrete, kContinuous };

  static ActionSpace discrete(int n);
  static ActionSpace continuous(std::vector<double> low, std::vector<double> high);

  Kind kind = Kind::kDiscrete;
  int n = 0;                 // discrete only
  std::vector<double> low;   // continuous only
  std::vector<double> high;  // continuous only

  bool is_discrete() const { return kind == Kind::kDiscrete; }
  /// Number of discrete actions, or the continuous action dimension.
  std::size_t dim() const { return is_discrete() ? static_cast<std::size_t>(n) : low.size(); }
};

struct EnvSpec {
  std::string id;
  std::size_t obs_dim = 0;
  ActionSpace action_space;
  int max_episode_steps = 0;
};

/// An action for either space kind; `index` is used for discrete spaces and
/// `values` for continuous ones.
struct Action {
  int index = -1;
  std::vector<double> values;

  static Action discrete(int i) { return Action{i, {}}; }
  static Action continuous(std::vector<double> v) { return Action{-1, std::move(v)}; }
};

/// Complete simulator state. step() reads and writes nothing else, so copying
/// an EnvState forks an episode exactly.
struct EnvState {
  std::vector<double> physics;
  int elapsed_steps = 0;
  Rng rng;
};

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;       // terminal predicate held
  bool truncated = false;  // step cap reached without termination
};

struct NormalizationBounds {
  std::string env_id;
  double lower = 0.0;
  double upper = 1.0;
};

/// Stateless physics for one task.
class Dynamics {
 public:
  virtual ~Dynamics() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual std::vector<double> initial_physics(Rng& rng) const = 0;
  virtual std::vector<double> observe(std::span<const double> physics) const = 0;
  /// Advances physics one tick; returns reward and sets `terminated`.
  virtual double advance(std::vector<double>& physics, const Action& action, bool& terminated) const = 0;
  /// The documented terminal predicate, evaluated on a physics vector.
  virtual bool is_terminal(std::span<const double> physics) const = 0;
};

std::unique_ptr<Dynamics> make_dynamics(const std::string& env_id);

/// Deterministic initial state for a seed.
std::pair<EnvState, std::vector<double>> reset(const Dynamics& dynamics, std::uint64_t seed);
StepResult step(const Dynamics& dynamics, EnvState& state, const Action& action);

/// Convenience owner of a Dynamics instance and its current state.
class Environment {
 public:
  explicit Environment(const std::string& env_id);

  const EnvSpec& spec() const { return dynamics_->spec(); }
  const Dynamics& dynamics() const { return *dynamics_; }
  const EnvState& state() const { return state_; }

  std::vector<double> reset(std::uint64_t seed);
  StepResult step(const Action& action);

 private:
  std::unique_ptr<Dynamics> dynamics_;
  EnvState state_;
};

// ---- registry -----------------------------------------------------------------

inline constexpr const char* kCartPole = "CartPole-v1";
inline constexpr const char* kMountainCar = "MountainCar-v0";
inline constexpr const char* kAcrobot = "Acrobot-v1";
inline constexpr const char* kLinearReacher = "LinearReacher-v0";

const std::vector<EnvSpec>& registered_specs();
const EnvSpec& spec_for(const std::string& env_id);
NormalizationBounds bounds_for(const std::string& env_id);
std::vector<std::string> default_suite();

/// Text description of the observation/action interface of each env, used in
/// operator prompts.
std::string describe_suite(std::span<const std::string> env_ids);

// ---- episode traces -------------------------------------------------------------

struct EpisodeRecord {
  int step = 0;
  std::string action;
  double reward = 0.0;
  bool done = false;
};

/// CSV with header "step,action,reward,done".
void write_episode_csv(std::ostream& out, std::span<const EpisodeRecord> records);
std::string format_action(const Action& action);

}  // namespace evorl::env
