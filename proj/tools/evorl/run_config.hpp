#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "evorl/algo/common.hpp"
#include "evorl/evo/engine.hpp"
#include "evorl/genop/llm.hpp"

namespace evorl::cli {

/// Bad user input; maps to exit code 1.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvaluationConfig {
  std::string evaluator = "native";  // native | synthetic | worker
  std::vector<std::string> envs;
  int seeds = 5;
  std::int64_t total_steps = 100000;
  std::map<std::string, std::int64_t> steps_per_env;
  std::int64_t eval_every = 5000;
  int eval_episodes = 5;
  double time_limit_s = 7200.0;
  algo::ParamValues targets;
  std::map<std::string, algo::ParamValues> env_overrides;
  std::vector<std::string> worker_command;
};

struct HpoConfig {
  int samples = 16;
  int top_k = 2;
};

struct RunConfig {
  std::string run_id;
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
  bool mock = true;
  evo::EngineConfig engine;
  EvaluationConfig evaluation;
  genop::ProviderConfig provider;
  HpoConfig hpo;

  /// Throws ConfigError. Live mode also needs the provider token.
  void validate() const;
};

/// Reference defaults plus the native suite and desk-scale budgets.
RunConfig default_run_config();
std::string default_config_json();
/// Overlays the text on the defaults. Unknown keys are rejected.
RunConfig parse_run_config(const std::string& json_text);
std::string to_json(const RunConfig& config);

}  // namespace evorl::cli
