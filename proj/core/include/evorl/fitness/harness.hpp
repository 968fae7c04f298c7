#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "evorl/fitness/agent.hpp"

namespace evorl::fitness {

struct EvalPoint {
  std::int64_t step = 0;
  double mean_return = 0.0;
};

struct TrainingOptions {
  std::int64_t total_steps = 100000;
  std::int64_t eval_every = 5000;
  int eval_episodes = 5;
  /// Stop after the first evaluation whose mean return reaches this value.
  std::optional<double> stop_at_return;
  /// Wall-clock limit; exceeding it fails the run.
  std::optional<double> time_limit_s;
  /// Keep a copy of the agent state at the best evaluation point.
  bool keep_best_checkpoint = false;
  std::function<void(const EvalPoint&)> on_eval;
};

struct TrainingTrace {
  std::string env_id;
  std::uint64_t seed = 0;
  std::vector<EvalPoint> eval_points;
  std::vector<std::int64_t> update_steps;
  std::vector<double> losses;
  std::vector<double> grad_norms;
  std::vector<double> param_norms;
  std::int64_t steps_completed = 0;
  bool failed = false;
  bool stopped_early = false;
  std::string error;
  std::vector<nn::Tensor> best_checkpoint;
};

/// Mean undiscounted return of `episodes` deterministic rollouts on fresh
/// environment instances.
std::vector<double> evaluate_policy(Agent& agent, int episodes, std::uint64_t seed);

TrainingTrace run_training(Agent& agent, std::uint64_t seed, const TrainingOptions& options);

/// Header: step,eval_return,loss,grad_norm,param_norm. One row per evaluation
/// point; loss and grad_norm are means over the updates since the previous
/// point, param_norm is the latest value.
void write_trace_csv(std::ostream& out, const TrainingTrace& trace);

}  // namespace evorl::fitness
