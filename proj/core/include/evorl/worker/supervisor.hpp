#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "evorl/evo/evaluator.hpp"
#include "evorl/worker/protocol.hpp"

namespace evorl::worker {

struct Limits {
  double wall_s = 3600.0;
  /// Address-space cap in bytes; 0 leaves it unset.
  std::size_t memory_bytes = 0;
};

struct WorkerRun {
  std::vector<EvalEvent> events;
  fitness::TrainingTrace trace;
  bool timed_out = false;
  int exit_code = -1;
};

/// Starts `argv` in `scratch` (created if needed), writes the request line,
/// reads events until the child exits or the wall limit expires. A timeout
/// kills the child. Any protocol violation, timeout or missing terminal
/// event yields a failed trace whose error says why.
WorkerRun run_worker(const std::vector<std::string>& argv, const EvalRequest& request, const Limits& limits,
                     const std::filesystem::path& scratch);

struct WorkerOptions {
  std::vector<std::string> command;
  std::vector<std::string> envs;
  std::vector<std::uint64_t> seeds;
  std::int64_t total_steps = 100000;
  std::int64_t eval_every = 5000;
  int eval_episodes = 5;
  Limits limits;
  std::filesystem::path scratch_root;
  std::size_t jobs = 1;
};

/// Evaluates candidate sources out of process, one worker per (env, seed).
class WorkerEvaluator : public evo::Evaluator {
 public:
  explicit WorkerEvaluator(WorkerOptions options);
  evo::Evaluation evaluate(const std::string& source) override;

 private:
  WorkerOptions options_;
};

}  // namespace evorl::worker
