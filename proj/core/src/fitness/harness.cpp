#include "evorl/fitness/harness.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <tuple>
#include <ostream>
#include <stdexcept>

namespace evorl::fitness {

namespace {

constexpr std::uint64_t kEnvStream = 0x656e76;
constexpr std::uint64_t kEvalStream = 0x6576616c;
constexpr std::uint64_t kReplayStream = 0x72706c79;

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

}  // namespace

std::vector<double> evaluate_policy(Agent& agent, int episodes, std::uint64_t seed) {
  const auto dynamics = env::make_dynamics(agent.spec().id);
  std::vector<double> returns;
  returns.reserve(episodes);
  for (int ep = 0; ep < episodes; ++ep) {
    auto [state, obs] = env::reset(*dynamics, derive_seed(seed, static_cast<std::uint64_t>(ep)));
    double total = 0.0;
    while (true) {
      const env::Action a = agent.act(obs, true);
      env::StepResult r = env::step(*dynamics, state, a);
      total += r.reward;
      obs = std::move(r.observation);
      if (r.done || r.truncated) break;
    }
    returns.push_back(total);
  }
  return returns;
}

TrainingTrace run_training(Agent& agent, std::uint64_t seed, const TrainingOptions& options) {
  if (options.total_steps <= 0) throw std::invalid_argument("total_steps must be positive");
  if (options.eval_every <= 0) throw std::invalid_argument("eval_every must be positive");
  if (options.eval_episodes <= 0) throw std::invalid_argument("eval_episodes must be positive");

  const env::EnvSpec& spec = agent.spec();
  const Schedule sched = agent.schedule();
  TrainingTrace trace;
  trace.env_id = spec.id;
  trace.seed = seed;

  const auto dynamics = env::make_dynamics(spec.id);
  ReplayBuffer replay(sched.replay_capacity, spec.obs_dim, spec.action_space.dim(), spec.action_space.is_discrete());
  Rng replay_rng(derive_seed(seed, kReplayStream));
  std::uint64_t episode = 0;
  auto [state, obs] = env::reset(*dynamics, derive_seed(derive_seed(seed, kEnvStream), episode));
  double best = -std::numeric_limits<double>::infinity();
  const Timer timer;

  std::int64_t step = 0;
  try {
    for (step = 1; step <= options.total_steps; ++step) {
      Transition t;
      t.obs = obs;
      t.action = agent.act(obs, false);
      env::StepResult r = env::step(*dynamics, state, t.action);
      t.reward = r.reward;
      t.next_obs = r.observation;
      t.terminated = r.done;
      t.truncated = r.truncated;
      agent.observe(t);
      replay.add(t);
      if (r.done || r.truncated) {
        ++episode;
        std::tie(state, obs) = env::reset(*dynamics, derive_seed(derive_seed(seed, kEnvStream), episode));
      } else {
        obs = std::move(r.observation);
      }

      if (step >= sched.learning_starts && step % sched.update_every == 0) {
        const Batch batch = replay.sample(sched.batch_size, replay_rng);
        const UpdateStats stats = agent.update(batch, step);
        const double pnorm = agent.parameter_norm();
        if (!std::isfinite(stats.loss) || !std::isfinite(stats.grad_norm) || !std::isfinite(pnorm)) {
          throw nn::NumericError("non-finite loss or gradient norm");
        }
        trace.update_steps.push_back(step);
        trace.losses.push_back(stats.loss);
        trace.grad_norms.push_back(stats.grad_norm);
        trace.param_norms.push_back(pnorm);
      }

      if (step % options.eval_every == 0) {
        const auto returns = evaluate_policy(agent, options.eval_episodes,
                                             derive_seed(derive_seed(seed, kEvalStream), static_cast<std::uint64_t>(step)));
        double mean = 0.0;
        for (double x : returns) mean += x;
        mean /= static_cast<double>(returns.size());
        const EvalPoint point{step, mean};
        trace.eval_points.push_back(point);
        if (options.keep_best_checkpoint && mean > best) trace.best_checkpoint = agent.checkpoint();
        best = std::max(best, mean);
        if (options.on_eval) options.on_eval(point);
        if (options.stop_at_return && mean >= *options.stop_at_return) {
          trace.stopped_early = true;
          trace.steps_completed = step;
          return trace;
        }
      }
      if (options.time_limit_s && step % 256 == 0 && timer.seconds() > *options.time_limit_s) {
        throw std::runtime_error("time limit of " + std::to_string(*options.time_limit_s) + " s exceeded");
      }
    }
    trace.steps_completed = options.total_steps;
  } catch (const std::exception& e) {
    trace.failed = true;
    trace.steps_completed = step - 1;
    trace.error = spec.id + " seed " + std::to_string(seed) + " step " + std::to_string(step) + ": " + e.what();
  }
  return trace;
}

void write_trace_csv(std::ostream& out, const TrainingTrace& trace) {
  out << "step,eval_return,loss,grad_norm,param_norm\n";
  out.precision(10);
  std::size_t u = 0;
  double last_pnorm = 0.0;
  for (const EvalPoint& p : trace.eval_points) {
    double loss = 0.0, gnorm = 0.0;
    std::size_t n = 0;
    while (u < trace.update_steps.size() && trace.update_steps[u] <= p.step) {
      loss += trace.losses[u];
      gnorm += trace.grad_norms[u];
      last_pnorm = trace.param_norms[u];
      ++n;
      ++u;
    }
    if (n > 0) {
      loss /= static_cast<double>(n);
      gnorm /= static_cast<double>(n);
    }
    out << p.step << ',' << p.mean_return << ',' << loss << ',' << gnorm << ',' << last_pnorm << '\n';
  }
}

}  // namespace evorl::fitness
