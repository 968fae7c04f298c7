#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "evorl/env/env.hpp"
#include "evorl/fitness/replay.hpp"
#include "evorl/nn/tensor.hpp"

namespace evorl::fitness {

struct UpdateStats {
  double loss = 0.0;
  double grad_norm = 0.0;
};

/// When and how much the harness feeds an agent.
struct Schedule {
  std::int64_t learning_starts = 1000;
  std::int64_t update_every = 1;
  std::size_t batch_size = 64;
  std::size_t replay_capacity = 100000;
};

/// A trainable algorithm as seen by the training harness.
class Agent {
 public:
  virtual ~Agent() = default;

  virtual const env::EnvSpec& spec() const = 0;
  virtual Schedule schedule() const = 0;

  /// deterministic=true must not change any training state.
  virtual env::Action act(std::span<const double> obs, bool deterministic) = 0;
  /// Called once per environment step, before the transition enters replay.
  virtual void observe(const Transition&) {}
  virtual UpdateStats update(const Batch& batch, std::int64_t global_step) = 0;

  virtual double parameter_norm() const = 0;
  /// Everything act(obs, true) depends on.
  virtual std::vector<nn::Tensor> checkpoint() const = 0;
  virtual void restore(const std::vector<nn::Tensor>& state) = 0;
};

using AgentFactory = std::function<std::unique_ptr<Agent>(const env::EnvSpec& spec, std::uint64_t seed)>;

}  // namespace evorl::fitness
