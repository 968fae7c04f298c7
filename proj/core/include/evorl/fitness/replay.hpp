#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "evorl/env/env.hpp"
#include "evorl/nn/tensor.hpp"
#include "evorl/random.hpp"

namespace evorl::fitness {

struct Transition {
  std::vector<double> obs;
  env::Action action;
  double reward = 0.0;
  std::vector<double> next_obs;
  bool terminated = false;
  bool truncated = false;
};

/// A sampled minibatch laid out row-per-transition.
struct Batch {
  nn::Tensor obs;         // B x obs_dim
  nn::Tensor next_obs;    // B x obs_dim
  nn::Tensor actions;     // B x act_dim (continuous) or B x 1 holding the index (discrete)
  nn::Tensor rewards;     // B x 1
  nn::Tensor terminated;  // B x 1, 1.0 when the episode ended by termination
  std::vector<int> action_index;  // discrete only

  std::size_t size() const { return obs.rows(); }
};

/// Uniform ring buffer of transitions.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim, bool discrete);

  void add(const Transition& t);
  /// Uniform sampling with replacement.
  Batch sample(std::size_t batch_size, Rng& rng) const;
  Batch gather(std::span<const std::size_t> indices) const;

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return size_ == 0; }
  /// Recent rewards in insertion order (oldest first), at most `count`.
  std::vector<double> recent_rewards(std::size_t count) const;

 private:
  std::size_t capacity_;
  std::size_t obs_dim_;
  std::size_t act_dim_;
  bool discrete_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  std::vector<double> obs_;
  std::vector<double> next_obs_;
  std::vector<double> actions_;
  std::vector<double> rewards_;
  std::vector<double> terminated_;
};

}  // namespace evorl::fitness
