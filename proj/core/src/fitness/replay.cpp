#include "evorl/fitness/replay.hpp"

#include <algorithm>
#include <stdexcept>

namespace evorl::fitness {

ReplayBuffer::ReplayBuffer(std::size_t capacity, std::size_t obs_dim, std::size_t act_dim, bool discrete)
    : capacity_(capacity), obs_dim_(obs_dim), act_dim_(discrete ? 1 : act_dim), discrete_(discrete) {
  if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
  obs_.resize(capacity * obs_dim);
  next_obs_.resize(capacity * obs_dim);
  actions_.resize(capacity * act_dim_);
  rewards_.resize(capacity);
  terminated_.resize(capacity);
}

void ReplayBuffer::add(const Transition& t) {
  if (t.obs.size() != obs_dim_ || t.next_obs.size() != obs_dim_) {
    throw nn::ShapeError("replay: observation width mismatch");
  }
  const std::size_t i = head_;
  std::copy(t.obs.begin(), t.obs.end(), obs_.begin() + i * obs_dim_);
  std::copy(t.next_obs.begin(), t.next_obs.end(), next_obs_.begin() + i * obs_dim_);
  if (discrete_) {
    actions_[i] = static_cast<double>(t.action.index);
  } else {
    if (t.action.values.size() != act_dim_) throw nn::ShapeError("replay: action width mismatch");
    std::copy(t.action.values.begin(), t.action.values.end(), actions_.begin() + i * act_dim_);
  }
  rewards_[i] = t.reward;
  terminated_[i] = t.terminated ? 1.0 : 0.0;
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Batch ReplayBuffer::gather(std::span<const std::size_t> indices) const {
  const std::size_t n = indices.size();
  Batch b;
  b.obs = nn::Tensor(n, obs_dim_);
  b.next_obs = nn::Tensor(n, obs_dim_);
  b.actions = nn::Tensor(n, act_dim_);
  b.rewards = nn::Tensor(n, 1);
  b.terminated = nn::Tensor(n, 1);
  if (discrete_) b.action_index.resize(n);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t i = indices[r];
    if (i >= size_) throw std::out_of_range("replay index out of range");
    std::copy_n(obs_.begin() + i * obs_dim_, obs_dim_, b.obs.data() + r * obs_dim_);
    std::copy_n(next_obs_.begin() + i * obs_dim_, obs_dim_, b.next_obs.data() + r * obs_dim_);
    std::copy_n(actions_.begin() + i * act_dim_, act_dim_, b.actions.data() + r * act_dim_);
    b.rewards(r, 0) = rewards_[i];
    b.terminated(r, 0) = terminated_[i];
    if (discrete_) b.action_index[r] = static_cast<int>(actions_[i]);
  }
  return b;
}

Batch ReplayBuffer::sample(std::size_t batch_size, Rng& rng) const {
  if (size_ == 0) throw std::logic_error("replay: sampling from an empty buffer");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  std::vector<std::size_t> idx(batch_size);
  for (auto& i : idx) i = pick(rng);
  return gather(idx);
}

std::vector<double> ReplayBuffer::recent_rewards(std::size_t count) const {
  count = std::min(count, size_);
  std::vector<double> out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t i = (head_ + capacity_ - count + k) % capacity_;
    out[k] = rewards_[i];
  }
  return out;
}

}  // namespace evorl::fitness
