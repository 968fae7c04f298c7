#pragma once

#include "evorl/env/env.hpp"
#include "evorl/fitness/replay.hpp"

namespace evorl::testing {

/// Minibatch of random-policy transitions from a real environment.
inline fitness::Batch random_batch(const env::EnvSpec& spec, std::uint64_t seed, std::size_t n) {
  const bool discrete = spec.action_space.is_discrete();
  fitness::ReplayBuffer rb(256, spec.obs_dim, discrete ? 1 : spec.action_space.dim(), discrete);
  env::Environment e(spec.id);
  Rng rng(seed);
  auto obs = e.reset(seed);
  for (int i = 0; i < 200; ++i) {
    env::Action a;
    if (discrete) {
      a = env::Action::discrete(static_cast<int>(rng() % static_cast<unsigned>(spec.action_space.n)));
    } else {
      std::vector<double> v(spec.action_space.dim());
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = uniform(rng, spec.action_space.low[k], spec.action_space.high[k]);
      a = env::Action::continuous(v);
    }
    const auto st = e.step(a);
    rb.add({obs, a, st.reward, st.observation, st.done, st.truncated});
    obs = st.observation;
    if (st.done || st.truncated) obs = e.reset(seed + static_cast<std::uint64_t>(i) + 1);
  }
  return rb.sample(n, rng);
}

}  // namespace evorl::testing
