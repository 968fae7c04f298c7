#include <doctest.h>

#include "evorl/algo/cgfpd.hpp"
#include "evorl/algo/cgfpd_bootstrap.hpp"
#include "evorl/algo/dfcwpcp.hpp"
#include "support/batches.hpp"
#include "support/gradcheck.hpp"

using namespace evorl;
using namespace evorl::algo;

namespace {

const char* const kEnvs[] = {env::kCartPole, env::kMountainCar, env::kAcrobot, env::kLinearReacher};

template <class Agent>
void warm_normalizer(Agent& agent, const fitness::Batch& batch) {
  for (std::size_t i = 0; i < 200; ++i) agent.normalizer().update(batch.obs.row_view(i % batch.size()));
}

}  // namespace

TEST_SUITE("gradcheck") {
  TEST_CASE("cg-fpd total loss") {
    int configs = 0;
    for (const char* id : kEnvs) {
      const auto& spec = env::spec_for(id);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        CgfpdConfig cfg;
        cfg.policy_hidden = 8;
        cfg.world_hidden = 8;
        cfg.plan_states = 4;
        CgfpdAgent agent(spec, seed, cfg);
        const auto batch = testing::random_batch(spec, seed, 16);
        warm_normalizer(agent, batch);
        const auto targets = agent.prepare(batch);
        const auto r = testing::check_gradients(agent.trainable(),
                                                [&](nn::Tape& t) { return agent.compute_loss(t, targets).total; });
        CAPTURE(id);
        CAPTURE(seed);
        CHECK(r.analytic_norm > 0.0);
        CHECK(r.relative_error <= 1e-4);
        ++configs;
      }
    }
    CHECK(configs >= 20);
  }

  TEST_CASE("cg-fpd with bootstrap head") {
    for (const char* id : {env::kCartPole, env::kMountainCar}) {
      const auto& spec = env::spec_for(id);
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        CgfpdConfig cfg;
        cfg.policy_hidden = 8;
        cfg.world_hidden = 8;
        cfg.plan_states = 4;
        BootstrapConfig bc;
        bc.value_hidden = 8;
        CgfpdBootstrapAgent agent(spec, seed, cfg, bc);
        const auto batch = testing::random_batch(spec, seed, 16);
        warm_normalizer(agent, batch);
        const auto targets = agent.prepare(batch);
        const auto r = testing::check_gradients(agent.trainable(),
                                                [&](nn::Tape& t) { return agent.compute_loss(t, targets).total; });
        CAPTURE(id);
        CAPTURE(seed);
        CHECK(r.relative_error <= 1e-4);
      }
    }
  }

  TEST_CASE("df-cwp-cp total loss") {
    int configs = 0;
    for (const char* id : kEnvs) {
      const auto& spec = env::spec_for(id);
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        DfConfig cfg;
        cfg.policy_hidden = 8;
        cfg.world_hidden = 8;
        cfg.plan_states = 4;
        DfcwpcpAgent agent(spec, seed, cfg);
        const auto batch = testing::random_batch(spec, seed, 16);
        warm_normalizer(agent, batch);
        const auto targets = agent.prepare(batch);
        // past warm-up so the plan term and controllability are active
        const std::int64_t step = seed % 2 == 0 ? cfg.warmup_steps + 1 : cfg.warmup_steps / 2;
        const auto r = testing::check_gradients(
            agent.trainable(), [&](nn::Tape& t) { return agent.compute_loss(t, targets, step).total; });
        CAPTURE(id);
        CAPTURE(seed);
        CHECK(r.analytic_norm > 0.0);
        CHECK(r.relative_error <= 1e-4);
        ++configs;
      }
    }
    CHECK(configs >= 20);
  }
}
