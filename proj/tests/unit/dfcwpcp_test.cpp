#include <doctest.h>

#include <cmath>

#include "evorl/algo/dfcwpcp.hpp"
#include "evorl/genop/lint.hpp"
#include "evorl/genop/operator.hpp"

using namespace evorl;
using namespace evorl::algo;
using nn::Tensor;

TEST_SUITE("formulas") {
  TEST_CASE("latent action") {
    CHECK(latent_action(Tensor::row({0.0, 0.0})).squared_norm() == 0.0);
    const Tensor big = latent_action(Tensor::row({40.0, -40.0}));
    CHECK(big[0] == doctest::Approx(1.0));
    CHECK(big[1] == doctest::Approx(-1.0));
    const Tensor p = latent_action(Tensor::row({0.3, -1.7, 2.2}));
    const Tensor n = latent_action(Tensor::row({-0.3, 1.7, -2.2}));
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(p[i] == -n[i]);
      CHECK(std::abs(p[i]) < 1.0);
    }
  }

  TEST_CASE("flow alignment terms") {
    nn::Tape t;
    const Tensor flow = Tensor::row({0.3, -0.4});
    auto loss = [&](std::vector<Tensor> refs) { return flow_alignment_loss(t.constant(flow), refs).value().item(); };
    CHECK(std::abs(loss({flow, flow})) < 1e-9);
    CHECK(loss({Tensor::row({-0.6, 0.8})}) == doctest::Approx(2.0));
    CHECK(loss({Tensor::row({0.4, 0.3})}) == doctest::Approx(1.0));
    CHECK(loss({flow, Tensor::row({-0.3, 0.4})}) == doctest::Approx(2.0));
    CHECK(loss({Tensor::row({0.0, 0.0})}) == 0.0);
    CHECK(flow_alignment_loss(t.constant(Tensor::row({0.0, 1e-10})), {flow}).value().item() == 0.0);
  }

  TEST_CASE("imagined steps are residual") {
    Rng rng(0);
    ObsWorldModel m(3, 2, 8, rng);
    m.dyn_net().zero();
    nn::Tape t;
    nn::Var s = t.constant(Tensor::row({0.5, -1.0, 2.0}));
    const Tensor s0 = s.value();
    for (int k = 0; k < 5; ++k) {
      auto d = m.dynamics(t, s, t.constant(Tensor::row({1.0, 0.0})));
      s = s + d.delta;
      CHECK(s.value() == s0);
    }
    // constant residual v through the output bias
    auto& last = m.dyn_net().layers().back();
    for (std::size_t j = 0; j < 3; ++j) last.bias.value(0, j) = 0.25 * static_cast<double>(j + 1);
    nn::Tape t2;
    nn::Var x = t2.constant(s0);
    x = x + m.dynamics(t2, x, t2.constant(Tensor::row({0.0, 1.0}))).delta;
    for (std::size_t j = 0; j < 3; ++j) CHECK(x.value()[j] == doctest::Approx(s0[j] + 0.25 * static_cast<double>(j + 1)));
  }

  TEST_CASE("desirability substitutions") {
    CHECK(step_desirability(0.0, 0.0, 1.0, 1.0, 0.1) == 0.0);
    CHECK(step_desirability(0.7, 0.2, 0.0, 1.0, 0.1) == doctest::Approx(-0.1));
    CHECK(step_desirability(0.0, 1.0, 1.0, 2.5, 0.1) == doctest::Approx(-2.5));
    nn::Tape t;
    auto s = step_desirability(t.constant(Tensor::scalar(0.0)), t.constant(Tensor::scalar(1.0)),
                               t.constant(Tensor::scalar(1.0)), 1.0, 0.1);
    CHECK(s.o.value().item() == doctest::Approx(-1.0));
    CHECK(s.o_bar.value().item() == doctest::Approx(std::tanh(-1.0)));
    auto z = step_desirability(t.constant(Tensor::scalar(0.4)), t.constant(Tensor::scalar(0.3)),
                               t.constant(Tensor::scalar(0.0)), 1.0, 0.1);
    CHECK(z.o.value().item() == doctest::Approx(-0.1));
  }

  TEST_CASE("plan objective") {
    const std::vector<double> one{0.37};
    CHECK(plan_objective(one, 0.9) == doctest::Approx(0.37));
    const std::vector<double> flat(6, 1.0 - 1e-3);
    CHECK(plan_objective(flat, 1.0) == doctest::Approx(1.0 - 1e-3));
    const std::vector<double> two{1.0, 1.0};
    CHECK(plan_objective(two, 0.5) == doctest::Approx(0.75));
  }

  TEST_CASE("controllability") {
    const std::vector<double> zero(4, 0.0), conf(4, 0.8), none(4, 0.0);
    CHECK(controllability(zero, conf, 0.9, 5.0) == 0.0);
    const std::vector<double> g{1.0, 2.0, 3.0, 4.0};
    CHECK(controllability(g, none, 0.9, 5.0) == 0.0);
    const std::vector<double> huge{9.0, 12.0, 50.0, 7.0};
    const std::vector<double> c{0.5, 0.25, 1.0, 0.75};
    double want = 0.0;
    for (int k = 0; k < 4; ++k) want += std::pow(0.9, k) * c[static_cast<std::size_t>(k)] * 5.0;
    CHECK(controllability(huge, c, 0.9, 5.0) == doctest::Approx(want / 4.0));
  }

  TEST_CASE("anchor loss") {
    nn::Tape t;
    const Tensor a = Tensor::row({0.2, -0.5});
    auto v = [&](Tensor x, Tensor y, double c) {
      return anchor_loss(t.constant(x), t.constant(y), t.constant(Tensor::scalar(c))).value().item();
    };
    CHECK(v(a, a, 0.9) == 0.0);
    CHECK(v(a, Tensor::row({3.0, 1.0}), 0.0) == 0.0);
    CHECK(v(a, Tensor::row({1.2, 0.5}), 1.0) == doctest::Approx(2.0));
  }

  TEST_CASE("warm-up ramp") {
    CHECK(warmup_weight(0, 20000) == 0.0);
    CHECK(warmup_weight(10000, 20000) == 0.5);
    CHECK(warmup_weight(20000, 20000) == 1.0);
    CHECK(warmup_weight(90000, 20000) == 1.0);
    double prev = -1.0;
    for (std::int64_t s = 0; s < 30000; s += 97) {
      const double w = warmup_weight(s, 20000);
      CHECK(w >= prev);
      prev = w;
    }
  }
}

TEST_CASE("confidence is strictly inside the unit interval") {
  Rng rng(2);
  ObsWorldModel m(4, 2, 8, rng);
  nn::Tape t;
  Tensor s(32, 4);
  for (double& v : s.values()) v = standard_normal(rng) * 3.0;
  nn::Var sv = t.constant(s);
  nn::Var a = t.constant(Tensor(32, 2, 0.5));
  auto d = m.dynamics(t, sv, a);
  nn::Var next = sv + d.delta;
  auto r = m.reward(t, sv, a, next);
  auto dn = m.done(t, next);
  nn::Var c = nn::sigmoid(d.conf_logit) * nn::sigmoid(r.conf_logit) * nn::sigmoid(dn.conf_logit);
  for (double v : c.value().values()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("shipped genomes pass the constraint lint") {
  for (const char* name : {"cgfpd", "dfcwpcp"}) {
    const auto g = genop::find_genome(name);
    CHECK_MESSAGE(genop::lint_constraints(g.source).ok(), name);
  }
}

TEST_CASE("df config rejects inverted flow rates") {
  DfConfig c;
  c.slow_rate = 0.1;
  c.fast_rate = 0.05;
  CHECK_THROWS(c.validate());
  DfConfig h;
  h.horizon = 0;
  CHECK_THROWS(h.validate());
  DfConfig g;
  g.gamma = 1.5;
  CHECK_THROWS(g.validate());
}

TEST_CASE("warm-up start removes the plan term") {
  const auto& spec = env::spec_for(env::kCartPole);
  DfConfig c;
  c.policy_hidden = 8;
  c.world_hidden = 8;
  c.plan_states = 4;
  DfcwpcpAgent agent(spec, 0, c);
  fitness::ReplayBuffer rb(64, 4, 1, true);
  env::Environment e(spec.id);
  auto obs = e.reset(0);
  for (int i = 0; i < 40; ++i) {
    const auto a = env::Action::discrete(i % 2);
    const auto st = e.step(a);
    rb.add({obs, a, st.reward, st.observation, st.done, st.truncated});
    obs = st.done ? e.reset(static_cast<std::uint64_t>(i)) : st.observation;
  }
  Rng rng(1);
  const auto targets = agent.prepare(rb.sample(16, rng));
  nn::Tape t0, t1;
  const DfLoss at0 = agent.compute_loss(t0, targets, 0);
  const DfLoss late = agent.compute_loss(t1, targets, c.warmup_steps);
  CHECK(at0.warmup == 0.0);
  CHECK(late.warmup == 1.0);
  const double base = at0.model + at0.confidence + c.flow_weight * at0.flow + c.aux_weight * at0.aux;
  CHECK(at0.total.value().item() == doctest::Approx(base).epsilon(1e-10));
}
