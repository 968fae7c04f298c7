#include <doctest.h>

#include <cmath>

#include "evorl/algo/cgfpd.hpp"
#include "support/batches.hpp"

using namespace evorl;
using namespace evorl::algo;
using nn::Tensor;

namespace {

// Fixed-output model: constant reward and done probability, latent shifted
// by `jump` in every coordinate.
struct StubModel : LatentModel {
  double reward = 0.0;
  double done = 0.0;
  double jump = 0.0;
  LatentStep predict(const Tensor& z, const Tensor&) const override {
    LatentStep s{z, Tensor(z.rows(), 1, reward), Tensor(z.rows(), 1, done)};
    for (double& v : s.next.values()) v += jump;
    return s;
  }
};

SequenceSet constant_sequences(std::size_t count, std::size_t horizon, std::size_t n) {
  SequenceSet s;
  s.discrete = true;
  for (std::size_t t = 0; t < horizon; ++t) {
    Tensor step(count, n, 0.0);
    for (std::size_t i = 0; i < count; ++i) step(i, 0) = 1.0;
    s.steps.push_back(step);
    s.index.emplace_back(count, 0);
  }
  return s;
}

}  // namespace

TEST_SUITE("formulas") {
  TEST_CASE("zero policy encodes to zero") {
    Rng rng(0);
    nn::MlpPolicy p(4, 2, rng);
    CHECK(p.encode(Tensor::row({1, 2, 3, 4})).cols() == 256);
    const Tensor a = p.encode(Tensor::row({0.1, 0.2, 0.3, 0.4}));
    CHECK(a == p.encode(Tensor::row({0.1, 0.2, 0.3, 0.4})));
    p.net().zero();
    CHECK(p.encode(Tensor::row({1, 2, 3, 4})).squared_norm() == 0.0);
  }

  TEST_CASE("zero proposal spread repeats the policy action") {
    PlannerConfig cfg;
    cfg.proposal_std = 0.0;
    const std::vector<double> out{0.4, -0.7};
    const Proposal prop = initial_proposal(out, false, cfg);
    Rng rng(1);
    const SequenceSet s = sample_sequences(prop, 16, rng);
    for (const auto& step : s.steps)
      for (std::size_t i = 0; i < step.rows(); ++i) {
        CHECK(step(i, 0) == 0.4);
        CHECK(step(i, 1) == -0.7);
      }
  }

  TEST_CASE("sampled actions stay in bounds and are reproducible") {
    PlannerConfig cfg;
    cfg.proposal_std = 3.0;
    const Proposal prop = initial_proposal(std::vector<double>{0.9, -2.0}, false, cfg);
    Rng a(7), b(7);
    const SequenceSet x = sample_sequences(prop, 64, a), y = sample_sequences(prop, 64, b);
    for (std::size_t t = 0; t < x.horizon(); ++t) {
      CHECK(x.steps[t] == y.steps[t]);
      for (double v : x.steps[t].values()) {
        CHECK(v >= -1.0);
        CHECK(v <= 1.0);
      }
    }
    const Proposal disc = initial_proposal(std::vector<double>{0.3, 0.1, -0.2}, true, cfg);
    Rng c(9);
    const SequenceSet d = sample_sequences(disc, 32, c);
    for (std::size_t t = 0; t < d.horizon(); ++t)
      for (std::size_t i = 0; i < d.count(); ++i) {
        CHECK(d.steps[t].row_view(i)[static_cast<std::size_t>(d.index[t][i])] == 1.0);
        CHECK(d.steps[t].row_view(i)[0] + d.steps[t].row_view(i)[1] + d.steps[t].row_view(i)[2] == 1.0);
      }
  }

  TEST_CASE("survival bonus alone") {
    StubModel m;
    PlannerConfig cfg;
    cfg.horizon = 3;
    cfg.survival_weight = 1.0;
    cfg.consistency_weight = 0.0;
    const auto r = score_sequences(m, Tensor(4, 5, 0.3), constant_sequences(4, 3, 2), cfg);
    for (double s : r.scores) CHECK(s == doctest::Approx(3.0).epsilon(1e-15));
  }

  TEST_CASE("certain termination keeps only the first reward") {
    StubModel m;
    m.reward = 0.7;
    m.done = 1.0;
    m.jump = 0.5;
    PlannerConfig cfg;
    cfg.horizon = 4;
    cfg.survival_weight = 0.1;
    cfg.consistency_weight = 0.2;
    const auto r = score_sequences(m, Tensor(3, 2, 0.0), constant_sequences(3, 4, 2), cfg);
    // g_0 r_0 - lc * mean_t |dz|^2 / D with |dz|^2 / D = 0.25
    const double want = 0.7 - 0.2 * 0.25;
    for (double s : r.scores) CHECK(s == doctest::Approx(want).epsilon(1e-14));
  }

  TEST_CASE("large jump penalty makes scores negative") {
    StubModel m;
    m.reward = 1.0;
    m.jump = 100.0;
    PlannerConfig cfg;
    cfg.consistency_weight = 10.0;
    const auto r = score_sequences(m, Tensor(2, 3, 0.0), constant_sequences(2, 5, 2), cfg);
    for (double s : r.scores) CHECK(s < 0.0);
  }

  TEST_CASE("cem with zero iterations returns the initial population") {
    StubModel m;
    PlannerConfig cfg;
    cfg.cem_iters = 0;
    cfg.candidates = 8;
    const Proposal prop = initial_proposal(std::vector<double>{0.2, -0.1}, true, cfg);
    Rng a(3), b(3);
    const auto plans = plan(m, Tensor(1, 4, 0.0), {prop}, cfg, a);
    const SequenceSet direct = sample_sequences(prop, 8, b);
    for (std::size_t t = 0; t < direct.horizon(); ++t) CHECK(plans[0].population.steps[t] == direct.steps[t]);
  }

  TEST_CASE("cem mean approaches the dominant sequence") {
    PlannerConfig cfg;
    cfg.horizon = 3;
    Proposal prop = initial_proposal(std::vector<double>{0.0}, false, cfg);
    prop.stddev.fill(0.6);
    const double target = 0.8;
    Rng rng(5);
    double prev = 1e9;
    int improved = 0;
    for (int it = 0; it < 6; ++it) {
      const SequenceSet s = sample_sequences(prop, 256, rng);
      std::vector<double> scores(s.count(), 0.0);
      for (std::size_t i = 0; i < s.count(); ++i)
        for (std::size_t t = 0; t < s.horizon(); ++t) scores[i] -= std::pow(s.steps[t](i, 0) - target, 2);
      prop = refit_proposal(s, scores, 0.25);
      double dist = 0.0;
      for (std::size_t t = 0; t < prop.horizon(); ++t) dist += std::abs(prop.mean(t, 0) - target);
      if (dist < prev) ++improved;
      prev = dist;
    }
    CHECK(improved >= 5);
    CHECK(prev < 0.05);
  }

  TEST_CASE("full elite fraction refits to population statistics") {
    PlannerConfig cfg;
    Proposal prop = initial_proposal(std::vector<double>{0.1, 0.2}, false, cfg);
    Rng rng(8);
    const SequenceSet s = sample_sequences(prop, 40, rng);
    std::vector<double> scores(40);
    for (std::size_t i = 0; i < scores.size(); ++i) scores[i] = static_cast<double>(i % 7);
    const Proposal r = refit_proposal(s, scores, 1.0);
    for (std::size_t t = 0; t < s.horizon(); ++t)
      for (std::size_t d = 0; d < 2; ++d) {
        double m = 0.0, v = 0.0;
        for (std::size_t i = 0; i < 40; ++i) m += s.steps[t](i, d) / 40.0;
        for (std::size_t i = 0; i < 40; ++i) v += std::pow(s.steps[t](i, d) - m, 2) / 40.0;
        CHECK(r.mean(t, d) == doctest::Approx(m).epsilon(1e-12));
        CHECK(r.stddev(t, d) == doctest::Approx(std::sqrt(v)).epsilon(1e-9));
      }
    const Proposal disc = initial_proposal(std::vector<double>{0.0, 0.0}, true, cfg);
    const SequenceSet ds = sample_sequences(disc, 40, rng);
    const Proposal dr = refit_proposal(ds, scores, 1.0);
    for (std::size_t t = 0; t < ds.horizon(); ++t) {
      double ones = 0.0;
      for (std::size_t i = 0; i < 40; ++i) ones += ds.steps[t](i, 1);
      CHECK(dr.probs(t, 1) == doctest::Approx(ones / 40.0));
    }
  }

  TEST_CASE("teacher weights") {
    const Tensor first = Tensor::from_rows({{1, 0}, {0, 1}});
    const std::vector<double> eq{0.3, 0.3};
    auto w = teacher_from(eq, first, 0.5).weights;
    CHECK(w[0] == doctest::Approx(0.5));
    CHECK(w[1] == doctest::Approx(0.5));
    const std::vector<double> s{std::log(2.0), 0.0};
    const auto t = teacher_from(s, first, 1.0);
    CHECK(t.weights[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(t.weights[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(t.target[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    const std::vector<double> spread{5.0, -3.0};
    const auto flat = teacher_from(spread, first, 1e9).weights;
    CHECK(flat[0] == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("distillation loss") {
    nn::Tape tape;
    const Tensor logits = Tensor::row({0.2, -0.4, 1.1});
    const Tensor teacher = softmax_rows(logits);
    double entropy = 0.0;
    for (double p : teacher.values()) entropy -= p * std::log(p);
    CHECK(distill_loss(tape.constant(logits), teacher, true).value().item() == doctest::Approx(entropy).epsilon(1e-12));
    const Tensor out = Tensor::row({0.3, -0.2});
    CHECK(distill_loss(tape.constant(out), out, false).value().item() == 0.0);
    CHECK(distill_loss(tape.constant(out), Tensor::row({1.3, -1.2}), false).value().item() == doctest::Approx(2.0));
  }
}

TEST_CASE("single precision scores track the double path") {
  Rng rng(11);
  LatentWorldModel model(12, 2, 16, rng);
  PlannerConfig cfg;
  const Proposal prop = initial_proposal(std::vector<double>{0.1, -0.3}, true, cfg);
  const SequenceSet s = sample_sequences(prop, 64, rng);
  Tensor start(64, 12);
  for (double& v : start.values()) v = standard_normal(rng) * 0.5;
  const auto f = model.score(start, s, cfg);
  const auto d = score_sequences(model, start, s, cfg);
  for (std::size_t i = 0; i < 64; ++i) CHECK(f.scores[i] == doctest::Approx(d.scores[i]).epsilon(1e-4));
}

TEST_CASE("planner config validation") {
  PlannerConfig c;
  c.candidates = 1;
  CHECK_THROWS(c.validate());
  c = {};
  c.elite_frac = 0.0;
  CHECK_THROWS(c.validate());
  c = {};
  c.temperature = 0.0;
  CHECK_THROWS(c.validate());
  CgfpdConfig cg;
  CHECK_THROWS(cg.apply({{"no_such_knob", 1.0}}));
}

TEST_CASE("checkpoint restores the acting policy") {
  const auto& spec = env::spec_for(env::kCartPole);
  CgfpdConfig cfg;
  cfg.policy_hidden = 8;
  cfg.world_hidden = 8;
  CgfpdAgent a(spec, 1, cfg), b(spec, 2, cfg);
  b.restore(a.checkpoint());
  const std::vector<double> obs{0.01, -0.02, 0.03, 0.0};
  CHECK(a.policy_output(obs) == b.policy_output(obs));
}
