#include <doctest.h>

#include <cmath>
#include <sstream>

#include "evorl/nn/mlp.hpp"
#include "evorl/nn/optim.hpp"
#include "evorl/nn/snapshot.hpp"

using namespace evorl;
using namespace evorl::nn;

namespace {

// Straight-line forward pass over raw weight arrays.
std::vector<double> oracle_forward(const Mlp& net, std::vector<double> x) {
  const auto& layers = net.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Tensor& w = layers[l].weight.value;
    const Tensor& b = layers[l].bias.value;
    std::vector<double> y(w.cols());
    for (std::size_t j = 0; j < w.cols(); ++j) {
      double s = b(0, j);
      for (std::size_t i = 0; i < w.rows(); ++i) s += x[i] * w(i, j);
      y[j] = l + 1 < layers.size() ? std::tanh(s) : s;
    }
    x = std::move(y);
  }
  return x;
}

}  // namespace

TEST_SUITE("formulas") {
  TEST_CASE("zero network maps every input to zero") {
    Rng rng(1);
    MlpPolicy p(4, 3, rng, 16);
    p.net().zero();
    const Tensor out = p.forward(Tensor::row({0.3, -2.0, 7.0, 1.0}));
    for (double v : out.values()) CHECK(v == 0.0);
    CHECK(p.encode(Tensor::row({1, 2, 3, 4})).squared_norm() == 0.0);
  }

  TEST_CASE("single unit composition") {
    Rng rng(2);
    Mlp net({1, 1, 1}, "id", rng);
    net.layers()[0].weight.value.fill(1.0);
    net.layers()[0].bias.value.fill(0.0);
    net.layers()[1].weight.value.fill(1.0);
    net.layers()[1].bias.value.fill(0.0);
    CHECK(net.forward(Tensor::row({0.5})).item() == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
    Mlp deep({1, 1, 1, 1}, "deep", rng);
    for (auto& l : deep.layers()) {
      l.weight.value.fill(1.0);
      l.bias.value.fill(0.0);
    }
    CHECK(deep.forward(Tensor::row({0.5})).item() == doctest::Approx(std::tanh(std::tanh(0.5))).epsilon(1e-15));
  }

  TEST_CASE("seeded forward matches straight-line oracle") {
    Rng rng(3);
    MlpPolicy p(4, 2, rng);
    Rng xr(4);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<double> x(4);
      for (double& v : x) v = standard_normal(xr);
      const Tensor out = p.forward(Tensor::row(x));
      const auto want = oracle_forward(p.net(), x);
      for (std::size_t j = 0; j < want.size(); ++j) CHECK(out[j] == doctest::Approx(want[j]).epsilon(1e-12));
    }
    CHECK(p.hidden_dim() == 256);
  }

  TEST_CASE("backward of sum and of squares") {
    Parameter p("p", Tensor::from_rows({{1.0, -2.0}, {0.5, 3.0}}));
    {
      Tape t;
      t.backward(sum(t.param(p)));
      for (double g : p.grad.values()) CHECK(g == 1.0);
    }
    p.zero_grad();
    {
      Tape t;
      Var v = t.param(p);
      t.backward(sum(v * v));
      for (std::size_t i = 0; i < p.value.size(); ++i) CHECK(p.grad[i] == doctest::Approx(2.0 * p.value[i]));
    }
  }

  TEST_CASE("adam with zero gradient leaves parameters") {
    Parameter p("p", Tensor::row({1.0, 2.0}));
    Adam opt({&p});
    for (int i = 0; i < 3; ++i) opt.step();
    CHECK(p.value[0] == 1.0);
    CHECK(p.value[1] == 2.0);
  }

  TEST_CASE("adam first step and fixed point") {
    Parameter p("p", Tensor::row({0.0}));
    AdamConfig cfg;
    Adam opt({&p}, cfg);
    p.grad.fill(1.0);
    opt.step();
    CHECK(p.value[0] == doctest::Approx(-cfg.lr / (1.0 + cfg.eps)).epsilon(1e-12));
    CHECK(p.value[0] == doctest::Approx(-3e-4).epsilon(1e-6));
    Parameter q("q", Tensor::row({0.0}));
    Adam slow({&q}, cfg);
    double last = 0.0;
    for (int i = 0; i < 5000; ++i) {
      q.grad.fill(-2.5);
      const double before = q.value[0];
      slow.step();
      last = q.value[0] - before;
    }
    CHECK(last == doctest::Approx(cfg.lr).epsilon(1e-3));
  }

  TEST_CASE("ema rates") {
    Rng rng(5);
    Mlp online({2, 3, 1}, "o", rng);
    for (auto* p : online.parameters()) p->value.fill(2.0);
    EmaTracker one(online, 1.0);
    EmaTracker zero(online, 0.0);
    EmaTracker half(online, 0.5);
    for (auto* p : zero.shadow().parameters()) p->value.fill(7.0);
    for (auto* p : one.shadow().parameters()) p->value.fill(0.0);
    for (auto* p : half.shadow().parameters()) p->value.fill(0.0);
    one.update(online);
    zero.update(online);
    half.update(online);
    for (auto* p : one.shadow().parameters())
      for (double v : p->value.values()) CHECK(v == 2.0);
    for (auto* p : zero.shadow().parameters())
      for (double v : p->value.values()) CHECK(v == 7.0);
    for (auto* p : half.shadow().parameters())
      for (double v : p->value.values()) CHECK(v == 1.0);
  }
}

TEST_CASE("tape rejects mismatched shapes") {
  Tape t;
  Var a = t.constant(Tensor(2, 3, 1.0));
  Var b = t.constant(Tensor(3, 2, 1.0));
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("adam refuses non-finite gradients") {
  Parameter p("p", Tensor::row({1.0}));
  Adam opt({&p});
  p.grad.fill(std::nan(""));
  CHECK_THROWS_AS(opt.step(), NumericError);
  CHECK(p.value[0] == 1.0);
}

TEST_CASE("gradient clipping scales to the bound") {
  Parameter a("a", Tensor::row({3.0}));
  Parameter b("b", Tensor::row({4.0}));
  a.grad.fill(3.0);
  b.grad.fill(4.0);
  std::vector<Parameter*> ps{&a, &b};
  CHECK(clip_grad_norm(ps, 1.0) == doctest::Approx(5.0));
  CHECK(a.grad[0] == doctest::Approx(0.6));
  CHECK(b.grad[0] == doctest::Approx(0.8));
}

TEST_CASE("snapshot round trip and mismatch") {
  Rng rng(6);
  Mlp net({3, 4, 2}, "n", rng);
  std::stringstream ss;
  auto params = net.parameters();
  std::vector<const Parameter*> cp(params.begin(), params.end());
  write_snapshot(ss, cp);
  const auto back = read_snapshot(ss);
  REQUIRE(back.size() == params.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].name == params[i]->name);
    CHECK(back[i].value == params[i]->value);
  }
  std::stringstream bad("not a snapshot");
  CHECK_THROWS(read_snapshot(bad));
}
