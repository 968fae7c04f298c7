#include <doctest.h>

#include <cmath>

#include "evorl/algo/cgfpd_bootstrap.hpp"
#include "evorl/genop/lint.hpp"
#include "evorl/genop/operator.hpp"

using namespace evorl;
using namespace evorl::algo;

TEST_SUITE("formulas") {
  TEST_CASE("robust reward normalization") {
    CHECK(robust_normalize(3.0, 3.0, 0.7) == 0.0);
    CHECK(robust_normalize(2.0 + 1.4826 * 0.5, 2.0, 0.5) == doctest::Approx(std::tanh(1.0)));
    CHECK(std::tanh(1.0) == doctest::Approx(0.7616).epsilon(1e-4));
    CHECK(robust_normalize(2.0, 1.0, 0.0) == doctest::Approx(1.0));
    CHECK(robust_normalize(0.0, 1.0, 0.0) == doctest::Approx(-1.0));
  }

  TEST_CASE("td(0) value loss substitutions") {
    nn::Tape t;
    const std::vector<double> zero(3, 0.0), one(3, 1.0), live(3, 0.0);
    CHECK(td0_value_loss(t.constant(nn::Tensor(3, 1, 0.0)), zero, live, zero, 0.99).value().item() == 0.0);
    // terminal: target is the reward only
    const std::vector<double> r{0.4, 0.4, 0.4}, vnext{9.0, 9.0, 9.0};
    CHECK(td0_value_loss(t.constant(nn::Tensor(3, 1, 0.4)), r, one, vnext, 0.99).value().item() == 0.0);
    // constant value c: residual c (1 - gamma)
    const double c = 0.8, g = 0.9;
    const std::vector<double> vc(3, c);
    const double residual = c * (1.0 - g);
    const double huber = 0.5 * residual * residual;
    CHECK(td0_value_loss(t.constant(nn::Tensor(3, 1, c)), zero, live, vc, g).value().item() ==
          doctest::Approx(huber).epsilon(1e-12));
  }

  TEST_CASE("gated lambda") {
    CHECK(gated_lambda(0.4, true, 0.3) == 0.3);
    CHECK(gated_lambda(0.65, true, 0.3) == doctest::Approx(0.15));
    CHECK(gated_lambda(0.9, true, 0.3) == 0.0);
    for (double rmse : {0.0, 0.4, 0.65, 2.0}) CHECK(gated_lambda(rmse, false, 0.3) == 0.0);
  }

  TEST_CASE("bootstrap score") {
    CHECK(bootstrap_score(1.25, 0.5, 0.5, 2.0, 0.3, 1.0) == 1.25);
    CHECK(bootstrap_score(1.25, 9.0, 0.5, 2.0, 0.0, 1.0) == 1.25);
    CHECK(bootstrap_score(1.25, 1e6, 0.0, 1.0, 0.3, 2.0) == doctest::Approx(1.25 + 0.6));
    for (double v : {-1e3, -1.0, 0.0, 3.0, 1e3}) CHECK(std::abs(bootstrap_score(0.0, v, 0.2, 0.5, 0.6, 1.0)) <= 0.6);
  }
}

TEST_CASE("bootstrap genome is rejected by the lint") {
  const auto all = genop::all_genomes();
  const auto it = std::find_if(all.begin(), all.end(), [](const genop::Genome& g) { return g.name == "cgfpd_bootstrap"; });
  REQUIRE(it != all.end());
  const auto report = genop::lint_constraints(it->source);
  CHECK_FALSE(report.ok());
  bool td = false;
  for (const auto& v : report.violations) td = td || v.rule == "td_target";
  CHECK(td);
  const auto lib = genop::genome_library();
  CHECK(std::none_of(lib.begin(), lib.end(), [](const genop::Genome& g) { return g.name == "cgfpd_bootstrap"; }));
}

TEST_CASE("robust stats") {
  const std::vector<double> v{1, 2, 3, 4, 100};
  const auto s = robust_stats(v);
  CHECK(s.median == 3.0);
  CHECK(s.mad == 1.0);
}
