#include <doctest.h>

#include <cmath>

#include "evorl/evo/selection.hpp"
#include "support/candidates.hpp"

using namespace evorl;
using namespace evorl::evo;
using testing::scored;

namespace {

std::vector<double> fitnesses(const std::vector<Candidate>& pop) {
  std::vector<double> f;
  for (const auto& c : pop) f.push_back(c.F());
  return f;
}

}  // namespace

TEST_SUITE("formulas") {
  TEST_CASE("mean fitness") {
    const std::vector<Candidate> pop{scored(0.2, "a"), scored(0.4, "b"), scored(0.6, "c")};
    CHECK(mean_fitness(pop) == doctest::Approx(0.4).epsilon(1e-15));
    const std::vector<Candidate> rev{pop[2], pop[0], pop[1]};
    CHECK(mean_fitness(rev) == mean_fitness(pop));
    const std::vector<Candidate> flat{scored(0.3, "x"), scored(0.3, "y")};
    CHECK(mean_fitness(flat) == 0.3);
  }

  TEST_CASE("acceptance rule") {
    CHECK(accept(scored(0.5), 0.5));
    CHECK_FALSE(accept(scored(0.5 - 1e-9), 0.5));
    Candidate failed = scored(0.9);
    failed.status = Status::kFailed;
    CHECK_FALSE(accept(failed, 0.1));
    Candidate pending;
    CHECK_THROWS(accept(pending, 0.1));
  }

  TEST_CASE("replace lowest") {
    const std::vector<Candidate> pop{scored(0.1, "a"), scored(0.5, "b"), scored(0.9, "c")};
    const auto out = replace_lowest(pop, {scored(0.6, "d")});
    const auto f = fitnesses(out);
    CHECK(f == std::vector<double>{0.9, 0.6, 0.5});
    const auto same = replace_lowest(pop, {});
    CHECK(same.size() == 3);
    CHECK(fitnesses(same) == std::vector<double>{0.9, 0.5, 0.1});
  }

  TEST_CASE("softmax parent probabilities") {
    const std::vector<Candidate> pop{scored(0.0, "a"), scored(1.0, "b")};
    const auto p = parent1_probs(pop, 5.0);
    CHECK(p[1] == doctest::Approx(std::exp(5.0) / (1.0 + std::exp(5.0))).epsilon(1e-15));
    CHECK(p[1] == doctest::Approx(0.9933).epsilon(1e-4));
    const auto cold = parent1_probs(pop, 1e-9);
    CHECK(cold[0] == doctest::Approx(0.5).epsilon(1e-6));
  }

  TEST_CASE("second parent mixes fitness and novelty") {
    const std::vector<Candidate> pop{scored(0.5, "aaaaa", "f1"), scored(0.8, "aaaaa", "twin"),
                                     scored(0.4, "bbbba", "far")};
    const auto s = parent2_scores(pop, pop[0], 0.5);
    CHECK(s[1] == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(s[2] == doctest::Approx(0.6).epsilon(1e-15));
    const auto p = parent2_probs(pop, 0, 0.5, 5.0);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == doctest::Approx(0.269).epsilon(1e-3));
    CHECK(p[2] == doctest::Approx(0.731).epsilon(1e-3));
    CHECK(p[1] == doctest::Approx(1.0 / (1.0 + std::exp(1.0))).epsilon(1e-14));
  }

  TEST_CASE("second parent limits") {
    const std::vector<Candidate> pop{scored(0.5, "abcd", "f1"), scored(0.3, "abcd", "twin"),
                                     scored(0.6, "wxyz", "x"), scored(0.9, "abzz", "y")};
    const auto fit_only = parent2_probs(pop, 0, 1.0, 5.0);
    const std::vector<Candidate> rest{pop[1], pop[2], pop[3]};
    const auto plain = parent1_probs(rest, 5.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(fit_only[i + 1] == doctest::Approx(plain[i]).epsilon(1e-14));
    const auto novelty = parent2_probs(pop, 0, 0.0, 5.0);
    CHECK(novelty[1] < novelty[2]);
    CHECK(novelty[1] < novelty[3]);
  }

  TEST_CASE("operator choice extremes") {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
      CHECK(choose_operator(1.0, rng) == OperatorKind::kMacro);
      CHECK(choose_operator(0.0, rng) == OperatorKind::kCrossover);
    }
  }
}

TEST_SUITE("selection") {
  TEST_CASE("empirical parent-1 frequencies match the softmax") {
    std::vector<Candidate> pop;
    Rng init(3);
    for (int i = 0; i < 8; ++i) pop.push_back(scored(uniform01(init), std::to_string(i)));
    const auto p = parent1_probs(pop, 5.0);
    Rng rng(11);
    std::vector<double> hits(pop.size(), 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits[select_parent1(pop, 5.0, rng)] += 1.0;
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(hits[i] / n - p[i]);
    CHECK(0.5 * tv <= 0.01);
  }

  TEST_CASE("equal fitness selects uniformly") {
    std::vector<Candidate> pop;
    for (int i = 0; i < 5; ++i) pop.push_back(scored(0.4, std::to_string(i)));
    Rng rng(12);
    std::vector<double> hits(5, 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits[select_parent1(pop, 5.0, rng)] += 1.0;
    double chi2 = 0.0;
    for (double h : hits) chi2 += (h - n / 5.0) * (h - n / 5.0) / (n / 5.0);
    // 4 degrees of freedom, p = 0.01
    CHECK(chi2 < 13.277);
  }

  TEST_CASE("operator frequency") {
    Rng rng(13);
    int macro = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) macro += choose_operator(0.65, rng) == OperatorKind::kMacro;
    CHECK(std::abs(macro / static_cast<double>(n) - 0.65) <= 0.01);
  }

  TEST_CASE("second-parent frequencies") {
    std::vector<Candidate> pop;
    Rng init(5);
    for (int i = 0; i < 6; ++i) pop.push_back(scored(uniform01(init), std::string(static_cast<std::size_t>(i + 2), 'a' + static_cast<char>(i))));
    const auto p = parent2_probs(pop, 2, 0.5, 5.0);
    Rng rng(14);
    std::vector<double> hits(pop.size(), 0.0);
    const int n = 100000;
    for (int i = 0; i < n; ++i) hits[select_parent2(pop, 2, 0.5, 5.0, rng)] += 1.0;
    CHECK(hits[2] == 0.0);
    double tv = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) tv += std::abs(hits[i] / n - p[i]);
    CHECK(0.5 * tv <= 0.01);
  }
}

TEST_CASE("selection argument errors") {
  const std::vector<double> s{0.1, 0.2};
  CHECK_THROWS(softmax_probs(s, 0.0));
  CHECK_THROWS(softmax_probs(s, -1.0));
  const std::vector<Candidate> one{scored(0.3)};
  CHECK_THROWS(parent2_probs(one, 0, 0.5, 5.0));
  Rng rng(0);
  CHECK_THROWS(choose_operator(1.5, rng));
}

TEST_CASE("softmax is stable for large scores") {
  const std::vector<double> s{1000.0, 1001.0};
  const auto p = softmax_probs(s, 5.0);
  CHECK(std::isfinite(p[0]));
  CHECK(p[0] + p[1] == doctest::Approx(1.0));
}
