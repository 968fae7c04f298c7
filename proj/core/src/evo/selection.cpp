#include "evorl/evo/selection.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "evorl/evo/levenshtein.hpp"

namespace evorl::evo {

std::vector<double> softmax_probs(std::span<const double> scores, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("softmax_probs: tau must be > 0");
  if (scores.empty()) throw std::invalid_argument("softmax_probs: empty scores");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> p(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    p[i] = std::exp(tau * (scores[i] - top));
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::size_t sample_index(std::span<const double> probs, Rng& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_index: empty distribution");
  double total = 0.0;
  for (const double p : probs) total += p;
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

double mean_fitness(std::span<const Candidate> population) {
  if (population.empty()) throw std::invalid_argument("mean_fitness: empty population");
  double sum = 0.0;
  for (const Candidate& c : population) sum += c.F();
  return sum / static_cast<double>(population.size());
}

bool accept(const Candidate& candidate, double mean) { return candidate.F() >= mean; }

std::vector<Candidate> replace_lowest(std::vector<Candidate> population, std::vector<Candidate> accepted) {
  const std::size_t n = population.size();
  for (Candidate& c : accepted) population.push_back(std::move(c));
  std::stable_sort(population.begin(), population.end(),
                   [](const Candidate& a, const Candidate& b) { return a.F() > b.F(); });
  population.resize(n);
  return population;
}

std::vector<double> parent1_probs(std::span<const Candidate> population, double tau) {
  std::vector<double> f(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) f[i] = population[i].F();
  return softmax_probs(f, tau);
}

std::size_t select_parent1(std::span<const Candidate> population, double tau, Rng& rng) {
  return sample_index(parent1_probs(population, tau), rng);
}

std::vector<double> parent2_scores(std::span<const Candidate> population, const Candidate& f1, double alpha) {
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("parent2_scores: alpha must be in [0, 1]");
  std::vector<double> s(population.size());
  for (std::size_t i = 0; i < population.size(); ++i) {
    s[i] = alpha * population[i].F() + (1.0 - alpha) * lev_distance_norm(f1.loss_span, population[i].loss_span);
  }
  return s;
}

std::vector<double> parent2_probs(std::span<const Candidate> population, std::size_t f1_index, double alpha,
                                  double tau) {
  if (f1_index >= population.size()) throw std::out_of_range("parent2_probs: f1 index");
  if (population.size() < 2) throw std::invalid_argument("parent2_probs: need two candidates");
  std::vector<double> scores = parent2_scores(population, population[f1_index], alpha);
  std::vector<double> pool;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i != f1_index) pool.push_back(scores[i]);
  }
  const std::vector<double> p = softmax_probs(pool, tau);
  std::vector<double> out(population.size(), 0.0);
  for (std::size_t i = 0, j = 0; i < out.size(); ++i) {
    if (i != f1_index) out[i] = p[j++];
  }
  return out;
}

std::size_t select_parent2(std::span<const Candidate> population, std::size_t f1_index, double alpha, double tau,
                           Rng& rng) {
  return sample_index(parent2_probs(population, f1_index, alpha, tau), rng);
}

OperatorKind choose_operator(double p_macro, Rng& rng) {
  if (p_macro < 0.0 || p_macro > 1.0) throw std::invalid_argument("choose_operator: p_macro must be in [0, 1]");
  return uniform01(rng) < p_macro ? OperatorKind::kMacro : OperatorKind::kCrossover;
}

}  // namespace evorl::evo
