#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "evorl/evo/candidate.hpp"
#include "evorl/random.hpp"

namespace evorl::evo {

/// exp(tau s_i) / sum_j exp(tau s_j), computed stably. Throws unless tau > 0.
std::vector<double> softmax_probs(std::span<const double> scores, double tau);

/// Index draw from a probability vector by inverse CDF.
std::size_t sample_index(std::span<const double> probs, Rng& rng);

double mean_fitness(std::span<const Candidate> population);

/// F(f) >= mean. Throws for a pending candidate.
bool accept(const Candidate& candidate, double mean);

/// Merges accepted candidates into the population, dropping the lowest
/// fitness members so the size is unchanged. Result sorted by F descending;
/// ties keep incumbents first.
std::vector<Candidate> replace_lowest(std::vector<Candidate> population, std::vector<Candidate> accepted);

std::vector<double> parent1_probs(std::span<const Candidate> population, double tau);
std::size_t select_parent1(std::span<const Candidate> population, double tau, Rng& rng);

/// alpha F(f2) + (1 - alpha) d(f1, f2) over compute_loss spans.
std::vector<double> parent2_scores(std::span<const Candidate> population, const Candidate& f1, double alpha);
/// Probabilities over the population with f1's own slot (if any) set to 0.
std::vector<double> parent2_probs(std::span<const Candidate> population, std::size_t f1_index, double alpha,
                                  double tau);
std::size_t select_parent2(std::span<const Candidate> population, std::size_t f1_index, double alpha, double tau,
                           Rng& rng);

OperatorKind choose_operator(double p_macro, Rng& rng);

}  // namespace evorl::evo
