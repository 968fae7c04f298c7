#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evorl/env/env.hpp"
#include "evorl/fitness/harness.hpp"

namespace evorl::fitness {

/// Best evaluation return of a run. Throws on a trace without evaluations.
double per_seed_max(const TrainingTrace& trace);
/// Mean of per-seed maxima.
double env_score(std::span<const double> seed_maxima);
/// clip((r - L) / (U - L), 0, 1).
double normalize(double mean_best_return, const env::NormalizationBounds& bounds);
/// Mean of per-environment scores.
double aggregate(std::span<const double> scores);

struct SeedResult {
  std::uint64_t seed = 0;
  double r_max = 0.0;
  bool has_eval = false;
  bool failed = false;
  std::string error;
};

struct EnvFitness {
  std::string env_id;
  double mean_best_return = 0.0;
  double normalized = 0.0;
  bool failed = false;
  std::vector<SeedResult> seeds;
};

struct FitnessReport {
  std::vector<EnvFitness> per_env;
  double aggregate = 0.0;

  const EnvFitness& env(const std::string& env_id) const;
};

/// Builds a report for `suite` from all traces. Every suite environment needs
/// at least one trace. An environment with any failed run scores 0.
FitnessReport build_report(std::span<const std::string> suite, std::span<const TrainingTrace> traces);

std::string report_to_json(const FitnessReport& report);
FitnessReport report_from_json(const std::string& text);

struct SeriesSummary {
  std::size_t count = 0;
  double final = 0.0;  // mean over runs of each run's last value
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

SeriesSummary summarize(std::span<const std::vector<double>> runs);

struct EnvMetrics {
  std::string env_id;
  SeriesSummary loss;
  SeriesSummary grad_norm;
  SeriesSummary param_norm;
  SeriesSummary eval_return;
};

struct MetricsFeedback {
  std::vector<EnvMetrics> per_env;
  std::vector<std::string> errors;

  /// Plain-text rendering used to fill operator prompts.
  std::string to_text() const;
};

MetricsFeedback metrics_summary(std::span<const TrainingTrace> traces);

struct SuiteOptions {
  std::vector<std::string> envs;
  std::vector<std::uint64_t> seeds;
  TrainingOptions training;
  /// Per-environment override of training.total_steps.
  std::map<std::string, std::int64_t> steps_per_env;
  std::size_t jobs = 1;
};

struct SuiteResult {
  FitnessReport report;
  std::vector<TrainingTrace> traces;
  MetricsFeedback feedback;
};

/// Trains one agent per (env, seed) on a bounded pool and scores the results.
SuiteResult evaluate_suite(const AgentFactory& factory, const SuiteOptions& options);

/// Runs every task on at most `jobs` threads and waits for all of them.
/// Exceptions escaping a task are rethrown after the barrier.
void run_pool(std::size_t jobs, const std::vector<std::function<void()>>& tasks);

}  // namespace evorl::fitness
