#pragma once

#include <map>
#include <string>
#include <vector>

#include "evorl/algo/common.hpp"
#include "evorl/fitness/fitness.hpp"

namespace evorl::evo {

struct Evaluation {
  fitness::FitnessReport report;
  std::vector<fitness::TrainingTrace> traces;
  std::string feedback;
  bool failed = false;
  std::string error;
};

/// Scores a candidate source. Must be safe to call from several threads.
class Evaluator {
 public:
  virtual ~Evaluator() = default;
  virtual Evaluation evaluate(const std::string& source) = 0;
};

/// Plain-text fitness summary used in operator prompts.
std::string fitness_summary(const fitness::FitnessReport& report);

/// Deterministic closed-form evaluator over a source's knobs:
/// F = 1 / (1 + sum_k ln(v_k / t_k)^2) over knobs with a target. A knob with a
/// target whose value is not positive contributes 25. Every suite
/// environment gets the same normalized score.
class SyntheticEvaluator : public Evaluator {
 public:
  SyntheticEvaluator(algo::ParamValues targets, std::vector<std::string> suite);
  Evaluation evaluate(const std::string& source) override;
  double score(const std::string& source) const;

 private:
  algo::ParamValues targets_;
  std::vector<std::string> suite_;
};

/// Trains the built-in algorithm named in the source with its knob values on
/// the native environments. Per-environment overrides are applied on top of
/// the knobs.
class NativeEvaluator : public Evaluator {
 public:
  explicit NativeEvaluator(fitness::SuiteOptions options,
                           std::map<std::string, algo::ParamValues> env_overrides = {});
  Evaluation evaluate(const std::string& source) override;

 private:
  fitness::SuiteOptions options_;
  std::map<std::string, algo::ParamValues> env_overrides_;
};

}  // namespace evorl::evo
