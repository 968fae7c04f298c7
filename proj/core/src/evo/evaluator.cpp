#include "evorl/evo/evaluator.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "evorl/algo/factory.hpp"
#include "evorl/genop/genome.hpp"

namespace evorl::evo {

std::string fitness_summary(const fitness::FitnessReport& report) {
  std::ostringstream out;
  char buf[160];
  std::snprintf(buf, sizeof buf, "aggregate fitness F = %.4f\n", report.aggregate);
  out << buf;
  for (const auto& e : report.per_env) {
    std::snprintf(buf, sizeof buf, "%s: mean best return %.2f, normalized %.4f%s\n", e.env_id.c_str(),
                  e.mean_best_return, e.normalized, e.failed ? " (failed)" : "");
    out << buf;
  }
  return out.str();
}

SyntheticEvaluator::SyntheticEvaluator(algo::ParamValues targets, std::vector<std::string> suite)
    : targets_(std::move(targets)), suite_(std::move(suite)) {
  if (suite_.empty()) throw std::invalid_argument("synthetic evaluator needs at least one environment id");
  for (const auto& [name, t] : targets_) {
    if (!(t > 0.0)) throw std::invalid_argument("synthetic target for " + name + " must be > 0");
  }
}

double SyntheticEvaluator::score(const std::string& source) const {
  double d = 0.0;
  for (const auto& [name, value] : genop::knob_values(source)) {
    const auto it = targets_.find(name);
    if (it == targets_.end()) continue;
    if (!(value > 0.0)) {
      d += 25.0;
      continue;
    }
    const double l = std::log(value / it->second);
    d += l * l;
  }
  return 1.0 / (1.0 + d);
}

Evaluation SyntheticEvaluator::evaluate(const std::string& source) {
  const double f = score(source);
  Evaluation e;
  for (const auto& id : suite_) {
    fitness::EnvFitness env;
    env.env_id = id;
    env.mean_best_return = f;
    env.normalized = f;
    e.report.per_env.push_back(env);
  }
  e.report.aggregate = f;
  e.feedback = "synthetic evaluation, score " + std::to_string(f) + "\n";
  return e;
}

NativeEvaluator::NativeEvaluator(fitness::SuiteOptions options, std::map<std::string, algo::ParamValues> env_overrides)
    : options_(std::move(options)), env_overrides_(std::move(env_overrides)) {
  if (options_.envs.empty() || options_.seeds.empty()) throw std::invalid_argument("native evaluator needs envs and seeds");
}

Evaluation NativeEvaluator::evaluate(const std::string& source) {
  Evaluation e;
  const std::string id = genop::algorithm_of(source);
  if (!algo::is_algorithm(id)) {
    e.failed = true;
    e.error = id.empty() ? "candidate names no built-in algorithm; it needs the worker evaluator"
                         : "no native trainer for algorithm " + id;
    return e;
  }
  try {
    const algo::ParamValues knobs = genop::knob_values(source);
    const auto overrides = env_overrides_;
    fitness::AgentFactory factory = [id, knobs, overrides](const env::EnvSpec& spec, std::uint64_t seed) {
      algo::ParamValues values = knobs;
      if (const auto it = overrides.find(spec.id); it != overrides.end()) {
        for (const auto& [k, v] : it->second) values[k] = v;
      }
      return algo::make_agent(id, spec, seed, values);
    };
    fitness::SuiteResult r = fitness::evaluate_suite(factory, options_);
    e.report = std::move(r.report);
    e.traces = std::move(r.traces);
    e.feedback = r.feedback.to_text();
  } catch (const std::exception& ex) {
    e.failed = true;
    e.error = ex.what();
  }
  return e;
}

}  // namespace evorl::evo
