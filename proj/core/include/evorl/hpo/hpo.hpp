#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "evorl/algo/common.hpp"
#include "evorl/evo/evaluator.hpp"
#include "evorl/genop/llm.hpp"
#include "evorl/genop/prompt.hpp"

namespace evorl::hpo {

struct ParamInterval {
  std::string name;
  double default_value = 0.0;
  double lo = 0.0;
  double hi = 0.0;
  bool log_scale = false;
  bool fallback = false;
};

struct SearchSpace {
  std::vector<ParamInterval> params;

  std::size_t size() const { return params.size(); }
  bool contains(const std::vector<double>& beta) const;
  algo::ParamValues to_values(const std::vector<double>& beta) const;
};

/// Raw interval proposals, name -> [lo, hi]; the text form is a JSON object.
using IntervalMap = std::map<std::string, std::vector<double>>;

/// Asks for intervals given the rendered prompt.
class IntervalSource {
 public:
  virtual ~IntervalSource() = default;
  virtual std::string propose(const std::vector<genop::Message>& prompt) = 0;
};

/// Sends the prompt through an LLM client.
class LlmIntervalSource : public IntervalSource {
 public:
  LlmIntervalSource(std::shared_ptr<genop::LlmClient> client, std::filesystem::path log_dir = {});
  std::string propose(const std::vector<genop::Message>& prompt) override;

 private:
  std::shared_ptr<genop::LlmClient> client_;
  std::filesystem::path log_dir_;
  int calls_ = 0;
};

/// Returns a fixed response (or the output of a callable).
class StubIntervalSource : public IntervalSource {
 public:
  explicit StubIntervalSource(std::function<std::string(const std::vector<genop::Message>&)> fn);
  explicit StubIntervalSource(std::string fixed);
  std::string propose(const std::vector<genop::Message>& prompt) override;
  int calls() const { return calls_; }

 private:
  std::function<std::string(const std::vector<genop::Message>&)> fn_;
  int calls_ = 0;
};

/// First JSON object found in the text, parsed as an IntervalMap. Throws
/// std::invalid_argument when there is none.
IntervalMap parse_interval_map(const std::string& text);

/// [d - |d|/2, d + |d|/2].
ParamInterval fallback_interval(const algo::ScalarParam& p);

std::vector<genop::Message> interval_prompt(const std::string& source, const algo::ParamRegistry& registry,
                                            const std::vector<std::string>& envs, const genop::Templates& templates);

/// One interval per registered scalar. A response is rejected when any entry
/// is missing, non-finite or has lo > hi; after a second rejected response
/// (or a source failure) the offending parameters fall back to +-50% of their
/// defaults. Defaults are clipped into their intervals.
SearchSpace request_intervals(const std::string& source, const algo::ParamRegistry& registry,
                              const std::vector<std::string>& envs, IntervalSource& intervals,
                              const genop::Templates& templates);

/// n independent draws per dimension; log-uniform for log-scale parameters
/// with positive bounds.
std::vector<std::vector<double>> sample_uniform(const SearchSpace& space, std::size_t n, std::uint64_t seed);

struct SweepResult {
  std::vector<double> beta;
  std::map<std::string, double> per_env;
  double aggregate = 0.0;
  bool failed = false;
  std::string error;
};

/// Instantiates each beta into the source (scalar values only) and scores it
/// with the evaluator. `on_result` sees each result as it is produced.
std::vector<SweepResult> sweep(const std::string& source, const SearchSpace& space,
                               const std::vector<std::vector<double>>& samples, evo::Evaluator& evaluator,
                               const std::vector<std::string>& envs,
                               const std::function<void(std::size_t, const SweepResult&)>& on_result = {});

/// Index of the maximal aggregate; ties go to the earliest index.
std::size_t select_best(const std::vector<SweepResult>& results);

std::string hpo_to_json(const std::string& candidate_id, const SearchSpace& space,
                        const std::vector<SweepResult>& results, std::size_t best);

}  // namespace evorl::hpo
