#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "evorl/evo/candidate.hpp"
#include "evorl/evo/evaluator.hpp"
#include "evorl/genop/operator.hpp"

namespace evorl::evo {

struct EngineConfig {
  int islands = 2;
  int population = 8;
  int candidates_per_generation = 24;
  int generations = 10;
  double p_macro = 0.65;
  double p_cross = 0.35;
  double alpha = 0.5;
  double tau = 5.0;
  std::uint64_t seed = 0;
  /// Extra attempts per initial slot before init fails.
  int init_retries = 3;
  std::size_t jobs = 1;
  /// Environment interface text passed to the operator.
  std::string environment;

  void validate() const;
};

struct Island {
  int id = 0;
  int generation = 0;
  std::vector<Candidate> population;
  /// Errors of the last generation's failed candidates.
  std::string errors;
};

struct CandidateRecord {
  Candidate candidate;
  bool accepted = false;
};

struct IslandSummary {
  int island = 0;
  double max_F = 0.0;
  double mean_F = 0.0;
};

struct GenerationLog {
  int generation = 0;
  std::vector<std::vector<CandidateRecord>> records;  // per island
  std::vector<IslandSummary> summary;
};

/// Persists a run: <root>/gen<g>/island<k>/cand<id>/{source.txt, fitness.json,
/// lineage.json, traces/*.csv}, <root>/config.json and <root>/generations.csv.
class RunStore {
 public:
  /// Refuses a non-empty existing directory unless `force`, which clears it.
  RunStore(std::filesystem::path root, bool force);

  const std::filesystem::path& root() const { return root_; }
  void write_config(const std::string& json_text) const;
  void write_candidate(int generation, int island, const Candidate& candidate,
                       const std::vector<fitness::TrainingTrace>& traces) const;
  void append_generation(const IslandSummary& s, int generation) const;
  void write_generation_log(const GenerationLog& log) const;
  std::filesystem::path operator_log(int generation, int island, int index) const;

 private:
  std::filesystem::path root_;
};

class Engine {
 public:
  Engine(EngineConfig config, genop::Operator& op, Evaluator& evaluator, RunStore* store = nullptr);

  std::vector<Island> init_islands();
  GenerationLog run_generation(std::vector<Island>& islands);
  /// init_islands followed by config.generations generations.
  std::vector<GenerationLog> run(std::vector<Island>* final_islands = nullptr);

  const EngineConfig& config() const { return config_; }
  /// Number of evaluator calls so far (memoized duplicates excluded).
  std::size_t evaluations() const { return evaluations_; }

  std::function<void(const GenerationLog&)> on_generation;

 private:
  /// Operator call, extraction and lint. Failures give a failed candidate.
  Candidate produce(const std::function<std::string(Rng&, const std::filesystem::path&)>& call, Lineage lineage,
                    const std::filesystem::path& log_file);
  /// Evaluates every pending candidate, using the memo for repeated sources.
  void evaluate_all(std::vector<Candidate*>& pending);
  void persist(int generation, int island, const Candidate& c);

  EngineConfig config_;
  genop::Operator& op_;
  Evaluator& evaluator_;
  RunStore* store_;
  Rng rng_;
  std::map<std::string, Evaluation> memo_;
  std::size_t evaluations_ = 0;
};

}  // namespace evorl::evo
