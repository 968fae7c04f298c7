#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "evorl/genop/llm.hpp"
#include "evorl/genop/prompt.hpp"
#include "evorl/random.hpp"

namespace evorl::genop {

/// The variation operator. Both calls return raw response text; the engine
/// extracts and lints it.
class Operator {
 public:
  virtual ~Operator() = default;
  virtual std::string initial(Rng& rng, const std::filesystem::path& log_file) = 0;
  virtual std::string vary(const OperatorRequest& request, Rng& rng, const std::filesystem::path& log_file) = 0;
};

struct Genome {
  std::string name;
  std::string source;
};

/// Genomes bundled under data/genomes that pass the deny-list lint.
std::vector<Genome> genome_library();
/// Every bundled genome, including the ones the lint rejects.
std::vector<Genome> all_genomes();
Genome find_genome(const std::string& name);

std::string fence(const std::string& source);

/// Offline operator over a genome library.
/// initial: a library genome with one block perturbed.
/// macro: perturbs the knobs of exactly one block of parent 1.
/// crossover: alternates blocks, even positions from parent 1 and odd from
/// parent 2 where parent 2 has a block of that name.
class MockOperator : public Operator {
 public:
  explicit MockOperator(std::vector<Genome> library = genome_library());

  std::string initial(Rng& rng, const std::filesystem::path& log_file) override;
  std::string vary(const OperatorRequest& request, Rng& rng, const std::filesystem::path& log_file) override;

  static std::string perturb_block(const std::string& source, Rng& rng);
  static std::string cross(const std::string& a, const std::string& b);

 private:
  std::vector<Genome> library_;
};

/// Live operator: renders prompts and calls the provider. Initial members
/// are macro mutations of library genomes.
class LlmOperator : public Operator {
 public:
  LlmOperator(std::shared_ptr<LlmClient> client, Templates templates, std::vector<Genome> seeds = genome_library());

  std::string initial(Rng& rng, const std::filesystem::path& log_file) override;
  std::string vary(const OperatorRequest& request, Rng& rng, const std::filesystem::path& log_file) override;

 private:
  std::shared_ptr<LlmClient> client_;
  Templates templates_;
  std::vector<Genome> seeds_;
};

}  // namespace evorl::genop
