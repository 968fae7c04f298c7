#include "evorl/genop/operator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "evorl/data.hpp"
#include "evorl/genop/genome.hpp"
#include "evorl/genop/lint.hpp"

namespace evorl::genop {

std::vector<Genome> all_genomes() {
  std::vector<Genome> out;
  for (const auto& [path, text] : data::embedded_files()) {
    if (path.rfind("genomes/", 0) != 0) continue;
    std::string name = path.substr(8);
    name = name.substr(0, name.rfind('.'));
    out.push_back({name, std::string(text)});
  }
  return out;
}

std::vector<Genome> genome_library() {
  std::vector<Genome> out;
  for (Genome& g : all_genomes()) {
    if (lint_constraints(g.source).ok()) out.push_back(std::move(g));
  }
  return out;
}

Genome find_genome(const std::string& name) {
  for (Genome& g : all_genomes()) {
    if (g.name == name) return g;
  }
  throw std::invalid_argument("no genome named " + name);
}

std::string fence(const std::string& source) {
  std::string out = "```python\n" + source;
  if (!source.empty() && source.back() != '\n') out += '\n';
  return out + "```\n";
}

MockOperator::MockOperator(std::vector<Genome> library) : library_(std::move(library)) {
  if (library_.empty()) throw std::invalid_argument("mock operator needs a non-empty genome library");
}

std::string MockOperator::perturb_block(const std::string& source, Rng& rng) {
  const std::vector<Block> blocks = find_blocks(source);
  std::vector<std::string> eligible;
  for (const Block& b : blocks) {
    if (!find_knobs(block_body(source, b)).empty()) eligible.push_back(b.name);
  }
  if (eligible.empty()) throw std::invalid_argument("genome has no block with knobs");
  const std::string name = eligible[static_cast<std::size_t>(uniform01(rng) * double(eligible.size())) % eligible.size()];
  std::string body;
  for (const Block& b : blocks) {
    if (b.name == name) body = block_body(source, b);
  }
  const std::vector<Knob> knobs = find_knobs(body);
  algo::ParamValues values;
  const std::size_t forced = static_cast<std::size_t>(uniform01(rng) * double(knobs.size())) % knobs.size();
  for (std::size_t i = 0; i < knobs.size(); ++i) {
    const Knob& k = knobs[i];
    const bool touch = i == forced || uniform01(rng) < 0.3;
    if (!touch) continue;
    const double factor = std::exp(std::clamp(0.35 * standard_normal(rng), -0.7, 0.7));
    double v = k.value * factor;
    if (k.integer) {
      v = std::max(1.0, std::round(v));
      if (v == k.value) v = k.value + (factor >= 1.0 ? 1.0 : (k.value > 1.0 ? -1.0 : 1.0));
    } else if (k.value == 0.0) {
      v = 0.01 * factor;
    }
    values[k.name] = v;
  }
  return replace_block(source, name, with_knobs(body, values));
}

std::string MockOperator::cross(const std::string& a, const std::string& b) {
  const std::vector<Block> blocks_a = find_blocks(a);
  const std::vector<Block> blocks_b = find_blocks(b);
  std::string out = a;
  for (std::size_t i = 1; i < blocks_a.size(); i += 2) {
    for (const Block& bb : blocks_b) {
      if (bb.name == blocks_a[i].name) out = replace_block(out, bb.name, block_body(b, bb));
    }
  }
  return out;
}

std::string MockOperator::initial(Rng& rng, const std::filesystem::path&) {
  const Genome& g = library_[static_cast<std::size_t>(uniform01(rng) * double(library_.size())) % library_.size()];
  return fence(perturb_block(g.source, rng));
}

std::string MockOperator::vary(const OperatorRequest& request, Rng& rng, const std::filesystem::path&) {
  if (request.op == VariationKind::kMacro) return fence(perturb_block(request.parent1, rng));
  if (!request.parent2) throw std::invalid_argument("crossover needs two parents");
  return fence(cross(request.parent1, *request.parent2));
}

LlmOperator::LlmOperator(std::shared_ptr<LlmClient> client, Templates templates, std::vector<Genome> seeds)
    : client_(std::move(client)), templates_(std::move(templates)), seeds_(std::move(seeds)) {
  if (!client_) throw std::invalid_argument("LlmOperator needs a client");
  if (seeds_.empty()) throw std::invalid_argument("LlmOperator needs seed genomes");
}

std::string LlmOperator::initial(Rng& rng, const std::filesystem::path& log_file) {
  OperatorRequest r;
  r.parent1 = seeds_[static_cast<std::size_t>(uniform01(rng) * double(seeds_.size())) % seeds_.size()].source;
  return vary(r, rng, log_file);
}

std::string LlmOperator::vary(const OperatorRequest& request, Rng&, const std::filesystem::path& log_file) {
  return client_->complete(build_prompt(request, templates_), log_file);
}

}  // namespace evorl::genop
