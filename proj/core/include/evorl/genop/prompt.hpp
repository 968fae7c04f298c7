#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace evorl::genop {

enum class VariationKind { kMacro, kCrossover };

struct OperatorRequest {
  VariationKind op = VariationKind::kMacro;
  std::string parent1;
  std::optional<std::string> parent2;
  std::string metrics;
  std::string fitness;
  std::string errors;
  std::string environment;
};

struct Templates {
  std::string system;
  std::string macro;
  std::string crossover;
  std::string hpo;
};

/// Bundled templates; files in `override_dir` take precedence.
Templates load_templates(const std::filesystem::path& override_dir = {});

struct Message {
  std::string role;
  std::string content;
};

/// Replaces each {Name} with values[Name] in one pass. Throws
/// std::invalid_argument if the template has a slot without a value.
std::string fill_slots(const std::string& text, const std::vector<std::pair<std::string, std::string>>& values);

/// System message plus the filled operator template.
std::vector<Message> build_prompt(const OperatorRequest& request, const Templates& templates);

}  // namespace evorl::genop
