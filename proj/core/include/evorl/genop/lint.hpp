#pragma once

#include <regex>
#include <string>
#include <string_view>
#include <vector>

namespace evorl::genop {

struct LintRule {
  std::string id;
  std::string pattern;
  std::regex re;
};

struct Violation {
  std::string rule;
  std::string match;
  std::size_t line = 0;  // 1-based
  std::size_t column = 0;
};

struct LintReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_text() const;
};

/// One rule per line: `<id> <regex>`. A regex prefixed with (?i) is case
/// insensitive. Blank lines and lines starting with # are skipped.
std::vector<LintRule> parse_deny_list(std::string_view text);
/// Bundled deny-list.
const std::vector<LintRule>& default_deny_list();

LintReport lint_constraints(std::string_view source, const std::vector<LintRule>& rules = default_deny_list());

}  // namespace evorl::genop
