#include "evorl/genop/lint.hpp"

#include <sstream>
#include <stdexcept>

#include "evorl/data.hpp"

namespace evorl::genop {

std::string LintReport::to_text() const {
  std::ostringstream out;
  for (const Violation& v : violations) {
    out << "line " << v.line << ":" << v.column << " [" << v.rule << "] " << v.match << "\n";
  }
  return out.str();
}

std::vector<LintRule> parse_deny_list(std::string_view text) {
  std::vector<LintRule> rules;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto b = line.find_first_not_of(" \t");
    if (b == std::string::npos || line[b] == '#') continue;
    const auto sep = line.find_first_of(" \t", b);
    if (sep == std::string::npos) throw std::invalid_argument("deny-list line " + std::to_string(number) + ": no pattern");
    LintRule r;
    r.id = line.substr(b, sep - b);
    r.pattern = line.substr(line.find_first_not_of(" \t", sep));
    auto flags = std::regex::ECMAScript;
    std::string pattern = r.pattern;
    if (pattern.rfind("(?i)", 0) == 0) {
      flags |= std::regex::icase;
      pattern = pattern.substr(4);
    }
    r.re = std::regex(pattern, flags);
    rules.push_back(std::move(r));
  }
  return rules;
}

const std::vector<LintRule>& default_deny_list() {
  static const std::vector<LintRule> rules = parse_deny_list(data::load("lint_denylist.txt"));
  return rules;
}

LintReport lint_constraints(std::string_view source, const std::vector<LintRule>& rules) {
  LintReport report;
  std::istringstream in{std::string(source)};
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    for (const LintRule& r : rules) {
      for (auto it = std::sregex_iterator(line.begin(), line.end(), r.re); it != std::sregex_iterator(); ++it) {
        report.violations.push_back({r.id, it->str(), number, static_cast<std::size_t>(it->position()) + 1});
      }
    }
  }
  return report;
}

}  // namespace evorl::genop
