#include "evorl/genop/prompt.hpp"

#include <cctype>
#include <stdexcept>

#include "evorl/data.hpp"

namespace evorl::genop {

Templates load_templates(const std::filesystem::path& override_dir) {
  Templates t;
  t.system = data::load("templates/system.txt", override_dir);
  t.macro = data::load("templates/macro.txt", override_dir);
  t.crossover = data::load("templates/crossover.txt", override_dir);
  t.hpo = data::load("templates/hpo_intervals.txt", override_dir);
  return t;
}

namespace {

bool is_slot_name(const std::string& s) {
  if (s.empty()) return false;
  for (const char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
  }
  return std::isupper(static_cast<unsigned char>(s.front())) != 0;
}

}  // namespace

std::string fill_slots(const std::string& text, const std::vector<std::pair<std::string, std::string>>& values) {
  std::string out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t open = text.find('{', pos);
    if (open == std::string::npos) break;
    const std::size_t close = text.find('}', open);
    if (close == std::string::npos) break;
    const std::string name = text.substr(open + 1, close - open - 1);
    if (!is_slot_name(name)) {
      out += text.substr(pos, open + 1 - pos);
      pos = open + 1;
      continue;
    }
    const std::string* value = nullptr;
    for (const auto& [k, v] : values) {
      if (k == name) value = &v;
    }
    if (!value) throw std::invalid_argument("no value for template slot {" + name + "}");
    out += text.substr(pos, open - pos);
    out += *value;
    pos = close + 1;
  }
  out += text.substr(pos);
  return out;
}

std::vector<Message> build_prompt(const OperatorRequest& request, const Templates& templates) {
  if (request.parent1.empty()) throw std::invalid_argument("operator request without a parent");
  std::string algorithm = request.parent1;
  const std::string* body = &templates.macro;
  if (request.op == VariationKind::kCrossover) {
    if (!request.parent2 || request.parent2->empty()) throw std::invalid_argument("crossover needs two parents");
    if (*request.parent2 == request.parent1) throw std::invalid_argument("crossover parents must differ");
    algorithm = "# ---- Parent A ----\n" + request.parent1 + "\n# ---- Parent B ----\n" + *request.parent2;
    body = &templates.crossover;
  } else if (request.parent2) {
    throw std::invalid_argument("macro mutation takes one parent");
  }
  auto or_none = [](const std::string& s) { return s.empty() ? std::string("None") : s; };
  std::vector<Message> messages;
  std::string system = templates.system;
  if (!request.environment.empty()) system += "\n### Environment Interface\n" + request.environment + "\n";
  messages.push_back({"system", system});
  messages.push_back({"user", fill_slots(*body, {{"Your_Algorithm", algorithm},
                                                 {"Metrics", or_none(request.metrics)},
                                                 {"Fitness", or_none(request.fitness)},
                                                 {"Errors", or_none(request.errors)}})});
  return messages;
}

}  // namespace evorl::genop
