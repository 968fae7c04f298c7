#include "evorl/genop/extract.hpp"

#include <regex>

#include "evorl/genop/genome.hpp"

namespace evorl::genop {

const std::vector<std::string>& required_methods() {
  static const std::vector<std::string> names{"__init__", "predict", "learn", "compute_loss", "_update"};
  return names;
}

std::vector<std::string> fenced_blocks(std::string_view text) {
  std::vector<std::string> blocks;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const std::size_t tick = text.find("```", pos);
    const std::size_t quote = text.find("'''", pos);
    const std::size_t open = std::min(tick, quote);
    if (open == std::string_view::npos) break;
    const std::string_view fence = text.substr(open, 3);
    const std::size_t body = text.find('\n', open);
    if (body == std::string_view::npos) break;
    const std::size_t close = text.find(fence, body + 1);
    if (close == std::string_view::npos) break;
    blocks.emplace_back(text.substr(body + 1, close - body - 1));
    pos = close + 3;
  }
  return blocks;
}

Extracted extract_candidate(std::string_view raw) {
  const std::vector<std::string> blocks = fenced_blocks(raw);
  if (blocks.empty()) throw ExtractError("no fenced code block in response");
  const std::string& source = blocks.back();
  static const std::regex cls(R"((^|\n)class\s+([A-Za-z_][A-Za-z0-9_]*))");
  std::vector<std::string> classes;
  for (auto it = std::sregex_iterator(source.begin(), source.end(), cls); it != std::sregex_iterator(); ++it) {
    classes.push_back((*it)[2].str());
  }
  int count = 0;
  for (const auto& c : classes) count += c == "NewAlgo";
  if (count == 0) {
    const std::string found = classes.empty() ? "none" : classes.front();
    throw ExtractError("class must be NewAlgo (found " + found + ")");
  }
  if (count > 1) throw ExtractError("class NewAlgo defined more than once");
  for (const std::string& m : required_methods()) {
    const std::regex def("\\bdef\\s+" + m + "\\s*\\(");
    if (!std::regex_search(source, def)) throw ExtractError("NewAlgo is missing required method " + m);
  }
  Extracted out{source, compute_loss_span(source)};
  if (out.loss_span.empty()) throw ExtractError("could not locate compute_loss body");
  return out;
}

}  // namespace evorl::genop
