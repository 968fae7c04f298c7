#include "evorl/genop/genome.hpp"

#include <charconv>
#include <cmath>
#include <regex>
#include <stdexcept>

#include "evorl/algo/factory.hpp"

namespace evorl::genop {
namespace {

struct Line {
  std::size_t begin;
  std::size_t end;  // excludes the newline
  std::string_view text;
};

std::vector<Line> split_lines(std::string_view s) {
  std::vector<Line> lines;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    std::size_t nl = s.find('\n', pos);
    if (nl == std::string_view::npos) nl = s.size();
    lines.push_back({pos, nl, s.substr(pos, nl - pos)});
    if (nl == s.size()) break;
    pos = nl + 1;
  }
  return lines;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::size_t indent_of(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
  return i;
}

}  // namespace

std::vector<Block> find_blocks(std::string_view source) {
  static const std::regex open(R"(^#\s*<<block:([A-Za-z0-9_]+)>>$)");
  std::vector<Block> blocks;
  bool inside = false;
  for (const Line& line : split_lines(source)) {
    const std::string t(trim(line.text));
    std::smatch m;
    if (std::regex_match(t, m, open)) {
      if (inside) throw std::invalid_argument("nested block marker: " + m[1].str());
      blocks.push_back({m[1].str(), std::min(line.end + 1, source.size()), 0});
      inside = true;
    } else if (t == "# <<end>>" || t == "#<<end>>") {
      if (!inside) throw std::invalid_argument("block end without start");
      blocks.back().end = line.begin;
      inside = false;
    }
  }
  if (inside) throw std::invalid_argument("unterminated block: " + blocks.back().name);
  return blocks;
}

std::string block_body(std::string_view source, const Block& block) {
  return std::string(source.substr(block.begin, block.end - block.begin));
}

std::string replace_block(std::string_view source, const std::string& name, std::string_view body) {
  for (const Block& b : find_blocks(source)) {
    if (b.name != name) continue;
    std::string out(source.substr(0, b.begin));
    out += body;
    if (!body.empty() && body.back() != '\n') out += '\n';
    out += source.substr(b.end);
    return out;
  }
  throw std::invalid_argument("no block named " + name);
}

std::vector<Knob> find_knobs(std::string_view source) {
  static const std::regex knob(
      R"(^\s*self\.([A-Za-z_][A-Za-z0-9_]*)\s*=\s*([-+]?(?:[0-9]+\.?[0-9]*|\.[0-9]+)(?:[eE][-+]?[0-9]+)?)\s*(?:#.*)?$)");
  std::vector<Block> blocks = find_blocks(source);
  auto in_block = [&](std::size_t pos) {
    if (blocks.empty()) return true;
    for (const Block& b : blocks) {
      if (pos >= b.begin && pos < b.end) return true;
    }
    return false;
  };
  std::vector<Knob> knobs;
  for (const Line& line : split_lines(source)) {
    if (!in_block(line.begin)) continue;
    const std::string text(line.text);
    std::smatch m;
    if (!std::regex_match(text, m, knob)) continue;
    const std::string name = m[1].str();
    bool seen = false;
    for (const Knob& k : knobs) seen = seen || k.name == name;
    if (seen) continue;
    const std::string num = m[2].str();
    Knob k;
    k.name = name;
    k.value = std::stod(num);
    k.integer = num.find_first_of(".eE") == std::string::npos;
    k.begin = line.begin + static_cast<std::size_t>(m.position(2));
    k.end = k.begin + num.size();
    knobs.push_back(k);
  }
  return knobs;
}

algo::ParamValues knob_values(std::string_view source) {
  algo::ParamValues out;
  for (const Knob& k : find_knobs(source)) out[k.name] = k.value;
  return out;
}

std::string format_number(double value, bool integer) {
  if (!std::isfinite(value)) throw std::invalid_argument("knob value must be finite");
  if (integer) return std::to_string(std::llround(value));
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eE") == std::string::npos) s += ".0";
  return s;
}

std::string with_knobs(std::string_view source, const algo::ParamValues& values) {
  const std::vector<Knob> knobs = find_knobs(source);
  for (const auto& [name, value] : values) {
    bool found = false;
    for (const Knob& k : knobs) found = found || k.name == name;
    if (!found) throw std::invalid_argument("unknown knob: " + name);
  }
  std::string out;
  std::size_t pos = 0;
  for (const Knob& k : knobs) {
    const auto it = values.find(k.name);
    if (it == values.end()) continue;
    out += source.substr(pos, k.begin - pos);
    out += format_number(it->second, k.integer);
    pos = k.end;
  }
  out += source.substr(pos);
  return out;
}

algo::ParamRegistry knob_registry(std::string_view source) {
  const std::string id = algorithm_of(source);
  algo::ParamRegistry known;
  if (algo::is_algorithm(id)) known = algo::registry_for(id);
  algo::ParamRegistry out;
  for (const Knob& k : find_knobs(source)) {
    algo::ScalarParam p{k.name, k.value, "knob", false};
    for (const auto& r : known) {
      if (r.name == k.name) {
        p.role = r.role;
        p.log_scale = r.log_scale;
      }
    }
    out.push_back(p);
  }
  return out;
}

std::string algorithm_of(std::string_view source) {
  static const std::regex tag(R"(^#\s*algorithm:\s*(\S+)\s*$)");
  for (const Line& line : split_lines(source)) {
    const std::string t(trim(line.text));
    std::smatch m;
    if (std::regex_match(t, m, tag)) return m[1].str();
  }
  return {};
}

std::string compute_loss_span(std::string_view source) {
  static const std::regex def(R"(^\s*def\s+compute_loss\s*\()");
  const std::vector<Line> lines = split_lines(source);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string text(lines[i].text);
    if (!std::regex_search(text, def)) continue;
    const std::size_t indent = indent_of(lines[i].text);
    std::size_t last = i;
    for (std::size_t j = i + 1; j < lines.size(); ++j) {
      const std::string_view t = trim(lines[j].text);
      if (t.empty()) continue;
      if (indent_of(lines[j].text) <= indent && t.front() != '#' && t.front() != ')') break;
      last = j;
    }
    return std::string(source.substr(lines[i].begin, lines[last].end - lines[i].begin));
  }
  return {};
}

}  // namespace evorl::genop
