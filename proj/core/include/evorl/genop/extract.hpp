#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace evorl::genop {

struct ExtractError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Extracted {
  std::string source;
  std::string loss_span;
};

const std::vector<std::string>& required_methods();

/// Complete fenced blocks (``` or python ''') in order of appearance.
std::vector<std::string> fenced_blocks(std::string_view text);

/// Takes the last complete fenced block and checks it defines exactly one
/// top-level class NewAlgo with every required method. Throws ExtractError.
Extracted extract_candidate(std::string_view raw);

}  // namespace evorl::genop
