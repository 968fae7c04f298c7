#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "evorl/algo/common.hpp"

namespace evorl::genop {

/// A component delimited by `# <<block:name>>` and `# <<end>>` lines. Offsets
/// cover the body between the two marker lines.
struct Block {
  std::string name;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// Blocks in source order. Throws std::invalid_argument on unbalanced or
/// nested markers.
std::vector<Block> find_blocks(std::string_view source);
std::string block_body(std::string_view source, const Block& block);
/// Source with the body of block `name` swapped for `body`.
std::string replace_block(std::string_view source, const std::string& name, std::string_view body);

/// A line of the form `self.<name> = <number>`; offsets cover the number.
struct Knob {
  std::string name;
  double value = 0.0;
  bool integer = false;
  std::size_t begin = 0;
  std::size_t end = 0;
};

/// First occurrence of each knob name, in source order. When the source has
/// blocks only lines inside them count.
std::vector<Knob> find_knobs(std::string_view source);
algo::ParamValues knob_values(std::string_view source);
/// Rewrites the numbers of the named knobs and nothing else. Integer knobs
/// are rounded. Throws for a name that is not a knob.
std::string with_knobs(std::string_view source, const algo::ParamValues& values);
std::string format_number(double value, bool integer);

/// Knobs as a scalar registry. Scale flags come from the built-in registry of
/// the source's algorithm when it has one.
algo::ParamRegistry knob_registry(std::string_view source);

/// Id from a `# algorithm: <id>` line, or empty.
std::string algorithm_of(std::string_view source);

/// Text of the compute_loss method: its def line through the line before the
/// next statement at the same or lower indentation. Empty when absent.
std::string compute_loss_span(std::string_view source);

}  // namespace evorl::genop
