#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "evorl/algo/common.hpp"
#include "evorl/fitness/fitness.hpp"

namespace evorl::evo {

enum class Status { kPending, kEvaluated, kFailed };
enum class OperatorKind { kInit, kMacro, kCrossover };

std::string to_string(Status s);
std::string to_string(OperatorKind op);
Status status_from_string(const std::string& s);
OperatorKind operator_from_string(const std::string& s);

struct Lineage {
  std::vector<std::string> parents;
  OperatorKind op = OperatorKind::kInit;
  int generation = 0;
  int island = 0;
};

struct Candidate {
  std::string id;
  std::string source;
  std::string loss_span;
  algo::ParamRegistry params;
  Lineage lineage;
  Status status = Status::kPending;
  std::optional<fitness::FitnessReport> fitness;
  std::string feedback;  // rendered metrics of the last evaluation
  std::string error;

  /// Aggregate fitness; 0 for failed candidates. Throws while pending.
  double F() const;
  bool evaluated() const { return status != Status::kPending; }
};

/// 64-bit FNV-1a of the text, as 16 hex digits.
std::string candidate_id(std::string_view source);

/// Pending candidate with id, loss span and scalar registry filled in.
Candidate make_candidate(std::string source, Lineage lineage);

std::string lineage_to_json(const Candidate& c);

}  // namespace evorl::evo
