#include "evorl/evo/candidate.hpp"

#include <cstdio>
#include <stdexcept>

#include <json.hpp>

#include "evorl/genop/genome.hpp"

namespace evorl::evo {

std::string to_string(Status s) {
  switch (s) {
    case Status::kPending: return "pending";
    case Status::kEvaluated: return "evaluated";
    case Status::kFailed: return "failed";
  }
  return "pending";
}

std::string to_string(OperatorKind op) {
  switch (op) {
    case OperatorKind::kInit: return "init";
    case OperatorKind::kMacro: return "macro";
    case OperatorKind::kCrossover: return "crossover";
  }
  return "init";
}

Status status_from_string(const std::string& s) {
  if (s == "pending") return Status::kPending;
  if (s == "evaluated") return Status::kEvaluated;
  if (s == "failed") return Status::kFailed;
  throw std::invalid_argument("unknown status: " + s);
}

OperatorKind operator_from_string(const std::string& s) {
  if (s == "init") return OperatorKind::kInit;
  if (s == "macro") return OperatorKind::kMacro;
  if (s == "crossover") return OperatorKind::kCrossover;
  throw std::invalid_argument("unknown operator: " + s);
}

double Candidate::F() const {
  if (status == Status::kPending) throw std::logic_error("candidate " + id + " is not evaluated");
  if (status == Status::kFailed || !fitness) return 0.0;
  return fitness->aggregate;
}

std::string candidate_id(std::string_view source) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char c : source) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Candidate make_candidate(std::string source, Lineage lineage) {
  Candidate c;
  c.id = candidate_id(source);
  c.loss_span = genop::compute_loss_span(source);
  c.params = genop::knob_registry(source);
  c.source = std::move(source);
  c.lineage = std::move(lineage);
  return c;
}

std::string lineage_to_json(const Candidate& c) {
  nlohmann::json j;
  j["id"] = c.id;
  j["parents"] = c.lineage.parents;
  j["operator"] = to_string(c.lineage.op);
  j["generation"] = c.lineage.generation;
  j["island"] = c.lineage.island;
  j["status"] = to_string(c.status);
  if (c.status != Status::kPending) j["F"] = c.F();
  if (!c.error.empty()) j["error"] = c.error;
  return j.dump(2);
}

}  // namespace evorl::evo
