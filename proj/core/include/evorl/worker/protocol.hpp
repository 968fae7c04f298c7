#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "evorl/fitness/harness.hpp"

namespace evorl::worker {

inline constexpr int kProtocolVersion = 1;

struct ProtocolError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EvalRequest {
  std::string source;
  std::string env;
  std::uint64_t seed = 0;
  std::int64_t total_steps = 0;
  std::int64_t eval_every = 5000;
  int eval_episodes = 5;
  double time_limit_s = 3600.0;

  /// Throws ProtocolError for non-positive budgets or an unknown env id.
  void validate() const;
};

enum class EventKind { kEval, kMetric, kError, kDone };

std::string to_string(EventKind k);

struct EvalEvent {
  EventKind kind = EventKind::kDone;
  std::int64_t step = 0;
  double mean_return = 0.0;  // eval
  double loss = 0.0;         // metric
  double grad_norm = 0.0;    // metric
  double param_norm = 0.0;   // metric
  std::string message;       // error
};

std::string encode_request(const EvalRequest& r);
/// Throws ProtocolError on malformed JSON, a missing field or a version
/// mismatch.
EvalRequest parse_request(const std::string& line);

std::string encode_event(const EvalEvent& e);
EvalEvent parse_event(const std::string& line);

/// Rebuilds a trace from a complete stream. Steps must be non-decreasing and
/// the stream must end with its only terminal event; otherwise ProtocolError.
/// An error terminal yields a failed trace carrying the message.
fitness::TrainingTrace trace_from_events(const std::vector<EvalEvent>& events, const std::string& env_id,
                                         std::uint64_t seed);

/// Event stream equivalent to a native trace: metric events for every
/// update, eval events in step order, then done (or error when failed).
std::vector<EvalEvent> events_from_trace(const fitness::TrainingTrace& trace);

}  // namespace evorl::worker
