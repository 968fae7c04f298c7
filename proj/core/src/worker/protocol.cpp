#include "evorl/worker/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "evorl/env/env.hpp"

namespace evorl::worker {

using nlohmann::json;

void EvalRequest::validate() const {
  if (total_steps <= 0) throw ProtocolError("total_steps must be positive");
  if (eval_every <= 0) throw ProtocolError("eval_every must be positive");
  if (eval_episodes <= 0) throw ProtocolError("eval_episodes must be positive");
  if (!(time_limit_s > 0.0)) throw ProtocolError("time_limit_s must be positive");
  const auto& specs = env::registered_specs();
  const bool known = std::any_of(specs.begin(), specs.end(), [&](const env::EnvSpec& s) { return s.id == env; });
  if (!known) throw ProtocolError("unsupported env: " + env);
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::kEval: return "eval";
    case EventKind::kMetric: return "metric";
    case EventKind::kError: return "error";
    case EventKind::kDone: return "done";
  }
  return "done";
}

namespace {

EventKind kind_from(const std::string& s) {
  if (s == "eval") return EventKind::kEval;
  if (s == "metric") return EventKind::kMetric;
  if (s == "error") return EventKind::kError;
  if (s == "done") return EventKind::kDone;
  throw ProtocolError("unknown event kind: " + s);
}

json parse_line(const std::string& line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ProtocolError("malformed JSON line");
  if (!j.contains("v") || j["v"] != kProtocolVersion) throw ProtocolError("protocol version mismatch");
  return j;
}

template <class T>
T field(const json& j, const char* name) {
  if (!j.contains(name)) throw ProtocolError(std::string("missing field ") + name);
  try {
    return j.at(name).get<T>();
  } catch (const json::exception&) {
    throw ProtocolError(std::string("bad type for field ") + name);
  }
}

}  // namespace

std::string encode_request(const EvalRequest& r) {
  return json{{"v", kProtocolVersion},        {"source", r.source},           {"env", r.env},
              {"seed", r.seed},               {"total_steps", r.total_steps}, {"eval_every", r.eval_every},
              {"eval_episodes", r.eval_episodes}, {"time_limit_s", r.time_limit_s}}
      .dump();
}

EvalRequest parse_request(const std::string& line) {
  const json j = parse_line(line);
  EvalRequest r;
  r.source = field<std::string>(j, "source");
  r.env = field<std::string>(j, "env");
  r.seed = field<std::uint64_t>(j, "seed");
  r.total_steps = field<std::int64_t>(j, "total_steps");
  r.eval_every = field<std::int64_t>(j, "eval_every");
  r.eval_episodes = field<int>(j, "eval_episodes");
  r.time_limit_s = field<double>(j, "time_limit_s");
  return r;
}

std::string encode_event(const EvalEvent& e) {
  json payload = json::object();
  switch (e.kind) {
    case EventKind::kEval: payload["return"] = e.mean_return; break;
    case EventKind::kMetric:
      payload["loss"] = e.loss;
      payload["grad_norm"] = e.grad_norm;
      payload["param_norm"] = e.param_norm;
      break;
    case EventKind::kError: payload["message"] = e.message; break;
    case EventKind::kDone: break;
  }
  return json{{"v", kProtocolVersion}, {"kind", to_string(e.kind)}, {"step", e.step}, {"payload", payload}}.dump();
}

EvalEvent parse_event(const std::string& line) {
  const json j = parse_line(line);
  EvalEvent e;
  e.kind = kind_from(field<std::string>(j, "kind"));
  e.step = field<std::int64_t>(j, "step");
  const json p = j.contains("payload") ? j["payload"] : json::object();
  if (!p.is_object()) throw ProtocolError("payload must be an object");
  switch (e.kind) {
    case EventKind::kEval: e.mean_return = field<double>(p, "return"); break;
    case EventKind::kMetric:
      e.loss = field<double>(p, "loss");
      e.grad_norm = field<double>(p, "grad_norm");
      e.param_norm = field<double>(p, "param_norm");
      break;
    case EventKind::kError: e.message = field<std::string>(p, "message"); break;
    case EventKind::kDone: break;
  }
  return e;
}

fitness::TrainingTrace trace_from_events(const std::vector<EvalEvent>& events, const std::string& env_id,
                                         std::uint64_t seed) {
  fitness::TrainingTrace t;
  t.env_id = env_id;
  t.seed = seed;
  if (events.empty()) throw ProtocolError("empty event stream");
  std::int64_t last = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const EvalEvent& e = events[i];
    if (e.step < last) throw ProtocolError("event steps decrease at event " + std::to_string(i));
    last = e.step;
    const bool terminal = e.kind == EventKind::kDone || e.kind == EventKind::kError;
    if (terminal != (i + 1 == events.size())) {
      throw ProtocolError(terminal ? "events after terminal event" : "stream has no terminal event");
    }
    switch (e.kind) {
      case EventKind::kEval: t.eval_points.push_back({e.step, e.mean_return}); break;
      case EventKind::kMetric:
        t.update_steps.push_back(e.step);
        t.losses.push_back(e.loss);
        t.grad_norms.push_back(e.grad_norm);
        t.param_norms.push_back(e.param_norm);
        break;
      case EventKind::kError:
        t.failed = true;
        t.error = e.message;
        break;
      case EventKind::kDone: break;
    }
    t.steps_completed = e.step;
  }
  return t;
}

std::vector<EvalEvent> events_from_trace(const fitness::TrainingTrace& trace) {
  std::vector<EvalEvent> out;
  std::size_t u = 0;
  auto flush_updates = [&](std::int64_t upto) {
    for (; u < trace.update_steps.size() && trace.update_steps[u] <= upto; ++u) {
      EvalEvent m;
      m.kind = EventKind::kMetric;
      m.step = trace.update_steps[u];
      m.loss = trace.losses[u];
      m.grad_norm = trace.grad_norms[u];
      m.param_norm = trace.param_norms[u];
      out.push_back(m);
    }
  };
  for (const auto& p : trace.eval_points) {
    flush_updates(p.step);
    EvalEvent e;
    e.kind = EventKind::kEval;
    e.step = p.step;
    e.mean_return = p.mean_return;
    out.push_back(e);
  }
  flush_updates(std::numeric_limits<std::int64_t>::max());
  EvalEvent end;
  end.kind = trace.failed ? EventKind::kError : EventKind::kDone;
  end.step = std::max(trace.steps_completed, out.empty() ? std::int64_t{0} : out.back().step);
  end.message = trace.error;
  out.push_back(end);
  return out;
}

}  // namespace evorl::worker
