#include "run_config.hpp"

#include <json.hpp>

#include "evorl/algo/factory.hpp"
#include "evorl/env/env.hpp"

namespace evorl::cli {

using nlohmann::json;

void RunConfig::validate() const {
  try {
    engine.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("engine: ") + e.what());
  }
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  const auto& ev = evaluation;
  if (ev.evaluator != "native" && ev.evaluator != "synthetic" && ev.evaluator != "worker") {
    throw ConfigError("evaluation.evaluator must be native, synthetic or worker");
  }
  if (ev.envs.empty()) throw ConfigError("evaluation.envs is empty");
  for (const auto& id : ev.envs) {
    try {
      env::spec_for(id);
    } catch (const std::exception&) {
      throw ConfigError("unknown environment " + id);
    }
  }
  if (ev.seeds < 1) throw ConfigError("evaluation.seeds must be >= 1");
  if (ev.total_steps < 1) throw ConfigError("evaluation.total_steps must be >= 1");
  for (const auto& [id, steps] : ev.steps_per_env) {
    if (steps < 1) throw ConfigError("evaluation.steps_per_env." + id + " must be >= 1");
  }
  if (ev.eval_every < 1 || ev.eval_episodes < 1) throw ConfigError("evaluation cadence must be positive");
  if (!(ev.time_limit_s > 0.0)) throw ConfigError("evaluation.time_limit_s must be > 0");
  if (ev.evaluator == "worker" && ev.worker_command.empty()) throw ConfigError("worker evaluator needs worker_command");
  for (const auto& [name, t] : ev.targets) {
    if (!(t > 0.0)) throw ConfigError("evaluation.targets." + name + " must be > 0");
  }
  if (hpo.samples < 1) throw ConfigError("hpo.samples must be >= 1");
  if (hpo.top_k < 1) throw ConfigError("hpo.top_k must be >= 1");
  if (!mock) {
    try {
      provider.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("operator: ") + e.what());
    }
  }
}

RunConfig default_run_config() {
  RunConfig c;
  c.evaluation.envs = env::default_suite();
  c.evaluation.env_overrides = {{env::kMountainCar, {{"exploration", 0.1}}}};
  c.evaluation.targets = {{"temperature", 1.0}, {"elite_frac", 0.3}, {"survival_weight", 0.2},
                          {"gamma", 0.97}, {"anchor_weight", 0.2}};
  return c;
}

std::string default_config_json() { return to_json(default_run_config()); }

namespace {

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (const char* key : keys) ok = ok || k == key;
    if (!ok) throw ConfigError("unknown key " + where + "." + k);
  }
}

template <class T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("bad value for " + where + "." + key);
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  const json j = json::parse(text, nullptr, false, true);
  if (j.is_discarded()) throw ConfigError("config is not valid JSON");
  RunConfig c = default_run_config();
  reject_unknown(j, {"run_id", "seed", "jobs", "operator", "engine", "evaluation", "hpo"}, "config");
  read(j, "run_id", c.run_id, "config");
  read(j, "seed", c.seed, "config");
  read(j, "jobs", c.jobs, "config");
  if (j.contains("engine")) {
    const json& e = j["engine"];
    reject_unknown(e, {"islands", "population", "candidates_per_generation", "generations", "p_macro", "p_cross",
                       "alpha", "tau", "init_retries"},
                   "engine");
    read(e, "islands", c.engine.islands, "engine");
    read(e, "population", c.engine.population, "engine");
    read(e, "candidates_per_generation", c.engine.candidates_per_generation, "engine");
    read(e, "generations", c.engine.generations, "engine");
    read(e, "p_macro", c.engine.p_macro, "engine");
    read(e, "p_cross", c.engine.p_cross, "engine");
    read(e, "alpha", c.engine.alpha, "engine");
    read(e, "tau", c.engine.tau, "engine");
    read(e, "init_retries", c.engine.init_retries, "engine");
  }
  if (j.contains("evaluation")) {
    const json& e = j["evaluation"];
    reject_unknown(e, {"evaluator", "envs", "seeds", "total_steps", "steps_per_env", "eval_every", "eval_episodes",
                       "time_limit_s", "targets", "env_overrides", "worker_command"},
                   "evaluation");
    auto& ev = c.evaluation;
    read(e, "evaluator", ev.evaluator, "evaluation");
    read(e, "envs", ev.envs, "evaluation");
    read(e, "seeds", ev.seeds, "evaluation");
    read(e, "total_steps", ev.total_steps, "evaluation");
    read(e, "steps_per_env", ev.steps_per_env, "evaluation");
    read(e, "eval_every", ev.eval_every, "evaluation");
    read(e, "eval_episodes", ev.eval_episodes, "evaluation");
    read(e, "time_limit_s", ev.time_limit_s, "evaluation");
    read(e, "targets", ev.targets, "evaluation");
    read(e, "env_overrides", ev.env_overrides, "evaluation");
    read(e, "worker_command", ev.worker_command, "evaluation");
  }
  if (j.contains("operator")) {
    const json& o = j["operator"];
    reject_unknown(o, {"mode", "endpoint", "model", "token_env", "temperature", "max_tokens", "max_retries",
                       "backoff_s", "timeout_s", "max_concurrent"},
                   "operator");
    std::string mode = c.mock ? "mock" : "live";
    read(o, "mode", mode, "operator");
    if (mode != "mock" && mode != "live") throw ConfigError("operator.mode must be mock or live");
    c.mock = mode == "mock";
    read(o, "endpoint", c.provider.endpoint, "operator");
    read(o, "model", c.provider.model, "operator");
    read(o, "token_env", c.provider.token_env, "operator");
    read(o, "temperature", c.provider.temperature, "operator");
    read(o, "max_tokens", c.provider.max_tokens, "operator");
    read(o, "max_retries", c.provider.max_retries, "operator");
    read(o, "backoff_s", c.provider.backoff_s, "operator");
    read(o, "timeout_s", c.provider.timeout_s, "operator");
    read(o, "max_concurrent", c.provider.max_concurrent, "operator");
  }
  if (j.contains("hpo")) {
    const json& h = j["hpo"];
    reject_unknown(h, {"samples", "top_k"}, "hpo");
    read(h, "samples", c.hpo.samples, "hpo");
    read(h, "top_k", c.hpo.top_k, "hpo");
  }
  return c;
}

std::string to_json(const RunConfig& c) {
  json j;
  j["run_id"] = c.run_id;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["engine"] = {{"islands", c.engine.islands},
                 {"population", c.engine.population},
                 {"candidates_per_generation", c.engine.candidates_per_generation},
                 {"generations", c.engine.generations},
                 {"p_macro", c.engine.p_macro},
                 {"p_cross", c.engine.p_cross},
                 {"alpha", c.engine.alpha},
                 {"tau", c.engine.tau},
                 {"init_retries", c.engine.init_retries}};
  const auto& ev = c.evaluation;
  j["evaluation"] = {{"evaluator", ev.evaluator},
                     {"envs", ev.envs},
                     {"seeds", ev.seeds},
                     {"total_steps", ev.total_steps},
                     {"steps_per_env", ev.steps_per_env},
                     {"eval_every", ev.eval_every},
                     {"eval_episodes", ev.eval_episodes},
                     {"time_limit_s", ev.time_limit_s},
                     {"targets", ev.targets},
                     {"env_overrides", ev.env_overrides},
                     {"worker_command", ev.worker_command}};
  j["operator"] = {{"mode", c.mock ? "mock" : "live"},
                   {"endpoint", c.provider.endpoint},
                   {"model", c.provider.model},
                   {"token_env", c.provider.token_env},
                   {"temperature", c.provider.temperature},
                   {"max_tokens", c.provider.max_tokens},
                   {"max_retries", c.provider.max_retries},
                   {"backoff_s", c.provider.backoff_s},
                   {"timeout_s", c.provider.timeout_s},
                   {"max_concurrent", c.provider.max_concurrent}};
  j["hpo"] = {{"samples", c.hpo.samples}, {"top_k", c.hpo.top_k}};
  return j.dump(2);
}

}  // namespace evorl::cli
