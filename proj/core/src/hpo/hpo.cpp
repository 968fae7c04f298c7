#include "evorl/hpo/hpo.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "evorl/genop/genome.hpp"
#include "evorl/random.hpp"

namespace evorl::hpo {

using nlohmann::json;

bool SearchSpace::contains(const std::vector<double>& beta) const {
  if (beta.size() != params.size()) return false;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i] < params[i].lo || beta[i] > params[i].hi) return false;
  }
  return true;
}

algo::ParamValues SearchSpace::to_values(const std::vector<double>& beta) const {
  if (beta.size() != params.size()) throw std::invalid_argument("beta has the wrong dimension");
  algo::ParamValues v;
  for (std::size_t i = 0; i < beta.size(); ++i) v[params[i].name] = beta[i];
  return v;
}

LlmIntervalSource::LlmIntervalSource(std::shared_ptr<genop::LlmClient> client, std::filesystem::path log_dir)
    : client_(std::move(client)), log_dir_(std::move(log_dir)) {
  if (!client_) throw std::invalid_argument("LlmIntervalSource needs a client");
}

std::string LlmIntervalSource::propose(const std::vector<genop::Message>& prompt) {
  const auto log = log_dir_.empty() ? std::filesystem::path{} : log_dir_ / ("intervals" + std::to_string(calls_) + ".json");
  ++calls_;
  return client_->complete(prompt, log);
}

StubIntervalSource::StubIntervalSource(std::function<std::string(const std::vector<genop::Message>&)> fn)
    : fn_(std::move(fn)) {}

StubIntervalSource::StubIntervalSource(std::string fixed)
    : fn_([fixed](const std::vector<genop::Message>&) { return fixed; }) {}

std::string StubIntervalSource::propose(const std::vector<genop::Message>& prompt) {
  ++calls_;
  return fn_(prompt);
}

IntervalMap parse_interval_map(const std::string& text) {
  for (std::size_t open = text.find('{'); open != std::string::npos; open = text.find('{', open + 1)) {
    int depth = 0;
    for (std::size_t i = open; i < text.size(); ++i) {
      if (text[i] == '{') ++depth;
      if (text[i] == '}' && --depth == 0) {
        const json j = json::parse(text.substr(open, i - open + 1), nullptr, false);
        if (j.is_discarded() || !j.is_object()) break;
        IntervalMap out;
        for (const auto& [k, v] : j.items()) {
          std::vector<double> bounds;
          if (v.is_array()) {
            for (const auto& x : v) bounds.push_back(x.is_number() ? x.get<double>() : std::nan(""));
          }
          out[k] = bounds;
        }
        return out;
      }
    }
  }
  throw std::invalid_argument("no JSON object in interval response");
}

ParamInterval fallback_interval(const algo::ScalarParam& p) {
  const double half = 0.5 * std::abs(p.default_value);
  return {p.name, p.default_value, p.default_value - half, p.default_value + half, p.log_scale, true};
}

std::vector<genop::Message> interval_prompt(const std::string& source, const algo::ParamRegistry& registry,
                                            const std::vector<std::string>& envs, const genop::Templates& templates) {
  std::ostringstream params, environments;
  for (const auto& p : registry) {
    params << "- " << p.name << " (default " << genop::format_number(p.default_value, false) << ")\n";
  }
  environments << env::describe_suite(envs);
  return {{"system", templates.system},
          {"user", genop::fill_slots(templates.hpo, {{"Your_Algorithm", source},
                                                     {"Parameters", params.str()},
                                                     {"Environments", environments.str()}})}};
}

namespace {

bool valid(const IntervalMap& m, const std::string& name) {
  const auto it = m.find(name);
  if (it == m.end() || it->second.size() != 2) return false;
  const double lo = it->second[0], hi = it->second[1];
  return std::isfinite(lo) && std::isfinite(hi) && lo <= hi;
}

}  // namespace

SearchSpace request_intervals(const std::string& source, const algo::ParamRegistry& registry,
                              const std::vector<std::string>& envs, IntervalSource& intervals,
                              const genop::Templates& templates) {
  if (registry.empty()) throw std::invalid_argument("rule has no scalar parameters");
  const auto prompt = interval_prompt(source, registry, envs, templates);
  IntervalMap map;
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      map = parse_interval_map(intervals.propose(prompt));
    } catch (const std::exception&) {
      map.clear();
    }
    const bool all = std::all_of(registry.begin(), registry.end(), [&](const auto& p) { return valid(map, p.name); });
    if (all) break;
  }
  SearchSpace space;
  for (const auto& p : registry) {
    ParamInterval iv = valid(map, p.name) ? ParamInterval{p.name, p.default_value, map[p.name][0], map[p.name][1],
                                                          p.log_scale, false}
                                          : fallback_interval(p);
    iv.default_value = std::clamp(iv.default_value, iv.lo, iv.hi);
    space.params.push_back(iv);
  }
  return space;
}

std::vector<std::vector<double>> sample_uniform(const SearchSpace& space, std::size_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_uniform: n must be >= 1");
  Rng rng(seed);
  std::vector<std::vector<double>> out(n, std::vector<double>(space.size()));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t d = 0; d < space.size(); ++d) {
      const ParamInterval& p = space.params[d];
      const double u = uniform01(rng);
      if (p.log_scale && p.lo > 0.0) {
        out[i][d] = std::exp(std::log(p.lo) + u * (std::log(p.hi) - std::log(p.lo)));
      } else {
        out[i][d] = p.lo + u * (p.hi - p.lo);
      }
      out[i][d] = std::clamp(out[i][d], p.lo, p.hi);
    }
  }
  return out;
}

std::vector<SweepResult> sweep(const std::string& source, const SearchSpace& space,
                               const std::vector<std::vector<double>>& samples, evo::Evaluator& evaluator,
                               const std::vector<std::string>& envs,
                               const std::function<void(std::size_t, const SweepResult&)>& on_result) {
  if (samples.empty()) throw std::invalid_argument("sweep: no samples");
  std::vector<SweepResult> results;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    SweepResult r;
    r.beta = samples[i];
    for (const auto& e : envs) r.per_env[e] = 0.0;
    try {
      const evo::Evaluation ev = evaluator.evaluate(genop::with_knobs(source, space.to_values(samples[i])));
      if (ev.failed) {
        r.failed = true;
        r.error = ev.error;
      } else {
        for (const auto& e : ev.report.per_env) r.per_env[e.env_id] = e.normalized;
        r.aggregate = ev.report.aggregate;
      }
    } catch (const std::exception& e) {
      r.failed = true;
      r.error = e.what();
    }
    if (on_result) on_result(i, r);
    results.push_back(std::move(r));
  }
  return results;
}

std::size_t select_best(const std::vector<SweepResult>& results) {
  if (results.empty()) throw std::invalid_argument("select_best: no results");
  std::size_t best = 0;
  for (std::size_t i = 1; i < results.size(); ++i) {
    if (results[i].aggregate > results[best].aggregate) best = i;
  }
  return best;
}

std::string hpo_to_json(const std::string& candidate_id, const SearchSpace& space,
                        const std::vector<SweepResult>& results, std::size_t best) {
  json j;
  j["candidate"] = candidate_id;
  j["space"] = json::array();
  for (const auto& p : space.params) {
    j["space"].push_back({{"name", p.name}, {"default", p.default_value}, {"lo", p.lo}, {"hi", p.hi},
                          {"log_scale", p.log_scale}, {"fallback", p.fallback}});
  }
  j["samples"] = json::array();
  for (const auto& r : results) {
    json s{{"beta", space.to_values(r.beta)}, {"per_env", r.per_env}, {"F", r.aggregate}, {"failed", r.failed}};
    if (!r.error.empty()) s["error"] = r.error;
    j["samples"].push_back(s);
  }
  if (!results.empty()) {
    j["best"] = {{"index", best}, {"beta", space.to_values(results[best].beta)}, {"F", results[best].aggregate}};
  }
  return j.dump(2);
}

}  // namespace evorl::hpo
