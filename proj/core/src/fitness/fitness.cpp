#include "evorl/fitness/fitness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace evorl::fitness {

using nlohmann::json;

double per_seed_max(const TrainingTrace& trace) {
  if (trace.eval_points.empty()) throw std::invalid_argument("per_seed_max: trace has no evaluation points");
  double best = trace.eval_points.front().mean_return;
  for (const EvalPoint& p : trace.eval_points) best = std::max(best, p.mean_return);
  return best;
}

double env_score(std::span<const double> seed_maxima) {
  if (seed_maxima.empty()) throw std::invalid_argument("env_score: no seed results");
  return std::accumulate(seed_maxima.begin(), seed_maxima.end(), 0.0) / static_cast<double>(seed_maxima.size());
}

double normalize(double mean_best_return, const env::NormalizationBounds& bounds) {
  if (!(bounds.lower < bounds.upper)) {
    throw std::invalid_argument("normalize: degenerate bounds for " + bounds.env_id);
  }
  const double f = (mean_best_return - bounds.lower) / (bounds.upper - bounds.lower);
  return std::clamp(f, 0.0, 1.0);
}

double aggregate(std::span<const double> scores) {
  if (scores.empty()) throw std::invalid_argument("aggregate: no environment scores");
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

const EnvFitness& FitnessReport::env(const std::string& env_id) const {
  for (const auto& e : per_env) {
    if (e.env_id == env_id) return e;
  }
  throw std::out_of_range("fitness report has no entry for " + env_id);
}

FitnessReport build_report(std::span<const std::string> suite, std::span<const TrainingTrace> traces) {
  FitnessReport report;
  std::vector<double> scores;
  for (const std::string& id : suite) {
    EnvFitness ef;
    ef.env_id = id;
    std::vector<double> maxima;
    for (const TrainingTrace& t : traces) {
      if (t.env_id != id) continue;
      SeedResult sr;
      sr.seed = t.seed;
      sr.failed = t.failed;
      sr.error = t.error;
      sr.has_eval = !t.eval_points.empty();
      if (sr.has_eval) {
        sr.r_max = per_seed_max(t);
        maxima.push_back(sr.r_max);
      }
      ef.failed = ef.failed || t.failed;
      ef.seeds.push_back(std::move(sr));
    }
    if (ef.seeds.empty()) throw std::invalid_argument("build_report: missing environment " + id);
    ef.mean_best_return = maxima.empty() ? env::bounds_for(id).lower : env_score(maxima);
    ef.normalized = ef.failed ? 0.0 : normalize(ef.mean_best_return, env::bounds_for(id));
    scores.push_back(ef.normalized);
    report.per_env.push_back(std::move(ef));
  }
  report.aggregate = aggregate(scores);
  return report;
}

std::string report_to_json(const FitnessReport& report) {
  json per_env = json::object();
  for (const auto& e : report.per_env) {
    json seeds = json::array();
    for (const auto& s : e.seeds) {
      json js = {{"seed", s.seed}, {"failed", s.failed}};
      js["r_max"] = s.has_eval ? json(s.r_max) : json(nullptr);
      if (!s.error.empty()) js["error"] = s.error;
      seeds.push_back(std::move(js));
    }
    per_env[e.env_id] = {{"mean_best_return", e.mean_best_return},
                         {"F", e.normalized},
                         {"failed", e.failed},
                         {"seeds", std::move(seeds)}};
  }
  json j = {{"per_env", std::move(per_env)}, {"aggregate", report.aggregate}};
  return j.dump(2);
}

FitnessReport report_from_json(const std::string& text) {
  const json j = json::parse(text);
  FitnessReport r;
  r.aggregate = j.at("aggregate").get<double>();
  for (const auto& [id, e] : j.at("per_env").items()) {
    EnvFitness ef;
    ef.env_id = id;
    ef.mean_best_return = e.at("mean_best_return").get<double>();
    ef.normalized = e.at("F").get<double>();
    ef.failed = e.value("failed", false);
    for (const auto& s : e.value("seeds", json::array())) {
      SeedResult sr;
      sr.seed = s.at("seed").get<std::uint64_t>();
      sr.failed = s.value("failed", false);
      sr.has_eval = !s.at("r_max").is_null();
      if (sr.has_eval) sr.r_max = s.at("r_max").get<double>();
      sr.error = s.value("error", "");
      ef.seeds.push_back(std::move(sr));
    }
    r.per_env.push_back(std::move(ef));
  }
  return r;
}

SeriesSummary summarize(std::span<const std::vector<double>> runs) {
  SeriesSummary s;
  double total = 0.0;
  double finals = 0.0;
  std::size_t n_final = 0;
  s.min = std::numeric_limits<double>::infinity();
  s.max = -std::numeric_limits<double>::infinity();
  for (const auto& run : runs) {
    for (double v : run) {
      total += v;
      s.min = std::min(s.min, v);
      s.max = std::max(s.max, v);
    }
    s.count += run.size();
    if (!run.empty()) {
      finals += run.back();
      ++n_final;
    }
  }
  if (s.count == 0) return SeriesSummary{};
  s.mean = total / static_cast<double>(s.count);
  s.final = finals / static_cast<double>(n_final);
  return s;
}

MetricsFeedback metrics_summary(std::span<const TrainingTrace> traces) {
  MetricsFeedback fb;
  std::vector<std::string> order;
  for (const auto& t : traces) {
    if (std::find(order.begin(), order.end(), t.env_id) == order.end()) order.push_back(t.env_id);
    if (t.failed) fb.errors.push_back(t.error);
  }
  for (const auto& id : order) {
    std::vector<std::vector<double>> loss, grad, param, ret;
    for (const auto& t : traces) {
      if (t.env_id != id) continue;
      loss.push_back(t.losses);
      grad.push_back(t.grad_norms);
      param.push_back(t.param_norms);
      std::vector<double> r;
      for (const auto& p : t.eval_points) r.push_back(p.mean_return);
      ret.push_back(std::move(r));
    }
    fb.per_env.push_back({id, summarize(loss), summarize(grad), summarize(param), summarize(ret)});
  }
  return fb;
}

std::string MetricsFeedback::to_text() const {
  std::ostringstream os;
  os.precision(6);
  auto line = [&](const char* name, const SeriesSummary& s) {
    os << "  " << name << ": final=" << s.final << " mean=" << s.mean << " min=" << s.min << " max=" << s.max
       << " (n=" << s.count << ")\n";
  };
  for (const auto& e : per_env) {
    os << e.env_id << ":\n";
    line("eval_return", e.eval_return);
    line("loss", e.loss);
    line("grad_norm", e.grad_norm);
    line("param_norm", e.param_norm);
  }
  if (!errors.empty()) {
    os << "errors:\n";
    for (const auto& e : errors) os << "  " << e << "\n";
  }
  return os.str();
}

void run_pool(std::size_t jobs, const std::vector<std::function<void()>>& tasks) {
  jobs = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        tasks[i]();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (std::size_t k = 0; k < jobs; ++k) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);
}

SuiteResult evaluate_suite(const AgentFactory& factory, const SuiteOptions& options) {
  if (options.envs.empty() || options.seeds.empty()) throw std::invalid_argument("evaluate_suite: empty grid");
  std::vector<TrainingTrace> traces(options.envs.size() * options.seeds.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t e = 0; e < options.envs.size(); ++e) {
    for (std::size_t s = 0; s < options.seeds.size(); ++s) {
      tasks.push_back([&, e, s] {
        const std::string& id = options.envs[e];
        const std::uint64_t seed = options.seeds[s];
        TrainingOptions topt = options.training;
        if (auto it = options.steps_per_env.find(id); it != options.steps_per_env.end()) topt.total_steps = it->second;
        TrainingTrace& out = traces[e * options.seeds.size() + s];
        try {
          auto agent = factory(env::spec_for(id), seed);
          out = run_training(*agent, seed, topt);
        } catch (const std::exception& ex) {
          out = TrainingTrace{};
          out.env_id = id;
          out.seed = seed;
          out.failed = true;
          out.error = id + " seed " + std::to_string(seed) + ": " + ex.what();
        }
      });
    }
  }
  run_pool(options.jobs, tasks);
  SuiteResult result;
  result.report = build_report(options.envs, traces);
  result.feedback = metrics_summary(traces);
  result.traces = std::move(traces);
  return result;
}

}  // namespace evorl::fitness
