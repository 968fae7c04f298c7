#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <set>
#include <sstream>

#include <json.hpp>

#include "evorl/algo/factory.hpp"
#include "evorl/env/env.hpp"
#include "evorl/evo/engine.hpp"
#include "evorl/evo/evaluator.hpp"
#include "evorl/fitness/fitness.hpp"
#include "evorl/genop/genome.hpp"
#include "evorl/genop/operator.hpp"
#include "evorl/hpo/hpo.hpp"
#include "evorl/worker/supervisor.hpp"

namespace evorl::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void claim_dir(const fs::path& dir, bool force) {
  if (fs::exists(dir) && !fs::is_empty(dir)) {
    if (!force) throw ConfigError(dir.string() + " already exists; pass --force to overwrite");
    fs::remove_all(dir);
  }
  fs::create_directories(dir);
}

std::vector<std::uint64_t> seed_list(int count) {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < count; ++i) s.push_back(static_cast<std::uint64_t>(i));
  return s;
}

std::unique_ptr<evo::Evaluator> make_evaluator(const RunConfig& c, const fs::path& run_dir) {
  const auto& ev = c.evaluation;
  if (ev.evaluator == "synthetic") return std::make_unique<evo::SyntheticEvaluator>(ev.targets, ev.envs);
  if (ev.evaluator == "worker") {
    worker::WorkerOptions w;
    w.command = ev.worker_command;
    w.envs = ev.envs;
    w.seeds = seed_list(ev.seeds);
    w.total_steps = ev.total_steps;
    w.eval_every = ev.eval_every;
    w.eval_episodes = ev.eval_episodes;
    w.limits.wall_s = ev.time_limit_s;
    w.scratch_root = run_dir / "scratch";
    return std::make_unique<worker::WorkerEvaluator>(w);
  }
  fitness::SuiteOptions s;
  s.envs = ev.envs;
  s.seeds = seed_list(ev.seeds);
  s.training.total_steps = ev.total_steps;
  s.training.eval_every = ev.eval_every;
  s.training.eval_episodes = ev.eval_episodes;
  s.training.time_limit_s = ev.time_limit_s;
  s.steps_per_env = ev.steps_per_env;
  return std::make_unique<evo::NativeEvaluator>(s, ev.env_overrides);
}

std::shared_ptr<genop::LlmClient> make_client(const RunConfig& c) {
  return std::make_shared<genop::LlmClient>(c.provider, std::shared_ptr<genop::Transport>(genop::make_http_transport(c.provider.timeout_s)));
}

std::unique_ptr<genop::Operator> make_operator(const RunConfig& c) {
  if (c.mock) return std::make_unique<genop::MockOperator>();
  return std::make_unique<genop::LlmOperator>(make_client(c), genop::load_templates());
}

json population_json(const std::vector<evo::Island>& islands) {
  json j;
  j["generation"] = islands.empty() ? 0 : islands.front().generation;
  j["islands"] = json::array();
  for (const auto& isl : islands) {
    json members = json::array();
    for (const auto& c : isl.population) {
      members.push_back({{"id", c.id},
                         {"F", c.F()},
                         {"status", evo::to_string(c.status)},
                         {"path", "gen" + std::to_string(c.lineage.generation) + "/island" +
                                      std::to_string(c.lineage.island) + "/cand" + c.id}});
    }
    j["islands"].push_back({{"island", isl.id}, {"members", members}});
  }
  return j;
}

RunConfig load_config(const fs::path& path) {
  RunConfig c = path.empty() ? default_run_config() : parse_run_config(read_file(path));
  return c;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double std_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace

std::vector<double> smooth(const std::vector<double>& values, int window) {
  if (window < 1) throw ConfigError("smoothing window must be >= 1");
  std::vector<double> out(values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    sum += values[i];
    if (i >= static_cast<std::size_t>(window)) sum -= values[i - static_cast<std::size_t>(window)];
    const std::size_t n = std::min<std::size_t>(i + 1, static_cast<std::size_t>(window));
    out[i] = window == 1 ? values[i] : sum / static_cast<double>(n);
  }
  return out;
}

int cmd_evolve(const EvolveOptions& o) {
  return guarded([&] {
    RunConfig c = load_config(o.config);
    if (o.seed) c.seed = *o.seed;
    if (o.jobs) c.jobs = *o.jobs;
    if (o.mock) c.mock = true;
    if (c.run_id.empty()) c.run_id = "seed" + std::to_string(c.seed);
    c.validate();
    const fs::path run_dir = o.out / c.run_id;
    if (fs::exists(run_dir) && !fs::is_empty(run_dir) && !o.force) {
      throw ConfigError(run_dir.string() + " already exists; pass --force to overwrite");
    }
    evo::RunStore store(run_dir, o.force);
    store.write_config(to_json(c));
    auto evaluator = make_evaluator(c, run_dir);
    auto op = make_operator(c);
    evo::EngineConfig ec = c.engine;
    ec.seed = c.seed;
    ec.jobs = c.jobs;
    ec.environment = env::describe_suite(c.evaluation.envs);
    evo::Engine engine(ec, *op, *evaluator, &store);
    engine.on_generation = [](const evo::GenerationLog& log) {
      for (const auto& s : log.summary) {
        std::printf("generation %d island %d max_F %.4f mean_F %.4f\n", log.generation, s.island, s.max_F, s.mean_F);
      }
      std::fflush(stdout);
    };
    std::vector<evo::Island> islands = engine.init_islands();
    std::ofstream(run_dir / "population.json") << population_json(islands).dump(2) << "\n";
    for (int g = 0; g < ec.generations; ++g) {
      engine.run_generation(islands);
      std::ofstream(run_dir / "population.json") << population_json(islands).dump(2) << "\n";
    }
    std::printf("run stored in %s (%zu evaluations)\n", run_dir.string().c_str(), engine.evaluations());
    return kOk;
  });
}

int cmd_eval(const EvalOptions& o) {
  return guarded([&] {
    if (o.steps <= 0) throw ConfigError("budget (--steps) must be positive");
    if (o.seeds < 1) throw ConfigError("--seeds must be >= 1");
    if (o.eval_every <= 0 || o.eval_episodes < 1 || o.final_episodes < 1) throw ConfigError("bad evaluation cadence");
    try {
      env::spec_for(o.env);
    } catch (const std::exception&) {
      throw ConfigError("unknown environment " + o.env);
    }
    algo::ParamValues values;
    for (const auto& kv : o.set) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects name=value, got " + kv);
      try {
        values[kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
      } catch (const std::exception&) {
        throw ConfigError("--set value is not a number: " + kv);
      }
    }
    std::string algorithm = o.target;
    std::string source;
    if (!algo::is_algorithm(o.target)) {
      if (!fs::is_regular_file(o.target)) throw ConfigError("unknown algorithm: " + o.target);
      source = read_file(o.target);
      algorithm = genop::algorithm_of(source);
      if (!algo::is_algorithm(algorithm) && o.worker.empty()) {
        throw ConfigError("candidate has no native trainer; pass --worker to run it out of process");
      }
      algo::ParamValues knobs = genop::knob_values(source);
      for (const auto& [k, v] : values) knobs[k] = v;
      values = knobs;
    }
    const std::string label = fs::path(o.target).stem().string() + "_" + o.env;
    const fs::path dir = o.out / label;
    claim_dir(dir, o.force);
    fs::create_directories(dir / "traces");

    struct SeedOut {
      std::uint64_t seed = 0;
      double best = 0.0;
      double final_mean = 0.0;
      double final_std = 0.0;
      bool failed = false;
      std::string error;
    };
    std::vector<SeedOut> outs(static_cast<std::size_t>(o.seeds));
    std::vector<fitness::TrainingTrace> traces(outs.size());
    std::vector<std::function<void()>> tasks;
    for (std::size_t i = 0; i < outs.size(); ++i) {
      tasks.push_back([&, i] {
        const std::uint64_t seed = o.seed + i;
        outs[i].seed = seed;
        fitness::TrainingTrace t;
        if (!algo::is_algorithm(algorithm)) {
          worker::EvalRequest r{source, o.env, seed, o.steps, o.eval_every, o.eval_episodes, 86400.0};
          t = worker::run_worker(o.worker, r, worker::Limits{86400.0, 0}, dir / "scratch" / std::to_string(seed)).trace;
        } else {
          auto agent = algo::make_agent(algorithm, env::spec_for(o.env), seed, values);
          fitness::TrainingOptions opt;
          opt.total_steps = o.steps;
          opt.eval_every = o.eval_every;
          opt.eval_episodes = o.eval_episodes;
          opt.stop_at_return = o.stop_at;
          opt.keep_best_checkpoint = true;
          t = fitness::run_training(*agent, seed, opt);
          if (!t.failed && !t.best_checkpoint.empty()) {
            agent->restore(t.best_checkpoint);
            const auto returns = fitness::evaluate_policy(*agent, o.final_episodes, derive_seed(seed, 0xE7A1));
            outs[i].final_mean = mean_of(returns);
            outs[i].final_std = std_of(returns);
          }
        }
        outs[i].failed = t.failed;
        outs[i].error = t.error;
        if (!t.eval_points.empty()) outs[i].best = fitness::per_seed_max(t);
        if (!algo::is_algorithm(algorithm)) outs[i].final_mean = outs[i].best;
        traces[i] = std::move(t);
      });
    }
    fitness::run_pool(o.jobs, tasks);
    json seeds = json::array();
    std::vector<double> finals, bests;
    for (std::size_t i = 0; i < outs.size(); ++i) {
      std::ofstream csv(dir / "traces" / ("seed" + std::to_string(outs[i].seed) + ".csv"));
      fitness::write_trace_csv(csv, traces[i]);
      seeds.push_back({{"seed", outs[i].seed}, {"best_eval_return", outs[i].best}, {"final_mean", outs[i].final_mean},
                       {"final_std", outs[i].final_std}, {"failed", outs[i].failed}, {"error", outs[i].error}});
      finals.push_back(outs[i].final_mean);
      bests.push_back(outs[i].best);
    }
    json summary{{"target", o.target},   {"algorithm", algorithm},        {"env", o.env},
                 {"steps", o.steps},     {"final_episodes", o.final_episodes}, {"params", values},
                 {"seeds", seeds},       {"mean", mean_of(finals)},        {"std", std_of(finals)},
                 {"best_mean", mean_of(bests)}, {"best_std", std_of(bests)}};
    std::ofstream(dir / "summary.json") << summary.dump(2) << "\n";
    std::printf("%s on %s: %.2f +- %.2f over %d seeds (best-checkpoint, %d episodes)\n", o.target.c_str(),
                o.env.c_str(), mean_of(finals), std_of(finals), o.seeds, o.final_episodes);
    const bool any_failed = std::any_of(outs.begin(), outs.end(), [](const SeedOut& s) { return s.failed; });
    return any_failed ? kRuntimeError : kOk;
  });
}

int cmd_hpo(const HpoOptions& o) {
  return guarded([&] {
    if (!fs::is_directory(o.run_dir)) throw ConfigError("no run directory at " + o.run_dir.string());
    RunConfig c = parse_run_config(read_file(o.run_dir / "config.json"));
    if (o.top_k) c.hpo.top_k = *o.top_k;
    if (o.samples) c.hpo.samples = *o.samples;
    if (o.seed) c.seed = *o.seed;
    if (o.jobs) c.jobs = *o.jobs;
    if (o.mock) c.mock = true;
    c.validate();
    if (!fs::exists(o.run_dir / "population.json")) throw std::runtime_error("run has no population.json");
    const json pop = json::parse(read_file(o.run_dir / "population.json"));
    struct Member {
      std::string id, path;
      double F;
      bool evaluated;
    };
    std::vector<Member> members;
    std::set<std::string> seen;
    std::size_t slots = 0;
    for (const auto& isl : pop.at("islands")) {
      for (const auto& m : isl.at("members")) {
        ++slots;
        const std::string id = m.at("id");
        if (!seen.insert(id).second) continue;
        members.push_back({id, m.at("path"), m.at("F"), m.at("status") == "evaluated"});
      }
    }
    if (static_cast<std::size_t>(c.hpo.top_k) > slots) {
      throw ConfigError("top_k " + std::to_string(c.hpo.top_k) + " exceeds the population size " + std::to_string(slots));
    }
    std::stable_sort(members.begin(), members.end(), [](const Member& a, const Member& b) { return a.F > b.F; });
    std::vector<Member> chosen;
    for (const auto& m : members) {
      if (m.evaluated && chosen.size() < static_cast<std::size_t>(c.hpo.top_k)) chosen.push_back(m);
    }
    if (chosen.size() < static_cast<std::size_t>(c.hpo.top_k)) {
      throw std::runtime_error("only " + std::to_string(chosen.size()) + " distinct evaluated candidates for top_k " +
                               std::to_string(c.hpo.top_k));
    }
    const fs::path hpo_root = o.run_dir / "hpo";
    claim_dir(hpo_root, o.force);
    auto evaluator = make_evaluator(c, o.run_dir);
    const auto templates = genop::load_templates();
    for (std::size_t rank = 0; rank < chosen.size(); ++rank) {
      const Member& m = chosen[rank];
      const std::string source = read_file(o.run_dir / m.path / "source.txt");
      const algo::ParamRegistry registry = genop::knob_registry(source);
      const fs::path dir = hpo_root / ("cand" + m.id);
      fs::create_directories(dir);
      std::unique_ptr<hpo::IntervalSource> intervals;
      if (c.mock) {
        intervals = std::make_unique<hpo::StubIntervalSource>([registry](const std::vector<genop::Message>&) {
          json j;
          for (const auto& p : registry) {
            const double a = 0.5 * p.default_value, b = 2.0 * p.default_value;
            j[p.name] = {std::min(a, b), std::max(a, b)};
          }
          return j.dump();
        });
      } else {
        intervals = std::make_unique<hpo::LlmIntervalSource>(make_client(c), dir / "operator");
      }
      const hpo::SearchSpace space = hpo::request_intervals(source, registry, c.evaluation.envs, *intervals, templates);
      const auto samples = hpo::sample_uniform(space, static_cast<std::size_t>(c.hpo.samples), derive_seed(c.seed, rank));
      std::ofstream ledger(dir / "sweep.jsonl");
      const auto results = hpo::sweep(source, space, samples, *evaluator, c.evaluation.envs,
                                      [&](std::size_t i, const hpo::SweepResult& r) {
                                        ledger << json{{"index", i}, {"beta", space.to_values(r.beta)},
                                                       {"per_env", r.per_env}, {"F", r.aggregate}}
                                                      .dump()
                                               << "\n"
                                               << std::flush;
                                      });
      const std::size_t best = hpo::select_best(results);
      std::ofstream(dir / "hpo.json") << hpo::hpo_to_json(m.id, space, results, best) << "\n";
      std::ofstream(dir / "refined.txt") << genop::with_knobs(source, space.to_values(results[best].beta));
      std::printf("candidate %s: F %.4f -> best sample %zu with F %.4f\n", m.id.c_str(), m.F, best,
                  results[best].aggregate);
    }
    return kOk;
  });
}

int cmd_report(const ReportOptions& o) {
  return guarded([&] {
    if (!fs::is_directory(o.run_dir)) throw ConfigError("no run directory at " + o.run_dir.string());
    if (o.smooth < 1) throw ConfigError("--smooth must be >= 1");
    const fs::path gens = o.run_dir / "generations.csv";
    if (!fs::exists(gens)) throw std::runtime_error("corrupt or empty run directory: no generations.csv");
    std::ifstream in(gens);
    std::string header, line;
    std::getline(in, header);
    if (header != "generation,island,max_F,mean_F") throw std::runtime_error("corrupt generations.csv header");
    std::vector<std::string> rows;
    while (std::getline(in, line)) {
      if (!line.empty()) rows.push_back(line);
    }
    if (rows.empty()) throw std::runtime_error("run has no completed generations");
    const fs::path out = o.run_dir / "report";
    claim_dir(out, o.force);
    {
      std::ofstream f(out / "fitness_by_generation.csv");
      f << header << "\n";
      for (const auto& r : rows) f << r << "\n";
    }
    std::ofstream curves(out / "learning_curves.csv");
    curves << "candidate,generation,island,env,seed,step,eval_return,smoothed\n";
    std::vector<fs::path> trace_files;
    for (const auto& e : fs::recursive_directory_iterator(o.run_dir)) {
      if (e.is_regular_file() && e.path().extension() == ".csv" && e.path().parent_path().filename() == "traces") {
        trace_files.push_back(e.path());
      }
    }
    std::sort(trace_files.begin(), trace_files.end());
    std::size_t curve_rows = 0;
    for (const auto& p : trace_files) {
      const fs::path cand = p.parent_path().parent_path();
      const std::string id = cand.filename().string().substr(4);
      const std::string island = cand.parent_path().filename().string().substr(6);
      const std::string gen = cand.parent_path().parent_path().filename().string().substr(3);
      const std::string stem = p.stem().string();
      const auto cut = stem.rfind("_seed");
      const std::string env_id = stem.substr(0, cut), seed = stem.substr(cut + 5);
      std::ifstream t(p);
      std::string th, tl;
      std::getline(t, th);
      std::vector<std::pair<std::string, double>> pts;
      while (std::getline(t, tl)) {
        std::stringstream ss(tl);
        std::string step, ret;
        std::getline(ss, step, ',');
        std::getline(ss, ret, ',');
        if (!step.empty() && !ret.empty()) pts.emplace_back(step, std::stod(ret));
      }
      std::vector<double> raw;
      for (const auto& pt : pts) raw.push_back(pt.second);
      const std::vector<double> sm = smooth(raw, o.smooth);
      for (std::size_t i = 0; i < pts.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.17g,%.17g", raw[i], sm[i]);
        curves << id << "," << gen << "," << island << "," << env_id << "," << seed << "," << pts[i].first << "," << buf
               << "\n";
        ++curve_rows;
      }
    }
    std::printf("report: %zu generation rows, %zu curve points in %s\n", rows.size(), curve_rows, out.string().c_str());
    return kOk;
  });
}

int cmd_params(const std::string& algorithm) {
  return guarded([&] {
    if (!algo::is_algorithm(algorithm)) throw ConfigError("unknown algorithm: " + algorithm);
    std::printf("%s\n", algo::registry_to_json(algo::registry_for(algorithm)).c_str());
    return kOk;
  });
}

}  // namespace evorl::cli
