#include "evorl/evo/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "evorl/evo/selection.hpp"
#include "evorl/genop/extract.hpp"
#include "evorl/genop/lint.hpp"

namespace evorl::evo {

namespace fs = std::filesystem;

void EngineConfig::validate() const {
  if (islands < 1) throw std::invalid_argument("islands must be >= 1");
  if (population < 1) throw std::invalid_argument("population must be >= 1");
  if (candidates_per_generation < 0) throw std::invalid_argument("candidates per generation must be >= 0");
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (p_macro < 0.0 || p_cross < 0.0 || std::abs(p_macro + p_cross - 1.0) > 1e-9) {
    throw std::invalid_argument("p_macro + p_cross must equal 1");
  }
  if (alpha < 0.0 || alpha > 1.0) throw std::invalid_argument("alpha must be in [0, 1]");
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be > 0");
  if (init_retries < 0) throw std::invalid_argument("init_retries must be >= 0");
  if (jobs < 1) throw std::invalid_argument("jobs must be >= 1");
}

RunStore::RunStore(fs::path root, bool force) : root_(std::move(root)) {
  if (fs::exists(root_) && !fs::is_empty(root_)) {
    if (!force) throw std::runtime_error(root_.string() + " already exists; pass --force to overwrite");
    fs::remove_all(root_);
  }
  fs::create_directories(root_);
  std::ofstream(root_ / "generations.csv") << "generation,island,max_F,mean_F\n";
}

void RunStore::write_config(const std::string& json_text) const { std::ofstream(root_ / "config.json") << json_text << "\n"; }

void RunStore::write_candidate(int generation, int island, const Candidate& c,
                               const std::vector<fitness::TrainingTrace>& traces) const {
  const fs::path dir = root_ / ("gen" + std::to_string(generation)) / ("island" + std::to_string(island)) /
                       ("cand" + c.id);
  fs::create_directories(dir);
  std::ofstream(dir / "source.txt") << c.source;
  std::ofstream(dir / "lineage.json") << lineage_to_json(c) << "\n";
  {
    std::ofstream out(dir / "fitness.json");
    if (c.status == Status::kEvaluated && c.fitness) {
      out << fitness::report_to_json(*c.fitness) << "\n";
    } else {
      out << nlohmann::json{{"status", to_string(c.status)}, {"aggregate", 0.0}, {"error", c.error}}.dump(2) << "\n";
    }
  }
  if (traces.empty()) return;
  fs::create_directories(dir / "traces");
  for (const auto& t : traces) {
    std::ofstream out(dir / "traces" / (t.env_id + "_seed" + std::to_string(t.seed) + ".csv"));
    fitness::write_trace_csv(out, t);
  }
}

void RunStore::append_generation(const IslandSummary& s, int generation) const {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%d,%d,%.17g,%.17g\n", generation, s.island, s.max_F, s.mean_F);
  std::ofstream(root_ / "generations.csv", std::ios::app) << buf;
}

void RunStore::write_generation_log(const GenerationLog& log) const {
  nlohmann::json j;
  j["generation"] = log.generation;
  j["candidates"] = nlohmann::json::array();
  for (const auto& island : log.records) {
    for (const auto& r : island) {
      const Candidate& c = r.candidate;
      j["candidates"].push_back({{"id", c.id},
                                 {"island", c.lineage.island},
                                 {"operator", to_string(c.lineage.op)},
                                 {"parents", c.lineage.parents},
                                 {"status", to_string(c.status)},
                                 {"F", c.F()},
                                 {"accepted", r.accepted},
                                 {"error", c.error}});
    }
  }
  for (const auto& s : log.summary) j["islands"].push_back({{"island", s.island}, {"max_F", s.max_F}, {"mean_F", s.mean_F}});
  const fs::path dir = root_ / ("gen" + std::to_string(log.generation));
  fs::create_directories(dir);
  std::ofstream(dir / "log.json") << j.dump(2) << "\n";
}

fs::path RunStore::operator_log(int generation, int island, int index) const {
  return root_ / ("gen" + std::to_string(generation)) / ("island" + std::to_string(island)) / "operator" /
         ("call" + std::to_string(index) + ".json");
}

Engine::Engine(EngineConfig config, genop::Operator& op, Evaluator& evaluator, RunStore* store)
    : config_(std::move(config)), op_(op), evaluator_(evaluator), store_(store), rng_(config_.seed) {
  config_.validate();
}

Candidate Engine::produce(const std::function<std::string(Rng&, const fs::path&)>& call, Lineage lineage,
                          const fs::path& log_file) {
  std::string raw;
  try {
    raw = call(rng_, log_file);
  } catch (const std::exception& e) {
    Candidate c = make_candidate("", std::move(lineage));
    c.status = Status::kFailed;
    c.error = std::string("operator failed: ") + e.what();
    return c;
  }
  genop::Extracted ex;
  try {
    ex = genop::extract_candidate(raw);
  } catch (const std::exception& e) {
    Candidate c = make_candidate(raw, std::move(lineage));
    c.status = Status::kFailed;
    c.error = std::string("extraction failed: ") + e.what();
    return c;
  }
  Candidate c;
  try {
    c = make_candidate(ex.source, std::move(lineage));
  } catch (const std::exception& e) {
    c.id = candidate_id(ex.source);
    c.source = ex.source;
    c.lineage = std::move(lineage);
    c.status = Status::kFailed;
    c.error = std::string("malformed candidate: ") + e.what();
    return c;
  }
  const genop::LintReport lint = genop::lint_constraints(c.source);
  if (!lint.ok()) {
    c.status = Status::kFailed;
    c.error = "constraint violations:\n" + lint.to_text();
  }
  return c;
}

void Engine::evaluate_all(std::vector<Candidate*>& pending) {
  std::vector<std::string> todo;
  for (Candidate* c : pending) {
    if (memo_.count(c->id) == 0 && std::find(todo.begin(), todo.end(), c->id) == todo.end()) todo.push_back(c->id);
  }
  std::vector<Evaluation> results(todo.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    const Candidate* src = nullptr;
    for (Candidate* c : pending) {
      if (c->id == todo[i]) src = c;
    }
    tasks.push_back([this, &results, i, src] {
      try {
        results[i] = evaluator_.evaluate(src->source);
      } catch (const std::exception& e) {
        results[i] = Evaluation{};
        results[i].failed = true;
        results[i].error = e.what();
      }
    });
  }
  fitness::run_pool(config_.jobs, tasks);
  evaluations_ += todo.size();
  for (std::size_t i = 0; i < todo.size(); ++i) memo_[todo[i]] = std::move(results[i]);
  for (Candidate* c : pending) {
    const Evaluation& e = memo_.at(c->id);
    c->feedback = e.feedback;
    if (e.failed) {
      c->status = Status::kFailed;
      c->error = "evaluation failed: " + e.error;
    } else {
      c->status = Status::kEvaluated;
      c->fitness = e.report;
    }
  }
}

void Engine::persist(int generation, int island, const Candidate& c) {
  if (!store_) return;
  const auto it = memo_.find(c.id);
  store_->write_candidate(generation, island, c, it == memo_.end() ? std::vector<fitness::TrainingTrace>{} : it->second.traces);
}

std::vector<Island> Engine::init_islands() {
  std::vector<Island> islands(static_cast<std::size_t>(config_.islands));
  const auto n = static_cast<std::size_t>(config_.population);
  std::vector<int> calls(islands.size(), 0);
  for (std::size_t k = 0; k < islands.size(); ++k) islands[k].id = static_cast<int>(k);
  for (int round = 0; round <= config_.init_retries; ++round) {
    std::vector<Candidate> fresh;
    std::vector<std::size_t> owner;
    for (std::size_t k = 0; k < islands.size(); ++k) {
      for (std::size_t s = islands[k].population.size(); s < n; ++s) {
        Lineage lin{{}, OperatorKind::kInit, 0, static_cast<int>(k)};
        const fs::path log = store_ ? store_->operator_log(0, static_cast<int>(k), calls[k]++) : fs::path{};
        fresh.push_back(produce([this](Rng& r, const fs::path& p) { return op_.initial(r, p); }, lin, log));
        owner.push_back(k);
      }
    }
    if (fresh.empty()) break;
    std::vector<Candidate*> pending;
    for (Candidate& c : fresh) {
      if (c.status == Status::kPending) pending.push_back(&c);
    }
    evaluate_all(pending);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      persist(0, static_cast<int>(owner[i]), fresh[i]);
      Island& isl = islands[owner[i]];
      if (fresh[i].status == Status::kEvaluated) {
        isl.population.push_back(std::move(fresh[i]));
      } else {
        isl.errors += fresh[i].error + "\n";
      }
    }
  }
  for (Island& isl : islands) {
    if (isl.population.size() < n) {
      throw std::runtime_error("could not initialize island " + std::to_string(isl.id) + ":\n" + isl.errors);
    }
    isl.population = replace_lowest(std::move(isl.population), {});
  }
  return islands;
}

GenerationLog Engine::run_generation(std::vector<Island>& islands) {
  GenerationLog log;
  log.generation = islands.empty() ? 1 : islands.front().generation + 1;
  log.records.resize(islands.size());
  std::vector<double> means(islands.size());
  std::vector<std::vector<Candidate>> fresh(islands.size());
  for (std::size_t k = 0; k < islands.size(); ++k) {
    Island& isl = islands[k];
    means[k] = mean_fitness(isl.population);
    for (int j = 0; j < config_.candidates_per_generation; ++j) {
      OperatorKind op = choose_operator(config_.p_macro, rng_);
      if (isl.population.size() < 2) op = OperatorKind::kMacro;
      const std::size_t i1 = select_parent1(isl.population, config_.tau, rng_);
      const Candidate& p1 = isl.population[i1];
      genop::OperatorRequest req;
      req.parent1 = p1.source;
      req.metrics = p1.feedback;
      req.fitness = fitness_summary(*p1.fitness);
      req.errors = isl.errors;
      req.environment = config_.environment;
      Lineage lin{{p1.id}, op, log.generation, isl.id};
      if (op == OperatorKind::kCrossover) {
        const std::size_t i2 = select_parent2(isl.population, i1, config_.alpha, config_.tau, rng_);
        const Candidate& p2 = isl.population[i2];
        req.op = genop::VariationKind::kCrossover;
        req.parent2 = p2.source;
        req.metrics = "Parent A:\n" + p1.feedback + "\nParent B:\n" + p2.feedback;
        req.fitness = "Parent A:\n" + fitness_summary(*p1.fitness) + "\nParent B:\n" + fitness_summary(*p2.fitness);
        lin.parents.push_back(p2.id);
        if (p2.source == p1.source) {
          req.op = genop::VariationKind::kMacro;
          req.parent2.reset();
          lin.op = OperatorKind::kMacro;
          lin.parents.pop_back();
        }
      }
      const fs::path file = store_ ? store_->operator_log(log.generation, isl.id, j) : fs::path{};
      fresh[k].push_back(
          produce([this, &req](Rng& r, const fs::path& p) { return op_.vary(req, r, p); }, std::move(lin), file));
    }
  }
  std::vector<Candidate*> pending;
  for (auto& batch : fresh) {
    for (Candidate& c : batch) {
      if (c.status == Status::kPending) pending.push_back(&c);
    }
  }
  evaluate_all(pending);
  for (std::size_t k = 0; k < islands.size(); ++k) {
    Island& isl = islands[k];
    std::vector<Candidate> accepted;
    std::string errors;
    for (Candidate& c : fresh[k]) {
      const bool ok = c.status == Status::kEvaluated && accept(c, means[k]);
      if (c.status == Status::kFailed) errors += "candidate " + c.id + ": " + c.error + "\n";
      persist(log.generation, isl.id, c);
      log.records[k].push_back({c, ok});
      if (ok) accepted.push_back(c);
    }
    isl.population = replace_lowest(std::move(isl.population), std::move(accepted));
    isl.errors = errors.size() > 8000 ? errors.substr(0, 8000) : errors;
    isl.generation = log.generation;
    double top = 0.0;
    for (const Candidate& c : isl.population) top = std::max(top, c.F());
    log.summary.push_back({isl.id, top, mean_fitness(isl.population)});
  }
  if (store_) {
    for (const auto& s : log.summary) store_->append_generation(s, log.generation);
    store_->write_generation_log(log);
  }
  if (on_generation) on_generation(log);
  return log;
}

std::vector<GenerationLog> Engine::run(std::vector<Island>* final_islands) {
  std::vector<Island> islands = init_islands();
  std::vector<GenerationLog> logs;
  for (int g = 0; g < config_.generations; ++g) logs.push_back(run_generation(islands));
  if (final_islands) *final_islands = std::move(islands);
  return logs;
}

}  // namespace evorl::evo
