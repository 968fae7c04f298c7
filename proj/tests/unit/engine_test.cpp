#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "evorl/evo/engine.hpp"
#include "evorl/genop/genome.hpp"
#include "evorl/genop/operator.hpp"
#include "evorl/random.hpp"

using namespace evorl;
using namespace evorl::evo;
namespace fs = std::filesystem;

namespace {

const algo::ParamValues kTargets{{"temperature", 1.0}, {"elite_frac", 0.3}, {"survival_weight", 0.2},
                                 {"gamma", 0.97}, {"anchor_weight", 0.2}};

EngineConfig small_config(std::uint64_t seed) {
  EngineConfig c;
  c.islands = 2;
  c.population = 4;
  c.candidates_per_generation = 4;
  c.generations = 3;
  c.seed = seed;
  return c;
}

struct Snapshot {
  std::vector<std::string> ids;
  std::vector<double> F;
};

Snapshot snapshot(const std::vector<Island>& islands) {
  Snapshot s;
  for (const auto& isl : islands)
    for (const auto& c : isl.population) {
      s.ids.push_back(c.id);
      s.F.push_back(c.F());
    }
  return s;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("evorl_engine_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  return p;
}

// Initial members are worse than the library genome; every variation
// returns the target-matching genome.
class SuperiorOperator : public genop::Operator {
 public:
  explicit SuperiorOperator(std::string best) : best_(std::move(best)) {}
  std::string initial(Rng& rng, const fs::path&) override {
    return genop::fence(genop::with_knobs(best_, {{"temperature", 1.5 + uniform01(rng)}}));
  }
  std::string vary(const genop::OperatorRequest&, Rng&, const fs::path&) override { return genop::fence(best_); }

 private:
  std::string best_;
};

std::string target_genome() {
  const auto g = genop::find_genome("cgfpd");
  algo::ParamValues v;
  const auto knobs = genop::knob_values(g.source);
  for (const auto& [k, t] : kTargets)
    if (knobs.count(k)) v[k] = t;
  return genop::with_knobs(g.source, v);
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("three generations are bit-reproducible") {
    auto run = [](std::vector<GenerationLog>& logs) {
      genop::MockOperator op;
      SyntheticEvaluator ev(kTargets, {"CartPole-v1"});
      Engine e(small_config(42), op, ev);
      std::vector<Island> fin;
      logs = e.run(&fin);
      return snapshot(fin);
    };
    std::vector<GenerationLog> la, lb;
    const Snapshot a = run(la), b = run(lb);
    CHECK(a.ids == b.ids);
    CHECK(a.F == b.F);
    REQUIRE(la.size() == 3);
    for (std::size_t g = 0; g < la.size(); ++g) {
      for (std::size_t k = 0; k < la[g].summary.size(); ++k) {
        CHECK(la[g].summary[k].max_F == lb[g].summary[k].max_F);
        CHECK(la[g].summary[k].mean_F == lb[g].summary[k].mean_F);
      }
      for (std::size_t k = 0; k < la[g].records.size(); ++k) {
        REQUIRE(la[g].records[k].size() == lb[g].records[k].size());
        for (std::size_t j = 0; j < la[g].records[k].size(); ++j)
          CHECK(la[g].records[k][j].candidate.source == lb[g].records[k][j].candidate.source);
      }
    }
  }

  TEST_CASE("max fitness never drops and sizes are constant") {
    for (std::uint64_t seed : {1, 2, 3}) {
      genop::MockOperator op;
      SyntheticEvaluator ev(kTargets, {"CartPole-v1"});
      Engine e(small_config(seed), op, ev);
      auto islands = e.init_islands();
      std::vector<double> best;
      for (const auto& isl : islands) {
        double m = 0.0;
        for (const auto& c : isl.population) m = std::max(m, c.F());
        best.push_back(m);
      }
      for (int g = 0; g < 3; ++g) {
        const auto log = e.run_generation(islands);
        CHECK(log.generation == g + 1);
        for (std::size_t k = 0; k < islands.size(); ++k) {
          CHECK(islands[k].population.size() == 4);
          CHECK(log.records[k].size() == 4);
          CHECK(log.summary[k].max_F >= best[k]);
          best[k] = log.summary[k].max_F;
        }
      }
    }
  }

  TEST_CASE("init fills every island with evaluated members") {
    genop::MockOperator op;
    SyntheticEvaluator ev(kTargets, {"CartPole-v1"});
    EngineConfig c = small_config(5);
    c.population = 3;
    Engine e(c, op, ev);
    const auto islands = e.init_islands();
    REQUIRE(islands.size() == 2);
    CHECK(islands[0].id != islands[1].id);
    int n = 0;
    for (const auto& isl : islands)
      for (const auto& m : isl.population) {
        ++n;
        CHECK(m.status == Status::kEvaluated);
        CHECK(m.F() >= 0.0);
        CHECK(m.F() <= 1.0);
        CHECK(m.lineage.island == isl.id);
        CHECK(m.lineage.op == OperatorKind::kInit);
      }
    CHECK(n == 6);
    Engine again(c, op, ev);
    CHECK(snapshot(again.init_islands()).ids == snapshot(islands).ids);
  }

  TEST_CASE("no candidates leaves islands unchanged") {
    genop::MockOperator op;
    SyntheticEvaluator ev(kTargets, {"CartPole-v1"});
    EngineConfig c = small_config(6);
    c.candidates_per_generation = 0;
    Engine e(c, op, ev);
    auto islands = e.init_islands();
    const Snapshot before = snapshot(islands);
    e.run_generation(islands);
    const Snapshot after = snapshot(islands);
    CHECK(before.ids == after.ids);
  }

  TEST_CASE("a superior variation raises the maximum") {
    const std::string best = target_genome();
    SyntheticEvaluator ev(kTargets, {"CartPole-v1"});
    CHECK(ev.score(best) == 1.0);
    SuperiorOperator op(best);
    Engine e(small_config(7), op, ev);
    auto islands = e.init_islands();
    std::vector<double> before;
    for (const auto& isl : islands) {
      double m = 0.0;
      for (const auto& c : isl.population) m = std::max(m, c.F());
      before.push_back(m);
    }
    const auto log = e.run_generation(islands);
    for (std::size_t k = 0; k < islands.size(); ++k) {
      CHECK(before[k] < 1.0);
      CHECK(log.summary[k].max_F > before[k]);
    }
  }

  TEST_CASE("run store layout") {
    const fs::path root = scratch("store");
    {
      genop::MockOperator op;
      SyntheticEvaluator ev(kTargets, {"CartPole-v1"});
      RunStore store(root, false);
      EngineConfig c = small_config(8);
      c.generations = 2;
      Engine e(c, op, ev, &store);
      e.run();
    }
    std::ifstream csv(root / "generations.csv");
    std::string line;
    std::getline(csv, line);
    CHECK(line == "generation,island,max_F,mean_F");
    int rows = 0;
    while (std::getline(csv, line)) ++rows;
    CHECK(rows == 4);
    CHECK(fs::exists(root / "gen0"));
    CHECK(fs::exists(root / "gen2" / "log.json"));
    bool source = false;
    for (const auto& e : fs::recursive_directory_iterator(root))
      if (e.path().filename() == "source.txt") source = true;
    CHECK(source);
    CHECK_THROWS(RunStore(root, false));
    RunStore forced(root, true);
    CHECK(fs::exists(root / "generations.csv"));
    CHECK_FALSE(fs::exists(root / "gen0"));
    fs::remove_all(root);
  }
}

TEST_CASE("failed operator output becomes a failed candidate") {
  struct Broken : genop::Operator {
    int calls = 0;
    std::string initial(Rng& rng, const fs::path& log) override { return genop::MockOperator().initial(rng, log); }
    std::string vary(const genop::OperatorRequest&, Rng&, const fs::path&) override {
      ++calls;
      return calls % 2 ? "no code here" : "```python\nclass MyAlgo:\n    pass\n```";
    }
  } op;
  SyntheticEvaluator ev(kTargets, {"CartPole-v1"});
  Engine e(small_config(9), op, ev);
  auto islands = e.init_islands();
  const auto log = e.run_generation(islands);
  for (const auto& recs : log.records)
    for (const auto& r : recs) {
      CHECK(r.candidate.status == Status::kFailed);
      CHECK_FALSE(r.accepted);
      CHECK_FALSE(r.candidate.error.empty());
    }
  for (const auto& isl : islands) CHECK_FALSE(isl.errors.empty());
}

TEST_CASE("engine config validation") {
  EngineConfig c;
  c.islands = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.population = 0;
  CHECK_THROWS(c.validate());
  c = {};
  c.p_macro = 0.5;
  c.p_cross = 0.6;
  CHECK_THROWS(c.validate());
  c = {};
  c.tau = 0.0;
  CHECK_THROWS(c.validate());
}

TEST_CASE("candidate identity and lineage") {
  const auto g = genop::find_genome("dfcwpcp");
  const auto c = make_candidate(g.source, Lineage{{"p1"}, OperatorKind::kMacro, 3, 1});
  CHECK(c.id == candidate_id(g.source));
  CHECK(c.id.size() == 16);
  CHECK_FALSE(c.loss_span.empty());
  CHECK_FALSE(c.params.empty());
  CHECK_THROWS(c.F());
  CHECK(lineage_to_json(c).find("macro") != std::string::npos);
  CHECK(candidate_id("a") != candidate_id("b"));
  for (auto s : {Status::kPending, Status::kEvaluated, Status::kFailed}) CHECK(status_from_string(to_string(s)) == s);
  for (auto o : {OperatorKind::kInit, OperatorKind::kMacro, OperatorKind::kCrossover})
    CHECK(operator_from_string(to_string(o)) == o);
}
