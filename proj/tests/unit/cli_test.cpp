#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "commands.hpp"
#include "run_config.hpp"

using namespace evorl::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("evorl_cli_" + name + "_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t rows(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) n += !line.empty();
  return n == 0 ? 0 : n - 1;
}

const char* kSmallRun = R"({
  "run_id": "small", "seed": 3,
  "engine": {"islands": 2, "population": 4, "candidates_per_generation": 4, "generations": 2},
  "evaluation": {"evaluator": "synthetic"},
  "hpo": {"samples": 4, "top_k": 1}
})";

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.json";
  std::ofstream(p) << text;
  return p;
}

fs::path small_run(const fs::path& root) {
  EvolveOptions o;
  o.config = write_config(root, kSmallRun);
  o.mock = true;
  o.out = root / "runs";
  REQUIRE(cmd_evolve(o) == kOk);
  return o.out / "small";
}

EvalOptions tiny_eval(const fs::path& out) {
  EvalOptions o;
  o.target = "cgfpd";
  o.env = "CartPole-v1";
  o.seeds = 1;
  o.seed = 4;
  o.steps = 400;
  o.eval_every = 200;
  o.eval_episodes = 1;
  o.final_episodes = 2;
  o.out = out;
  return o;
}

}  // namespace

TEST_CASE("config parsing") {
  CHECK_NOTHROW(parse_run_config("{}").validate());
  CHECK_THROWS_AS(parse_run_config(R"({"engine": {"islandz": 2}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("{oops"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"engine": {"islands": "two"}})"), ConfigError);
  CHECK_THROWS_AS(parse_run_config(R"({"evaluation": {"envs": ["Pong-v0"]}})").validate(), ConfigError);
  const auto live = parse_run_config(
      R"({"operator": {"mode": "live", "endpoint": "http://127.0.0.1:9", "model": "m", "token_env": "EVORL_TEST_UNSET_TOKEN"}})");
  CHECK_THROWS_AS(live.validate(), ConfigError);
  const auto c = parse_run_config(kSmallRun);
  const auto back = parse_run_config(to_json(c));
  CHECK(back.engine.islands == 2);
  CHECK(back.engine.candidates_per_generation == 4);
  CHECK(back.evaluation.evaluator == "synthetic");
  CHECK(to_json(back) == to_json(c));
}

TEST_CASE("smoothing") {
  const std::vector<double> v{1, 5, 3, 7};
  CHECK(smooth(v, 1) == v);
  const auto s = smooth(v, 2);
  CHECK(s[0] == 1.0);
  CHECK(s[1] == 3.0);
  CHECK(s[3] == 5.0);
  CHECK_THROWS(smooth(v, 0));
}

TEST_CASE("mock evolve writes one row per island and generation and is reproducible") {
  TempDir t("evolve");
  const fs::path run = small_run(t.path);
  CHECK(rows(run / "generations.csv") == 4);
  CHECK(fs::exists(run / "population.json"));
  const std::string first = slurp(run / "generations.csv");
  EvolveOptions again;
  again.config = t.path / "config.json";
  again.mock = true;
  again.out = t.path / "runs";
  CHECK(cmd_evolve(again) == kConfigError);
  again.force = true;
  CHECK(cmd_evolve(again) == kOk);
  CHECK(slurp(run / "generations.csv") == first);
}

TEST_CASE("evolve rejects bad configs") {
  TempDir t("badcfg");
  EvolveOptions o;
  o.config = write_config(t.path, R"({"engine": {"population": 0}})");
  o.out = t.path;
  CHECK(cmd_evolve(o) == kConfigError);
  o.config = t.path / "missing.json";
  CHECK(cmd_evolve(o) == kConfigError);
}

TEST_CASE("eval input errors") {
  TempDir t("evalerr");
  auto o = tiny_eval(t.path);
  o.steps = 0;
  CHECK(cmd_eval(o) == kConfigError);
  o = tiny_eval(t.path);
  o.target = "no_such_algorithm";
  CHECK(cmd_eval(o) == kConfigError);
  o = tiny_eval(t.path);
  o.env = "Pong-v0";
  CHECK(cmd_eval(o) == kConfigError);
  o = tiny_eval(t.path);
  o.set = {"temperature"};
  CHECK(cmd_eval(o) == kConfigError);
}

TEST_CASE("eval is deterministic for a fixed seed") {
  TempDir t("eval");
  auto o = tiny_eval(t.path / "a");
  CHECK(cmd_eval(o) == kOk);
  o.out = t.path / "b";
  CHECK(cmd_eval(o) == kOk);
  const auto a = json::parse(slurp(t.path / "a" / "cgfpd_CartPole-v1" / "summary.json"));
  const auto b = json::parse(slurp(t.path / "b" / "cgfpd_CartPole-v1" / "summary.json"));
  CHECK(a["seeds"] == b["seeds"]);
  CHECK(a["std"].get<double>() == 0.0);
  CHECK(fs::exists(t.path / "a" / "cgfpd_CartPole-v1" / "traces" / "seed4.csv"));
}

TEST_CASE("hpo on the best candidate") {
  TempDir t("hpo");
  const fs::path run = small_run(t.path);
  HpoOptions h;
  h.run_dir = run;
  h.mock = true;
  REQUIRE(cmd_hpo(h) == kOk);
  std::size_t found = 0;
  fs::path hpo_json;
  for (const auto& e : fs::recursive_directory_iterator(run / "hpo"))
    if (e.path().filename() == "hpo.json") {
      ++found;
      hpo_json = e.path();
    }
  CHECK(found == 1);
  const auto first = json::parse(slurp(hpo_json))["best"];
  h.force = true;
  REQUIRE(cmd_hpo(h) == kOk);
  CHECK(json::parse(slurp(hpo_json))["best"] == first);
  h.top_k = 9;
  CHECK(cmd_hpo(h) == kConfigError);
  h.run_dir = t.path / "nothing";
  CHECK(cmd_hpo(h) == kConfigError);
}

TEST_CASE("report") {
  TempDir t("report");
  const fs::path run = small_run(t.path);
  ReportOptions r;
  r.run_dir = run;
  REQUIRE(cmd_report(r) == kOk);
  CHECK(rows(run / "report" / "fitness_by_generation.csv") == 4);
  CHECK(fs::exists(run / "report" / "learning_curves.csv"));
  fs::create_directories(t.path / "empty");
  r.run_dir = t.path / "empty";
  CHECK(cmd_report(r) == kRuntimeError);
  r.run_dir = t.path / "absent";
  CHECK(cmd_report(r) == kConfigError);
}

TEST_CASE("params lists the registry") { CHECK(cmd_params("dfcwpcp") == kOk); }
