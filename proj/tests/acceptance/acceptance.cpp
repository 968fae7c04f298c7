// Runs every acceptance criterion and prints one PASS/FAIL line for each.
// Usage: evorl_acceptance [--only name[,name...]] [--tests path]
#include <sys/resource.h>
#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "evorl/algo/factory.hpp"
#include "evorl/env/env.hpp"
#include "evorl/fitness/fitness.hpp"
#include "evorl/runtime.hpp"

using namespace evorl;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double cpu_seconds() {
  rusage u{};
  getrusage(RUSAGE_SELF, &u);
  return static_cast<double>(u.ru_utime.tv_sec + u.ru_stime.tv_sec) +
         1e-6 * static_cast<double>(u.ru_utime.tv_usec + u.ru_stime.tv_usec);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string tests_binary = EVORL_TESTS_BINARY;

Outcome run_suite(const std::string& suite, double limit_s) {
  const std::string cmd = tests_binary + " --test-suite=" + suite + " --no-intro --minimal > /dev/null 2>&1";
  const auto t0 = std::chrono::steady_clock::now();
  const int rc = std::system(cmd.c_str());
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = rc != -1 && WIFEXITED(rc) && WEXITSTATUS(rc) == 0;
  Outcome o;
  o.pass = ok && s < limit_s;
  o.detail = std::string(ok ? "suite passed" : "suite FAILED") + " in " + fmt("%.1f", s) + " s (limit " +
             fmt("%.0f", limit_s) + " s)";
  return o;
}

struct SeedRun {
  std::uint64_t seed = 0;
  double best = 0.0;
  std::int64_t steps = 0;
  bool failed = false;
};

SeedRun train(const std::string& algorithm, const std::string& env_id, std::uint64_t seed, std::int64_t steps,
              const algo::ParamValues& params, std::optional<double> stop_at) {
  auto agent = algo::make_agent(algorithm, env::spec_for(env_id), seed, params);
  fitness::TrainingOptions o;
  o.total_steps = steps;
  o.eval_every = 5000;
  o.eval_episodes = 5;
  o.stop_at_return = stop_at;
  const auto t = fitness::run_training(*agent, seed, o);
  SeedRun r{seed, t.eval_points.empty() ? -1e9 : fitness::per_seed_max(t), t.steps_completed, t.failed};
  std::printf("    %s %s seed %llu: best %.1f after %lld steps%s\n", algorithm.c_str(), env_id.c_str(),
              static_cast<unsigned long long>(seed), r.best, static_cast<long long>(r.steps),
              r.failed ? (" (failed: " + t.error + ")").c_str() : "");
  std::fflush(stdout);
  return r;
}

// Seeds 0..4 in order; stops as soon as the count of successes is decided.
int count_successes(const std::string& algorithm, const std::string& env_id, std::int64_t steps,
                    const algo::ParamValues& params, double threshold, int needed) {
  int ok = 0;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto r = train(algorithm, env_id, s, steps, params, threshold);
    ok += !r.failed && r.best >= threshold;
    const int left = 4 - static_cast<int>(s);
    if (ok >= needed || ok + left < needed) break;
  }
  return ok;
}

double stdev(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

const algo::ParamValues kDfCartPole{{"termination_penalty", 5.0}, {"warmup_steps", 5000.0}, {"plan_states", 8.0}};
const algo::ParamValues kMountainCar{{"exploration", 0.1}, {"plan_states", 4.0}, {"update_every", 8.0}};

std::vector<double> mountain_car_plain;

Outcome training() {
  const double c0 = cpu_seconds();
  std::ostringstream d;
  const int cp = count_successes("cgfpd", env::kCartPole, 150000, {}, 475.0, 3);
  d << "CG-FPD CartPole >=475 on " << cp << "/5 seeds tried; ";
  const int df = count_successes("dfcwpcp", env::kCartPole, 150000, kDfCartPole, 400.0, 3);
  d << "DF-CWP-CP CartPole >=400 on " << df << "/5 seeds tried; ";
  int mc = 0;
  mountain_car_plain.clear();
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto r = train("cgfpd", env::kMountainCar, s, 300000, kMountainCar, std::nullopt);
    mountain_car_plain.push_back(r.best);
    mc += !r.failed && r.best >= -160.0;
  }
  d << "CG-FPD MountainCar >=-160 on " << mc << "/5; ";
  const double cpu = cpu_seconds() - c0;
  d << "CPU " << fmt("%.0f", cpu) << " s (limit 7200 s)";
  return {cp >= 3 && df >= 3 && mc >= 2 && cpu <= 7200.0, d.str()};
}

Outcome bootstrap() {
  if (mountain_car_plain.size() != 5) {
    for (std::uint64_t s = 0; s < 5; ++s)
      mountain_car_plain.push_back(train("cgfpd", env::kMountainCar, s, 300000, kMountainCar, std::nullopt).best);
  }
  std::vector<double> boot;
  for (std::uint64_t s = 0; s < 5; ++s)
    boot.push_back(train("cgfpd+bootstrap", env::kMountainCar, s, 300000, kMountainCar, std::nullopt).best);
  const double sp = stdev(mountain_car_plain), sb = stdev(boot);
  double mp = 0.0, mb = 0.0;
  for (int i = 0; i < 5; ++i) {
    mp += mountain_car_plain[i] / 5.0;
    mb += boot[i] / 5.0;
  }
  return {sb <= sp, "std bootstrap " + fmt("%.2f", sb) + " vs plain " + fmt("%.2f", sp) + " (means " + fmt("%.1f", mb) +
                        " vs " + fmt("%.1f", mp) + ")"};
}

struct Criterion {
  std::string name;
  std::string label;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      for (std::string n; std::getline(ss, n, ',');) only.insert(n);
    } else if (a == "--tests" && i + 1 < argc) {
      tests_binary = argv[++i];
    } else {
      std::fprintf(stderr, "usage: %s [--only name[,name...]] [--tests path]\n", argv[0]);
      return 1;
    }
  }
  const std::vector<Criterion> criteria{
      {"formulas", "formula unit suite", [] { return run_suite("formulas", 60); }},
      {"gradcheck", "gradient checks", [] { return run_suite("gradcheck", 300); }},
      {"levenshtein", "Levenshtein oracle", [] { return run_suite("levenshtein", 60); }},
      {"selection", "selection statistics", [] { return run_suite("selection", 60); }},
      {"engine", "engine invariants", [] { return run_suite("engine", 120); }},
      {"training", "desk-scale training", training},
      {"bootstrap", "bootstrap ablation direction", bootstrap},
      {"hpo", "HPO correctness", [] { return run_suite("hpo", 1); }},
  };
  std::ofstream results("acceptance_results.txt");
  int failed = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.name)) continue;
    std::printf("running %s\n", c.label.c_str());
    std::fflush(stdout);
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", c.label.c_str(), o.detail.c_str());
    std::fflush(stdout);
    results << (o.pass ? "PASS " : "FAIL ") << c.label << ": " << o.detail << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
