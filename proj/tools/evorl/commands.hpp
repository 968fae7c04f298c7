#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace evorl::cli {

enum ExitCode { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

struct EvolveOptions {
  std::filesystem::path config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool mock = false;
  std::filesystem::path out = "run";
  bool force = false;
};

struct EvalOptions {
  std::string target;  // algorithm id or candidate source path
  std::string env;
  int seeds = 5;
  std::uint64_t seed = 0;
  std::int64_t steps = 100000;
  std::int64_t eval_every = 5000;
  int eval_episodes = 5;
  int final_episodes = 100;
  std::optional<double> stop_at;
  std::vector<std::string> set;  // name=value overrides
  std::vector<std::string> worker;
  std::size_t jobs = 1;
  std::filesystem::path out = "eval";
  bool force = false;
};

struct HpoOptions {
  std::filesystem::path run_dir;
  std::optional<int> top_k;
  std::optional<int> samples;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool mock = false;
  bool force = false;
};

struct ReportOptions {
  std::filesystem::path run_dir;
  int smooth = 1;
  bool force = false;
};

/// Each command returns an ExitCode and prints a summary to stdout.
int cmd_evolve(const EvolveOptions& o);
int cmd_eval(const EvalOptions& o);
int cmd_hpo(const HpoOptions& o);
int cmd_report(const ReportOptions& o);
int cmd_params(const std::string& algorithm);

/// Trailing moving average; window 1 returns the input.
std::vector<double> smooth(const std::vector<double>& values, int window);

}  // namespace evorl::cli
