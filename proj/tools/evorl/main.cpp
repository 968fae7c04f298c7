#include <CLI11.hpp>

#include "commands.hpp"
#include "evorl/runtime.hpp"

using namespace evorl::cli;

int main(int argc, char** argv) {
  evorl::tune_allocator();
  CLI::App app{"evorl: evolutionary search over reinforcement learning algorithms"};
  app.require_subcommand(1);

  EvolveOptions ev;
  auto* evolve = app.add_subcommand("evolve", "run the island-model search");
  evolve->add_option("--config", ev.config, "JSON run configuration");
  evolve->add_option("--seed", ev.seed, "master seed");
  evolve->add_option("--jobs", ev.jobs, "parallel evaluations");
  evolve->add_flag("--mock", ev.mock, "use the offline mutation operator");
  evolve->add_option("--out", ev.out, "output root");
  evolve->add_flag("--force", ev.force, "overwrite an existing run directory");

  EvalOptions ea;
  auto* eval = app.add_subcommand("eval", "train and evaluate one algorithm on one environment");
  eval->add_option("target", ea.target, "algorithm id or candidate source file")->required();
  eval->add_option("--env", ea.env, "environment id")->required();
  eval->add_option("--seeds", ea.seeds, "number of seeds");
  eval->add_option("--seed", ea.seed, "first seed");
  eval->add_option("--steps", ea.steps, "environment steps per seed");
  eval->add_option("--eval-every", ea.eval_every);
  eval->add_option("--eval-episodes", ea.eval_episodes);
  eval->add_option("--final-episodes", ea.final_episodes, "episodes for the best checkpoint");
  eval->add_option("--stop-at", ea.stop_at, "stop a seed once this return is reached");
  eval->add_option("--set", ea.set, "override a hyperparameter, name=value");
  eval->add_option("--worker", ea.worker, "worker command for candidates without a native trainer");
  eval->add_option("--jobs", ea.jobs);
  eval->add_option("--out", ea.out);
  eval->add_flag("--force", ea.force);

  HpoOptions ho;
  auto* hpo = app.add_subcommand("hpo", "refine hyperparameters of the best evolved candidates");
  hpo->add_option("run_dir", ho.run_dir)->required();
  hpo->add_option("--top-k", ho.top_k);
  hpo->add_option("--samples", ho.samples);
  hpo->add_option("--seed", ho.seed);
  hpo->add_option("--jobs", ho.jobs);
  hpo->add_flag("--mock", ho.mock);
  hpo->add_flag("--force", ho.force);

  ReportOptions ro;
  auto* report = app.add_subcommand("report", "summarize a run directory");
  report->add_option("run_dir", ro.run_dir)->required();
  report->add_option("--smooth", ro.smooth, "moving-average window for learning curves");
  report->add_flag("--force", ro.force);

  std::string algorithm;
  auto* params = app.add_subcommand("params", "print the hyperparameter registry of an algorithm");
  params->add_option("algorithm", algorithm)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }
  if (*evolve) return cmd_evolve(ev);
  if (*eval) return cmd_eval(ea);
  if (*hpo) return cmd_hpo(ho);
  if (*report) return cmd_report(ro);
  return cmd_params(algorithm);
}
