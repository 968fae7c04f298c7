#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "evorl/algo/common.hpp"
#include "evorl/fitness/agent.hpp"
#include "evorl/nn/optim.hpp"

namespace evorl::algo {

struct PlannerConfig {
  int candidates = 64;
  int horizon = 5;
  int cem_iters = 2;
  double elite_frac = 0.25;
  double temperature = 0.5;
  double survival_weight = 0.1;
  double consistency_weight = 0.1;
  double proposal_std = 0.3;

  void validate() const;
};

/// Per-step sampling distribution over action sequences for one start state.
/// Discrete: `probs` is H x n. Continuous: `mean` and `stddev` are H x d in
/// unit action coordinates.
struct Proposal {
  bool discrete = true;
  nn::Tensor probs;
  nn::Tensor mean;
  nn::Tensor stddev;

  std::size_t horizon() const { return discrete ? probs.rows() : mean.rows(); }
  std::size_t action_dim() const { return discrete ? probs.cols() : mean.cols(); }
};

/// C sequences of length H. steps[t] is C x d: one-hot rows (discrete) or
/// unit-scaled actions (continuous).
struct SequenceSet {
  bool discrete = true;
  std::vector<nn::Tensor> steps;
  std::vector<std::vector<int>> index;  // [t][i], discrete only

  std::size_t count() const { return steps.empty() ? 0 : steps.front().rows(); }
  std::size_t horizon() const { return steps.size(); }
  std::size_t action_dim() const { return steps.empty() ? 0 : steps.front().cols(); }
  const nn::Tensor& first_actions() const { return steps.front(); }
};

/// Proposal centred on the policy output: temperature (1 + proposal_std)
/// categorical for discrete heads, N(clip(out), proposal_std) for continuous.
Proposal initial_proposal(std::span<const double> policy_out, bool discrete, const PlannerConfig& config);
SequenceSet sample_sequences(const Proposal& proposal, std::size_t count, Rng& rng);
/// Refit to the top elite_frac sequences: elite action frequencies (discrete)
/// or elite mean and standard deviation (continuous).
Proposal refit_proposal(const SequenceSet& population, std::span<const double> scores, double elite_frac);

struct LatentStep {
  nn::Tensor next;    // rows x D
  nn::Tensor reward;  // rows x 1
  nn::Tensor done;    // rows x 1, probability
};

struct ScoreResult {
  std::vector<double> scores;
  nn::Tensor final_latent;  // rows x D, z_H of each sequence
};

struct PlannerConfig;
struct SequenceSet;

/// Anything that can roll a latent state forward under an action encoding.
class LatentModel {
 public:
  virtual ~LatentModel() = default;
  virtual LatentStep predict(const nn::Tensor& latent, const nn::Tensor& action) const = 0;
  /// Scores every sequence from its start row. Defaults to score_sequences.
  virtual ScoreResult score(const nn::Tensor& start, const SequenceSet& sequences, const PlannerConfig& config) const;
};

/// S = sum_t [g_t r_t + ls (1 - d_t)] - lc * mean_t |z_{t+1} - z_t|^2 / D with
/// g_t = prod_{k<t} (1 - d_k). `start` has one row per sequence.
ScoreResult score_sequences(const LatentModel& model, const nn::Tensor& start, const SequenceSet& sequences,
                            const PlannerConfig& config);

/// Extra per-sequence score computed from z_H (used by the bootstrap variant).
using TerminalBonus = std::function<std::vector<double>(const nn::Tensor& final_latent)>;

struct PlanResult {
  SequenceSet population;
  std::vector<double> scores;
};

/// Sample, score and refit `cem_iters` times for each start state (one row of
/// `starts` per state, one proposal per state). All states are scored in a
/// single batched rollout per iteration.
std::vector<PlanResult> plan(const LatentModel& model, const nn::Tensor& starts, const std::vector<Proposal>& proposals,
                             const PlannerConfig& config, Rng& rng, const TerminalBonus& bonus = {});

struct TeacherSignal {
  std::vector<double> weights;
  /// Discrete: distribution over actions. Continuous: weighted first action.
  std::vector<double> target;
};

/// w = softmax(S / tau); target = sum_i w_i a0_i.
TeacherSignal teacher_from(std::span<const double> scores, const nn::Tensor& first_actions, double tau);

/// Mean over rows of CE(softmax(out), teacher) for discrete heads, or of the
/// L1 distance |out - teacher|_1 for continuous heads.
nn::Var distill_loss(nn::Var policy_out, const nn::Tensor& teacher, bool discrete);

/// Residual latent dynamics with reward and termination heads sharing one
/// tanh hidden layer: [z, a] -> [dz, r, d_logit].
class LatentWorldModel : public LatentModel {
 public:
  LatentWorldModel() = default;
  LatentWorldModel(std::size_t latent_dim, std::size_t action_dim, std::size_t hidden, Rng& rng);

  struct Heads {
    nn::Var delta;
    nn::Var reward;
    nn::Var done_logit;
  };

  LatentStep predict(const nn::Tensor& latent, const nn::Tensor& action) const override;
  /// Same scores as score_sequences computed in single precision.
  ScoreResult score(const nn::Tensor& start, const SequenceSet& sequences, const PlannerConfig& config) const override;
  Heads forward(nn::Tape& tape, nn::Var latent, nn::Var action, nn::Binding binding = nn::Binding::kTrainable);

  std::size_t latent_dim() const { return latent_dim_; }
  nn::Mlp& net() { return net_; }
  const nn::Mlp& net() const { return net_; }

 private:
  std::size_t latent_dim_ = 0;
  nn::Mlp net_;
};

struct CgfpdConfig {
  PlannerConfig planner;
  double dyn_weight = 1.0;
  double reward_weight = 1.0;
  double done_weight = 1.0;
  double shaping_weight = 0.1;
  double contrast_weight = 0.1;
  double contrast_temperature = 0.1;
  double target_rate = 0.01;
  /// Softmax temperature for discrete heads, Gaussian std for continuous.
  /// Negative selects the default for the action space (1.0 / 0.1).
  double exploration = -1.0;
  double lr = 3e-4;
  double grad_clip = 10.0;
  bool normalize_obs = true;
  std::size_t policy_hidden = nn::kPolicyHiddenWidth;
  std::size_t world_hidden = 64;
  std::size_t plan_states = 8;
  fitness::Schedule schedule{1000, 2, 64, 100000};

  static ParamRegistry registry();
  void apply(const ParamValues& values);
};

/// Everything compute_loss needs that is held fixed with respect to the
/// trainable parameters (computed outside the tape).
struct CgfpdTargets {
  nn::Tensor obs;          // normalized
  nn::Tensor actions;      // encoded
  nn::Tensor rewards;      // raw
  nn::Tensor terminated;
  nn::Tensor next_latent;  // EMA target encoding of the next observation
  nn::Tensor reward_std;   // batch-standardized reward
  nn::Tensor teacher;      // plan_states x head_dim
  nn::Tensor next_obs;     // normalized
};

struct CgfpdLoss {
  nn::Var total;
  double plan = 0.0;
  double dyn = 0.0;
  double reward = 0.0;
  double done = 0.0;
  double shaping = 0.0;
  double contrast = 0.0;
  double extra = 0.0;
};

class CgfpdAgent : public fitness::Agent {
 public:
  CgfpdAgent(const env::EnvSpec& spec, std::uint64_t seed, CgfpdConfig config = {});

  const env::EnvSpec& spec() const override { return spec_; }
  fitness::Schedule schedule() const override { return config_.schedule; }
  env::Action act(std::span<const double> obs, bool deterministic) override;
  void observe(const fitness::Transition& t) override;
  fitness::UpdateStats update(const fitness::Batch& batch, std::int64_t global_step) override;
  double parameter_norm() const override;
  std::vector<nn::Tensor> checkpoint() const override;
  void restore(const std::vector<nn::Tensor>& state) override;

  CgfpdTargets prepare(const fitness::Batch& batch);
  CgfpdLoss compute_loss(nn::Tape& tape, const CgfpdTargets& targets);

  const CgfpdConfig& config() const { return config_; }
  nn::MlpPolicy& policy() { return policy_; }
  LatentWorldModel& world_model() { return model_; }
  const nn::EmaTracker& target() const { return target_; }
  ObsNormalizer& normalizer() { return normalizer_; }
  std::vector<nn::Parameter*> trainable();
  /// Policy head for plain (unnormalized) observations.
  nn::Tensor policy_output(std::span<const double> obs) const;

 protected:
  virtual void extend_targets(const fitness::Batch&, CgfpdTargets&) {}
  virtual nn::Var extra_loss(nn::Tape&, const CgfpdTargets&, nn::Var /*latent*/) { return {}; }
  virtual TerminalBonus terminal_bonus() { return {}; }
  virtual std::vector<nn::Parameter*> extra_parameters() { return {}; }
  virtual void after_update(std::int64_t /*global_step*/) {}

  Rng& rng() { return rng_; }

 private:
  env::EnvSpec spec_;
  CgfpdConfig config_;
  Rng rng_;
  std::size_t head_dim_;
  nn::MlpPolicy policy_;
  nn::EmaTracker target_;
  LatentWorldModel model_;
  nn::Linear probe_;
  ObsNormalizer normalizer_;
  std::unique_ptr<nn::Adam> optimizer_;
};

}  // namespace evorl::algo
