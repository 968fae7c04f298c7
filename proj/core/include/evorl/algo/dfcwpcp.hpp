#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "evorl/algo/common.hpp"
#include "evorl/fitness/agent.hpp"
#include "evorl/nn/optim.hpp"

namespace evorl::algo {

/// tanh of the policy head.
nn::Var latent_action(nn::Var head);
nn::Tensor latent_action(const nn::Tensor& head);

/// Mean over rows of sum over references of (1 - cos(flow, ref)). A row's
/// term is 0 when either vector has norm below 1e-8.
nn::Var flow_alignment_loss(nn::Var flow, const std::vector<nn::Tensor>& references, double guard = 1e-8);

struct StepScore {
  nn::Var o;
  nn::Var o_bar;
};
/// o = c (r - ld d) - lr (1 - c), o_bar = tanh(o).
StepScore step_desirability(nn::Var reward, nn::Var done, nn::Var confidence, double termination_penalty,
                            double confidence_penalty);
double step_desirability(double reward, double done, double confidence, double termination_penalty,
                         double confidence_penalty);

/// G = (1/H) sum_k gamma^k o_bar_k, applied row-wise ([rows x 1] per step).
nn::Var plan_objective(const std::vector<nn::Var>& o_bar, double gamma);
double plan_objective(std::span<const double> o_bar, double gamma);

/// C = (1/H) sum_k gamma^k c_k min(|g_k|, clip).
nn::Var controllability(const std::vector<nn::Var>& grad_norm, const std::vector<nn::Var>& confidence, double gamma,
                        double clip);
double controllability(std::span<const double> grad_norm, std::span<const double> confidence, double gamma,
                       double clip);

/// Mean over rows of c ||a - a_slow||^2.
nn::Var anchor_loss(nn::Var action, nn::Var slow_action, nn::Var confidence);

/// Linear ramp 0 -> 1 over `warmup` steps.
double warmup_weight(std::int64_t global_step, std::int64_t warmup);

/// s' = s + f(s, a); confidences are sigmoids of dedicated logits.
class ObsWorldModel {
 public:
  ObsWorldModel() = default;
  ObsWorldModel(std::size_t obs_dim, std::size_t action_dim, std::size_t hidden, Rng& rng);

  struct Dyn {
    nn::Var delta;
    nn::Var conf_logit;
  };
  struct Rew {
    nn::Var reward;
    nn::Var conf_logit;
  };
  struct Done {
    nn::Var logit;
    nn::Var conf_logit;
  };
  /// Tangent propagation of one forward pass: values plus directional
  /// derivatives along (ds, da).
  struct Jvp {
    nn::Var value;
    nn::Var tangent;
  };

  Dyn dynamics(nn::Tape& tape, nn::Var s, nn::Var a, nn::Binding binding = nn::Binding::kTrainable);
  Rew reward(nn::Tape& tape, nn::Var s, nn::Var a, nn::Var s_next, nn::Binding binding = nn::Binding::kTrainable);
  Done done(nn::Tape& tape, nn::Var s_next, nn::Binding binding = nn::Binding::kTrainable);

  nn::Mlp& dyn_net() { return dyn_; }
  nn::Mlp& rew_net() { return rew_; }
  nn::Mlp& done_net() { return done_; }
  std::vector<nn::Parameter*> parameters();
  std::size_t obs_dim() const { return obs_dim_; }

 private:
  std::size_t obs_dim_ = 0;
  nn::Mlp dyn_;
  nn::Mlp rew_;
  nn::Mlp done_;
};

/// One-hidden-layer forward with a tangent: h = tanh(x W1 + b1),
/// y = h W2 + b2, dy = ((1 - h^2) * (dx W1)) W2. Weights are frozen.
ObsWorldModel::Jvp mlp_jvp(nn::Tape& tape, const nn::Mlp& net, nn::Var x, nn::Var dx);

struct DfConfig {
  int horizon = 5;
  double gamma = 0.95;
  double termination_penalty = 1.0;
  double confidence_penalty = 0.1;
  double controllability_weight = 0.05;
  double anchor_weight = 0.1;
  std::int64_t warmup_steps = 20000;
  double controllability_clip = 5.0;
  double entropy_weight = 0.005;
  double action_weight = 0.001;
  double logit_weight = 0.0005;
  double state_weight = 0.0001;
  double fast_rate = 0.05;
  double slow_rate = 0.005;
  double flow_weight = 1.0;
  double aux_weight = 0.05;
  double model_weight = 1.0;
  double confidence_weight = 1.0;
  double relax_temperature = 1.0;
  /// Softmax temperature for discrete heads, Gaussian std for continuous.
  /// Negative selects the default for the action space (1.0 / 0.1).
  double exploration = -1.0;
  double lr = 3e-4;
  double grad_clip = 10.0;
  bool exact_controllability = true;
  bool normalize_obs = true;
  std::size_t policy_hidden = nn::kPolicyHiddenWidth;
  std::size_t world_hidden = 64;
  std::size_t plan_states = 16;
  fitness::Schedule schedule{1000, 2, 64, 100000};

  void validate() const;
  static ParamRegistry registry();
  void apply(const ParamValues& values);
};

struct DfTargets {
  nn::Tensor obs;       // normalized
  nn::Tensor next_obs;  // normalized
  nn::Tensor actions;   // encoded
  nn::Tensor rewards;
  nn::Tensor terminated;
  nn::Tensor fast_flow;  // B x head_dim
  nn::Tensor slow_flow;
};

struct DfLoss {
  nn::Var total;
  double model = 0.0;
  double confidence = 0.0;
  double flow = 0.0;
  double aux = 0.0;
  double plan = 0.0;
  double objective = 0.0;  // G
  double control = 0.0;    // C
  double anchor = 0.0;
  double warmup = 0.0;
};

class DfcwpcpAgent : public fitness::Agent {
 public:
  DfcwpcpAgent(const env::EnvSpec& spec, std::uint64_t seed, DfConfig config = {});

  const env::EnvSpec& spec() const override { return spec_; }
  fitness::Schedule schedule() const override { return config_.schedule; }
  env::Action act(std::span<const double> obs, bool deterministic) override;
  void observe(const fitness::Transition& t) override;
  fitness::UpdateStats update(const fitness::Batch& batch, std::int64_t global_step) override;
  double parameter_norm() const override;
  std::vector<nn::Tensor> checkpoint() const override;
  void restore(const std::vector<nn::Tensor>& state) override;

  DfTargets prepare(const fitness::Batch& batch) const;
  DfLoss compute_loss(nn::Tape& tape, const DfTargets& targets, std::int64_t global_step);

  const DfConfig& config() const { return config_; }
  nn::MlpPolicy& policy() { return policy_; }
  ObsWorldModel& world_model() { return model_; }
  const nn::EmaTracker& fast() const { return fast_; }
  const nn::EmaTracker& slow() const { return slow_; }
  ObsNormalizer& normalizer() { return normalizer_; }
  std::vector<nn::Parameter*> trainable();

 private:
  /// Differentiable action fed to the world model from a policy head.
  nn::Var relaxed_action(nn::Var head) const;
  nn::Tensor flow_of(const nn::Mlp& net, const nn::Tensor& obs, const nn::Tensor& next_obs) const;

  env::EnvSpec spec_;
  DfConfig config_;
  Rng rng_;
  std::size_t head_dim_;
  nn::MlpPolicy policy_;
  nn::EmaTracker fast_;
  nn::EmaTracker slow_;
  ObsWorldModel model_;
  nn::Linear aux_;
  ObsNormalizer normalizer_;
  std::unique_ptr<nn::Adam> optimizer_;
};

}  // namespace evorl::algo
