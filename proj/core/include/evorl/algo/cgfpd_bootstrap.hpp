#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <vector>

#include "evorl/algo/cgfpd.hpp"

namespace evorl::algo {

struct BootstrapConfig {
  double gamma = 0.99;
  double td_loss_weight = 0.10;
  double lambda = 0.3;
  double rmse_ema_rate = 0.05;
  double value_stat_ema_rate = 0.01;
  std::int64_t warmup_steps = 50000;
  double enable_lo = 0.5;
  double enable_hi = 0.8;
  double util_max = 1.0;
  std::size_t value_hidden = 64;
  std::size_t reward_window = 1000;

  void validate() const;
};

/// tanh((r - median) / (1.4826 mad + eps)).
double robust_normalize(double r, double median, double mad, double eps = 1e-8);

struct RobustStats {
  double median = 0.0;
  double mad = 0.0;
};
RobustStats robust_stats(std::span<const double> values);

/// Mean Huber loss between v and the fixed targets r~ + gamma (1 - d) v_next.
nn::Var td0_value_loss(nn::Var v, std::span<const double> reward_norm, std::span<const double> done,
                       std::span<const double> v_next, double gamma);

/// 0 during warm-up; lambda below lo, 0 above hi, linear in between.
double gated_lambda(double rmse_ema, bool warmup_done, double lambda, double lo = 0.5, double hi = 0.8);

/// s_base + lambda_eff util_max tanh((v - mu) / (sigma + eps)).
double bootstrap_score(double s_base, double v, double mu, double sigma, double lambda_eff, double util_max,
                       double eps = 1e-8);

class CgfpdBootstrapAgent : public CgfpdAgent {
 public:
  CgfpdBootstrapAgent(const env::EnvSpec& spec, std::uint64_t seed, CgfpdConfig config = {},
                      BootstrapConfig bootstrap = {});

  static ParamRegistry registry();
  /// Splits values between the two configs.
  static void apply(const ParamValues& values, CgfpdConfig& config, BootstrapConfig& bootstrap);

  void observe(const fitness::Transition& t) override;

  const BootstrapConfig& bootstrap_config() const { return bootstrap_; }
  double rmse_ema() const { return rmse_ema_; }
  double value_mean() const { return value_mean_; }
  double value_std() const { return value_std_; }
  double lambda_eff() const;
  nn::Mlp& value_head() { return value_; }

 protected:
  void extend_targets(const fitness::Batch& batch, CgfpdTargets& targets) override;
  nn::Var extra_loss(nn::Tape& tape, const CgfpdTargets& targets, nn::Var latent) override;
  TerminalBonus terminal_bonus() override;
  std::vector<nn::Parameter*> extra_parameters() override;
  void after_update(std::int64_t global_step) override;

 private:
  BootstrapConfig bootstrap_;
  nn::Mlp value_;
  std::deque<double> rewards_;
  RobustStats stats_;
  std::int64_t since_stats_ = 0;
  std::vector<double> reward_norm_;
  std::vector<double> done_;
  std::vector<double> v_next_;
  double last_rmse_ = 0.0;
  double last_v_mean_ = 0.0;
  double last_v_std_ = 0.0;
  bool have_stats_ = false;
  double rmse_ema_ = 1.0;
  double value_mean_ = 0.0;
  double value_std_ = 1.0;
  std::int64_t step_ = 0;
};

}  // namespace evorl::algo
