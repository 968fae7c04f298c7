#include "evorl/algo/cgfpd_bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evorl::algo {

using nn::Tensor;
using nn::Var;

void BootstrapConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("bootstrap: gamma must be in [0, 1]");
  if (!(enable_lo < enable_hi)) throw std::invalid_argument("bootstrap: enable_lo must be < enable_hi");
  if (lambda < 0.0 || util_max < 0.0 || td_loss_weight < 0.0) throw std::invalid_argument("bootstrap: negative weight");
  if (reward_window < 1) throw std::invalid_argument("bootstrap: reward_window must be >= 1");
}

double robust_normalize(double r, double median, double mad, double eps) {
  if (mad < 0.0) throw std::invalid_argument("robust_normalize: mad must be >= 0");
  return std::tanh((r - median) / (1.4826 * mad + eps));
}

RobustStats robust_stats(std::span<const double> values) {
  if (values.empty()) return {};
  auto median_of = [](std::vector<double> v) {
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
    return m;
  };
  RobustStats s;
  s.median = median_of({values.begin(), values.end()});
  std::vector<double> dev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) dev[i] = std::abs(values[i] - s.median);
  s.mad = median_of(std::move(dev));
  return s;
}

Var td0_value_loss(Var v, std::span<const double> reward_norm, std::span<const double> done,
                   std::span<const double> v_next, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("td0_value_loss: gamma must be in [0, 1]");
  const std::size_t n = v.rows();
  if (reward_norm.size() != n || done.size() != n || v_next.size() != n) {
    throw nn::ShapeError("td0_value_loss: batch size mismatch");
  }
  Tensor target(n, 1);
  for (std::size_t i = 0; i < n; ++i) target[i] = reward_norm[i] + gamma * (1.0 - done[i]) * v_next[i];
  return nn::mean(nn::huber(v - v.tape().constant(std::move(target))));
}

double gated_lambda(double rmse_ema, bool warmup_done, double lambda, double lo, double hi) {
  if (!warmup_done) return 0.0;
  if (rmse_ema < lo) return lambda;
  if (rmse_ema > hi) return 0.0;
  return lambda * (hi - rmse_ema) / (hi - lo);
}

double bootstrap_score(double s_base, double v, double mu, double sigma, double lambda_eff, double util_max,
                       double eps) {
  if (sigma < 0.0) throw std::invalid_argument("bootstrap_score: sigma must be >= 0");
  return s_base + lambda_eff * util_max * std::tanh((v - mu) / (sigma + eps));
}

CgfpdBootstrapAgent::CgfpdBootstrapAgent(const env::EnvSpec& spec, std::uint64_t seed, CgfpdConfig config,
                                         BootstrapConfig bootstrap)
    : CgfpdAgent(spec, seed, config), bootstrap_(bootstrap) {
  bootstrap_.validate();
  value_ = nn::Mlp({this->config().policy_hidden, bootstrap_.value_hidden, 1}, "value", rng());
}

ParamRegistry CgfpdBootstrapAgent::registry() {
  ParamRegistry r = CgfpdConfig::registry();
  const BootstrapConfig d;
  r.push_back({"bootstrap_gamma", d.gamma, "bootstrap", false});
  r.push_back({"td_loss_weight", d.td_loss_weight, "bootstrap", false});
  r.push_back({"bootstrap_lambda", d.lambda, "bootstrap", false});
  r.push_back({"rmse_ema_rate", d.rmse_ema_rate, "bootstrap", true});
  r.push_back({"value_stat_ema_rate", d.value_stat_ema_rate, "bootstrap", true});
  r.push_back({"util_max", d.util_max, "bootstrap", false});
  r.push_back({"bootstrap_warmup", static_cast<double>(d.warmup_steps), "compute", false});
  return r;
}

void CgfpdBootstrapAgent::apply(const ParamValues& values, CgfpdConfig& config, BootstrapConfig& bootstrap) {
  ParamValues base, own;
  const ParamRegistry names = CgfpdConfig::registry();
  for (const auto& [name, value] : values) {
    const bool is_base = std::any_of(names.begin(), names.end(), [&](const ScalarParam& p) { return p.name == name; });
    (is_base ? base : own)[name] = value;
  }
  config.apply(base);
  ParamBinder b(own);
  b.bind("bootstrap_gamma", bootstrap.gamma);
  b.bind("td_loss_weight", bootstrap.td_loss_weight);
  b.bind("bootstrap_lambda", bootstrap.lambda);
  b.bind("rmse_ema_rate", bootstrap.rmse_ema_rate);
  b.bind("value_stat_ema_rate", bootstrap.value_stat_ema_rate);
  b.bind("util_max", bootstrap.util_max);
  b.bind("bootstrap_warmup", bootstrap.warmup_steps);
  b.finish();
  bootstrap.validate();
}

void CgfpdBootstrapAgent::observe(const fitness::Transition& t) {
  CgfpdAgent::observe(t);
  rewards_.push_back(t.reward);
  if (rewards_.size() > bootstrap_.reward_window) rewards_.pop_front();
  ++since_stats_;
}

double CgfpdBootstrapAgent::lambda_eff() const {
  return gated_lambda(rmse_ema_, step_ >= bootstrap_.warmup_steps, bootstrap_.lambda, bootstrap_.enable_lo,
                      bootstrap_.enable_hi);
}

void CgfpdBootstrapAgent::extend_targets(const fitness::Batch& batch, CgfpdTargets& targets) {
  if (!have_stats_ || since_stats_ >= static_cast<std::int64_t>(bootstrap_.reward_window)) {
    const std::vector<double> window(rewards_.begin(), rewards_.end());
    stats_ = robust_stats(window);
    have_stats_ = !window.empty();
    since_stats_ = 0;
  }
  const std::size_t n = batch.size();
  reward_norm_.resize(n);
  done_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    reward_norm_[i] = robust_normalize(batch.rewards[i], stats_.median, stats_.mad);
    done_[i] = batch.terminated[i];
  }
  const Tensor v_next = value_.forward(policy().encode(targets.next_obs));
  v_next_.assign(v_next.values().begin(), v_next.values().end());
}

Var CgfpdBootstrapAgent::extra_loss(nn::Tape& tape, const CgfpdTargets&, Var latent) {
  const Var v = value_.forward(tape, tape.detach(latent)).output;
  const Var loss = td0_value_loss(v, reward_norm_, done_, v_next_, bootstrap_.gamma);
  const Tensor& vv = v.value();
  const std::size_t n = vv.rows();
  double sq = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double target = reward_norm_[i] + bootstrap_.gamma * (1.0 - done_[i]) * v_next_[i];
    sq += (vv[i] - target) * (vv[i] - target);
    mean += vv[i];
  }
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (std::size_t i = 0; i < n; ++i) var += (vv[i] - mean) * (vv[i] - mean);
  last_rmse_ = std::sqrt(sq / static_cast<double>(n));
  last_v_mean_ = mean;
  last_v_std_ = std::sqrt(var / static_cast<double>(n));
  return loss * bootstrap_.td_loss_weight;
}

TerminalBonus CgfpdBootstrapAgent::terminal_bonus() {
  const double lam = lambda_eff();
  if (lam <= 0.0) return {};
  return [this, lam](const Tensor& final_latent) {
    const Tensor v = value_.forward(final_latent);
    std::vector<double> bonus(v.rows());
    for (std::size_t i = 0; i < v.rows(); ++i) {
      bonus[i] = bootstrap_score(0.0, v[i], value_mean_, value_std_, lam, bootstrap_.util_max);
    }
    return bonus;
  };
}

std::vector<nn::Parameter*> CgfpdBootstrapAgent::extra_parameters() { return value_.parameters(); }

void CgfpdBootstrapAgent::after_update(std::int64_t global_step) {
  step_ = global_step;
  const double a = bootstrap_.rmse_ema_rate;
  const double b = bootstrap_.value_stat_ema_rate;
  rmse_ema_ = (1.0 - a) * rmse_ema_ + a * last_rmse_;
  value_mean_ = (1.0 - b) * value_mean_ + b * last_v_mean_;
  value_std_ = (1.0 - b) * value_std_ + b * last_v_std_;
}

}  // namespace evorl::algo
