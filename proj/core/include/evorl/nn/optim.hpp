#pragma once

#include <cstdint>
#include <vector>

#include "evorl/nn/autodiff.hpp"

namespace evorl::nn {

struct AdamConfig {
  double lr = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam over a fixed parameter list. One instance serves the
/// policy and every auxiliary module of an algorithm.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Parameter*> params, AdamConfig config = {});

  /// Applies one update from the accumulated gradients. Throws NumericError
  /// on a non-finite gradient (parameters are left untouched).
  void step();
  void zero_grad();

  std::int64_t step_count() const { return step_count_; }
  const AdamConfig& config() const { return config_; }
  const std::vector<Parameter*>& parameters() const { return params_; }
  const Tensor& first_moment(std::size_t i) const { return m_[i]; }
  const Tensor& second_moment(std::size_t i) const { return v_[i]; }

 private:
  std::vector<Parameter*> params_;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
  AdamConfig config_;
  std::int64_t step_count_ = 0;
};

/// Scales all gradients so their joint L2 norm is at most max_norm.
/// Returns the norm before scaling.
double clip_grad_norm(std::span<Parameter* const> params, double max_norm);

}  // namespace evorl::nn
