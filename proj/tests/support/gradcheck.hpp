#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "evorl/nn/autodiff.hpp"

namespace evorl::testing {

struct GradCheck {
  double relative_error = 0.0;
  double analytic_norm = 0.0;
  std::size_t entries = 0;
};

/// Central differences of `loss` over every entry of `params`, compared with
/// the tape gradient as ||g_a - g_n|| / max(||g_a||, ||g_n||). Stop-gradient
/// values captured during the analytic pass are replayed for every
/// perturbed evaluation.
inline GradCheck check_gradients(const std::vector<nn::Parameter*>& params,
                                 const std::function<nn::Var(nn::Tape&)>& loss, double step = 1e-5) {
  for (auto* p : params) p->zero_grad();
  std::vector<nn::Tensor> detached;
  {
    nn::Tape tape;
    tape.record_detached();
    const nn::Var l = loss(tape);
    tape.backward(l);
    detached = tape.take_detached();
  }
  auto eval = [&] {
    nn::Tape tape;
    tape.replay_detached(detached);
    return loss(tape).value().item();
  };
  double diff2 = 0.0, a2 = 0.0, n2 = 0.0;
  std::size_t entries = 0;
  for (auto* p : params) {
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      const double keep = p->value[i];
      p->value[i] = keep + step;
      const double up = eval();
      p->value[i] = keep - step;
      const double down = eval();
      p->value[i] = keep;
      const double numeric = (up - down) / (2.0 * step);
      const double analytic = p->grad[i];
      diff2 += (analytic - numeric) * (analytic - numeric);
      a2 += analytic * analytic;
      n2 += numeric * numeric;
      ++entries;
    }
  }
  const double denom = std::max({std::sqrt(a2), std::sqrt(n2), 1e-12});
  return {std::sqrt(diff2) / denom, std::sqrt(a2), entries};
}

}  // namespace evorl::testing
