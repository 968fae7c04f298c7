#include "evorl/nn/optim.hpp"

#include <cmath>

namespace evorl::nn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.rows(), p->value.cols());
    v_.emplace_back(p->value.rows(), p->value.cols());
  }
}

void Adam::step() {
  for (const Parameter* p : params_) {
    if (!p->grad.same_shape(p->value)) {
      throw ShapeError("Adam: gradient shape " + p->grad.shape_string() + " != parameter shape " +
                       p->value.shape_string() + " for " + p->name);
    }
    if (!p->grad.all_finite()) throw NumericError("Adam: non-finite gradient for " + p->name);
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double c1 = 1.0 - std::pow(config_.beta1, t);
  const double c2 = 1.0 - std::pow(config_.beta2, t);
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    double* w = params_[k]->value.data();
    const double* g = params_[k]->grad.data();
    double* m = m_[k].data();
    double* v = v_[k].data();
    const std::size_t n = params_[k]->value.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= config_.lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

double clip_grad_norm(std::span<Parameter* const> params, double max_norm) {
  double sq = 0.0;
  for (const Parameter* p : params) sq += p->grad.squared_norm();
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double s = max_norm / (norm + 1e-12);
    for (Parameter* p : params) p->grad *= s;
  }
  return norm;
}

}  // namespace evorl::nn
