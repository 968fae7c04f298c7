#include "evorl/nn/mlp.hpp"

#include <cmath>

namespace evorl::nn {

Linear::Linear(std::size_t in, std::size_t out, const std::string& name, Rng& rng)
    : weight(name + ".weight", Tensor(in, out)), bias(name + ".bias", Tensor(1, out)) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : weight.value.values()) w = dist(rng);
}

Var Linear::forward(Tape& tape, Var x, Binding binding) {
  if (binding == Binding::kFrozen) {
    return nn::affine(x, tape.frozen(weight), tape.frozen(bias));
  }
  return nn::affine(x, tape.param(weight), tape.param(bias));
}

Mlp::Mlp(std::vector<std::size_t> widths, const std::string& name, Rng& rng) : widths_(std::move(widths)) {
  if (widths_.size() < 2) throw ShapeError("Mlp needs at least input and output widths");
  for (std::size_t w : widths_) {
    if (w == 0) throw ShapeError("Mlp width must be positive");
  }
  for (std::size_t i = 0; i + 1 < widths_.size(); ++i) {
    layers_.emplace_back(widths_[i], widths_[i + 1], name + ".l" + std::to_string(i), rng);
  }
}

void Mlp::forward(const Tensor& x, Tensor& features, Tensor& output) const {
  if (x.cols() != in_dim()) {
    throw ShapeError("Mlp input width " + std::to_string(x.cols()) + " != " + std::to_string(in_dim()));
  }
  Tensor h = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    for (double& v : h.values()) v = std::tanh(v);
  }
  output = layers_.back().forward(h);
  features = std::move(h);
}

Tensor Mlp::forward(const Tensor& x) const {
  Tensor f, out;
  forward(x, f, out);
  return out;
}

Tensor Mlp::features(const Tensor& x) const {
  if (x.cols() != in_dim()) {
    throw ShapeError("Mlp input width " + std::to_string(x.cols()) + " != " + std::to_string(in_dim()));
  }
  Tensor h = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    h = layers_[i].forward(h);
    for (double& v : h.values()) v = std::tanh(v);
  }
  return h;
}

Mlp::Output Mlp::forward(Tape& tape, Var x, Binding binding) {
  if (x.cols() != in_dim()) {
    throw ShapeError("Mlp input width " + std::to_string(x.cols()) + " != " + std::to_string(in_dim()));
  }
  Var h = x;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) {
    h = nn::tanh(layers_[i].forward(tape, h, binding));
  }
  return {h, layers_.back().forward(tape, h, binding)};
}

Var Mlp::head(Tape& tape, Var features, Binding binding) { return layers_.back().forward(tape, features, binding); }

Tensor Mlp::head(const Tensor& features) const { return layers_.back().forward(features); }

std::vector<Parameter*> Mlp::parameters() {
  std::vector<Parameter*> out;
  for (Linear& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::vector<const Parameter*> Mlp::parameters() const {
  std::vector<const Parameter*> out;
  for (const Linear& l : layers_) {
    out.push_back(&l.weight);
    out.push_back(&l.bias);
  }
  return out;
}

std::size_t Mlp::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void Mlp::copy_from(const Mlp& other) {
  if (other.widths_ != widths_) throw ShapeError("Mlp::copy_from width mismatch");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    layers_[i].weight.value = other.layers_[i].weight.value;
    layers_[i].bias.value = other.layers_[i].bias.value;
  }
}

void Mlp::zero() {
  for (Parameter* p : parameters()) p->value.set_zero();
}

MlpPolicy::MlpPolicy(std::size_t obs_dim, std::size_t head_dim, Rng& rng, std::size_t hidden,
                     const std::string& name)
    : net_({obs_dim, hidden, hidden, head_dim}, name, rng) {}

Tensor MlpPolicy::forward(const Tensor& obs) const { return net_.forward(obs); }

EmaTracker::EmaTracker(const Mlp& online, double rate) : shadow_(online), rate_(rate) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("EMA rate must lie in [0, 1]");
}

void EmaTracker::update(const Mlp& online) {
  if (online.widths() != shadow_.widths()) throw ShapeError("EMA update width mismatch");
  auto dst = shadow_.parameters();
  auto src = online.parameters();
  const double keep = 1.0 - rate_;
  for (std::size_t k = 0; k < dst.size(); ++k) {
    auto d = dst[k]->value.values();
    auto s = src[k]->value.values();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = keep * d[i] + rate_ * s[i];
  }
}

double parameter_norm(std::span<const Parameter* const> params) {
  double s = 0.0;
  for (const Parameter* p : params) s += p->value.squared_norm();
  return std::sqrt(s);
}

double gradient_norm(std::span<const Parameter* const> params) {
  double s = 0.0;
  for (const Parameter* p : params) s += p->grad.squared_norm();
  return std::sqrt(s);
}

}  // namespace evorl::nn
