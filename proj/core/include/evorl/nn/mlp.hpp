#pragma once

#include <string>
#include <vector>

#include "evorl/nn/autodiff.hpp"
#include "evorl/random.hpp"

namespace evorl::nn {

enum class Binding { kTrainable, kFrozen };

/// Affine layer: y = x W + b, W is [in x out].
struct Linear {
  Linear() = default;
  Linear(std::size_t in, std::size_t out, const std::string& name, Rng& rng);

  Parameter weight;
  Parameter bias;

  std::size_t in_dim() const { return weight.value.rows(); }
  std::size_t out_dim() const { return weight.value.cols(); }

  Tensor forward(const Tensor& x) const { return nn::affine(x, weight.value, bias.value); }
  Var forward(Tape& tape, Var x, Binding binding = Binding::kTrainable);
};

/// Multilayer perceptron with tanh hidden layers and a linear output layer.
/// widths = {in, h1, ..., hk, out}.
class Mlp {
 public:
  Mlp() = default;
  Mlp(std::vector<std::size_t> widths, const std::string& name, Rng& rng);

  struct Output {
    Var features;  // last hidden activation (or the input when there is none)
    Var output;
  };

  std::size_t in_dim() const { return widths_.front(); }
  std::size_t out_dim() const { return widths_.back(); }
  std::size_t feature_dim() const { return widths_[widths_.size() - 2]; }
  const std::vector<std::size_t>& widths() const { return widths_; }

  Tensor forward(const Tensor& x) const;
  Tensor features(const Tensor& x) const;
  void forward(const Tensor& x, Tensor& features, Tensor& output) const;

  Output forward(Tape& tape, Var x, Binding binding = Binding::kTrainable);
  /// Applies only the final linear layer to given features.
  Var head(Tape& tape, Var features, Binding binding = Binding::kTrainable);
  Tensor head(const Tensor& features) const;

  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;
  std::size_t parameter_count() const;

  /// Overwrites every weight with other's (shapes must agree).
  void copy_from(const Mlp& other);
  /// Sets every weight and bias to zero.
  void zero();

  std::vector<Linear>& layers() { return layers_; }
  const std::vector<Linear>& layers() const { return layers_; }

 private:
  std::vector<std::size_t> widths_;
  std::vector<Linear> layers_;
};

/// The fixed policy network: obs -> 256 tanh -> 256 tanh -> linear head.
/// The hidden width is a constructor argument only so that gradient checks
/// can run on tiny networks; production code uses kPolicyHiddenWidth.
inline constexpr std::size_t kPolicyHiddenWidth = 256;

class MlpPolicy {
 public:
  MlpPolicy() = default;
  MlpPolicy(std::size_t obs_dim, std::size_t head_dim, Rng& rng,
            std::size_t hidden = kPolicyHiddenWidth, const std::string& name = "policy");

  std::size_t obs_dim() const { return net_.in_dim(); }
  std::size_t head_dim() const { return net_.out_dim(); }
  std::size_t hidden_dim() const { return net_.feature_dim(); }

  Tensor forward(const Tensor& obs) const;
  /// Second hidden layer activations (the latent representation).
  Tensor encode(const Tensor& obs) const { return net_.features(obs); }
  Mlp::Output forward(Tape& tape, Var obs, Binding binding = Binding::kTrainable) { return net_.forward(tape, obs, binding); }

  Mlp& net() { return net_; }
  const Mlp& net() const { return net_; }
  std::vector<Parameter*> parameters() { return net_.parameters(); }

 private:
  Mlp net_;
};

/// Exponential moving average copy of a network:
/// shadow <- (1 - rate) * shadow + rate * online.
class EmaTracker {
 public:
  EmaTracker() = default;
  EmaTracker(const Mlp& online, double rate);

  double rate() const { return rate_; }
  const Mlp& shadow() const { return shadow_; }
  Mlp& shadow() { return shadow_; }

  void update(const Mlp& online);

 private:
  Mlp shadow_;
  double rate_ = 0.0;
};

double parameter_norm(std::span<const Parameter* const> params);
double gradient_norm(std::span<const Parameter* const> params);

}  // namespace evorl::nn
