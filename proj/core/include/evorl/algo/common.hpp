#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "evorl/env/env.hpp"
#include "evorl/fitness/replay.hpp"
#include "evorl/nn/mlp.hpp"

namespace evorl::algo {

/// One tunable scalar of an algorithm.
struct ScalarParam {
  std::string name;
  double default_value = 0.0;
  std::string role;
  bool log_scale = false;
};

using ParamRegistry = std::vector<ScalarParam>;
using ParamValues = std::map<std::string, double>;

std::string registry_to_json(const ParamRegistry& registry);
ParamRegistry registry_from_json(const std::string& text);

/// Reads named overrides into fields. Throws std::invalid_argument for a name
/// that is not registered.
class ParamBinder {
 public:
  explicit ParamBinder(const ParamValues& values) : values_(values) {}

  void bind(const std::string& name, double& field);
  void bind(const std::string& name, int& field);
  void bind(const std::string& name, std::int64_t& field);
  void bind(const std::string& name, std::size_t& field);
  /// Throws if any provided value was never bound.
  void finish() const;

 private:
  const ParamValues& values_;
  std::vector<std::string> used_;
};

/// Running mean/variance of observations (Welford); normalized values are
/// clipped to +-clip.
class ObsNormalizer {
 public:
  ObsNormalizer() = default;
  ObsNormalizer(std::size_t dim, bool enabled, double clip = 5.0);

  void update(std::span<const double> obs);
  std::vector<double> apply(std::span<const double> obs) const;
  nn::Tensor apply(const nn::Tensor& batch) const;

  bool enabled() const { return enabled_; }
  std::size_t dim() const { return mean_.size(); }
  double count() const { return count_; }

  /// [mean; m2; count] packed as a 3 x dim tensor.
  nn::Tensor state() const;
  void load(const nn::Tensor& state);

 private:
  bool enabled_ = false;
  double clip_ = 5.0;
  double count_ = 0.0;
  std::vector<double> mean_;
  std::vector<double> m2_;
};

/// Maps between environment actions and the [-1, 1]^d units used internally
/// for continuous spaces.
nn::Tensor to_unit(const env::ActionSpace& space, const nn::Tensor& env_actions);
std::vector<double> from_unit(const env::ActionSpace& space, std::span<const double> unit);

/// Row-wise one-hot encoding of action indices.
nn::Tensor one_hot(std::span<const int> indices, std::size_t n);

/// Encoding of batch actions fed to world models: one-hot for discrete,
/// unit-scaled values for continuous.
nn::Tensor encode_actions(const env::ActionSpace& space, const fitness::Batch& batch);

/// Numerically stable row-wise softmax on plain tensors, with temperature.
nn::Tensor softmax_rows(const nn::Tensor& logits, double temperature = 1.0);

int sample_categorical(std::span<const double> probs, Rng& rng);
int argmax(std::span<const double> values);

/// Packs parameters into tensors for checkpoints and restores them in order.
std::vector<nn::Tensor> pack(std::span<const nn::Parameter* const> params);
void unpack(std::span<nn::Parameter* const> params, std::span<const nn::Tensor> values);

}  // namespace evorl::algo
