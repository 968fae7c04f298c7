#include "evorl/algo/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace evorl::algo {

using nlohmann::json;

std::string registry_to_json(const ParamRegistry& registry) {
  json arr = json::array();
  for (const auto& p : registry) {
    arr.push_back({{"name", p.name}, {"default", p.default_value}, {"role", p.role}, {"log_scale", p.log_scale}});
  }
  return json{{"params", std::move(arr)}}.dump(2);
}

ParamRegistry registry_from_json(const std::string& text) {
  ParamRegistry out;
  for (const auto& p : json::parse(text).at("params")) {
    out.push_back({p.at("name").get<std::string>(), p.at("default").get<double>(), p.value("role", ""),
                   p.value("log_scale", false)});
  }
  return out;
}

void ParamBinder::bind(const std::string& name, double& field) {
  if (auto it = values_.find(name); it != values_.end()) {
    if (!std::isfinite(it->second)) throw std::invalid_argument("parameter " + name + " is not finite");
    field = it->second;
    used_.push_back(name);
  }
}

void ParamBinder::bind(const std::string& name, int& field) {
  double v = field;
  bind(name, v);
  field = static_cast<int>(std::lround(v));
}

void ParamBinder::bind(const std::string& name, std::int64_t& field) {
  double v = static_cast<double>(field);
  bind(name, v);
  field = static_cast<std::int64_t>(std::llround(v));
}

void ParamBinder::bind(const std::string& name, std::size_t& field) {
  double v = static_cast<double>(field);
  bind(name, v);
  if (v < 0) throw std::invalid_argument("parameter " + name + " must be non-negative");
  field = static_cast<std::size_t>(std::llround(v));
}

void ParamBinder::finish() const {
  for (const auto& [name, value] : values_) {
    if (std::find(used_.begin(), used_.end(), name) == used_.end()) {
      throw std::invalid_argument("unknown parameter '" + name + "'");
    }
  }
}

ObsNormalizer::ObsNormalizer(std::size_t dim, bool enabled, double clip)
    : enabled_(enabled), clip_(clip), mean_(dim, 0.0), m2_(dim, 0.0) {}

void ObsNormalizer::update(std::span<const double> obs) {
  if (!enabled_) return;
  count_ += 1.0;
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    const double d = obs[i] - mean_[i];
    mean_[i] += d / count_;
    m2_[i] += d * (obs[i] - mean_[i]);
  }
}

std::vector<double> ObsNormalizer::apply(std::span<const double> obs) const {
  std::vector<double> out(obs.begin(), obs.end());
  if (!enabled_ || count_ < 2.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double sd = std::sqrt(m2_[i] / count_ + 1e-8);
    out[i] = std::clamp((obs[i] - mean_[i]) / sd, -clip_, clip_);
  }
  return out;
}

nn::Tensor ObsNormalizer::apply(const nn::Tensor& batch) const {
  nn::Tensor out = batch;
  if (!enabled_ || count_ < 2.0) return out;
  std::vector<double> sd(mean_.size());
  for (std::size_t i = 0; i < sd.size(); ++i) sd[i] = std::sqrt(m2_[i] / count_ + 1e-8);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      out(r, c) = std::clamp((batch(r, c) - mean_[c]) / sd[c], -clip_, clip_);
    }
  }
  return out;
}

nn::Tensor ObsNormalizer::state() const {
  nn::Tensor s(3, mean_.size());
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    s(0, i) = mean_[i];
    s(1, i) = m2_[i];
    s(2, i) = count_;
  }
  return s;
}

void ObsNormalizer::load(const nn::Tensor& s) {
  nn::require_shape(s, 3, mean_.size(), "normalizer state");
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    mean_[i] = s(0, i);
    m2_[i] = s(1, i);
  }
  count_ = mean_.empty() ? 0.0 : s(2, 0);
}

nn::Tensor to_unit(const env::ActionSpace& space, const nn::Tensor& env_actions) {
  nn::Tensor out = env_actions;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const double mid = 0.5 * (space.high[c] + space.low[c]);
      const double half = 0.5 * (space.high[c] - space.low[c]);
      out(r, c) = (env_actions(r, c) - mid) / half;
    }
  }
  return out;
}

std::vector<double> from_unit(const env::ActionSpace& space, std::span<const double> unit) {
  std::vector<double> out(unit.size());
  for (std::size_t c = 0; c < unit.size(); ++c) {
    const double mid = 0.5 * (space.high[c] + space.low[c]);
    const double half = 0.5 * (space.high[c] - space.low[c]);
    out[c] = mid + half * std::clamp(unit[c], -1.0, 1.0);
  }
  return out;
}

nn::Tensor one_hot(std::span<const int> indices, std::size_t n) {
  nn::Tensor out(indices.size(), n);
  for (std::size_t r = 0; r < indices.size(); ++r) {
    if (indices[r] < 0 || static_cast<std::size_t>(indices[r]) >= n) throw std::out_of_range("one_hot index");
    out(r, static_cast<std::size_t>(indices[r])) = 1.0;
  }
  return out;
}

nn::Tensor encode_actions(const env::ActionSpace& space, const fitness::Batch& batch) {
  if (space.is_discrete()) return one_hot(batch.action_index, space.dim());
  return to_unit(space, batch.actions);
}

nn::Tensor softmax_rows(const nn::Tensor& logits, double temperature) {
  nn::Tensor out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < logits.cols(); ++c) m = std::max(m, logits(r, c) / temperature);
    double z = 0.0;
    for (std::size_t c = 0; c < logits.cols(); ++c) {
      out(r, c) = std::exp(logits(r, c) / temperature - m);
      z += out(r, c);
    }
    for (std::size_t c = 0; c < logits.cols(); ++c) out(r, c) /= z;
  }
  return out;
}

int sample_categorical(std::span<const double> probs, Rng& rng) {
  double u = uniform01(rng);
  for (std::size_t i = 0; i < probs.size(); ++i) {
    u -= probs[i];
    if (u < 0.0) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

int argmax(std::span<const double> values) {
  return static_cast<int>(std::max_element(values.begin(), values.end()) - values.begin());
}

std::vector<nn::Tensor> pack(std::span<const nn::Parameter* const> params) {
  std::vector<nn::Tensor> out;
  out.reserve(params.size());
  for (const auto* p : params) out.push_back(p->value);
  return out;
}

void unpack(std::span<nn::Parameter* const> params, std::span<const nn::Tensor> values) {
  if (params.size() > values.size()) throw std::invalid_argument("checkpoint has too few tensors");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->value.same_shape(values[i])) throw nn::ShapeError("checkpoint shape mismatch for " + params[i]->name);
    params[i]->value = values[i];
  }
}

}  // namespace evorl::algo
