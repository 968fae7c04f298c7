#include "evorl/algo/cgfpd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <Eigen/Core>

namespace evorl::algo {

using nn::Tensor;
using nn::Var;

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapC = Eigen::Map<const RowMat>;
using Map = Eigen::Map<RowMat>;

}  // namespace

void PlannerConfig::validate() const {
  if (candidates < 2) throw std::invalid_argument("planner: candidates must be >= 2");
  if (horizon < 1) throw std::invalid_argument("planner: horizon must be >= 1");
  if (cem_iters < 0) throw std::invalid_argument("planner: cem_iters must be >= 0");
  if (!(temperature > 0.0)) throw std::invalid_argument("planner: temperature must be > 0");
  if (!(elite_frac > 0.0 && elite_frac <= 1.0)) throw std::invalid_argument("planner: elite_frac must be in (0, 1]");
  if (proposal_std < 0.0) throw std::invalid_argument("planner: proposal_std must be >= 0");
}

// ---- proposals --------------------------------------------------------------------

Proposal initial_proposal(std::span<const double> policy_out, bool discrete, const PlannerConfig& config) {
  const std::size_t h = static_cast<std::size_t>(config.horizon);
  const std::size_t d = policy_out.size();
  Proposal p;
  p.discrete = discrete;
  if (discrete) {
    const Tensor probs = softmax_rows(Tensor::row(policy_out), 1.0 + config.proposal_std);
    p.probs = Tensor(h, d);
    for (std::size_t t = 0; t < h; ++t) std::copy_n(probs.data(), d, p.probs.data() + t * d);
  } else {
    p.mean = Tensor(h, d);
    p.stddev = Tensor(h, d, config.proposal_std);
    for (std::size_t t = 0; t < h; ++t) {
      for (std::size_t j = 0; j < d; ++j) p.mean(t, j) = std::clamp(policy_out[j], -1.0, 1.0);
    }
  }
  return p;
}

SequenceSet sample_sequences(const Proposal& proposal, std::size_t count, Rng& rng) {
  const std::size_t h = proposal.horizon();
  const std::size_t d = proposal.action_dim();
  SequenceSet s;
  s.discrete = proposal.discrete;
  s.steps.assign(h, Tensor(count, d));
  if (s.discrete) s.index.assign(h, std::vector<int>(count));
  for (std::size_t t = 0; t < h; ++t) {
    for (std::size_t i = 0; i < count; ++i) {
      if (s.discrete) {
        const int a = sample_categorical(proposal.probs.row_view(t), rng);
        s.index[t][i] = a;
        s.steps[t](i, static_cast<std::size_t>(a)) = 1.0;
      } else {
        for (std::size_t j = 0; j < d; ++j) {
          const double x = proposal.mean(t, j) + proposal.stddev(t, j) * standard_normal(rng);
          s.steps[t](i, j) = std::clamp(x, -1.0, 1.0);
        }
      }
    }
  }
  return s;
}

namespace {

std::vector<std::size_t> top_indices(std::span<const double> scores, std::size_t k) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  idx.resize(k);
  return idx;
}

Tensor vstack(const std::vector<const Tensor*>& parts) {
  std::size_t rows = 0;
  const std::size_t cols = parts.front()->cols();
  for (const Tensor* p : parts) rows += p->rows();
  Tensor out(rows, cols);
  double* dst = out.data();
  for (const Tensor* p : parts) dst = std::copy(p->values().begin(), p->values().end(), dst);
  return out;
}

}  // namespace

Proposal refit_proposal(const SequenceSet& population, std::span<const double> scores, double elite_frac) {
  const std::size_t n = population.count();
  if (scores.size() != n) throw std::invalid_argument("refit_proposal: score count mismatch");
  bool any_finite = false;
  for (double s : scores) any_finite = any_finite || std::isfinite(s);
  if (!any_finite) throw nn::NumericError("refit_proposal: all scores are non-finite");
  const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(elite_frac * static_cast<double>(n))));
  const auto elite = top_indices(scores, std::min(k, n));
  const std::size_t h = population.horizon();
  const std::size_t d = population.action_dim();
  const double inv = 1.0 / static_cast<double>(elite.size());
  Proposal p;
  p.discrete = population.discrete;
  if (p.discrete) {
    p.probs = Tensor(h, d);
    for (std::size_t t = 0; t < h; ++t) {
      for (std::size_t i : elite) p.probs(t, static_cast<std::size_t>(population.index[t][i])) += inv;
    }
  } else {
    p.mean = Tensor(h, d);
    p.stddev = Tensor(h, d);
    for (std::size_t t = 0; t < h; ++t) {
      for (std::size_t j = 0; j < d; ++j) {
        double m = 0.0;
        for (std::size_t i : elite) m += population.steps[t](i, j);
        m *= inv;
        double v = 0.0;
        for (std::size_t i : elite) v += (population.steps[t](i, j) - m) * (population.steps[t](i, j) - m);
        p.mean(t, j) = m;
        p.stddev(t, j) = std::sqrt(v * inv);
      }
    }
  }
  return p;
}

// ---- scoring --------------------------------------------------------------------------

ScoreResult score_sequences(const LatentModel& model, const Tensor& start, const SequenceSet& sequences,
                            const PlannerConfig& config) {
  const std::size_t n = sequences.count();
  if (start.rows() != n) throw nn::ShapeError("score_sequences: need one start row per sequence");
  const double dim = static_cast<double>(start.cols());
  const double h = static_cast<double>(sequences.horizon());
  std::vector<double> score(n, 0.0), survive(n, 1.0), jump(n, 0.0);
  Tensor z = start;
  for (std::size_t t = 0; t < sequences.horizon(); ++t) {
    LatentStep step = model.predict(z, sequences.steps[t]);
    if (!step.next.all_finite() || !step.reward.all_finite() || !step.done.all_finite()) {
      throw nn::NumericError("score_sequences: non-finite world-model output");
    }
    const auto rows = static_cast<Eigen::Index>(n);
    const auto cols = static_cast<Eigen::Index>(z.cols());
    const Eigen::VectorXd sq = (MapC(step.next.data(), rows, cols) - MapC(z.data(), rows, cols)).rowwise().squaredNorm();
    for (std::size_t i = 0; i < n; ++i) {
      const double d = step.done(i, 0);
      score[i] += survive[i] * step.reward(i, 0) + config.survival_weight * (1.0 - d);
      survive[i] *= 1.0 - d;
      jump[i] += sq[static_cast<Eigen::Index>(i)] / dim;
    }
    z = std::move(step.next);
  }
  for (std::size_t i = 0; i < n; ++i) score[i] -= config.consistency_weight * jump[i] / h;
  return {std::move(score), std::move(z)};
}

ScoreResult LatentModel::score(const Tensor& start, const SequenceSet& sequences, const PlannerConfig& config) const {
  return score_sequences(*this, start, sequences, config);
}

std::vector<PlanResult> plan(const LatentModel& model, const Tensor& starts, const std::vector<Proposal>& proposals,
                             const PlannerConfig& config, Rng& rng, const TerminalBonus& bonus) {
  config.validate();
  const std::size_t p_count = starts.rows();
  if (proposals.size() != p_count) throw std::invalid_argument("plan: one proposal per start state required");
  const std::size_t c = static_cast<std::size_t>(config.candidates);
  const std::size_t dim = starts.cols();

  Tensor tiled(p_count * c, dim);
  for (std::size_t p = 0; p < p_count; ++p) {
    for (std::size_t i = 0; i < c; ++i) std::copy_n(starts.data() + p * dim, dim, tiled.data() + (p * c + i) * dim);
  }

  std::vector<PlanResult> results(p_count);
  std::vector<Proposal> current = proposals;
  for (int iter = 0; iter <= config.cem_iters; ++iter) {
    for (std::size_t p = 0; p < p_count; ++p) results[p].population = sample_sequences(current[p], c, rng);
    SequenceSet all;
    all.discrete = results[0].population.discrete;
    const std::size_t h = results[0].population.horizon();
    for (std::size_t t = 0; t < h; ++t) {
      std::vector<const Tensor*> parts;
      for (std::size_t p = 0; p < p_count; ++p) parts.push_back(&results[p].population.steps[t]);
      all.steps.push_back(vstack(parts));
    }
    ScoreResult scored = model.score(tiled, all, config);
    if (bonus) {
      const auto extra = bonus(scored.final_latent);
      for (std::size_t i = 0; i < extra.size(); ++i) scored.scores[i] += extra[i];
    }
    for (std::size_t p = 0; p < p_count; ++p) {
      results[p].scores.assign(scored.scores.begin() + static_cast<std::ptrdiff_t>(p * c),
                               scored.scores.begin() + static_cast<std::ptrdiff_t>((p + 1) * c));
      if (iter < config.cem_iters) current[p] = refit_proposal(results[p].population, results[p].scores, config.elite_frac);
    }
  }
  return results;
}

TeacherSignal teacher_from(std::span<const double> scores, const Tensor& first_actions, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("teacher_from: temperature must be > 0");
  if (scores.size() != first_actions.rows()) throw std::invalid_argument("teacher_from: size mismatch");
  TeacherSignal t;
  const Tensor w = softmax_rows(Tensor::row(scores), tau);
  t.weights.assign(w.values().begin(), w.values().end());
  t.target.assign(first_actions.cols(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    for (std::size_t j = 0; j < first_actions.cols(); ++j) t.target[j] += t.weights[i] * first_actions(i, j);
  }
  return t;
}

Var distill_loss(Var policy_out, const Tensor& teacher, bool discrete) {
  nn::require_shape(teacher, policy_out.rows(), policy_out.cols(), "distill_loss teacher");
  nn::Tape& tape = policy_out.tape();
  const double inv_rows = 1.0 / static_cast<double>(teacher.rows());
  if (discrete) {
    for (std::size_t r = 0; r < teacher.rows(); ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < teacher.cols(); ++c) {
        if (teacher(r, c) < -1e-12) throw std::invalid_argument("distill_loss: negative teacher probability");
        s += teacher(r, c);
      }
      if (std::abs(s - 1.0) > 1e-6) throw std::invalid_argument("distill_loss: teacher rows must sum to 1");
    }
    return nn::sum(nn::mul(tape.constant(teacher), nn::log_softmax_rows(policy_out))) * -inv_rows;
  }
  return nn::sum(nn::abs(policy_out - tape.constant(teacher))) * inv_rows;
}

// ---- world model ----------------------------------------------------------------------

LatentWorldModel::LatentWorldModel(std::size_t latent_dim, std::size_t action_dim, std::size_t hidden, Rng& rng)
    : latent_dim_(latent_dim), net_({latent_dim + action_dim, hidden, latent_dim + 2}, "latent_model", rng) {}

LatentStep LatentWorldModel::predict(const Tensor& latent, const Tensor& action) const {
  const std::size_t rows = latent.rows();
  const auto d = static_cast<Eigen::Index>(latent_dim_);
  const auto a = static_cast<Eigen::Index>(action.cols());
  nn::require_shape(latent, rows, latent_dim_, "latent model input");
  nn::require_shape(action, rows, net_.in_dim() - latent_dim_, "latent model action");
  const nn::Linear& l1 = net_.layers().front();
  const nn::Linear& l2 = net_.layers().back();
  const auto hidden = static_cast<Eigen::Index>(l1.out_dim());
  const auto w = static_cast<Eigen::Index>(l2.out_dim());
  const auto n = static_cast<Eigen::Index>(rows);

  const MapC z(latent.data(), n, d);
  const MapC act(action.data(), n, a);
  const MapC w1(l1.weight.value.data(), d + a, hidden);
  const MapC w2(l2.weight.value.data(), hidden, w);
  RowMat h = z * w1.topRows(d);
  h.noalias() += act * w1.bottomRows(a);
  h.rowwise() += MapC(l1.bias.value.data(), 1, hidden).row(0);
  h = h.array().tanh().matrix();

  LatentStep s{Tensor(rows, latent_dim_), Tensor(rows, 1), Tensor(rows, 1)};
  Map next(s.next.data(), n, d);
  next = z;
  next.noalias() += h * w2.leftCols(d);
  next.rowwise() += MapC(l2.bias.value.data(), 1, w).row(0).head(d);
  const Eigen::VectorXd heads_r = h * w2.col(d);
  const Eigen::VectorXd heads_d = h * w2.col(d + 1);
  const double br = l2.bias.value[static_cast<std::size_t>(d)];
  const double bd = l2.bias.value[static_cast<std::size_t>(d) + 1];
  for (std::size_t i = 0; i < rows; ++i) {
    s.reward[i] = heads_r[static_cast<Eigen::Index>(i)] + br;
    const double x = heads_d[static_cast<Eigen::Index>(i)] + bd;
    s.done[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return s;
}

ScoreResult LatentWorldModel::score(const Tensor& start, const SequenceSet& sequences,
                                    const PlannerConfig& config) const {
  using MatF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using VecF = Eigen::VectorXf;
  const std::size_t n = sequences.count();
  if (start.rows() != n) throw nn::ShapeError("score: need one start row per sequence");
  nn::require_shape(start, n, latent_dim_, "latent model input");
  const auto d = static_cast<Eigen::Index>(latent_dim_);
  const auto rows = static_cast<Eigen::Index>(n);
  const nn::Linear& l1 = net_.layers().front();
  const nn::Linear& l2 = net_.layers().back();
  const auto hidden = static_cast<Eigen::Index>(l1.out_dim());
  const auto w = static_cast<Eigen::Index>(l2.out_dim());
  const auto a = static_cast<Eigen::Index>(l1.in_dim()) - d;
  const MatF w1 = MapC(l1.weight.value.data(), d + a, hidden).cast<float>();
  const MatF w1z = w1.topRows(d);
  const MatF w1a = w1.bottomRows(a);
  const Eigen::RowVectorXf b1 = MapC(l1.bias.value.data(), 1, hidden).cast<float>();
  const MatF w2 = MapC(l2.weight.value.data(), hidden, w).cast<float>();
  const MatF w2d = w2.leftCols(d);
  const VecF w2r = w2.col(d);
  const VecF w2t = w2.col(d + 1);
  const Eigen::RowVectorXf b2d = MapC(l2.bias.value.data(), 1, w).cast<float>().leftCols(d);
  const double br = l2.bias.value[latent_dim_];
  const double bt = l2.bias.value[latent_dim_ + 1];

  MatF z = MapC(start.data(), rows, d).cast<float>();
  MatF h(rows, hidden), delta(rows, d);
  const double dim = static_cast<double>(latent_dim_);
  std::vector<double> total(n, 0.0), survive(n, 1.0), jump(n, 0.0);
  for (const Tensor& step : sequences.steps) {
    nn::require_shape(step, n, static_cast<std::size_t>(a), "latent model action");
    h.noalias() = z * w1z;
    h.noalias() += MapC(step.data(), rows, a).cast<float>() * w1a;
    h.rowwise() += b1;
    h = h.array().tanh().matrix();
    delta.noalias() = h * w2d;
    delta.rowwise() += b2d;
    const VecF r = h * w2r;
    const VecF t = h * w2t;
    const VecF sq = delta.rowwise().squaredNorm();
    z += delta;
    for (std::size_t i = 0; i < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double x = static_cast<double>(t[ii]) + bt;
      const double done = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      const double reward = static_cast<double>(r[ii]) + br;
      total[i] += survive[i] * reward + config.survival_weight * (1.0 - done);
      survive[i] *= 1.0 - done;
      jump[i] += static_cast<double>(sq[ii]) / dim;
    }
  }
  if (!z.allFinite()) throw nn::NumericError("score: non-finite world-model output");
  const double h_steps = static_cast<double>(sequences.horizon());
  for (std::size_t i = 0; i < n; ++i) {
    total[i] -= config.consistency_weight * jump[i] / h_steps;
    if (!std::isfinite(total[i])) throw nn::NumericError("score: non-finite world-model output");
  }
  ScoreResult out{std::move(total), Tensor(n, latent_dim_)};
  Map(out.final_latent.data(), rows, d) = z.cast<double>();
  return out;
}

LatentWorldModel::Heads LatentWorldModel::forward(nn::Tape& tape, Var latent, Var action, nn::Binding binding) {
  const Var out = net_.forward(tape, nn::concat_cols({latent, action}), binding).output;
  return {nn::slice_cols(out, 0, latent_dim_), nn::slice_cols(out, latent_dim_, 1), nn::slice_cols(out, latent_dim_ + 1, 1)};
}

// ---- configuration -------------------------------------------------------------------

ParamRegistry CgfpdConfig::registry() {
  const CgfpdConfig d;
  return {
      {"candidates", static_cast<double>(d.planner.candidates), "planner", false},
      {"horizon", static_cast<double>(d.planner.horizon), "planner", false},
      {"cem_iters", static_cast<double>(d.planner.cem_iters), "planner", false},
      {"elite_frac", d.planner.elite_frac, "planner", false},
      {"temperature", d.planner.temperature, "planner", true},
      {"survival_weight", d.planner.survival_weight, "planner", false},
      {"consistency_weight", d.planner.consistency_weight, "planner", false},
      {"proposal_std", d.planner.proposal_std, "planner", false},
      {"dyn_weight", d.dyn_weight, "loss", false},
      {"reward_weight", d.reward_weight, "loss", false},
      {"done_weight", d.done_weight, "loss", false},
      {"shaping_weight", d.shaping_weight, "loss", false},
      {"contrast_weight", d.contrast_weight, "loss", false},
      {"contrast_temperature", d.contrast_temperature, "loss", true},
      {"target_rate", d.target_rate, "ema", true},
      {"exploration", d.exploration, "exploration", false},
      {"grad_clip", d.grad_clip, "optimizer", false},
      {"normalize_obs", d.normalize_obs ? 1.0 : 0.0, "compute", false},
      {"world_hidden", static_cast<double>(d.world_hidden), "compute", false},
      {"plan_states", static_cast<double>(d.plan_states), "compute", false},
      {"learning_starts", static_cast<double>(d.schedule.learning_starts), "compute", false},
      {"update_every", static_cast<double>(d.schedule.update_every), "compute", false},
      {"batch_size", static_cast<double>(d.schedule.batch_size), "compute", false},
      {"policy_hidden", static_cast<double>(d.policy_hidden), "compute", false},
  };
}

void CgfpdConfig::apply(const ParamValues& values) {
  ParamBinder b(values);
  b.bind("candidates", planner.candidates);
  b.bind("horizon", planner.horizon);
  b.bind("cem_iters", planner.cem_iters);
  b.bind("elite_frac", planner.elite_frac);
  b.bind("temperature", planner.temperature);
  b.bind("survival_weight", planner.survival_weight);
  b.bind("consistency_weight", planner.consistency_weight);
  b.bind("proposal_std", planner.proposal_std);
  b.bind("dyn_weight", dyn_weight);
  b.bind("reward_weight", reward_weight);
  b.bind("done_weight", done_weight);
  b.bind("shaping_weight", shaping_weight);
  b.bind("contrast_weight", contrast_weight);
  b.bind("contrast_temperature", contrast_temperature);
  b.bind("target_rate", target_rate);
  b.bind("exploration", exploration);
  b.bind("grad_clip", grad_clip);
  double norm = normalize_obs ? 1.0 : 0.0;
  b.bind("normalize_obs", norm);
  normalize_obs = norm != 0.0;
  b.bind("world_hidden", world_hidden);
  b.bind("plan_states", plan_states);
  b.bind("learning_starts", schedule.learning_starts);
  b.bind("update_every", schedule.update_every);
  b.bind("batch_size", schedule.batch_size);
  b.bind("policy_hidden", policy_hidden);
  b.finish();
  planner.validate();
  if (schedule.update_every < 1 || schedule.batch_size < 1) throw std::invalid_argument("schedule values must be >= 1");
  if (!(target_rate >= 0.0 && target_rate <= 1.0)) throw std::invalid_argument("target_rate must be in [0, 1]");
}

// ---- agent ---------------------------------------------------------------------------------

CgfpdAgent::CgfpdAgent(const env::EnvSpec& spec, std::uint64_t seed, CgfpdConfig config)
    : spec_(spec), config_(config), rng_(seed), head_dim_(spec.action_space.dim()) {
  config_.planner.validate();
  policy_ = nn::MlpPolicy(spec.obs_dim, head_dim_, rng_, config_.policy_hidden);
  target_ = nn::EmaTracker(policy_.net(), config_.target_rate);
  model_ = LatentWorldModel(config_.policy_hidden, head_dim_, config_.world_hidden, rng_);
  probe_ = nn::Linear(config_.policy_hidden, 1, "reward_probe", rng_);
  normalizer_ = ObsNormalizer(spec.obs_dim, config_.normalize_obs);
  if (config_.exploration < 0.0) config_.exploration = spec.action_space.is_discrete() ? 1.0 : 0.1;
}

Tensor CgfpdAgent::policy_output(std::span<const double> obs) const {
  return policy_.forward(Tensor::row(normalizer_.apply(obs)));
}

env::Action CgfpdAgent::act(std::span<const double> obs, bool deterministic) {
  const Tensor out = policy_output(obs);
  if (spec_.action_space.is_discrete()) {
    if (deterministic) return env::Action::discrete(argmax(out.values()));
    const Tensor probs = softmax_rows(out, std::max(config_.exploration, 1e-6));
    return env::Action::discrete(sample_categorical(probs.values(), rng_));
  }
  std::vector<double> u(out.values().begin(), out.values().end());
  if (!deterministic) {
    for (double& x : u) x += config_.exploration * standard_normal(rng_);
  }
  return env::Action::continuous(from_unit(spec_.action_space, u));
}

void CgfpdAgent::observe(const fitness::Transition& t) { normalizer_.update(t.obs); }

std::vector<nn::Parameter*> CgfpdAgent::trainable() {
  std::vector<nn::Parameter*> ps = policy_.parameters();
  for (auto* p : model_.net().parameters()) ps.push_back(p);
  ps.push_back(&probe_.weight);
  ps.push_back(&probe_.bias);
  for (auto* p : extra_parameters()) ps.push_back(p);
  return ps;
}

CgfpdTargets CgfpdAgent::prepare(const fitness::Batch& batch) {
  CgfpdTargets t;
  const std::size_t b = batch.size();
  t.obs = normalizer_.apply(batch.obs);
  t.next_obs = normalizer_.apply(batch.next_obs);
  t.actions = encode_actions(spec_.action_space, batch);
  t.rewards = batch.rewards;
  t.terminated = batch.terminated;
  t.next_latent = target_.shadow().features(t.next_obs);

  double mean = 0.0, var = 0.0;
  for (std::size_t i = 0; i < b; ++i) mean += batch.rewards(i, 0);
  mean /= static_cast<double>(b);
  for (std::size_t i = 0; i < b; ++i) var += (batch.rewards(i, 0) - mean) * (batch.rewards(i, 0) - mean);
  const double sd = std::sqrt(var / static_cast<double>(b));
  t.reward_std = Tensor(b, 1);
  if (sd > 1e-6) {
    for (std::size_t i = 0; i < b; ++i) t.reward_std(i, 0) = (batch.rewards(i, 0) - mean) / sd;
  }

  const std::size_t p_count = std::max<std::size_t>(1, std::min(config_.plan_states, b));
  Tensor start(p_count, t.obs.cols());
  std::copy_n(t.obs.data(), p_count * t.obs.cols(), start.data());
  Tensor latent, out;
  policy_.net().forward(start, latent, out);
  std::vector<Proposal> proposals;
  for (std::size_t p = 0; p < p_count; ++p) {
    proposals.push_back(initial_proposal(out.row_view(p), spec_.action_space.is_discrete(), config_.planner));
  }
  const auto results = plan(model_, latent, proposals, config_.planner, rng_, terminal_bonus());
  t.teacher = Tensor(p_count, head_dim_);
  for (std::size_t p = 0; p < p_count; ++p) {
    const auto teacher = teacher_from(results[p].scores, results[p].population.first_actions(), config_.planner.temperature);
    std::copy(teacher.target.begin(), teacher.target.end(), t.teacher.data() + p * head_dim_);
  }
  extend_targets(batch, t);
  return t;
}

CgfpdLoss CgfpdAgent::compute_loss(nn::Tape& tape, const CgfpdTargets& t) {
  CgfpdLoss loss;
  const std::size_t b = t.obs.rows();
  const auto pol = policy_.forward(tape, tape.constant(t.obs));
  const Var z = pol.features;

  const Var plan = distill_loss(nn::slice_rows(pol.output, 0, t.teacher.rows()), t.teacher,
                                spec_.action_space.is_discrete());
  const auto heads = model_.forward(tape, z, tape.constant(t.actions));
  const Var predicted = z + heads.delta;
  const Var dyn = nn::mean(nn::square(predicted - tape.constant(t.next_latent)));
  const Var rew = nn::mean(nn::square(heads.reward - tape.constant(t.rewards)));
  const Var done = nn::mean(nn::bce_with_logits(heads.done_logit, tape.constant(t.terminated)));
  const Var shaping = nn::mean(nn::square(probe_.forward(tape, z) - tape.constant(t.reward_std)));

  Tensor target_unit = t.next_latent;
  for (std::size_t i = 0; i < b; ++i) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < target_unit.cols(); ++j) n2 += target_unit(i, j) * target_unit(i, j);
    const double inv = 1.0 / std::sqrt(n2 + 1e-12);
    for (std::size_t j = 0; j < target_unit.cols(); ++j) target_unit(i, j) *= inv;
  }
  Tensor eye(b, b);
  for (std::size_t i = 0; i < b; ++i) eye(i, i) = 1.0;
  const Var pred_unit = predicted / nn::row_norm(predicted, 1e-12);
  const Var sims = nn::matmul_nt(pred_unit, tape.constant(target_unit)) * (1.0 / config_.contrast_temperature);
  const Var contrast = nn::sum(nn::mul(nn::log_softmax_rows(sims), tape.constant(eye))) * (-1.0 / static_cast<double>(b));

  Var total = plan + config_.dyn_weight * dyn + config_.reward_weight * rew + config_.done_weight * done +
              config_.shaping_weight * shaping + config_.contrast_weight * contrast;
  const Var extra = extra_loss(tape, t, z);
  if (extra.valid()) {
    total = total + extra;
    loss.extra = extra.value().item();
  }
  loss.total = total;
  loss.plan = plan.value().item();
  loss.dyn = dyn.value().item();
  loss.reward = rew.value().item();
  loss.done = done.value().item();
  loss.shaping = shaping.value().item();
  loss.contrast = contrast.value().item();
  return loss;
}

fitness::UpdateStats CgfpdAgent::update(const fitness::Batch& batch, std::int64_t global_step) {
  if (!optimizer_) optimizer_ = std::make_unique<nn::Adam>(trainable(), nn::AdamConfig{config_.lr});
  const CgfpdTargets targets = prepare(batch);
  nn::Tape tape;
  const CgfpdLoss loss = compute_loss(tape, targets);
  optimizer_->zero_grad();
  tape.backward(loss.total);
  auto params = optimizer_->parameters();
  const double gnorm = nn::clip_grad_norm(params, config_.grad_clip);
  optimizer_->step();
  target_.update(policy_.net());
  after_update(global_step);
  return {loss.total.value().item(), gnorm};
}

double CgfpdAgent::parameter_norm() const {
  const auto ps = policy_.net().parameters();
  return nn::parameter_norm(ps);
}

std::vector<Tensor> CgfpdAgent::checkpoint() const {
  const auto ps = policy_.net().parameters();
  auto out = pack(ps);
  out.push_back(normalizer_.state());
  return out;
}

void CgfpdAgent::restore(const std::vector<Tensor>& state) {
  auto ps = policy_.parameters();
  if (state.size() != ps.size() + 1) throw std::invalid_argument("checkpoint size mismatch");
  unpack(ps, state);
  normalizer_.load(state.back());
}

}  // namespace evorl::algo
