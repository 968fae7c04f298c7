#include "evorl/algo/dfcwpcp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace evorl::algo {

using nn::Tensor;
using nn::Var;

Var latent_action(Var head) { return nn::tanh(head); }

Tensor latent_action(const Tensor& head) {
  Tensor out = head;
  for (double& v : out.values()) v = std::tanh(v);
  return out;
}

Var flow_alignment_loss(Var flow, const std::vector<Tensor>& references, double guard) {
  nn::Tape& tape = flow.tape();
  const std::size_t rows = flow.rows();
  const std::size_t cols = flow.cols();
  const Tensor& fv = flow.value();
  Tensor flow_ok(rows, 1);
  for (std::size_t i = 0; i < rows; ++i) {
    double n2 = 0.0;
    for (std::size_t j = 0; j < cols; ++j) n2 += fv(i, j) * fv(i, j);
    flow_ok[i] = std::sqrt(n2) >= guard ? 1.0 : 0.0;
  }
  const Var norm = nn::row_norm(flow);
  Var total;
  for (const Tensor& ref : references) {
    nn::require_shape(ref, rows, cols, "flow reference");
    Tensor unit = ref;
    Tensor mask = flow_ok;
    for (std::size_t i = 0; i < rows; ++i) {
      double n2 = 0.0;
      for (std::size_t j = 0; j < cols; ++j) n2 += ref(i, j) * ref(i, j);
      const double n = std::sqrt(n2);
      if (n < guard) {
        mask[i] = 0.0;
        for (std::size_t j = 0; j < cols; ++j) unit(i, j) = 0.0;
      } else {
        for (std::size_t j = 0; j < cols; ++j) unit(i, j) /= n;
      }
    }
    const Var cos = nn::sum_cols(flow * tape.constant(std::move(unit))) / norm;
    const Var term = nn::sum(tape.constant(std::move(mask)) * (1.0 - cos));
    total = total.valid() ? total + term : term;
  }
  if (!total.valid()) return tape.constant(Tensor::scalar(0.0));
  return total * (1.0 / static_cast<double>(rows));
}

StepScore step_desirability(Var reward, Var done, Var confidence, double termination_penalty,
                            double confidence_penalty) {
  const Var o = confidence * (reward - done * termination_penalty) - (1.0 - confidence) * confidence_penalty;
  return {o, nn::tanh(o)};
}

double step_desirability(double reward, double done, double confidence, double termination_penalty,
                         double confidence_penalty) {
  return confidence * (reward - termination_penalty * done) - confidence_penalty * (1.0 - confidence);
}

Var plan_objective(const std::vector<Var>& o_bar, double gamma) {
  if (o_bar.empty()) throw std::invalid_argument("plan_objective: empty horizon");
  const double inv_h = 1.0 / static_cast<double>(o_bar.size());
  Var g = o_bar[0] * inv_h;
  double w = 1.0;
  for (std::size_t k = 1; k < o_bar.size(); ++k) {
    w *= gamma;
    g = g + o_bar[k] * (w * inv_h);
  }
  return g;
}

double plan_objective(std::span<const double> o_bar, double gamma) {
  if (o_bar.empty()) throw std::invalid_argument("plan_objective: empty horizon");
  double g = 0.0, w = 1.0;
  for (double o : o_bar) {
    g += w * o;
    w *= gamma;
  }
  return g / static_cast<double>(o_bar.size());
}

Var controllability(const std::vector<Var>& grad_norm, const std::vector<Var>& confidence, double gamma,
                    double clip) {
  if (grad_norm.empty() || grad_norm.size() != confidence.size()) {
    throw std::invalid_argument("controllability: mismatched horizon");
  }
  const double inv_h = 1.0 / static_cast<double>(grad_norm.size());
  Var total;
  double w = 1.0;
  for (std::size_t k = 0; k < grad_norm.size(); ++k) {
    const Var term = confidence[k] * nn::clamp(grad_norm[k], 0.0, clip) * (w * inv_h);
    total = total.valid() ? total + term : term;
    w *= gamma;
  }
  return total;
}

double controllability(std::span<const double> grad_norm, std::span<const double> confidence, double gamma,
                       double clip) {
  if (grad_norm.empty() || grad_norm.size() != confidence.size()) {
    throw std::invalid_argument("controllability: mismatched horizon");
  }
  double c = 0.0, w = 1.0;
  for (std::size_t k = 0; k < grad_norm.size(); ++k) {
    c += w * confidence[k] * std::min(grad_norm[k], clip);
    w *= gamma;
  }
  return c / static_cast<double>(grad_norm.size());
}

Var anchor_loss(Var action, Var slow_action, Var confidence) {
  const double inv = 1.0 / static_cast<double>(action.rows());
  return nn::sum(confidence * nn::sum_cols(nn::square(action - slow_action))) * inv;
}

double warmup_weight(std::int64_t global_step, std::int64_t warmup) {
  if (warmup <= 0) return 1.0;
  return std::clamp(static_cast<double>(global_step) / static_cast<double>(warmup), 0.0, 1.0);
}

// ---- world model ----------------------------------------------------------------------

ObsWorldModel::ObsWorldModel(std::size_t obs_dim, std::size_t action_dim, std::size_t hidden, Rng& rng)
    : obs_dim_(obs_dim),
      dyn_({obs_dim + action_dim, hidden, obs_dim + 1}, "dyn", rng),
      rew_({2 * obs_dim + action_dim, hidden, 2}, "rew", rng),
      done_({obs_dim, hidden, 2}, "done", rng) {}

ObsWorldModel::Dyn ObsWorldModel::dynamics(nn::Tape& tape, Var s, Var a, nn::Binding binding) {
  const Var out = dyn_.forward(tape, nn::concat_cols({s, a}), binding).output;
  return {nn::slice_cols(out, 0, obs_dim_), nn::slice_cols(out, obs_dim_, 1)};
}

ObsWorldModel::Rew ObsWorldModel::reward(nn::Tape& tape, Var s, Var a, Var s_next, nn::Binding binding) {
  const Var out = rew_.forward(tape, nn::concat_cols({s, a, s_next}), binding).output;
  return {nn::slice_cols(out, 0, 1), nn::slice_cols(out, 1, 1)};
}

ObsWorldModel::Done ObsWorldModel::done(nn::Tape& tape, Var s_next, nn::Binding binding) {
  const Var out = done_.forward(tape, s_next, binding).output;
  return {nn::slice_cols(out, 0, 1), nn::slice_cols(out, 1, 1)};
}

std::vector<nn::Parameter*> ObsWorldModel::parameters() {
  std::vector<nn::Parameter*> ps;
  for (nn::Mlp* m : {&dyn_, &rew_, &done_}) {
    for (auto* p : m->parameters()) ps.push_back(p);
  }
  return ps;
}

ObsWorldModel::Jvp mlp_jvp(nn::Tape& tape, const nn::Mlp& net, Var x, Var dx) {
  if (net.layers().size() != 2) throw std::invalid_argument("mlp_jvp: expects one hidden layer");
  const nn::Linear& l1 = net.layers()[0];
  const nn::Linear& l2 = net.layers()[1];
  const Var w1 = tape.frozen(l1.weight);
  const Var w2 = tape.frozen(l2.weight);
  const Var h = nn::tanh(nn::affine(x, w1, tape.frozen(l1.bias)));
  const Var dh = (1.0 - nn::square(h)) * nn::matmul(dx, w1);
  return {nn::affine(h, w2, tape.frozen(l2.bias)), nn::matmul(dh, w2)};
}

// ---- configuration -------------------------------------------------------------------

void DfConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("dfcwpcp: horizon must be >= 1");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("dfcwpcp: gamma must be in (0, 1]");
  for (double w : {termination_penalty, confidence_penalty, controllability_weight, anchor_weight, entropy_weight,
                   action_weight, logit_weight, state_weight, controllability_clip}) {
    if (w < 0.0) throw std::invalid_argument("dfcwpcp: weights must be >= 0");
  }
  if (!(slow_rate < fast_rate)) throw std::invalid_argument("dfcwpcp: slow_rate must be < fast_rate");
  if (!(relax_temperature > 0.0)) throw std::invalid_argument("dfcwpcp: relax_temperature must be > 0");
}

ParamRegistry DfConfig::registry() {
  const DfConfig d;
  return {
      {"horizon", static_cast<double>(d.horizon), "planner", false},
      {"gamma", d.gamma, "planner", false},
      {"termination_penalty", d.termination_penalty, "planner", false},
      {"confidence_penalty", d.confidence_penalty, "planner", false},
      {"controllability_weight", d.controllability_weight, "planner", false},
      {"anchor_weight", d.anchor_weight, "loss", false},
      {"controllability_clip", d.controllability_clip, "planner", false},
      {"entropy_weight", d.entropy_weight, "regularizer", true},
      {"action_weight", d.action_weight, "regularizer", true},
      {"logit_weight", d.logit_weight, "regularizer", true},
      {"state_weight", d.state_weight, "regularizer", true},
      {"fast_rate", d.fast_rate, "ema", true},
      {"slow_rate", d.slow_rate, "ema", true},
      {"flow_weight", d.flow_weight, "loss", false},
      {"aux_weight", d.aux_weight, "loss", false},
      {"model_weight", d.model_weight, "loss", false},
      {"confidence_weight", d.confidence_weight, "loss", false},
      {"relax_temperature", d.relax_temperature, "planner", true},
      {"exploration", d.exploration, "exploration", false},
      {"grad_clip", d.grad_clip, "optimizer", false},
      {"warmup_steps", static_cast<double>(d.warmup_steps), "compute", false},
      {"exact_controllability", d.exact_controllability ? 1.0 : 0.0, "compute", false},
      {"normalize_obs", d.normalize_obs ? 1.0 : 0.0, "compute", false},
      {"world_hidden", static_cast<double>(d.world_hidden), "compute", false},
      {"plan_states", static_cast<double>(d.plan_states), "compute", false},
      {"learning_starts", static_cast<double>(d.schedule.learning_starts), "compute", false},
      {"update_every", static_cast<double>(d.schedule.update_every), "compute", false},
      {"batch_size", static_cast<double>(d.schedule.batch_size), "compute", false},
      {"policy_hidden", static_cast<double>(d.policy_hidden), "compute", false},
  };
}

void DfConfig::apply(const ParamValues& values) {
  ParamBinder b(values);
  b.bind("horizon", horizon);
  b.bind("gamma", gamma);
  b.bind("termination_penalty", termination_penalty);
  b.bind("confidence_penalty", confidence_penalty);
  b.bind("controllability_weight", controllability_weight);
  b.bind("anchor_weight", anchor_weight);
  b.bind("controllability_clip", controllability_clip);
  b.bind("entropy_weight", entropy_weight);
  b.bind("action_weight", action_weight);
  b.bind("logit_weight", logit_weight);
  b.bind("state_weight", state_weight);
  b.bind("fast_rate", fast_rate);
  b.bind("slow_rate", slow_rate);
  b.bind("flow_weight", flow_weight);
  b.bind("aux_weight", aux_weight);
  b.bind("model_weight", model_weight);
  b.bind("confidence_weight", confidence_weight);
  b.bind("relax_temperature", relax_temperature);
  b.bind("exploration", exploration);
  b.bind("grad_clip", grad_clip);
  b.bind("warmup_steps", warmup_steps);
  double exact = exact_controllability ? 1.0 : 0.0;
  b.bind("exact_controllability", exact);
  exact_controllability = exact != 0.0;
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
  validate();
  if (schedule.update_every < 1 || schedule.batch_size < 1) throw std::invalid_argument("schedule values must be >= 1");
}

// ---- agent ---------------------------------------------------------------------------------

DfcwpcpAgent::DfcwpcpAgent(const env::EnvSpec& spec, std::uint64_t seed, DfConfig config)
    : spec_(spec), config_(config), rng_(seed), head_dim_(spec.action_space.dim()) {
  config_.validate();
  policy_ = nn::MlpPolicy(spec.obs_dim, head_dim_, rng_, config_.policy_hidden);
  fast_ = nn::EmaTracker(policy_.net(), config_.fast_rate);
  slow_ = nn::EmaTracker(policy_.net(), config_.slow_rate);
  model_ = ObsWorldModel(spec.obs_dim, head_dim_, config_.world_hidden, rng_);
  aux_ = nn::Linear(2 * head_dim_, head_dim_, "aux", rng_);
  normalizer_ = ObsNormalizer(spec.obs_dim, config_.normalize_obs);
  if (config_.exploration < 0.0) config_.exploration = spec.action_space.is_discrete() ? 1.0 : 0.1;
}

env::Action DfcwpcpAgent::act(std::span<const double> obs, bool deterministic) {
  const Tensor out = policy_.forward(Tensor::row(normalizer_.apply(obs)));
  if (spec_.action_space.is_discrete()) {
    if (deterministic) return env::Action::discrete(argmax(out.values()));
    const Tensor probs = softmax_rows(out, std::max(config_.exploration, 1e-6));
    return env::Action::discrete(sample_categorical(probs.values(), rng_));
  }
  std::vector<double> u(out.size());
  for (std::size_t j = 0; j < u.size(); ++j) {
    u[j] = std::tanh(out[j]);
    if (!deterministic) u[j] += config_.exploration * standard_normal(rng_);
  }
  return env::Action::continuous(from_unit(spec_.action_space, u));
}

void DfcwpcpAgent::observe(const fitness::Transition& t) { normalizer_.update(t.obs); }

std::vector<nn::Parameter*> DfcwpcpAgent::trainable() {
  std::vector<nn::Parameter*> ps = policy_.parameters();
  for (auto* p : model_.parameters()) ps.push_back(p);
  ps.push_back(&aux_.weight);
  ps.push_back(&aux_.bias);
  return ps;
}

Tensor DfcwpcpAgent::flow_of(const nn::Mlp& net, const Tensor& obs, const Tensor& next_obs) const {
  Tensor flow = latent_action(net.forward(next_obs));
  flow -= latent_action(net.forward(obs));
  return flow;
}

DfTargets DfcwpcpAgent::prepare(const fitness::Batch& batch) const {
  DfTargets t;
  t.obs = normalizer_.apply(batch.obs);
  t.next_obs = normalizer_.apply(batch.next_obs);
  t.actions = encode_actions(spec_.action_space, batch);
  t.rewards = batch.rewards;
  t.terminated = batch.terminated;
  t.fast_flow = flow_of(fast_.shadow(), t.obs, t.next_obs);
  t.slow_flow = flow_of(slow_.shadow(), t.obs, t.next_obs);
  return t;
}

Var DfcwpcpAgent::relaxed_action(Var head) const {
  if (spec_.action_space.is_discrete()) return nn::softmax_rows(head * (1.0 / config_.relax_temperature));
  return nn::tanh(head);
}

DfLoss DfcwpcpAgent::compute_loss(nn::Tape& tape, const DfTargets& t, std::int64_t global_step) {
  using nn::Binding;
  DfLoss out;
  const std::size_t b = t.obs.rows();
  const std::size_t obs_dim = t.obs.cols();
  const Var s = tape.constant(t.obs);
  const Var s_next = tape.constant(t.next_obs);
  const Var a = tape.constant(t.actions);

  // world model on real transitions
  const auto dyn = model_.dynamics(tape, s, a);
  const Var dyn_err = nn::square(s + dyn.delta - s_next);
  const Var l_dyn = nn::mean(dyn_err);
  const auto rew = model_.reward(tape, s, a, s_next);
  const Var rew_res = rew.reward - tape.constant(t.rewards);
  const Var l_rew = nn::mean(nn::square(rew_res));
  const auto dn = model_.done(tape, s_next);
  const Var done_bce = nn::bce_with_logits(dn.logit, tape.constant(t.terminated));
  const Var l_done = nn::mean(done_bce);
  const Var model = l_dyn + l_rew + l_done;

  const Var e_dyn = tape.detach(nn::sum_cols(dyn_err) * (1.0 / static_cast<double>(obs_dim)));
  const Var e_rew = tape.detach(nn::abs(rew_res));
  const Var e_done = tape.detach(done_bce);
  const Var conf = nn::mean(nn::bce_with_logits(dyn.conf_logit, nn::exp(-e_dyn))) +
                   nn::mean(nn::bce_with_logits(rew.conf_logit, nn::exp(-e_rew))) +
                   nn::mean(nn::bce_with_logits(dn.conf_logit, nn::exp(-e_done)));

  // dual flow alignment and auxiliary latent prediction
  const Var head = policy_.forward(tape, s).output;
  const Var head_next = policy_.forward(tape, s_next).output;
  const Var lat = latent_action(head);
  const Var lat_next = latent_action(head_next);
  const Var flow = flow_alignment_loss(lat_next - lat, {t.fast_flow, t.slow_flow});
  const Var aux_pred = aux_.forward(tape, nn::concat_cols({lat, a}));
  const Var aux = nn::mean(nn::square(aux_pred - tape.detach(lat_next)));

  // imagined rollout from the first plan_states rows
  const std::size_t p = std::max<std::size_t>(1, std::min(config_.plan_states, b));
  const std::size_t h = static_cast<std::size_t>(config_.horizon);
  const std::size_t adim = head_dim_;
  const bool discrete = spec_.action_space.is_discrete();
  Tensor start(p, obs_dim);
  std::copy_n(t.obs.data(), p * obs_dim, start.data());
  Var sk = tape.constant(std::move(start));
  Tensor tangent(adim * p, adim);
  for (std::size_t j = 0; j < adim; ++j) {
    for (std::size_t i = 0; i < p; ++i) tangent(j * p + i, j) = 1.0;
  }
  const Var zero_s = tape.constant(Tensor(adim * p, obs_dim));

  std::vector<Var> o_bar, grad_norm, confidence;
  Var anchor, reg;
  const double inv_p = 1.0 / static_cast<double>(p);
  for (std::size_t k = 0; k < h; ++k) {
    const Var out_k = policy_.forward(tape, sk).output;
    const Var ak = relaxed_action(out_k);
    const auto d = model_.dynamics(tape, sk, ak, Binding::kFrozen);
    const Var s1 = sk + d.delta;
    const auto r = model_.reward(tape, sk, ak, s1, Binding::kFrozen);
    const auto e = model_.done(tape, s1, Binding::kFrozen);
    const Var c_dyn = nn::sigmoid(d.conf_logit);
    const Var c_rew = nn::sigmoid(r.conf_logit);
    const Var c_done = nn::sigmoid(e.conf_logit);
    const Var ck = c_dyn * c_rew * c_done;
    const Var dk = nn::sigmoid(e.logit);
    const StepScore sc = step_desirability(r.reward, dk, ck, config_.termination_penalty, config_.confidence_penalty);
    o_bar.push_back(sc.o_bar);
    confidence.push_back(ck);

    // sensitivity of o_bar to the action, one tangent per action dimension
    Var gnorm;
    if (config_.exact_controllability) {
      const Var st = nn::tile_rows(sk, adim);
      const Var at = nn::tile_rows(ak, adim);
      const Var da = tape.constant(tangent);
      const auto jd = mlp_jvp(tape, model_.dyn_net(), nn::concat_cols({st, at}), nn::concat_cols({zero_s, da}));
      const Var ds1 = nn::slice_cols(jd.tangent, 0, obs_dim);
      const Var s1t = st + nn::slice_cols(jd.value, 0, obs_dim);
      const auto jr = mlp_jvp(tape, model_.rew_net(), nn::concat_cols({st, at, s1t}), nn::concat_cols({zero_s, da, ds1}));
      const auto je = mlp_jvp(tape, model_.done_net(), s1t, ds1);
      const Var c1 = nn::sigmoid(nn::slice_cols(jd.value, obs_dim, 1));
      const Var c2 = nn::sigmoid(nn::slice_cols(jr.value, 1, 1));
      const Var c3 = nn::sigmoid(nn::slice_cols(je.value, 1, 1));
      const Var dc1 = c1 * (1.0 - c1) * nn::slice_cols(jd.tangent, obs_dim, 1);
      const Var dc2 = c2 * (1.0 - c2) * nn::slice_cols(jr.tangent, 1, 1);
      const Var dc3 = c3 * (1.0 - c3) * nn::slice_cols(je.tangent, 1, 1);
      const Var c = c1 * c2 * c3;
      const Var dc = dc1 * c2 * c3 + c1 * dc2 * c3 + c1 * c2 * dc3;
      const Var rr = nn::slice_cols(jr.value, 0, 1);
      const Var dr = nn::slice_cols(jr.tangent, 0, 1);
      const Var dd_ = nn::sigmoid(nn::slice_cols(je.value, 0, 1));
      const Var ddd = dd_ * (1.0 - dd_) * nn::slice_cols(je.tangent, 0, 1);
      const StepScore st_score = step_desirability(rr, dd_, c, config_.termination_penalty, config_.confidence_penalty);
      const Var d_o = dc * (rr - dd_ * config_.termination_penalty + config_.confidence_penalty) +
                      c * (dr - ddd * config_.termination_penalty);
      const Var d_obar = (1.0 - nn::square(st_score.o_bar)) * d_o;
      const Var sq = nn::square(d_obar);
      Var acc = nn::slice_rows(sq, 0, p);
      for (std::size_t j = 1; j < adim; ++j) acc = acc + nn::slice_rows(sq, j * p, p);
      gnorm = nn::sqrt(acc + 1e-12);
    } else {
      nn::Tape scratch;
      const Var st = nn::tile_rows(scratch.constant(sk.value()), adim);
      const Var at = nn::tile_rows(scratch.constant(ak.value()), adim);
      const Var da = scratch.constant(tangent);
      const Var zs = scratch.constant(Tensor(adim * p, obs_dim));
      const auto jd = mlp_jvp(scratch, model_.dyn_net(), nn::concat_cols({st, at}), nn::concat_cols({zs, da}));
      const Var ds1 = nn::slice_cols(jd.tangent, 0, obs_dim);
      const Var s1t = st + nn::slice_cols(jd.value, 0, obs_dim);
      const auto jr = mlp_jvp(scratch, model_.rew_net(), nn::concat_cols({st, at, s1t}), nn::concat_cols({zs, da, ds1}));
      const auto je = mlp_jvp(scratch, model_.done_net(), s1t, ds1);
      Tensor norms(p, 1);
      for (std::size_t j = 0; j < adim; ++j) {
        for (std::size_t i = 0; i < p; ++i) {
          const std::size_t row = j * p + i;
          const double c1 = 1.0 / (1.0 + std::exp(-jd.value.value()(row, obs_dim)));
          const double c2 = 1.0 / (1.0 + std::exp(-jr.value.value()(row, 1)));
          const double c3 = 1.0 / (1.0 + std::exp(-je.value.value()(row, 1)));
          const double dc = c1 * (1 - c1) * jd.tangent.value()(row, obs_dim) * c2 * c3 +
                            c1 * c2 * (1 - c2) * jr.tangent.value()(row, 1) * c3 +
                            c1 * c2 * c3 * (1 - c3) * je.tangent.value()(row, 1);
          const double c = c1 * c2 * c3;
          const double rr = jr.value.value()(row, 0);
          const double dd = 1.0 / (1.0 + std::exp(-je.value.value()(row, 0)));
          const double ddd = dd * (1 - dd) * je.tangent.value()(row, 0);
          const double o = step_desirability(rr, dd, c, config_.termination_penalty, config_.confidence_penalty);
          const double d_o = dc * (rr - config_.termination_penalty * dd + config_.confidence_penalty) +
                             c * (jr.tangent.value()(row, 0) - config_.termination_penalty * ddd);
          const double g = (1.0 - std::tanh(o) * std::tanh(o)) * d_o;
          norms[i] += g * g;
        }
      }
      for (double& v : norms.values()) v = std::sqrt(v);
      gnorm = tape.constant(std::move(norms));
    }
    grad_norm.push_back(gnorm);

    const Var slow_out = slow_.shadow().forward(tape, sk, Binding::kFrozen).output;
    const Var anchor_k = anchor_loss(ak, relaxed_action(slow_out), tape.detach(ck));
    anchor = anchor.valid() ? anchor + anchor_k : anchor_k;

    Var reg_k = nn::sum(nn::square(ak)) * (config_.action_weight * inv_p) +
                nn::sum(nn::square(out_k)) * (config_.logit_weight * inv_p) +
                nn::sum(nn::square(s1)) * (config_.state_weight * inv_p);
    if (discrete && config_.entropy_weight > 0.0) {
      const Var entropy = -nn::sum(nn::softmax_rows(out_k) * nn::log_softmax_rows(out_k)) * inv_p;
      reg_k = reg_k - entropy * config_.entropy_weight;
    }
    reg = reg.valid() ? reg + reg_k : reg_k;
    sk = s1;
  }
  const double inv_h = 1.0 / static_cast<double>(h);
  const Var g = nn::mean(plan_objective(o_bar, config_.gamma));
  const Var c = nn::mean(controllability(grad_norm, confidence, config_.gamma, config_.controllability_clip));
  anchor = anchor * inv_h;
  reg = reg * inv_h;
  const Var plan = -g - c * config_.controllability_weight + anchor * config_.anchor_weight + reg;
  const double w = warmup_weight(global_step, config_.warmup_steps);

  out.total = model * config_.model_weight + conf * config_.confidence_weight + flow * config_.flow_weight +
              aux * config_.aux_weight + plan * w;
  out.model = model.value().item();
  out.confidence = conf.value().item();
  out.flow = flow.value().item();
  out.aux = aux.value().item();
  out.plan = plan.value().item();
  out.objective = g.value().item();
  out.control = c.value().item();
  out.anchor = anchor.value().item();
  out.warmup = w;
  return out;
}

fitness::UpdateStats DfcwpcpAgent::update(const fitness::Batch& batch, std::int64_t global_step) {
  if (!optimizer_) optimizer_ = std::make_unique<nn::Adam>(trainable(), nn::AdamConfig{config_.lr});
  const DfTargets targets = prepare(batch);
  nn::Tape tape;
  const DfLoss loss = compute_loss(tape, targets, global_step);
  optimizer_->zero_grad();
  tape.backward(loss.total);
  auto params = optimizer_->parameters();
  const double gnorm = nn::clip_grad_norm(params, config_.grad_clip);
  optimizer_->step();
  fast_.update(policy_.net());
  slow_.update(policy_.net());
  return {loss.total.value().item(), gnorm};
}

double DfcwpcpAgent::parameter_norm() const {
  const auto ps = policy_.net().parameters();
  return nn::parameter_norm(ps);
}

std::vector<Tensor> DfcwpcpAgent::checkpoint() const {
  const auto ps = policy_.net().parameters();
  auto out = pack(ps);
  out.push_back(normalizer_.state());
  return out;
}

void DfcwpcpAgent::restore(const std::vector<Tensor>& state) {
  auto ps = policy_.parameters();
  if (state.size() != ps.size() + 1) throw std::invalid_argument("checkpoint size mismatch");
  unpack(ps, state);
  normalizer_.load(state.back());
}

}  // namespace evorl::algo
