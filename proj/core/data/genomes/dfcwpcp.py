import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from base import BaseAlgo, make_policy, ObsModel, ReplayBuffer, ema_copy

# algorithm: dfcwpcp


class NewAlgo(BaseAlgo):
    """Differentiable forward planning with confidence-weighted desirability."""

    def __init__(self, env, seed=0, rollout_len=2):
        super().__init__(env, seed, rollout_len)
        self.policy = make_policy(env)
        self.optimizer = torch.optim.Adam(self.policy.parameters(), lr=3e-4)
        self.buffer = ReplayBuffer(100000)
        self.model = ObsModel(self.obs_dim, self.act_dim, hidden=64)
        # <<block:flows>>
        self.fast_rate = 0.05
        self.slow_rate = 0.005
        self.flow_weight = 1.0
        self.aux_weight = 0.05
        # <<end>>
        self.fast = ema_copy(self.policy)
        self.slow = ema_copy(self.policy)
        self.steps = 0

    @torch.no_grad()
    def predict(self, obs, deterministic=False):
        out = self.policy(torch.as_tensor(obs, dtype=torch.float32))
        if self.discrete:
            if deterministic:
                return int(out.argmax())
            return int(torch.distributions.Categorical(logits=out).sample())
        action = torch.tanh(out)
        if not deterministic:
            action = action + 0.1 * torch.randn_like(action)
        return self.from_unit(action.clamp(-1.0, 1.0)).numpy()

    def learn(self, total_steps):
        obs = self.env.reset()
        for step in range(total_steps):
            action = self.predict(obs)
            next_obs, reward, done, info = self.env.step(action)
            self.buffer.add(obs, action, reward, next_obs, done)
            obs = self.env.reset() if done else next_obs
            self.steps += 1
            if step >= 1000 and step % self.rollout_len == 0:
                self._update(self.buffer.sample(64))

    def compute_loss(self, batch):
        # <<block:imagination>>
        self.horizon = 5
        self.gamma = 0.95
        self.termination_penalty = 1.0
        self.confidence_penalty = 0.1
        self.relax_temperature = 1.0
        # <<end>>
        # <<block:controllability>>
        self.controllability_weight = 0.05
        self.controllability_clip = 5.0
        self.anchor_weight = 0.1
        self.warmup_steps = 20000
        # <<end>>
        obs, act, rew, next_obs, done = batch
        model_loss, conf_loss = self.model.fit_loss(obs, act, rew, next_obs, done)
        head = self.policy(obs)
        flow = torch.tanh(head)
        with torch.no_grad():
            refs = [torch.tanh(self.fast(next_obs)) - torch.tanh(self.fast(obs)),
                    torch.tanh(self.slow(next_obs)) - torch.tanh(self.slow(obs))]
        align = sum((1.0 - F.cosine_similarity(flow, ref, dim=-1)).mean() for ref in refs)
        s = obs[:16]
        objective, control = 0.0, 0.0
        for k in range(self.horizon):
            a = self.relaxed(self.policy(s), self.relax_temperature)
            s_next, c_dyn = self.model.step(s, a)
            r, c_rew = self.model.reward(s, a, s_next)
            d, c_done = self.model.done(s_next)
            c = c_dyn * c_rew * c_done
            o = c * (r - self.termination_penalty * d) - self.confidence_penalty * (1.0 - c)
            o_bar = torch.tanh(o)
            g = torch.autograd.grad(o_bar.sum(), a, create_graph=True)[0]
            objective = objective + self.gamma ** k * o_bar
            control = control + self.gamma ** k * c * g.norm(dim=-1).clamp(max=self.controllability_clip)
            s = s_next
        objective = objective / self.horizon
        control = control / self.horizon
        anchor = (c.detach() * (flow[:16] - torch.tanh(self.slow(s))).pow(2).sum(-1)).mean()
        ramp = min(1.0, self.steps / self.warmup_steps)
        plan = -(objective + self.controllability_weight * control).mean() + self.anchor_weight * anchor
        return model_loss + conf_loss + self.flow_weight * align + ramp * plan

    def _update(self, batch):
        loss = self.compute_loss(batch)
        self.optimizer.zero_grad()
        loss.backward()
        nn.utils.clip_grad_norm_(self.parameters(), 10.0)
        self.optimizer.step()
        self.fast.soft_update(self.policy, self.fast_rate)
        self.slow.soft_update(self.policy, self.slow_rate)
        return float(loss)
