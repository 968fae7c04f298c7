import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from base import BaseAlgo, make_policy, LatentModel, ReplayBuffer

# algorithm: cgfpd


class NewAlgo(BaseAlgo):
    """Forward policy distillation from short latent plans."""

    def __init__(self, env, seed=0, rollout_len=2):
        super().__init__(env, seed, rollout_len)
        self.policy = make_policy(env)
        self.optimizer = torch.optim.Adam(self.policy.parameters(), lr=3e-4)
        self.buffer = ReplayBuffer(100000)
        # <<block:planner>>
        self.candidates = 64
        self.horizon = 5
        self.cem_iters = 2
        self.elite_frac = 0.25
        self.temperature = 0.5
        self.proposal_std = 0.3
        # <<end>>
        # <<block:world_model>>
        self.target_rate = 0.01
        self.contrast_temperature = 0.1
        self.model = LatentModel(self.policy.latent_dim, self.act_dim, hidden=64)
        self.target_encoder = self.policy.encoder_copy()
        # <<end>>

    @torch.no_grad()
    def predict(self, obs, deterministic=False):
        out = self.policy(torch.as_tensor(obs, dtype=torch.float32))
        if self.discrete:
            if deterministic:
                return int(out.argmax())
            return int(torch.distributions.Categorical(logits=out).sample())
        action = out.clamp(-1.0, 1.0)
        if not deterministic:
            action = action + 0.1 * torch.randn_like(action)
        return self.from_unit(action).numpy()

    def learn(self, total_steps):
        obs = self.env.reset()
        for step in range(total_steps):
            action = self.predict(obs)
            next_obs, reward, done, info = self.env.step(action)
            self.buffer.add(obs, action, reward, next_obs, done)
            obs = self.env.reset() if done else next_obs
            if step >= 1000 and step % self.rollout_len == 0:
                self._update(self.buffer.sample(64))

    @torch.no_grad()
    def plan(self, z0):
        proposal = self.initial_proposal(z0)
        for it in range(self.cem_iters + 1):
            seqs = proposal.sample(self.candidates)
            z, alive, score, jump = z0, 1.0, 0.0, 0.0
            for k in range(self.horizon):
                z_next, r, d = self.model(z, seqs[:, k])
                score = score + alive * r + self.survival_weight * (1.0 - d)
                alive = alive * (1.0 - d)
                jump = jump + (z_next - z).pow(2).mean(-1)
                z = z_next
            score = score - self.consistency_weight * jump / self.horizon
            if it < self.cem_iters:
                proposal = proposal.refit(seqs, score, self.elite_frac)
        weights = torch.softmax(score / self.temperature, 0)
        return (weights[:, None] * seqs[:, 0]).sum(0)

    def compute_loss(self, batch):
        # <<block:objective>>
        self.survival_weight = 0.1
        self.consistency_weight = 0.1
        self.dyn_weight = 1.0
        self.reward_weight = 1.0
        self.done_weight = 1.0
        self.shaping_weight = 0.1
        self.contrast_weight = 0.1
        # <<end>>
        obs, act, rew, next_obs, done = batch
        z = self.policy.encode(obs)
        teacher = torch.stack([self.plan(zi) for zi in z[:8].detach()])
        head = self.policy.head(z[:8])
        if self.discrete:
            plan_loss = -(teacher * F.log_softmax(head, -1)).sum(-1).mean()
        else:
            plan_loss = (head - teacher).abs().sum(-1).mean()
        z_next, r_hat, d_logit = self.model(z, act, logits=True)
        with torch.no_grad():
            z_goal = self.target_encoder(next_obs)
            r_std = (rew - rew.mean()) / (rew.std() + 1e-6)
        dyn = (z_next - z_goal).pow(2).mean()
        rew_loss = (r_hat - rew).pow(2).mean()
        done_loss = F.binary_cross_entropy_with_logits(d_logit, done)
        shaping = (self.policy.reward_probe(z) - r_std).pow(2).mean()
        sim = z_next @ z_goal.T / self.contrast_temperature
        contrast = F.cross_entropy(sim, torch.arange(len(sim)))
        return (plan_loss + self.dyn_weight * dyn + self.reward_weight * rew_loss
                + self.done_weight * done_loss + self.shaping_weight * shaping
                + self.contrast_weight * contrast)

    def _update(self, batch):
        loss = self.compute_loss(batch)
        self.optimizer.zero_grad()
        loss.backward()
        nn.utils.clip_grad_norm_(self.parameters(), 10.0)
        self.optimizer.step()
        self.target_encoder.soft_update(self.policy, self.target_rate)
        return float(loss)
