"""Proximal policy optimization with a clipped surrogate.

Collection works exactly like the synchronous actor-critic except that
every worker rolls a full episode per round; the update then makes several
minibatch passes over the gathered steps, importance-weighting each joint
action by the ratio of new to collection-time probability and clipping
that ratio's influence.  The ratio is taken on the joint action, i.e. on
the product of the per-terminal row probabilities.  An optional KL penalty
toward the collection-time distribution can be enabled on top of the clip.
"""
from __future__ import annotations

import numpy as np

from ..nn import clip_gradients, log_softmax, softmax_and_entropy
from .a2c import ActorCriticAgent, critic_gradients
from .common import gae, normalize


def ppo_actor_gradients(actor, states, choices, advantages, old_log_probs,
                        clip_eps, entropy_coef, kl_coef=0.0, old_probs=None):
    """Gradients of the clipped surrogate (minimized).

    choices is (T, N) per-terminal picks; old_log_probs holds the joint
    log-probabilities recorded at collection time.
    Objective: -mean(min(rho * A, clip(rho, 1 +- eps) * A))
               - entropy_coef * mean(sum_i H_i)
               + kl_coef * mean(sum_i KL(old_i || new_i)).
    Returns (grads, diagnostics dict).
    """
    choices = np.asarray(choices, dtype=np.int64)
    t_len, n = choices.shape
    flat, cache = actor.forward(states)
    b = flat.shape[-1] // n
    logits = flat.reshape(t_len, n, b)
    probs, _ = softmax_and_entropy(logits)
    logp = log_softmax(logits)
    rows = np.arange(t_len)[:, None]
    cols = np.arange(n)[None, :]
    new_logp = logp[rows, cols, choices].sum(axis=1)
    ratio = np.exp(new_logp - old_log_probs)
    # the unclipped branch is active unless clipping already binds
    clipped_out = ((ratio > 1.0 + clip_eps) & (advantages > 0)) | \
                  ((ratio < 1.0 - clip_eps) & (advantages < 0))
    coeff = np.where(clipped_out, 0.0, advantages * ratio)
    onehot = np.zeros_like(probs)
    onehot[rows, cols, choices] = 1.0
    dlogits = (probs - onehot) * coeff[:, None, None]
    if entropy_coef:
        row_ent = -(probs * logp).sum(axis=2, keepdims=True)
        dlogits += entropy_coef * probs * (logp + row_ent)
    if kl_coef:
        dlogits += kl_coef * (probs - old_probs)
    dlogits /= t_len
    grads, _ = actor.backward(cache, dlogits.reshape(t_len, n * b))
    surrogate = np.minimum(ratio * advantages,
                           np.clip(ratio, 1.0 - clip_eps, 1.0 + clip_eps)
                           * advantages)
    entropy = -(probs * logp).sum(axis=(1, 2))
    diags = {
        "surrogate": float(surrogate.mean()),
        "entropy": float(entropy.mean()),
        "clip_fraction": float(np.mean(clipped_out)),
    }
    return grads, diags


class PPOAgent(ActorCriticAgent):
    """Clipped-surrogate agent; shares collection with the actor-critic."""

    def __init__(self, env_cfg, cfg, seed=0):
        super().__init__(env_cfg, cfg, seed=seed)
        self.keep_probs = cfg.kl_coefficient > 0.0

    def _rollout_cap(self):
        return None  # full-episode rollouts

    def update_from(self, trajectories):
        cfg = self.cfg
        advs, rets = [], []
        for traj in trajectories:
            adv, ret = gae(traj, cfg.gamma, cfg.gae_lambda)
            advs.append(adv)
            rets.append(ret)
        states = np.concatenate([t.states for t in trajectories])
        choices = np.concatenate([t.actions for t in trajectories])
        old_logp = np.concatenate([t.log_probs for t in trajectories])
        old_probs = None
        if self.keep_probs:
            old_probs = np.concatenate([t.probs for t in trajectories])
        advantages = np.concatenate(advs)
        returns = np.concatenate(rets)
        if cfg.normalize_advantages:
            advantages = normalize(advantages)
        n = len(choices)
        for _ in range(cfg.ppo_epochs):
            order = self._rng_update.permutation(n)
            for lo in range(0, n, cfg.batch_size):
                idx = order[lo:lo + cfg.batch_size]
                a_grads, _ = ppo_actor_gradients(
                    self.actor, states[idx], choices[idx], advantages[idx],
                    old_logp[idx], cfg.ppo_clip, cfg.entropy_coefficient,
                    cfg.kl_coefficient,
                    None if old_probs is None else old_probs[idx],
                )
                clip_gradients(a_grads, cfg.grad_clip_norm)
                self.actor.adam_step(a_grads, cfg.lr)
                c_grads, _ = critic_gradients(self.critic, states[idx],
                                              returns[idx],
                                              cfg.value_coefficient)
                clip_gradients(c_grads, cfg.grad_clip_norm)
                self.critic.adam_step(c_grads, cfg.lr)
