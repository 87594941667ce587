"""Synchronous advantage actor-critic with a factored policy head.

The joint action space grows as (M+1)^N, so the actor emits one row of
M+1 logits per terminal rather than one logit per joint action; rows are
independent softmaxes whose log-probabilities sum to the joint one.  K
workers each advance their private environment by a short segment per
round (unfinished episodes bootstrap through the critic), every worker
computes its own gradients, and the averaged, clipped result is applied
with Adam.  Workers run sequentially in a fixed order so training is
reproducible in one process.

Episode accounting follows the first worker: train_iter reports that
worker's episode stream, the remaining workers contribute experience.
"""
from __future__ import annotations

import numpy as np

from ..config import AgentConfig, EpisodeConfig
from ..env import DownlinkEnv, encode_state
from ..nn import MLP, clip_gradients, log_softmax, softmax_and_entropy
from .common import (EpisodeStats, Trajectory, derive_seed, gae, normalize,
                     spawn_rngs)


def actor_gradients(actor: MLP, states, choices, advantages, entropy_coef):
    """Policy-gradient + entropy-bonus gradients for one batch.

    choices is (T, N): one station pick per terminal per step.  Objective
    (minimized): -mean(adv * sum_i log pi_i(a_i|s))
                 - entropy_coef * mean(sum_i H_i).
    Returns (grads, policy_loss, mean_entropy).
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
    onehot = np.zeros_like(probs)
    onehot[rows, cols, choices] = 1.0
    # d(-adv * log pi_a)/dlogits = adv * (pi - onehot_a), row by row
    dlogits = probs * advantages[:, None, None] \
        - onehot * advantages[:, None, None]
    if entropy_coef:
        # d(-H_i)/dlogits_i = pi_i * (log pi_i + H_i); rows are independent
        row_ent = -(probs * logp).sum(axis=2, keepdims=True)
        dlogits += entropy_coef * probs * (logp + row_ent)
    dlogits /= t_len
    grads, _ = actor.backward(cache, dlogits.reshape(t_len, n * b))
    joint_logp = logp[rows, cols, choices].sum(axis=1)
    policy_loss = float(-np.mean(advantages * joint_logp))
    entropy = -(probs * logp).sum(axis=(1, 2))
    return grads, policy_loss, float(entropy.mean())


def critic_gradients(critic: MLP, states, returns, value_coef=1.0):
    """Mean-squared-error gradients toward the lambda returns."""
    values, cache = critic.forward(states)
    err = values[:, 0] - returns
    loss = float(np.mean(err * err))
    dv = (2.0 * value_coef / len(returns)) * err[:, None]
    grads, _ = critic.backward(cache, dv)
    return grads, loss


def average_gradients(grad_lists):
    """Elementwise mean of per-worker (dW, db) lists."""
    k = len(grad_lists)
    out = []
    for layer_grads in zip(*grad_lists):
        dw = layer_grads[0][0].copy()
        db = layer_grads[0][1].copy()
        for g in layer_grads[1:]:
            dw += g[0]
            db += g[1]
        out.append((dw / k, db / k))
    return out


class ActorCriticAgent:
    """Shared actor/critic scaffolding for the on-policy agents."""

    keep_probs = False  # subclasses flip this to retain full distributions

    def __init__(self, env_cfg: EpisodeConfig, cfg: AgentConfig, seed=0):
        self.env_cfg = env_cfg
        self.cfg = cfg
        self.n_rows = env_cfg.num_ues
        self.n_choices = env_cfg.num_stations + 1
        self.actor = MLP((env_cfg.state_dim,) + cfg.hidden
                         + (self.n_rows * self.n_choices,),
                         seed=derive_seed(seed, 1))
        self.critic = MLP((env_cfg.state_dim,) + cfg.hidden + (1,),
                          seed=derive_seed(seed, 2))
        self._rng_action, self._rng_update = spawn_rngs(seed, 2)
        # terminal 0 is the least significant digit, matching the
        # environment's decode_action_index convention
        self._joint_base = self.n_choices ** np.arange(self.n_rows)
        self.seed = seed

    def policy_rows(self, state_vec: np.ndarray):
        """Per-terminal choice distributions; (probs, log_probs), (N, M+1)."""
        flat, _ = self.actor.forward(state_vec)
        logits = flat.reshape(self.n_rows, self.n_choices)
        probs, _ = softmax_and_entropy(logits)
        return probs, log_softmax(logits)

    def value(self, state_vec: np.ndarray) -> float:
        v, _ = self.critic.forward(state_vec)
        return float(v[0])

    def joint_index(self, choices: np.ndarray) -> int:
        """Map per-terminal picks to the environment's joint action index."""
        return int((np.asarray(choices) * self._joint_base).sum())

    def greedy_action(self, state_vec: np.ndarray) -> int:
        # independent rows: maximizing each row maximizes the joint product
        probs, _ = self.policy_rows(state_vec)
        return self.joint_index(np.argmax(probs, axis=1))

    def _encode(self, state):
        return encode_state(state, self.env_cfg)

    def _collect(self, env: DownlinkEnv, state_vec, carry, cap):
        """Advance one worker by at most cap steps (None = until done).

        carry accumulates [reward, steps, waste] across segment boundaries
        and is reset in place when an episode ends; the environment is reset
        there too so the worker rolls seamlessly into its next episode.
        Returns (Trajectory, EpisodeStats or None, next state vector).
        """
        states, choices, rewards, values, log_probs, all_probs = \
            [], [], [], [], [], []
        stats = None
        terminal = False
        limit = cap if cap is not None else self.env_cfg.max_steps + 1
        while len(states) < limit:
            probs, logp = self.policy_rows(state_vec)
            ua = np.array([self._rng_action.choice(self.n_choices, p=probs[i])
                           for i in range(self.n_rows)])
            states.append(state_vec)
            choices.append(ua)
            values.append(self.value(state_vec))
            log_probs.append(float(logp[np.arange(self.n_rows), ua].sum()))
            if self.keep_probs:
                all_probs.append(probs)
            next_state, out = env.step(self.joint_index(ua))
            rewards.append(out.reward)
            carry[0] += out.reward
            carry[1] += 1
            carry[2] += out.waste_count
            state_vec = self._encode(next_state)
            if out.done:
                stats = EpisodeStats(total_reward=carry[0], steps=carry[1],
                                     waste=carry[2], truncated=out.truncated)
                carry[0], carry[1], carry[2] = 0.0, 0, 0
                state_vec = self._encode(env.reset())
                terminal = True
                break
        traj = Trajectory(
            states=np.asarray(states),
            actions=np.asarray(choices, dtype=np.int64),
            rewards=np.asarray(rewards),
            values=np.asarray(values),
            log_probs=np.asarray(log_probs),
            bootstrap_value=0.0 if terminal else self.value(state_vec),
            probs=np.asarray(all_probs) if self.keep_probs else None,
        )
        return traj, stats, state_vec

    def collect_episode(self, env: DownlinkEnv):
        """Run one on-policy episode; returns (Trajectory, EpisodeStats)."""
        state_vec = self._encode(env.reset())
        traj, stats, _ = self._collect(env, state_vec, [0.0, 0, 0], None)
        return traj, stats

    def make_worker_envs(self, count: int):
        return [DownlinkEnv(self.env_cfg, seed=derive_seed(self.seed, 100 + w))
                for w in range(count)]

    def _rollout_cap(self):
        return self.cfg.segment_steps

    def train_iter(self, episodes: int, envs=None):
        envs = envs or self.make_worker_envs(self.cfg.num_workers)
        cap = self._rollout_cap()
        cur = [self._encode(env.reset()) for env in envs]
        carry = [[0.0, 0, 0] for _ in envs]
        reported = 0
        while reported < episodes:
            trajs, lead_stats = [], None
            for w, env in enumerate(envs):
                traj, stats, cur[w] = self._collect(env, cur[w], carry[w],
                                                    cap)
                trajs.append(traj)
                if w == 0:
                    lead_stats = stats
            self.update_from(trajs)
            if lead_stats is not None:
                reported += 1
                yield lead_stats

    def checkpoint_parts(self):
        return {"actor": self.actor, "critic": self.critic}

    def load_parts(self, parts):
        self.actor.load_state_dict(parts["actor"])
        self.critic.load_state_dict(parts["critic"])


class A2CAgent(ActorCriticAgent):
    """Advantage actor-critic with averaged synchronous worker gradients."""

    def update_from(self, trajectories):
        cfg = self.cfg
        advs, rets = [], []
        for traj in trajectories:
            adv, ret = gae(traj, cfg.gamma, cfg.gae_lambda)
            advs.append(adv)
            rets.append(ret)
        if cfg.normalize_advantages:
            joint = np.concatenate(advs)
            mean, std = joint.mean(), joint.std()
            advs = [(a - mean) / (std + 1e-8) for a in advs]
        actor_lists, critic_lists = [], []
        for traj, adv, ret in zip(trajectories, advs, rets):
            a_grads, _, _ = actor_gradients(
                self.actor, traj.states, traj.actions, adv,
                cfg.entropy_coefficient)
            c_grads, _ = critic_gradients(self.critic, traj.states, ret,
                                          cfg.value_coefficient)
            actor_lists.append(a_grads)
            critic_lists.append(c_grads)
        actor_grads = average_gradients(actor_lists)
        critic_grads = average_gradients(critic_lists)
        clip_gradients(actor_grads, cfg.grad_clip_norm)
        clip_gradients(critic_grads, cfg.grad_clip_norm)
        self.actor.adam_step(actor_grads, cfg.lr)
        self.critic.adam_step(critic_grads, cfg.lr)
