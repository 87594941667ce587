"""Q-learning agents: vanilla deep Q and the dueling variant.

Both share the replay/target-network training rule; the dueling agent only
swaps the approximator.  After warmup, one sampled gradient update runs
every update_period environment steps, and the target net is refreshed by
hard copy on a fixed sync period.
"""
from __future__ import annotations

import numpy as np

from ..config import AgentConfig, EpisodeConfig
from ..env import DownlinkEnv, encode_state
from ..nn import MLP, DuelingMLP, clip_gradients
from .common import (EpisodeStats, ReplayBuffer, derive_seed, epsilon_greedy,
                     linear_epsilon, spawn_rngs, warmup)


def build_q_network(state_dim: int, num_actions: int, cfg: AgentConfig,
                    seed: int):
    if cfg.algorithm == "ddqn":
        return DuelingMLP(state_dim, cfg.hidden, cfg.head_hidden, num_actions,
                          seed=seed)
    return MLP((state_dim,) + cfg.hidden + (num_actions,), seed=seed)


def dqn_loss_grads(net, target_net, batch, gamma: float):
    """TD(0) targets from the frozen net; squared error on taken actions.

    Returns (loss, grads) with the mean-over-batch convention folded into
    the gradients.
    """
    q, cache = net.forward(batch.states)
    q_next, _ = target_net.forward(batch.next_states)
    targets = batch.rewards + gamma * (1.0 - batch.dones) * q_next.max(axis=1)
    b = len(batch.actions)
    rows = np.arange(b)
    td = q[rows, batch.actions] - targets
    loss = float(np.mean(td * td))
    grad_q = np.zeros_like(q)
    grad_q[rows, batch.actions] = 2.0 * td / b
    grads, _ = net.backward(cache, grad_q)
    return loss, grads


class DQNAgent:
    """Replay-based Q agent over the joint allocation action space."""

    def __init__(self, env_cfg: EpisodeConfig, cfg: AgentConfig, seed=0):
        self.env_cfg = env_cfg
        self.cfg = cfg
        self.net = build_q_network(env_cfg.state_dim, env_cfg.num_actions,
                                   cfg, derive_seed(seed, 1))
        self.target_net = self.net.copy()
        self.buffer = ReplayBuffer(cfg.replay_capacity, env_cfg.state_dim)
        self._rng_explore, self._rng_sample, self._rng_env = spawn_rngs(seed, 3)
        self.update_count = 0
        self.seed = seed

    def q_values(self, state_vec: np.ndarray) -> np.ndarray:
        q, _ = self.net.forward(state_vec)
        return q

    def act(self, state_vec: np.ndarray, epsilon: float) -> int:
        return epsilon_greedy(self.q_values(state_vec), epsilon,
                              self._rng_explore)

    def greedy_action(self, state_vec: np.ndarray) -> int:
        return int(np.argmax(self.q_values(state_vec)))

    def update(self) -> float:
        """One sampled gradient step; returns the TD loss."""
        batch = self.buffer.sample(self.cfg.batch_size, self._rng_sample)
        loss, grads = dqn_loss_grads(self.net, self.target_net, batch,
                                     self.cfg.gamma)
        clip_gradients(grads, self.cfg.grad_clip_norm)
        self.net.adam_step(grads, self.cfg.lr)
        self.update_count += 1
        if self.update_count % self.cfg.target_sync_period == 0:
            self.target_net.sync_from(self.net)
        return loss

    def train_iter(self, episodes: int, env: DownlinkEnv = None):
        """Yield EpisodeStats for each of `episodes` training episodes."""
        cfg = self.cfg
        env = env or DownlinkEnv(self.env_cfg,
                                 seed=derive_seed(self.seed, 2))
        encode = lambda s: encode_state(s, self.env_cfg)
        if cfg.warmup_steps > 0 and len(self.buffer) < cfg.warmup_steps:
            warmup(self.buffer, env, cfg.warmup_steps, self._rng_env, encode)
        min_fill = max(cfg.batch_size, 1)
        for episode in range(episodes):
            epsilon = linear_epsilon(episode, episodes, cfg.epsilon_start,
                                     cfg.epsilon_end, cfg.epsilon_fraction)
            state = env.reset()
            state_vec = encode(state)
            total, waste, steps = 0.0, 0, 0
            truncated = False
            while True:
                action = self.act(state_vec, epsilon)
                next_state, out = env.step(action)
                next_vec = encode(next_state)
                self.buffer.push(state_vec, action, out.reward, next_vec,
                                 out.done)
                total += out.reward
                waste += out.waste_count
                steps += 1
                state_vec = next_vec
                if len(self.buffer) >= min_fill and \
                        steps % cfg.update_period == 0:
                    self.update()
                if out.done:
                    truncated = out.truncated
                    break
            yield EpisodeStats(total_reward=total, steps=steps, waste=waste,
                               truncated=truncated)

    def checkpoint_parts(self):
        return {"q": self.net}

    def load_parts(self, parts):
        self.net.load_state_dict(parts["q"])
        self.target_net.sync_from(self.net)
