"""Shared agent machinery: replay, exploration, targets, GAE."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InvalidParameterError, InvalidStateError


@dataclass(frozen=True, eq=False)
class Transition:
    state: np.ndarray
    action: int
    reward: float
    next_state: np.ndarray
    done: bool


@dataclass(frozen=True, eq=False)
class Batch:
    states: np.ndarray       # (B, S)
    actions: np.ndarray      # (B,)
    rewards: np.ndarray      # (B,)
    next_states: np.ndarray  # (B, S)
    dones: np.ndarray        # (B,) float 0/1


class ReplayBuffer:
    """Fixed-capacity ring over preallocated arrays."""

    def __init__(self, capacity: int, state_dim: int):
        if capacity < 1 or state_dim < 1:
            raise InvalidParameterError("capacity and state_dim must be >= 1")
        self.capacity = capacity
        self._states = np.zeros((capacity, state_dim))
        self._actions = np.zeros(capacity, dtype=np.int64)
        self._rewards = np.zeros(capacity)
        self._next_states = np.zeros((capacity, state_dim))
        self._dones = np.zeros(capacity)
        self._size = 0
        self._cursor = 0

    def __len__(self):
        return self._size

    def push(self, state, action, reward, next_state, done):
        i = self._cursor
        self._states[i] = state
        self._actions[i] = action
        self._rewards[i] = reward
        self._next_states[i] = next_state
        self._dones[i] = 1.0 if done else 0.0
        self._cursor = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def push_transition(self, tr: Transition):
        self.push(tr.state, tr.action, tr.reward, tr.next_state, tr.done)

    def sample(self, batch_size: int, rng: np.random.Generator) -> Batch:
        """Uniform sample without replacement."""
        if batch_size > self._size:
            raise InvalidStateError(
                f"cannot sample {batch_size} from buffer of {self._size}"
            )
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return Batch(
            states=self._states[idx],
            actions=self._actions[idx],
            rewards=self._rewards[idx],
            next_states=self._next_states[idx],
            dones=self._dones[idx],
        )


def linear_epsilon(episode: int, total_episodes: int, start: float,
                   end: float, fraction: float) -> float:
    """Linear anneal from start to end over the first fraction of training."""
    horizon = max(1.0, fraction * total_episodes)
    frac = min(1.0, episode / horizon)
    return start + (end - start) * frac


def epsilon_greedy(q_values: np.ndarray, epsilon: float,
                   rng: np.random.Generator) -> int:
    """Random action with probability epsilon, else the greedy one."""
    if not 0.0 <= epsilon <= 1.0:
        raise InvalidParameterError(f"epsilon must be in [0, 1], got {epsilon}")
    if rng.random() < epsilon:
        return int(rng.integers(len(q_values)))
    return int(np.argmax(q_values))


def q_target(transition: Transition, target_net, gamma: float) -> float:
    """Bootstrap target r + gamma * max_a Q_target(s', a), cut at episode end."""
    if transition.done:
        return float(transition.reward)
    q_next, _ = target_net.forward(transition.next_state)
    return float(transition.reward + gamma * np.max(q_next))


def warmup(buffer: ReplayBuffer, env, steps: int, rng: np.random.Generator,
           encode) -> int:
    """Fill the buffer with uniform-random transitions before learning.

    encode maps a WorldState to the observation vector.  Returns the number
    of transitions pushed (exactly steps).
    """
    pushed = 0
    num_actions = env.cfg.num_actions
    if env.done:
        env.reset()
    state_vec = encode(env.state)
    while pushed < steps:
        action = int(rng.integers(num_actions))
        next_state, outcome = env.step(action)
        next_vec = encode(next_state)
        buffer.push(state_vec, action, outcome.reward, next_vec, outcome.done)
        pushed += 1
        if outcome.done:
            env.reset()
            state_vec = encode(env.state)
        else:
            state_vec = next_vec
    return pushed


@dataclass(eq=False)
class Trajectory:
    """One on-policy episode (or segment) with per-step diagnostics."""

    states: np.ndarray      # (T, S)
    actions: np.ndarray     # (T, N) per-terminal station picks
    rewards: np.ndarray     # (T,)
    values: np.ndarray      # (T,) critic estimates at collection time
    log_probs: np.ndarray   # (T,) joint log pi(a_t | s_t) at collection time
    bootstrap_value: float = 0.0  # V(s_T), 0 when the segment ended terminal
    probs: np.ndarray = None      # (T, N, M+1), kept only under a KL penalty

    def __len__(self):
        return len(self.rewards)


def gae_from_arrays(rewards, values, bootstrap_value, gamma, lam):
    """Generalized advantage estimates, recursive form.

    delta_t = r_t + gamma * V_{t+1} - V_t, adv_t = delta_t
    + (gamma * lam) * adv_{t+1}, with V_T = bootstrap_value.
    Returns (advantages, returns) where returns = advantages + values.
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if rewards.shape != values.shape:
        raise InvalidParameterError("rewards and values must align")
    t_len = len(rewards)
    adv = np.zeros(t_len)
    next_value = float(bootstrap_value)
    running = 0.0
    for t in range(t_len - 1, -1, -1):
        delta = rewards[t] + gamma * next_value - values[t]
        running = delta + gamma * lam * running
        adv[t] = running
        next_value = values[t]
    return adv, adv + values


def gae(trajectory: Trajectory, gamma: float, lam: float):
    return gae_from_arrays(trajectory.rewards, trajectory.values,
                           trajectory.bootstrap_value, gamma, lam)


@dataclass(frozen=True)
class EpisodeStats:
    """Per-episode summary emitted by every training loop."""

    total_reward: float
    steps: int
    waste: int
    truncated: bool


def normalize(advantages: np.ndarray) -> np.ndarray:
    std = advantages.std()
    return (advantages - advantages.mean()) / (std + 1e-8)


def spawn_rngs(seed, count):
    """Independent generator streams derived from one seed."""
    seqs = np.random.SeedSequence(seed).spawn(count)
    return [np.random.default_rng(s) for s in seqs]


def derive_seed(seed, salt):
    """Deterministic integer sub-seed (for network init)."""
    return int(np.random.SeedSequence([seed, salt]).generate_state(1)[0])
