"""Learning agents over the joint allocation action space."""
from ..config import AgentConfig, EpisodeConfig
from .a2c import A2CAgent
from .common import (Batch, EpisodeStats, ReplayBuffer, Trajectory,
                     epsilon_greedy, gae, gae_from_arrays, linear_epsilon,
                     q_target, warmup)
from .dqn import DQNAgent, dqn_loss_grads
from .ppo import PPOAgent, ppo_actor_gradients

__all__ = [
    "A2CAgent", "AgentConfig", "Batch", "DQNAgent", "EpisodeStats",
    "PPOAgent", "ReplayBuffer", "Trajectory", "epsilon_greedy", "gae",
    "gae_from_arrays", "linear_epsilon", "make_agent", "q_target", "warmup",
    "dqn_loss_grads", "ppo_actor_gradients",
]


def make_agent(env_cfg: EpisodeConfig, cfg: AgentConfig, seed=0):
    """Instantiate the agent named by cfg.algorithm."""
    if cfg.algorithm in ("dqn", "ddqn"):
        return DQNAgent(env_cfg, cfg, seed=seed)
    if cfg.algorithm == "a2c":
        return A2CAgent(env_cfg, cfg, seed=seed)
    if cfg.algorithm == "ppo":
        return PPOAgent(env_cfg, cfg, seed=seed)
    raise ValueError(f"unknown algorithm {cfg.algorithm!r}")
