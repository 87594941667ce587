"""Downlink scheduling testbed: simulator, learners, baselines, harness."""

__version__ = "0.1.0"

from .config import (agent_config, episode_config, frozen_probe_config,
                     AgentConfig, EpisodeConfig)
from .env import DownlinkEnv

__all__ = ["agent_config", "episode_config", "frozen_probe_config",
           "AgentConfig", "EpisodeConfig", "DownlinkEnv", "__version__"]
