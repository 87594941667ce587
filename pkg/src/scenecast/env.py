"""Downlink content-delivery environment.

N user terminals move around a square service area and drain per-terminal
data backlogs from M cell stations.  Each step every terminal is either
idle or assigned to one station; stations transmit to every terminal
assigned to them, so co-scheduled terminals interfere (intra-cell) and all
other stations' transmissions interfere (inter-cell).  Shannon capacity over
the shared band sets the per-terminal rate, and backlogs drain for a fixed
step duration.

Episode randomness (terminal mobility and per-step transmit powers) is drawn
as a tape at reset time, so the future is identical no matter which actions
are taken.  That makes policies directly comparable on one episode and lets
the exhaustive search branch over actions without replaying noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import EpisodeConfig
from .errors import InvalidActionError, InvalidParameterError, InvalidStateError

IDLE = 0


@dataclass(frozen=True, eq=False)
class WorldState:
    """Snapshot of one episode step.

    step_index counts from 1.  finish_steps[i] is the step at which terminal
    i's backlog reached zero, 0 while still unfinished.
    """

    step_index: int
    ue_positions: np.ndarray      # (N, 2) metres
    station_positions: np.ndarray  # (M, 2) metres
    remaining_bits: np.ndarray    # (N,)
    powers_w: np.ndarray          # (N,) current per-terminal transmit power
    gains: np.ndarray             # (N, M) channel gains, row per terminal
    finish_steps: np.ndarray      # (N,) int

    @property
    def num_ues(self) -> int:
        return self.ue_positions.shape[0]

    @property
    def num_stations(self) -> int:
        return self.station_positions.shape[0]

    @property
    def all_finished(self) -> bool:
        return bool(np.all(self.remaining_bits <= 0.0))


@dataclass(frozen=True, eq=False)
class AllocationAction:
    """Joint assignment of every terminal to a station (or idle).

    assignment[i] in {0..M} with 0 = idle; action_index is the base-(M+1)
    encoding with terminal 0 as the least significant digit.
    """

    assignment: np.ndarray
    action_index: int

    @classmethod
    def from_index(cls, index: int, num_ues: int, num_stations: int):
        return cls(decode_action_index(index, num_ues, num_stations), int(index))

    @classmethod
    def from_assignment(cls, assignment, num_stations: int):
        assignment = np.asarray(assignment, dtype=np.int64)
        return cls(assignment, encode_assignment(assignment, num_stations))


@dataclass(frozen=True, eq=False)
class StepOutcome:
    """Everything observable about one transition."""

    reward: float
    per_ue_rate_bps: np.ndarray
    waste_count: int              # terminals served this step with no backlog
    done: bool
    truncated: bool               # hit the step cap with data outstanding
    per_ue_finish_step: np.ndarray


@dataclass(frozen=True, eq=False)
class EpisodeTape:
    """Pre-drawn randomness for a whole episode.

    Row t-1 holds the mobility displacement and the resampled powers applied
    when leaving step t.  Futures are therefore action-independent.
    """

    mobility_deltas: np.ndarray   # (max_steps, N, 2)
    powers: np.ndarray            # (max_steps, N)


# ---------------------------------------------------------------------------
# channel model


def path_loss(distance_m, wavelength_m):
    """Free-space channel gain (lambda / (4 pi d))^2.

    Accepts scalars or arrays; both inputs must be strictly positive.
    """
    distance_m = np.asarray(distance_m, dtype=np.float64)
    if np.any(distance_m <= 0) or not wavelength_m > 0:
        raise InvalidParameterError("path_loss needs positive distance and wavelength")
    ratio = wavelength_m / (4.0 * math.pi * distance_m)
    out = ratio * ratio
    return float(out) if out.ndim == 0 else out


def channel_gains(ue_positions, station_positions, cfg: EpisodeConfig) -> np.ndarray:
    """(N, M) gain matrix with the configured distance floor applied."""
    diff = ue_positions[:, None, :] - station_positions[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    dist = np.maximum(dist, cfg.min_distance_m)
    return path_loss(dist, cfg.wavelength_m)


def as_assignment(action, cfg: EpisodeConfig) -> np.ndarray:
    """Normalize an action (AllocationAction | int index | array) to (N,) ints."""
    if isinstance(action, AllocationAction):
        assignment = action.assignment
    elif isinstance(action, (int, np.integer)):
        return decode_action_index(int(action), cfg.num_ues, cfg.num_stations)
    else:
        assignment = np.asarray(action, dtype=np.int64)
    if assignment.shape != (cfg.num_ues,):
        raise InvalidActionError(
            f"assignment shape {assignment.shape}, expected ({cfg.num_ues},)"
        )
    if np.any(assignment < 0) or np.any(assignment > cfg.num_stations):
        raise InvalidActionError(
            f"assignment entries must be in 0..{cfg.num_stations}, got {assignment}"
        )
    return assignment


def sinr(state: WorldState, assignment, ue: int, cfg: EpisodeConfig) -> float:
    """SINR of one served terminal under a joint assignment.

    Undefined for an idle terminal (no serving station): raises.
    Denominator: own-station power to co-scheduled terminals, plus every
    other station's total scheduled power seen through this terminal's gain
    to that station, plus band noise.
    """
    assignment = as_assignment(assignment, cfg)
    station = int(assignment[ue])
    if station == IDLE:
        raise InvalidActionError(f"terminal {ue} is idle; SINR undefined")
    v = station - 1
    served = assignment >= 1
    signal = state.gains[ue, v] * state.powers_w[ue]
    intra = 0.0
    inter = 0.0
    for n in range(state.num_ues):
        if not served[n]:
            continue
        j = assignment[n] - 1
        if j == v:
            if n != ue:
                intra += state.powers_w[n]
        else:
            inter += state.gains[ue, j] * state.powers_w[n]
    denom = state.gains[ue, v] * intra + inter + cfg.noise_power_w
    return float(signal / denom)


def data_rate(sinr_value: float, cfg: EpisodeConfig) -> float:
    """Shannon rate over the shared band, bits per second."""
    if sinr_value < 0:
        raise InvalidParameterError(f"SINR must be >= 0, got {sinr_value}")
    return cfg.bandwidth_hz * math.log2(1.0 + sinr_value)


def per_ue_rates(state: WorldState, assignment: np.ndarray,
                 cfg: EpisodeConfig) -> np.ndarray:
    """Vectorized rates for all terminals; idle terminals get 0.

    Matches sinr()/data_rate() composed per terminal.
    """
    served = assignment >= 1
    if not np.any(served):
        return np.zeros(state.num_ues)
    q = np.where(served, state.powers_w, 0.0)
    station_power = np.bincount(
        np.maximum(assignment - 1, 0), weights=q, minlength=cfg.num_stations
    )
    total_rx = state.gains @ station_power
    own_gain = np.take_along_axis(
        state.gains, np.maximum(assignment - 1, 0)[:, None], axis=1
    )[:, 0]
    signal = np.where(served, own_gain * state.powers_w, 0.0)
    gamma = signal / (total_rx - signal + cfg.noise_power_w)
    return cfg.bandwidth_hz * np.log2(1.0 + gamma)


# ---------------------------------------------------------------------------
# action codec


def encode_assignment(assignment, num_stations: int) -> int:
    """Pack per-terminal station choices into one index, terminal 0 least
    significant, base num_stations+1."""
    assignment = np.asarray(assignment, dtype=np.int64)
    if np.any(assignment < 0) or np.any(assignment > num_stations):
        raise InvalidActionError(
            f"assignment entries must be in 0..{num_stations}, got {assignment}"
        )
    base = num_stations + 1
    index = 0
    for digit in assignment[::-1]:
        index = index * base + int(digit)
    return index


def decode_action_index(index: int, num_ues: int, num_stations: int) -> np.ndarray:
    """Inverse of encode_assignment."""
    base = num_stations + 1
    if not 0 <= index < base ** num_ues:
        raise InvalidActionError(
            f"action index {index} outside 0..{base ** num_ues - 1}"
        )
    out = np.empty(num_ues, dtype=np.int64)
    for i in range(num_ues):
        index, out[i] = divmod(index, base)
    return out


# ---------------------------------------------------------------------------
# observation encoding


def encode_state(state: WorldState, cfg: EpisodeConfig) -> np.ndarray:
    """Flatten a state to the (N * (M + 2),) observation vector.

    Layout: N normalized backlogs, then the N x M gain matrix row-major with
    each gain log-scaled between the worst-case and best-case path loss,
    then N min-max normalized powers.  Everything lands in [0, 1].
    """
    data_max = cfg.data_range_bits[1]
    d_norm = state.remaining_bits / data_max

    g_hi = path_loss(cfg.min_distance_m, cfg.wavelength_m)
    g_lo = path_loss(math.sqrt(2.0) * cfg.area_m, cfg.wavelength_m)
    log_span = math.log(g_hi) - math.log(g_lo)
    g_norm = (np.log(state.gains) - math.log(g_lo)) / log_span
    g_norm = np.clip(g_norm, 0.0, 1.0)

    p_lo, p_hi = cfg.power_range_w
    if p_hi > p_lo:
        p_norm = (state.powers_w - p_lo) / (p_hi - p_lo)
    else:
        p_norm = np.zeros_like(state.powers_w)

    return np.concatenate([d_norm, g_norm.ravel(), p_norm])


# ---------------------------------------------------------------------------
# episode lifecycle


def reset_episode(cfg: EpisodeConfig, rng: np.random.Generator) -> WorldState:
    """Draw a fresh episode start.

    Draw order (fixed for reproducibility): terminal positions, station
    positions, backlogs, powers.
    """
    n, m = cfg.num_ues, cfg.num_stations
    ue_pos = rng.uniform(0.0, cfg.area_m, size=(n, 2))
    st_pos = rng.uniform(0.0, cfg.area_m, size=(m, 2))
    data = rng.uniform(cfg.data_range_bits[0], cfg.data_range_bits[1], size=n)
    powers = rng.uniform(cfg.power_range_w[0], cfg.power_range_w[1], size=n)
    return WorldState(
        step_index=1,
        ue_positions=ue_pos,
        station_positions=st_pos,
        remaining_bits=data,
        powers_w=powers,
        gains=channel_gains(ue_pos, st_pos, cfg),
        finish_steps=np.zeros(n, dtype=np.int64),
    )


def draw_tape(cfg: EpisodeConfig, rng: np.random.Generator) -> EpisodeTape:
    """Pre-draw mobility and power randomness for max_steps steps."""
    n = cfg.num_ues
    deltas = rng.uniform(-cfg.max_move_m, cfg.max_move_m, size=(cfg.max_steps, n, 2))
    powers = rng.uniform(cfg.power_range_w[0], cfg.power_range_w[1],
                         size=(cfg.max_steps, n))
    return EpisodeTape(mobility_deltas=deltas, powers=powers)


def apply_mobility(positions: np.ndarray, delta: np.ndarray,
                   cfg: EpisodeConfig) -> np.ndarray:
    """Displace and clamp to the service area."""
    return np.clip(positions + delta, 0.0, cfg.area_m)


def mobility_update(positions: np.ndarray, cfg: EpisodeConfig,
                    rng: np.random.Generator) -> np.ndarray:
    """One move: independent per-axis uniform displacement, clamped."""
    delta = rng.uniform(-cfg.max_move_m, cfg.max_move_m, size=positions.shape)
    return apply_mobility(positions, delta, cfg)


def step_dynamics(state: WorldState, action, cfg: EpisodeConfig,
                  mobility_delta: np.ndarray, next_powers: np.ndarray):
    """Pure transition: (state, action, tape row) -> (next_state, outcome).

    Reward at the step: -time_penalty while any backlog is outstanding at
    the step start, -waste_penalty per terminal served although already
    finished, and -fail_penalty once if the step cap is reached with data
    left.  The tape row is only consumed when the episode continues; a
    terminal state is returned frozen (positions, powers and step_index kept)
    with only the backlog/finish bookkeeping updated.
    """
    assignment = as_assignment(action, cfg)
    t = state.step_index
    if t > cfg.max_steps:
        raise InvalidStateError(f"step_index {t} beyond cap {cfg.max_steps}")

    had_backlog = state.remaining_bits > 0.0
    served = assignment >= 1
    waste = int(np.sum(served & ~had_backlog))

    rates = per_ue_rates(state, assignment, cfg)
    drained = state.remaining_bits - rates * cfg.step_seconds
    new_remaining = np.where(served & had_backlog,
                             np.maximum(drained, 0.0), state.remaining_bits)

    finished_now = had_backlog & (new_remaining <= 0.0)
    finish_steps = np.where(finished_now, t, state.finish_steps)

    all_done = bool(np.all(new_remaining <= 0.0))
    truncated = (t == cfg.max_steps) and not all_done
    done = all_done or truncated

    reward = 0.0
    if np.any(had_backlog):
        reward -= cfg.time_penalty
    reward -= cfg.waste_penalty * waste
    if truncated:
        reward -= cfg.fail_penalty

    if done:
        next_state = WorldState(
            step_index=t,
            ue_positions=state.ue_positions,
            station_positions=state.station_positions,
            remaining_bits=new_remaining,
            powers_w=state.powers_w,
            gains=state.gains,
            finish_steps=finish_steps,
        )
    else:
        new_pos = apply_mobility(state.ue_positions, mobility_delta, cfg)
        next_state = WorldState(
            step_index=t + 1,
            ue_positions=new_pos,
            station_positions=state.station_positions,
            remaining_bits=new_remaining,
            powers_w=np.asarray(next_powers, dtype=np.float64),
            gains=channel_gains(new_pos, state.station_positions, cfg),
            finish_steps=finish_steps,
        )
    outcome = StepOutcome(
        reward=reward,
        per_ue_rate_bps=rates,
        waste_count=waste,
        done=done,
        truncated=truncated,
        per_ue_finish_step=finish_steps,
    )
    return next_state, outcome


def apply_step(state: WorldState, action, cfg: EpisodeConfig,
               rng: np.random.Generator):
    """step_dynamics with live randomness.

    The mobility and power draws happen unconditionally (even on a final
    step) so generator consumption never depends on the action taken.
    """
    delta = rng.uniform(-cfg.max_move_m, cfg.max_move_m,
                        size=state.ue_positions.shape)
    powers = rng.uniform(cfg.power_range_w[0], cfg.power_range_w[1],
                         size=state.num_ues)
    return step_dynamics(state, action, cfg, delta, powers)


class DownlinkEnv:
    """Episode runner owning the randomness tape.

    reset(seed=k) always reproduces the same start and the same future
    tape, so different policies can be compared on identical episodes.
    """

    def __init__(self, cfg: EpisodeConfig, seed=None):
        self.cfg = cfg
        self._rng = np.random.default_rng(seed)
        self._state = None
        self._tape = None
        self._terminal = True

    @property
    def state(self) -> WorldState:
        if self._state is None:
            raise InvalidStateError("reset() has not been called")
        return self._state

    @property
    def tape(self) -> EpisodeTape:
        if self._tape is None:
            raise InvalidStateError("reset() has not been called")
        return self._tape

    @property
    def done(self) -> bool:
        return self._terminal

    def reset(self, seed=None) -> WorldState:
        if seed is not None:
            self._rng = np.random.default_rng(seed)
        self._state = reset_episode(self.cfg, self._rng)
        self._tape = draw_tape(self.cfg, self._rng)
        self._terminal = False
        return self._state

    def step(self, action):
        if self._terminal:
            raise InvalidStateError("episode is over; call reset()")
        t = self._state.step_index
        self._state, outcome = step_dynamics(
            self._state, action, self.cfg,
            self._tape.mobility_deltas[t - 1], self._tape.powers[t - 1],
        )
        self._terminal = outcome.done
        return self._state, outcome
