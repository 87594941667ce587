"""Reference policies and an exact finite-horizon search.

The search exploits the frozen randomness tape: mobility and power draws are
action-independent, so positions, powers and hence best-case (interference
free) rates for every future step can be tabulated up front.  Those solo
rates bound how fast any backlog can possibly drain, giving an admissible
lower bound for branch-and-bound over action sequences.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EpisodeConfig
from .env import (IDLE, AllocationAction, DownlinkEnv, EpisodeTape,
                  WorldState, apply_mobility, channel_gains, per_ue_rates,
                  step_dynamics)
from .errors import EnumerationCapError, InvalidParameterError

DEFAULT_NODE_CAP = 2 ** 20


def random_policy(state: WorldState, rng: np.random.Generator) -> AllocationAction:
    """Uniform over the whole joint action space (idle included)."""
    n, m = state.gains.shape
    index = int(rng.integers((m + 1) ** n))
    return AllocationAction.from_index(index, n, m)


def greedy_gain_policy(state: WorldState) -> AllocationAction:
    """Each unfinished terminal takes its best-gain station; finished idle.

    Ignores interference, which is exactly its blind spot as a baseline.
    """
    n, m = state.gains.shape
    assignment = np.zeros(n, dtype=np.int64)
    unfinished = state.remaining_bits > 0.0
    best = np.argmax(state.gains, axis=1) + 1
    assignment[unfinished] = best[unfinished]
    return AllocationAction.from_assignment(assignment, m)


def _reduced_assignments(unfinished_idx, n, m):
    """Yield full assignments enumerating only unfinished terminals.

    Ordered by increasing joint action index (finished terminals idle).
    """
    k = len(unfinished_idx)
    base = m + 1
    for reduced in range(base ** k):
        assignment = np.zeros(n, dtype=np.int64)
        r = reduced
        for i in unfinished_idx:
            r, assignment[i] = divmod(r, base)
        yield assignment


def myopic_makespan_score(state: WorldState, assignment, cfg: EpisodeConfig):
    """Steps to finish every backlog if this step's rates persisted."""
    rates = per_ue_rates(state, assignment, cfg)
    score = 0.0
    for i in range(state.num_ues):
        d = state.remaining_bits[i]
        if d <= 0.0:
            continue
        r = rates[i] * cfg.step_seconds
        score = max(score, d / r if r > 0.0 else float("inf"))
    return score


def myopic_bruteforce_policy(state: WorldState, cfg: EpisodeConfig,
                             cap: int = DEFAULT_NODE_CAP) -> AllocationAction:
    """One-step lookahead: minimize the projected completion time.

    Enumerates every assignment of the unfinished terminals (finished ones
    are kept idle since serving them only adds interference and waste) and
    keeps the first minimizer, i.e. the lowest joint action index.
    """
    n, m = state.gains.shape
    unfinished_idx = [i for i in range(n) if state.remaining_bits[i] > 0.0]
    if not unfinished_idx:
        return AllocationAction.from_assignment(np.zeros(n, dtype=np.int64), m)
    if (m + 1) ** len(unfinished_idx) > cap:
        raise EnumerationCapError(
            f"{(m + 1) ** len(unfinished_idx)} assignments exceed cap {cap}"
        )
    best_score = float("inf")
    best = None
    for assignment in _reduced_assignments(unfinished_idx, n, m):
        score = myopic_makespan_score(state, assignment, cfg)
        if score < best_score:
            best_score = score
            best = assignment
    if best is None:  # every option scored inf; idle out the step
        best = np.zeros(n, dtype=np.int64)
    return AllocationAction.from_assignment(best, m)


def play_episode(env: DownlinkEnv, action_fn, max_steps=None):
    """Roll a policy on an env until done; returns summary stats.

    action_fn maps WorldState to anything env.step accepts.
    """
    state = env.state
    total, waste, steps = 0.0, 0, 0
    truncated = False
    limit = max_steps if max_steps is not None else env.cfg.max_steps
    while steps < limit:
        state, out = env.step(action_fn(state))
        total += out.reward
        waste += out.waste_count
        steps += 1
        if out.done:
            truncated = out.truncated
            break
    return {"total_reward": total, "steps": steps, "waste": waste,
            "truncated": truncated or steps >= limit and not state.all_finished,
            "completed": state.all_finished}


@dataclass(frozen=True)
class OracleResult:
    """Outcome of the exhaustive horizon search.

    best_makespan is None when no action sequence finishes every backlog
    within the horizon.  nodes_expanded counts applied transitions.
    """

    best_makespan: object
    action_sequence: tuple
    nodes_expanded: int


def _solo_rate_table(state: WorldState, tape: EpisodeTape,
                     cfg: EpisodeConfig, horizon: int) -> np.ndarray:
    """(horizon, N) best-case per-step drain: one terminal alone on its
    best station, no interference."""
    n = state.num_ues
    table = np.zeros((horizon, n))
    pos = state.ue_positions
    powers = state.powers_w
    t0 = state.step_index
    for k in range(horizon):
        if k > 0:
            row = t0 + k - 2  # tape row consumed when leaving step t0+k-1
            pos = apply_mobility(pos, tape.mobility_deltas[row], cfg)
            powers = tape.powers[row]
        gains = channel_gains(pos, state.station_positions, cfg)
        snr = gains.max(axis=1) * powers / cfg.noise_power_w
        table[k] = cfg.bandwidth_hz * np.log2(1.0 + snr) * cfg.step_seconds
    return table


def _steps_lower_bound(remaining, offset, cumulative, horizon):
    """Min steps to drain each backlog at best-case rates, from step offset.

    cumulative[k] holds per-terminal drain summed over table rows 0..k-1.
    Returns horizon + 1 when some terminal cannot finish in time.
    """
    worst = 0
    for i in range(len(remaining)):
        d = remaining[i]
        if d <= 0.0:
            continue
        target = cumulative[offset, i] + d
        k = int(np.searchsorted(cumulative[offset + 1:, i], target - 1e-9))
        need = k + 1
        if offset + need > horizon:
            return horizon + 1
        worst = max(worst, need)
    return worst


def exhaustive_horizon_search(env: DownlinkEnv, horizon: int,
                              cap: int = DEFAULT_NODE_CAP) -> OracleResult:
    """Branch-and-bound over all action sequences up to a horizon.

    Requires a freshly reset (or mid-episode) env; the env object is not
    mutated.  Refuses up front if the worst-case enumeration exceeds cap,
    and aborts if the searched nodes actually exceed it.
    """
    cfg = env.cfg
    root = env.state
    tape = env.tape
    if horizon < 1:
        raise InvalidParameterError(f"horizon must be >= 1, got {horizon}")
    horizon = min(horizon, cfg.max_steps - root.step_index + 1)
    n, m = root.gains.shape
    unfinished = [i for i in range(n) if root.remaining_bits[i] > 0.0]
    branching = (m + 1) ** len(unfinished)
    if branching ** horizon > cap:
        raise EnumerationCapError(
            f"{branching}^{horizon} sequences exceed cap {cap}"
        )

    solo = _solo_rate_table(root, tape, cfg, horizon)
    # cumulative[k] = drain over the first k rows; padded for searchsorted
    cumulative = np.vstack([np.zeros(n), np.cumsum(solo, axis=0)])

    nodes = 0
    best_len = horizon + 1
    best_seq = None

    def seed_with_policy(policy_fn):
        nonlocal best_len, best_seq
        state, seq = root, []
        for depth in range(horizon):
            action = policy_fn(state)
            seq.append(np.asarray(action.assignment))
            state, out = step_dynamics(
                state, action, cfg,
                tape.mobility_deltas[state.step_index - 1],
                tape.powers[state.step_index - 1])
            if state.all_finished:
                if depth + 1 < best_len:
                    best_len = depth + 1
                    best_seq = list(seq)
                return
            if out.done:
                return

    # a quick greedy-ish upper bound tightens pruning from the start
    seed_with_policy(lambda s: myopic_bruteforce_policy(s, cfg, cap))

    def dfs(state, depth, prefix):
        nonlocal nodes, best_len, best_seq
        lb = _steps_lower_bound(state.remaining_bits, depth, cumulative,
                                horizon)
        if depth + lb >= best_len:
            return
        live = [i for i in range(n) if state.remaining_bits[i] > 0.0]
        for assignment in _reduced_assignments(live, n, m):
            nodes += 1
            if nodes > cap:
                raise EnumerationCapError(
                    f"search exceeded node cap {cap}"
                )
            nxt, out = step_dynamics(
                state, assignment, cfg,
                tape.mobility_deltas[state.step_index - 1],
                tape.powers[state.step_index - 1])
            if nxt.all_finished:
                if depth + 1 < best_len:
                    best_len = depth + 1
                    best_seq = prefix + [assignment]
                continue
            if out.done or depth + 1 >= best_len:
                continue
            dfs(nxt, depth + 1, prefix + [assignment])

    dfs(root, 0, [])
    if best_seq is None:
        return OracleResult(best_makespan=None, action_sequence=(),
                            nodes_expanded=nodes)
    actions = tuple(AllocationAction.from_assignment(a, m) for a in best_seq)
    return OracleResult(best_makespan=best_len, action_sequence=actions,
                        nodes_expanded=nodes)
