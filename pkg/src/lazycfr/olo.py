"""Online linear optimization over the probability simplex.

Each learner keeps an :class:`OloState`; a step consumes the reward vector
for the distribution currently in ``state.current`` and replaces it with the
distribution for the next round.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

POSITIVE_FLOOR = 1e-12


class OloState:
    __slots__ = ("action_count", "cumulative_regret", "cumulative_reward",
                 "cumulative_scalar_reward", "hedge_score", "current", "steps")

    def __init__(self, action_count: int):
        if action_count < 1:
            raise ValueError(f"action_count must be >= 1, got {action_count}")
        self.action_count = action_count
        self.cumulative_regret = [0.0] * action_count
        self.cumulative_reward = [0.0] * action_count
        self.cumulative_scalar_reward = 0.0
        self.hedge_score = [0.0] * action_count
        self.current = [1.0 / action_count] * action_count
        self.steps = 0

    def copy(self) -> "OloState":
        out = OloState(self.action_count)
        out.cumulative_regret = list(self.cumulative_regret)
        out.cumulative_reward = list(self.cumulative_reward)
        out.cumulative_scalar_reward = self.cumulative_scalar_reward
        out.hedge_score = list(self.hedge_score)
        out.current = list(self.current)
        out.steps = self.steps
        return out

    def regret(self) -> float:
        """max_a sum_t c_t(a) - sum_t <w_t, c_t> so far."""
        return max(self.cumulative_reward) - self.cumulative_scalar_reward

    def __repr__(self):
        return f"OloState(A={self.action_count}, current={self.current})"


def _check(state: OloState, reward: Sequence[float]) -> list[float]:
    if len(reward) != state.action_count:
        raise ValueError(f"reward has {len(reward)} entries, expected {state.action_count}")
    c = [float(x) for x in reward]
    if not all(math.isfinite(x) for x in c):
        raise ValueError(f"reward contains non-finite entries: {c}")
    return c


def _record(state: OloState, c: list[float]) -> float:
    achieved = sum(w * x for w, x in zip(state.current, c))
    for a, x in enumerate(c):
        state.cumulative_reward[a] += x
    state.cumulative_scalar_reward += achieved
    state.steps += 1
    return achieved


def regret_matching(regrets: Sequence[float]) -> list[float]:
    """Distribution proportional to positive parts, uniform if none exceed the floor."""
    pos = [r if r > 0.0 else 0.0 for r in regrets]
    total = sum(pos)
    if total < POSITIVE_FLOOR:
        return [1.0 / len(pos)] * len(pos)
    return [p / total for p in pos]


def rm_step(state: OloState, reward: Sequence[float]) -> OloState:
    c = _check(state, reward)
    achieved = _record(state, c)
    R = state.cumulative_regret
    for a, x in enumerate(c):
        R[a] += x - achieved
    state.current = regret_matching(R)
    return state


def rm_plus_step(state: OloState, reward: Sequence[float]) -> OloState:
    c = _check(state, reward)
    achieved = _record(state, c)
    R = state.cumulative_regret
    for a, x in enumerate(c):
        r = R[a] + x - achieved
        R[a] = r if r > 0.0 else 0.0
    state.current = regret_matching(R)
    return state


def softmax(scores: Sequence[float]) -> list[float]:
    m = max(scores)
    e = [math.exp(s - m) for s in scores]
    z = sum(e)
    return [x / z for x in e]


def hedge_step(state: OloState, reward: Sequence[float], rate: float) -> OloState:
    """Exponential weights; the distribution after t steps uses rewards 1..t."""
    if not (rate >= 0.0 and math.isfinite(rate)):
        raise ValueError(f"rate must be a nonnegative finite number, got {rate!r}")
    c = _check(state, reward)
    _record(state, c)
    for a, x in enumerate(c):
        state.hedge_score[a] += rate * x
    state.current = softmax(state.hedge_score)
    return state


def tuned_hedge_rate(action_count: int, horizon: int, max_abs_reward: float) -> float:
    """sqrt(ln A / (T * max c^2)); 0 when the problem is degenerate."""
    if action_count < 2 or horizon < 1:
        return 0.0
    denom = horizon * max_abs_reward ** 2
    if not denom > 0.0:
        return 0.0
    return math.sqrt(math.log(action_count) / denom)


def measure_olo_regret(rewards: Sequence[Sequence[float]],
                       plays: Sequence[Sequence[float]]) -> float:
    if len(rewards) != len(plays):
        raise ValueError(f"{len(rewards)} reward vectors but {len(plays)} plays")
    if not rewards:
        return 0.0
    c = np.asarray(rewards, dtype=float)
    w = np.asarray(plays, dtype=float)
    if c.shape != w.shape:
        raise ValueError(f"shape mismatch: rewards {c.shape}, plays {w.shape}")
    return float(c.sum(axis=0).max() - np.einsum("ta,ta->", c, w))


Updater = Callable[[OloState, Sequence[float]], OloState]


def run_olo(updater: Updater, rewards: Sequence[Sequence[float]],
            action_count: int | None = None) -> tuple[list[list[float]], OloState]:
    """Play ``updater`` against a fixed reward sequence; returns the plays used."""
    if action_count is None:
        action_count = len(rewards[0])
    state = OloState(action_count)
    plays = []
    for c in rewards:
        plays.append(list(state.current))
        updater(state, c)
    return plays, state


def collapse(rewards: Sequence[Sequence[float]], boundaries: Sequence[int]) -> list[list[float]]:
    """Sum consecutive reward vectors into segments ending at each boundary (exclusive)."""
    out, start = [], 0
    for end in boundaries:
        if not start < end <= len(rewards):
            raise ValueError(f"invalid segment boundary {end} after {start}")
        out.append(list(np.sum(np.asarray(rewards[start:end], dtype=float), axis=0)))
        start = end
    if start != len(rewards):
        raise ValueError("boundaries must end at the sequence length")
    return out


def run_lazy_schedule(updater: Updater, rewards: Sequence[Sequence[float]],
                      boundaries: Sequence[int]) -> tuple[list[list[float]], OloState]:
    """Keep the strategy fixed within each segment and update once at its end.

    Returns the distribution played at every original round.
    """
    state = OloState(len(rewards[0]))
    plays, start = [], 0
    for end in boundaries:
        pending = [0.0] * state.action_count
        for t in range(start, end):
            plays.append(list(state.current))
            for a, x in enumerate(rewards[t]):
                pending[a] += x
        updater(state, pending)
        start = end
    return plays, state


def squared_norm_sum(rewards: Sequence[Sequence[float]]) -> float:
    c = np.asarray(rewards, dtype=float)
    return float((c * c).sum())
