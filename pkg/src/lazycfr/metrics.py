"""Best response, exploitability, regret and structural diagnostics."""

from __future__ import annotations

import csv
import io
import itertools
import math
import sys
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .game import (CHANCE, P1, P2, TERMINAL, GameTree, InfosetIndex, StrategyProfile,
                   build_infoset_index, reach)

CSV_HEADER = ("round", "touched_nodes", "exploitability", "avg_regret_p1",
              "avg_regret_p2", "updated_infosets")


def _opponent_reach(tree: GameTree, profile: StrategyProfile, player: int) -> list[float]:
    q = [0.0] * tree.num_nodes
    q[0] = 1.0
    for h in range(tree.num_nodes):
        a = tree.actor[h]
        if a == TERMINAL:
            continue
        if a == player:
            for c in tree.children[h]:
                q[c] = q[h]
        else:
            probs = tree.chance_probs[h] if a == CHANCE else profile.probs[tree.infoset[h]]
            for p, c in zip(probs, tree.children[h]):
                q[c] = q[h] * p
    return q


def best_response(tree: GameTree, profile: StrategyProfile, player: int) -> tuple[dict[int, int], float]:
    """Pure best response of ``player`` to the rest of ``profile``.

    Returns ({infoset: action index}, value) with the value in normalized
    units from ``player``'s perspective.  Ties go to the lowest action index.
    """
    q = _opponent_reach(tree, profile, player)
    sign = 1.0 if player == P1 else -1.0
    actor, kids, infoset = tree.actor, tree.children, tree.infoset
    value: dict[int, float] = {}
    choice: dict[int, int] = {}

    def V(h: int) -> float:
        got = value.get(h)
        if got is not None:
            return got
        a = actor[h]
        if a == TERMINAL:
            out = sign * tree.utility[h]
        elif a == player:
            out = V(kids[h][decide(infoset[h])])
        else:
            probs = tree.chance_probs[h] if a == CHANCE else profile.probs[infoset[h]]
            out = 0.0
            for p, c in zip(probs, kids[h]):
                if p != 0.0:
                    out += p * V(c)
        value[h] = out
        return out

    def decide(I: int) -> int:
        got = choice.get(I)
        if got is not None:
            return got
        info = tree.infosets[I]
        totals = [0.0] * info.num_actions
        for m in info.members:
            w = q[m]
            for a, c in enumerate(kids[m]):
                totals[a] += w * V(c)
        best = 0
        for a in range(1, len(totals)):
            if totals[a] > totals[best] + 1e-15:
                best = a
        choice[I] = best
        return best

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 4 * tree.depth + 1000))
    try:
        root_value = V(0)
        for I in tree.player_infosets[player]:
            decide(I)
    finally:
        sys.setrecursionlimit(limit)
    return choice, root_value


def best_response_value(tree: GameTree, profile: StrategyProfile, player: int) -> float:
    return best_response(tree, profile, player)[1]


def exploitability(tree: GameTree, profile: StrategyProfile) -> float:
    """BR value of player 1 plus BR value of player 2 (normalized units)."""
    return best_response_value(tree, profile, P1) + best_response_value(tree, profile, P2)


def external_regret(tree: GameTree, rounds: int, achieved: float,
                    average: StrategyProfile) -> tuple[float, float]:
    """(R1_T, R2_T) from sum_t u1(sigma_t) and the reach-weighted average profile."""
    if rounds < 1:
        raise ValueError("external regret needs at least one round")
    if achieved is None or not math.isfinite(achieved):
        raise ValueError("cumulative achieved value is missing")
    br1 = best_response_value(tree, average, P1)
    br2 = best_response_value(tree, average, P2)
    return rounds * br1 - achieved, rounds * br2 + achieved


def state_regret(state) -> tuple[float, float]:
    return external_regret(state.tree, state.t, state.achieved, state.average())


def brute_force_regret(tree: GameTree, player: int, profiles: Sequence[StrategyProfile]) -> float:
    """max over pure strategies sigma of sum_t u^i(sigma, sigma_t^{-i}) - sum_t u^i(sigma_t)."""
    from .game import expected_value
    sign = 1.0 if player == P1 else -1.0
    achieved = sum(sign * expected_value(tree, p) for p in profiles)
    best = -math.inf
    for pure in pure_strategies(tree, player):
        total = 0.0
        for p in profiles:
            q = p.copy()
            for I, a in pure.items():
                q.probs[I] = [1.0 if b == a else 0.0 for b in range(tree.infosets[I].num_actions)]
            total += sign * expected_value(tree, q)
        best = max(best, total)
    return best - achieved


def pure_strategies(tree: GameTree, player: int) -> Iterable[dict[int, int]]:
    own = tree.player_infosets[player]
    ranges = [range(tree.infosets[I].num_actions) for I in own]
    for combo in itertools.product(*ranges):
        yield dict(zip(own, combo))


# ---------------------------------------------------------------------------
# xi and reach diagnostics


@dataclass
class XiReport:
    xi_per_player: tuple[int, int]
    infoset_counts: tuple[int, int]
    depth: int

    @property
    def xi(self) -> int:
        return max(self.xi_per_player)

    def as_dict(self) -> dict:
        return {"xi_p1": self.xi_per_player[0], "xi_p2": self.xi_per_player[1], "xi": self.xi,
                "infosets_p1": self.infoset_counts[0], "infosets_p2": self.infoset_counts[1],
                "depth": self.depth}


def compute_xi(tree: GameTree, index: InfosetIndex, player: int | None = None) -> int:
    """max over own strategies of the summed own reach of the player's infosets."""
    f: dict[int, int] = {}
    for I in reversed(index.own_order()):
        f[I] = 1 + max(sum(f[J] for J in group) for group in index.succ[I])
    return sum(f[I] for I in index.top)


def xi_report(tree: GameTree, indexes: Sequence[InfosetIndex] | None = None) -> XiReport:
    if indexes is None:
        indexes = [build_infoset_index(tree, p) for p in (P1, P2)]
    xs = tuple(compute_xi(tree, ix) for ix in indexes)
    return XiReport(xs, (len(tree.player_infosets[P1]), len(tree.player_infosets[P2])), tree.depth)


def brute_force_xi(tree: GameTree, player: int) -> int:
    best = 0
    for pure in pure_strategies(tree, player):
        probs = StrategyProfile.uniform(tree).probs
        for I, a in pure.items():
            probs[I] = [1.0 if b == a else 0.0 for b in range(tree.infosets[I].num_actions)]
        r = reach(tree, StrategyProfile(tree, probs))
        total = sum(r.infoset_own[I] for I in tree.player_infosets[player])
        best = max(best, round(total))
    return best


def reach_mass_diagnostic(tree: GameTree, profile: StrategyProfile, player: int) -> float:
    """sum over the player's infosets of the opponent-and-chance reach."""
    r = reach(tree, profile)
    return sum(r.infoset_others[I] for I in tree.player_infosets[player])


# ---------------------------------------------------------------------------
# convergence log


@dataclass
class LogRecord:
    round: int
    touched_nodes: int
    exploitability: float
    avg_regret_p1: float
    avg_regret_p2: float
    updated_infosets: int


@dataclass
class ConvergenceLog:
    scale: float = 1.0
    records: list[LogRecord] = field(default_factory=list)
    native_units: bool = False

    def append(self, record: LogRecord) -> None:
        if self.records and record.touched_nodes < self.records[-1].touched_nodes:
            raise ValueError("touched_nodes must be nondecreasing")
        self.records.append(record)

    def to_csv(self, extra: dict[str, Sequence[float]] | None = None) -> str:
        k = self.scale if self.native_units else 1.0
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = list(CSV_HEADER) + list(extra or {})
        w.writerow(header)
        for i, r in enumerate(self.records):
            row = [str(r.round), str(r.touched_nodes), format(r.exploitability * k, ".17g"),
                   format(r.avg_regret_p1 * k, ".17g"), format(r.avg_regret_p2 * k, ".17g"),
                   str(r.updated_infosets)]
            for col in (extra or {}).values():
                row.append(format(col[i], ".17g"))
            w.writerow(row)
        return buf.getvalue()

    def first_round_below(self, target: float):
        for r in self.records:
            if r.exploitability <= target:
                return r
        return None


def evaluate(state) -> LogRecord:
    """Snapshot of a solver state: exploitability of the average and average regrets."""
    tree = state.tree
    avg = state.average()
    br1 = best_response_value(tree, avg, P1)
    br2 = best_response_value(tree, avg, P2)
    T = max(state.t, 1)
    r1 = (state.t * br1 - state.achieved) / T
    r2 = (state.t * br2 + state.achieved) / T
    return LogRecord(state.t, state.touched_nodes, br1 + br2, r1, r2, state.updated_infosets)
