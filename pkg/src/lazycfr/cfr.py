"""Full-traversal CFR, CFR+ and outcome-sampling Monte Carlo CFR.

Both players are updated simultaneously: regrets in round t are computed
against the same profile sigma_t, after which every infoset steps its regret
learner.  Strategy averages are weighted by the owner's own reach (times t
for CFR+), so :func:`average_strategy` realizes the average of the played
realization plans.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .game import CHANCE, P1, P2, TERMINAL, GameTree, StrategyProfile
from .olo import OloState, regret_matching, rm_plus_step, rm_step

MCCFR_EXPLORATION = 0.6


@dataclass
class CfvTable:
    """Counterfactual rewards per infoset of ``player`` (global infoset ids)."""

    player: int
    cfv: dict[int, list[float]]
    own_reach: dict[int, float]
    opp_reach: dict[int, float]
    root_value: float
    nodes_visited: int

    def value(self, I: int, strategy) -> float:
        return sum(p * c for p, c in zip(strategy, self.cfv[I]))


@dataclass
class CfrState:
    """Solver state shared by CFR, CFR+ and MC-CFR.

    ``achieved`` is sum_t u1(sigma_t) in normalized units when tracked; it
    feeds :func:`lazycfr.metrics.external_regret`.
    """

    tree: GameTree
    olo: list[OloState]
    avg_num: list[list[float]]
    avg_den: list[float]
    plus: bool = False
    t: int = 0
    touched_nodes: int = 0
    updated_infosets: int = 0
    achieved: float = 0.0
    track_value: bool = True
    exploration: float = MCCFR_EXPLORATION
    rng: random.Random | None = None
    seed: int | None = None
    extras: dict = field(default_factory=dict)

    @classmethod
    def new(cls, tree: GameTree, plus: bool = False, seed: int | None = None,
            track_value: bool = True, exploration: float = MCCFR_EXPLORATION) -> "CfrState":
        return cls(tree=tree,
                   olo=[OloState(I.num_actions) for I in tree.infosets],
                   avg_num=[[0.0] * I.num_actions for I in tree.infosets],
                   avg_den=[0.0] * len(tree.infosets),
                   plus=plus, track_value=track_value, exploration=exploration,
                   rng=random.Random(seed), seed=seed)

    def current_profile(self) -> StrategyProfile:
        return StrategyProfile(self.tree, [s.current for s in self.olo])

    def average(self) -> StrategyProfile:
        return average_strategy(self)


def _weight(state, t: int) -> float:
    return float(t) if state.plus else 1.0


def full_pass(tree: GameTree, strategies) -> tuple[list[float], list[float], list[float], list[float]]:
    """Top-down reach and bottom-up player-1 values under ``strategies``.

    ``strategies[I]`` is the action distribution at global infoset I.
    Returns (reach_p1, reach_p2, reach_chance, value).
    """
    n = tree.num_nodes
    actor, kids, infoset, cprobs = tree.actor, tree.children, tree.infoset, tree.chance_probs
    r1 = [0.0] * n
    r2 = [0.0] * n
    rc = [0.0] * n
    r1[0] = r2[0] = rc[0] = 1.0
    for h in range(n):
        a = actor[h]
        if a == TERMINAL:
            continue
        x1, x2, xc = r1[h], r2[h], rc[h]
        if a == P1:
            for p, c in zip(strategies[infoset[h]], kids[h]):
                r1[c] = x1 * p
                r2[c] = x2
                rc[c] = xc
        elif a == P2:
            for p, c in zip(strategies[infoset[h]], kids[h]):
                r1[c] = x1
                r2[c] = x2 * p
                rc[c] = xc
        else:
            for p, c in zip(cprobs[h], kids[h]):
                r1[c] = x1
                r2[c] = x2
                rc[c] = xc * p
    v = list(tree.utility)
    for h in range(n - 1, -1, -1):
        a = actor[h]
        if a == TERMINAL:
            continue
        probs = cprobs[h] if a == CHANCE else strategies[infoset[h]]
        s = 0.0
        for p, c in zip(probs, kids[h]):
            s += p * v[c]
        v[h] = s
    return r1, r2, rc, v


def _cfv_from_pass(tree: GameTree, player: int, r1, r2, rc, v, visited: int) -> CfvTable:
    sign = 1.0 if player == P1 else -1.0
    opp = r2 if player == P1 else r1
    own = r1 if player == P1 else r2
    cfv, own_reach, opp_reach = {}, {}, {}
    for I in tree.player_infosets[player]:
        info = tree.infosets[I]
        acc = [0.0] * info.num_actions
        mass = 0.0
        for h in info.members:
            w = opp[h] * rc[h]
            if w == 0.0:
                continue
            mass += w
            for a, c in enumerate(tree.children[h]):
                acc[a] += sign * w * v[c]
        cfv[I] = acc
        own_reach[I] = own[info.members[0]]
        opp_reach[I] = mass
    return CfvTable(player, cfv, own_reach, opp_reach, v[0], visited)


def compute_cfv(tree: GameTree, profile: StrategyProfile, player: int) -> CfvTable:
    """Counterfactual rewards sum_h pi^{-i}(h) u^i(h.a) at every infoset of ``player``."""
    r1, r2, rc, v = full_pass(tree, profile.probs)
    return _cfv_from_pass(tree, player, r1, r2, rc, v, tree.num_nodes)


def _full_round(state: CfrState, step) -> CfrState:
    tree = state.tree
    strategies = [s.current for s in state.olo]
    r1, r2, rc, v = full_pass(tree, strategies)
    t = state.t + 1
    w = _weight(state, t)
    tables = [_cfv_from_pass(tree, p, r1, r2, rc, v, tree.num_nodes) for p in (P1, P2)]
    for table in tables:
        for I, c in table.cfv.items():
            reach_w = table.own_reach[I] * w
            if reach_w:
                num = state.avg_num[I]
                for a, p in enumerate(strategies[I]):
                    num[a] += reach_w * p
                state.avg_den[I] += reach_w
            step(state.olo[I], c)
    state.t = t
    state.touched_nodes += tree.num_nodes
    state.updated_infosets += len(tree.infosets)
    state.achieved += v[0]
    return state


def cfr_round(state: CfrState, tree: GameTree | None = None) -> CfrState:
    return _full_round(state, rm_step)


def cfr_plus_round(state: CfrState, tree: GameTree | None = None) -> CfrState:
    return _full_round(state, rm_plus_step)


def average_strategy(state) -> StrategyProfile:
    probs = []
    for I, (num, den) in enumerate(zip(state.avg_num, state.avg_den)):
        if den > 0.0:
            probs.append([x / den for x in num])
        else:
            k = len(num)
            probs.append([1.0 / k] * k)
    return StrategyProfile(state.tree, probs)


# ---------------------------------------------------------------------------
# outcome sampling


def _sample(rng: random.Random, probs) -> int:
    x = rng.random()
    acc = 0.0
    last = 0
    for i, p in enumerate(probs):
        if p <= 0.0:
            continue
        acc += p
        last = i
        if x < acc:
            return i
    return last


def sampled_regret_update(tree: GameTree, strategies, player: int, rng: random.Random,
                          exploration: float = MCCFR_EXPLORATION):
    """One outcome-sampling episode for ``player``.

    Returns (regret_updates, average_updates, nodes_visited) where the update
    maps are keyed by global infoset id.  The expectation of the regret
    update equals the full-traversal instantaneous counterfactual regret.
    """
    actor, kids, infoset, cprobs = tree.actor, tree.children, tree.infoset, tree.chance_probs
    path = []
    h = 0
    my_reach = opp_reach = sample_reach = 1.0
    while actor[h] != TERMINAL:
        a = actor[h]
        if a == CHANCE:
            i = _sample(rng, cprobs[h])
            p = cprobs[h][i]
            path.append((h, i, None, None, my_reach, opp_reach, sample_reach))
            opp_reach *= p
            sample_reach *= p
        else:
            policy = strategies[infoset[h]]
            if a == player:
                k = len(policy)
                sample_policy = [exploration / k + (1.0 - exploration) * p for p in policy]
            else:
                sample_policy = policy
            i = _sample(rng, sample_policy)
            path.append((h, i, policy, sample_policy, my_reach, opp_reach, sample_reach))
            if a == player:
                my_reach *= policy[i]
            else:
                opp_reach *= policy[i]
            sample_reach *= sample_policy[i]
        h = kids[h][i]
    sign = 1.0 if player == P1 else -1.0
    value = sign * tree.utility[h]
    regrets: dict[int, list[float]] = {}
    averages: dict[int, list[float]] = {}
    for h, i, policy, sample_policy, mr, orr, sr in reversed(path):
        if policy is None:
            continue
        k = len(policy)
        child_values = [0.0] * k
        child_values[i] = value / sample_policy[i]
        estimate = policy[i] * child_values[i]
        if actor[h] == player:
            I = infoset[h]
            scale = orr / sr
            regrets[I] = [(cv - estimate) * scale for cv in child_values]
            averages[I] = [mr * p / sr for p in policy]
        value = estimate
    return regrets, averages, len(path) + 1


def mccfr_round(state: CfrState, tree: GameTree | None = None) -> CfrState:
    tree = state.tree
    strategies = [s.current for s in state.olo]
    staged = []
    for player in (P1, P2):
        regrets, averages, visited = sampled_regret_update(
            tree, strategies, player, state.rng, state.exploration)
        state.touched_nodes += visited
        staged.append((regrets, averages))
    t = state.t + 1
    w = _weight(state, t)
    touched_sets = set()
    for regrets, averages in staged:
        for I, upd in averages.items():
            num = state.avg_num[I]
            for a, x in enumerate(upd):
                num[a] += w * x
            state.avg_den[I] += w * sum(upd)
        for I, upd in regrets.items():
            s = state.olo[I]
            R = s.cumulative_regret
            for a, x in enumerate(upd):
                R[a] += x
            if state.plus:
                for a in range(len(R)):
                    if R[a] < 0.0:
                        R[a] = 0.0
            s.current = regret_matching(R)
            s.steps += 1
            touched_sets.add(I)
    if state.track_value:
        state.achieved += full_pass(tree, strategies)[3][0]
    state.updated_infosets += len(touched_sets)
    state.t = t
    return state
