"""Lazy-CFR and Lazy-CFR+.

An infoset keeps its strategy fixed until the opponent-and-chance reach that
has arrived at it since its last update reaches the threshold ``theta``.  Its
regret learner then takes a single step on the counterfactual reward summed
over the whole segment.

The bookkeeping is exact.  Reach mass is carried per player and per history:

* ``pend[p][h]`` is reach mass that has arrived at ``h`` but has not yet been
  pushed to its children.  Mass is pushed only through nodes whose strategy
  has been constant since the mass arrived, so a delayed push is equal to an
  eager one.
* ``m1[h]`` and ``m2[h]`` live at decision histories of their owner.  ``m1``
  is the trigger mass since the last strategy update of ``h``'s infoset and
  ``m2`` is the mass since the subtree values below ``h`` last changed.
* ``v[h]`` caches the player-1 value of the subtree under the active profile.

Each round has two phases.  In the first, reach 1 is injected at the root
for each player and pushed down to the player's top infosets; infosets whose
trigger mass is at least ``theta`` are processed in FIFO order: their
segment counterfactual reward is harvested, the average is advanced, the
learner steps (the new strategy is staged, not yet active), pending mass is
pushed to the next own decision layer and triggered successors are queued.
In the second phase (:func:`refresh_cfv`) every history on a path from the
root to a member of a staged infoset is flushed top-down with the old
profile, banking ``m2 * v`` into the segment accumulators, then the staged
strategies become active and the cached values are recomputed bottom-up.

With ``theta = 0`` every infoset updates every round and the solver performs
exactly the vanilla CFR (or CFR+) update.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .game import CHANCE, P1, P2, TERMINAL, GameTree, StrategyProfile, build_infoset_index
from .olo import OloState, rm_plus_step, rm_step

MASS_TOL = 1e-9


@dataclass
class HarvestRecord:
    round: int
    infoset: int
    cfv: list[float]
    trigger_mass: float


@dataclass
class LazyState:
    tree: GameTree
    theta: float
    plus: bool
    olo: list[OloState]
    sigma: list[list[float]]
    cfv: list[list[float]]
    avg_num: list[list[float]]
    avg_den: list[float]
    own_pend: list[float]
    w_mark: list[float]
    segments: list[int]
    last_update: list[int]
    pend: list[list[float]]
    m1: list[float]
    m2: list[float]
    v: list[float]
    flag: list[int]
    succ: list[tuple[tuple[int, ...], ...]]
    top: tuple[tuple[int, ...], tuple[int, ...]]
    is_top: list[bool]
    t: int = 0
    w_total: float = 0.0
    touched_nodes: int = 0
    updated_infosets: int = 0
    last_round_updated: int = 0
    last_round_touched: int = 0
    achieved: float = 0.0
    mass_checks: int = 0
    mass_violations: int = 0
    max_trigger_ratio: float = 0.0
    staged: list[int] = field(default_factory=list)
    updated_log: list[list[int]] = field(default_factory=list)
    record_updates: bool = False
    harvest_hook: Callable[[HarvestRecord], None] | None = None

    @classmethod
    def new(cls, tree: GameTree, theta: float = 1.0, plus: bool = False,
            harvest_hook: Callable[[HarvestRecord], None] | None = None,
            record_updates: bool = False) -> "LazyState":
        if theta < 0:
            raise ValueError(f"theta must be nonnegative, got {theta!r}")
        n = tree.num_nodes
        m = len(tree.infosets)
        succ: list[tuple[tuple[int, ...], ...]] = [()] * m
        tops = []
        is_top = [False] * m
        for p in (P1, P2):
            ix = build_infoset_index(tree, p)
            for I, groups in ix.succ.items():
                succ[I] = groups
            tops.append(ix.top)
            for I in ix.top:
                is_top[I] = True
        sigma = [[1.0 / I.num_actions] * I.num_actions for I in tree.infosets]
        state = cls(
            tree=tree, theta=float(theta), plus=plus,
            olo=[OloState(I.num_actions) for I in tree.infosets],
            sigma=sigma,
            cfv=[[0.0] * I.num_actions for I in tree.infosets],
            avg_num=[[0.0] * I.num_actions for I in tree.infosets],
            avg_den=[0.0] * m, own_pend=[0.0] * m, w_mark=[0.0] * m,
            segments=[0] * m, last_update=[0] * m,
            pend=[[0.0] * n, [0.0] * n], m1=[0.0] * n, m2=[0.0] * n,
            v=[0.0] * n, flag=[0] * n, succ=succ, top=(tops[0], tops[1]), is_top=is_top,
            harvest_hook=harvest_hook, record_updates=record_updates,
        )
        _recompute_values(state)
        return state

    def current_profile(self) -> StrategyProfile:
        return StrategyProfile(self.tree, self.sigma)

    def average(self) -> StrategyProfile:
        return average_strategy(self)

    def trigger_mass(self, I: int) -> float:
        return sum(self.m1[h] for h in self.tree.infosets[I].members)


def _recompute_values(state: LazyState) -> None:
    tree, v, sigma = state.tree, state.v, state.sigma
    for h in range(tree.num_nodes - 1, -1, -1):
        a = tree.actor[h]
        if a == TERMINAL:
            v[h] = tree.utility[h]
            continue
        probs = tree.chance_probs[h] if a == CHANCE else sigma[tree.infoset[h]]
        s = 0.0
        for p, c in zip(probs, tree.children[h]):
            s += p * v[c]
        v[h] = s


def _deliver(state: LazyState, player: int, start: int, mass: float) -> int:
    """Push ``mass`` into ``start`` and onward through non-owned nodes.

    Stops at the player's own decision histories (recording the arrival) and at
    terminals.  Pending mass found on the way is swept along.  Returns the
    number of histories visited.
    """
    tree = state.tree
    actor, kids, infoset, cprobs = tree.actor, tree.children, tree.infoset, tree.chance_probs
    pend, m1, m2, sigma = state.pend[player], state.m1, state.m2, state.sigma
    visited = 0
    stack = [(start, mass)]
    while stack:
        h, x = stack.pop()
        visited += 1
        a = actor[h]
        if a == TERMINAL:
            continue
        if a == player:
            m1[h] += x
            m2[h] += x
            pend[h] += x
            continue
        x += pend[h]
        pend[h] = 0.0
        probs = cprobs[h] if a == CHANCE else sigma[infoset[h]]
        for p, c in zip(probs, kids[h]):
            stack.append((c, x * p))
    return visited


def propagate_reach(state: LazyState, infoset: int, reach_by_outcome) -> bool:
    """Record reach arriving at the members of ``infoset``.

    ``reach_by_outcome[j]`` is the mass reaching member j.  Returns whether the
    infoset's trigger mass now meets the threshold.  Mass is only accumulated;
    the update cascade is driven by :func:`lazy_round`.
    """
    info = state.tree.infosets[infoset]
    if len(reach_by_outcome) != len(info.members):
        raise ValueError(f"expected {len(info.members)} masses, got {len(reach_by_outcome)}")
    pend = state.pend[info.owner]
    for h, x in zip(info.members, reach_by_outcome):
        state.m1[h] += x
        state.m2[h] += x
        pend[h] += x
    return state.trigger_mass(infoset) >= state.theta


def _process(state: LazyState, I: int, step) -> int:
    """Harvest, average, learn and drain at infoset I; returns nodes visited."""
    tree = state.tree
    info = tree.infosets[I]
    p = info.owner
    sign = 1.0 if p == P1 else -1.0
    kids, v, m1, m2 = tree.children, state.v, state.m1, state.m2
    acc = state.cfv[I]
    mass = 0.0
    for h in info.members:
        w = m2[h]
        if w != 0.0:
            w *= sign
            for a, c in enumerate(kids[h]):
                acc[a] += w * v[c]
            m2[h] = 0.0
        mass += m1[h]
        m1[h] = 0.0
    state.mass_checks += 1
    ratio = mass / info.depth
    if ratio > state.max_trigger_ratio:
        state.max_trigger_ratio = ratio
    if mass > info.depth + MASS_TOL:
        state.mass_violations += 1

    old = state.sigma[I]
    weight = state.own_pend[I]
    state.own_pend[I] = 0.0
    if state.is_top[I]:
        weight += state.w_total - state.w_mark[I]
        state.w_mark[I] = state.w_total
    if weight != 0.0:
        num = state.avg_num[I]
        for a, q in enumerate(old):
            num[a] += weight * q
        state.avg_den[I] += weight
        for a, group in enumerate(state.succ[I]):
            share = weight * old[a]
            for J in group:
                state.own_pend[J] += share

    step(state.olo[I], acc)
    if state.harvest_hook is not None:
        state.harvest_hook(HarvestRecord(state.t, I, list(acc), mass))
    state.cfv[I] = [0.0] * info.num_actions
    state.segments[I] += 1
    state.last_update[I] = state.t
    state.staged.append(I)

    visited = 0
    pend = state.pend[p]
    for h in info.members:
        x = pend[h]
        pend[h] = 0.0
        for c in kids[h]:
            visited += _deliver(state, p, c, x)
    return visited


def refresh_cfv(state: LazyState) -> int:
    """Flush pending mass past every staged infoset, activate the staged
    strategies and recompute cached values.  Returns the nodes touched."""
    staged = state.staged
    if not staged:
        return 0
    tree = state.tree
    t = state.t
    actor, kids, parent, infoset, cprobs = (tree.actor, tree.children, tree.parent,
                                             tree.infoset, tree.chance_probs)
    flag, v, m1, m2, sigma = state.flag, state.v, state.m1, state.m2, state.sigma
    flagged = []
    for I in staged:
        for h in tree.infosets[I].members:
            x = h
            while x >= 0 and flag[x] != t:
                flag[x] = t
                flagged.append(x)
                x = parent[x]
    flagged.sort()
    extra = 0
    for x in flagged:
        a = actor[x]
        if a != CHANCE:
            w = m2[x]
            if w != 0.0:
                acc = state.cfv[infoset[x]]
                if a == P2:
                    w = -w
                for k, c in enumerate(kids[x]):
                    acc[k] += w * v[c]
                m2[x] = 0.0
        for p in (P1, P2):
            pend = state.pend[p]
            mass = pend[x]
            if mass == 0.0:
                continue
            pend[x] = 0.0
            if a == p:
                probs = None
            else:
                probs = cprobs[x] if a == CHANCE else sigma[infoset[x]]
            for k, c in enumerate(kids[x]):
                y = mass if probs is None else mass * probs[k]
                ac = actor[c]
                if ac == TERMINAL:
                    continue
                if ac == p:
                    m1[c] += y
                    m2[c] += y
                pend[c] += y
        for c in kids[x]:
            if flag[c] != t:
                extra += 1
    for I in staged:
        sigma[I] = list(state.olo[I].current)
    for x in reversed(flagged):
        a = actor[x]
        probs = cprobs[x] if a == CHANCE else sigma[infoset[x]]
        s = 0.0
        for p, c in zip(probs, kids[x]):
            s += p * v[c]
        v[x] = s
    return len(flagged) + extra


def _round(state: LazyState, step) -> LazyState:
    state.t += 1
    state.w_total += float(state.t) if state.plus else 1.0
    state.achieved += state.v[0]
    state.staged = []
    touched = 0
    tree = state.tree
    for p in (P1, P2):
        touched += _deliver(state, p, 0, 1.0)
        queue = deque(I for I in state.top[p] if state.trigger_mass(I) >= state.theta)
        while queue:
            I = queue.popleft()
            touched += _process(state, I, step)
            for group in state.succ[I]:
                for J in group:
                    if state.trigger_mass(J) >= state.theta:
                        queue.append(J)
    touched += refresh_cfv(state)
    n_upd = len(state.staged)
    if state.record_updates:
        state.updated_log.append(list(state.staged))
    state.staged = []
    state.touched_nodes += touched
    state.last_round_touched = touched
    state.updated_infosets += n_upd
    state.last_round_updated = n_upd
    return state


def lazy_round(state: LazyState, tree: GameTree | None = None) -> LazyState:
    return _round(state, rm_step)


def lazy_plus_round(state: LazyState, tree: GameTree | None = None) -> LazyState:
    return _round(state, rm_plus_step)


def pending_own_weight(state: LazyState) -> list[float]:
    """Averaging weight each infoset has accrued but not yet committed."""
    tree = state.tree
    extra = [0.0] * len(tree.infosets)
    for p in (P1, P2):
        order = list(state.top[p])
        i = 0
        while i < len(order):
            I = order[i]
            i += 1
            w = state.own_pend[I] + extra[I]
            if state.is_top[I]:
                w += state.w_total - state.w_mark[I]
            extra[I] = w
            sig = state.sigma[I]
            for a, group in enumerate(state.succ[I]):
                for J in group:
                    extra[J] += w * sig[a]
                    order.append(J)
    return extra


def average_strategy(state: LazyState) -> StrategyProfile:
    """Own-reach weighted average including rounds not yet committed."""
    extra = pending_own_weight(state)
    probs = []
    for I, (num, den) in enumerate(zip(state.avg_num, state.avg_den)):
        w = extra[I]
        total = den + w
        if total > 0.0:
            sig = state.sigma[I]
            probs.append([(x + w * q) / total for x, q in zip(num, sig)])
        else:
            k = len(num)
            probs.append([1.0 / k] * k)
    return StrategyProfile(state.tree, probs)
