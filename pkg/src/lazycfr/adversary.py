"""Oblivious adversary for regret lower-bound experiments.

The game is a perfect-information alternating tree with branching ``A``.  The
learner is player 1.  Each round the adversary draws, independently of the
learner, one uniformly random pure action at every opponent node in ``M`` and
a uniformly random utility in {-1, +1} at every terminal in ``M``; terminals
outside ``M`` pay 0.  ``M`` is the part of the tree reachable by learner
strategies that maximize the number of learner decision nodes reached.

Learners receive full counterfactual feedback: for every learner node ``h``
and action ``a`` the reward ``q(h) * V(h.a)`` where ``q`` is the adversary's
reach (0 or 1) and ``V`` the round's value of the subtree under the learner's
current strategy.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Protocol, Sequence

import numpy as np

from .game import P1, P2, TERMINAL, GameSpec, GameTree, build_game, build_infoset_index
from .metrics import compute_xi
from .olo import OloState, rm_step

MAX_NODES = 100_000
MAX_ENUMERATION = 2_000_000


@dataclass(frozen=True)
class AdversarySpec:
    """``depth`` is the number of decisions per player along every full path.

    ``stub_actions`` makes the tree asymmetric: the last ``stub_actions``
    actions at the learner's first decision end the game immediately, so the
    reach-maximizing strategies avoid them and their terminals fall outside M.
    """

    branching: int = 2
    depth: int = 2
    seed: int = 0
    rounds: int = 1000
    opponent_first: bool = False
    stub_actions: int = 0

    def __post_init__(self):
        if self.branching < 2:
            raise ValueError("branching must be at least 2")
        if self.depth < 1:
            raise ValueError("depth must be at least 1")
        if not 0 <= self.stub_actions < self.branching:
            raise ValueError("stub_actions must be in [0, branching)")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")


@dataclass
class AdversaryGame:
    spec: AdversarySpec
    tree: GameTree
    learner: int
    learner_nodes: list[int]
    opponent_nodes: list[int]
    terminals: list[int]
    in_m: list[bool]
    xi: int

    @property
    def m_opponent_nodes(self) -> list[int]:
        return [h for h in self.opponent_nodes if self.in_m[h]]

    @property
    def m_terminals(self) -> list[int]:
        return [h for h in self.terminals if self.in_m[h]]


def _layout(spec: AdversarySpec) -> GameSpec:
    A, layers = spec.branching, 2 * spec.depth
    first = 1 if spec.opponent_first else 0
    total = sum(A ** k for k in range(layers + 1))
    if total > MAX_NODES:
        raise ValueError(f"adversary tree would have {total} nodes (cap {MAX_NODES})")
    g = GameSpec(name=f"adversary-{A}x{spec.depth}", params={
        "branching": A, "depth": spec.depth, "opponent_first": spec.opponent_first,
        "stub_actions": spec.stub_actions})
    ids = itertools.count()
    learner_seen = [False]

    def grow(level, path):
        if level == layers:
            return g.add_node(next(ids), "terminal", utility=0.0)
        mover = "p1" if (level + first) % 2 == 0 else "p2"
        key = "n" + "".join(map(str, path))
        node = g.add_node(next(ids), mover, labels=(key, key))
        stubs = 0
        if mover == "p1" and not learner_seen[0]:
            learner_seen[0] = True
            stubs = spec.stub_actions
        for a in range(A):
            if a >= A - stubs:
                child = g.add_node(next(ids), "terminal", utility=0.0)
            else:
                child = grow(level + 1, path + (a,))
            g.add_edge(node, str(a), child)
        return node

    grow(0, ())
    return g


def _reach_maximizing_region(tree: GameTree, learner: int) -> list[bool]:
    """Nodes reachable under some strategy maximizing the own-node count."""
    n = tree.num_nodes
    f = [0] * n
    for h in range(n - 1, -1, -1):
        a = tree.actor[h]
        if a == TERMINAL:
            continue
        kids = tree.children[h]
        if a == learner:
            f[h] = 1 + max(f[c] for c in kids)
        else:
            f[h] = sum(f[c] for c in kids)
    in_m = [False] * n
    in_m[0] = True
    for h in range(n):
        if not in_m[h] or tree.actor[h] == TERMINAL:
            continue
        kids = tree.children[h]
        if tree.actor[h] == learner:
            best = max(f[c] for c in kids)
            for c in kids:
                if f[c] == best:
                    in_m[c] = True
        else:
            for c in kids:
                in_m[c] = True
    return in_m


def build_adversary_game(spec: AdversarySpec) -> AdversaryGame:
    tree = build_game(_layout(spec))
    learner = P1
    ix = build_infoset_index(tree, learner)
    return AdversaryGame(
        spec=spec, tree=tree, learner=learner,
        learner_nodes=[h for h in range(tree.num_nodes) if tree.actor[h] == learner],
        opponent_nodes=[h for h in range(tree.num_nodes) if tree.actor[h] == 1 - learner],
        terminals=[h for h in range(tree.num_nodes) if tree.actor[h] == TERMINAL],
        in_m=_reach_maximizing_region(tree, learner),
        xi=compute_xi(tree, ix),
    )


@dataclass
class AdversaryRound:
    choice: dict[int, int]
    utility: dict[int, float]


def adversary_round(game: AdversaryGame, rng: np.random.Generator) -> AdversaryRound:
    """Fresh oblivious sample: pure opponent actions and +-1 utilities inside M."""
    A = game.spec.branching
    opp = game.m_opponent_nodes
    term = game.m_terminals
    acts = rng.integers(A, size=len(opp))
    bits = rng.integers(2, size=len(term))
    return AdversaryRound(
        choice={h: int(a) for h, a in zip(opp, acts)},
        utility={h: float(2 * b - 1) for h, b in zip(term, bits)},
    )


class Learner(Protocol):
    def strategy(self) -> dict[int, list[float]]: ...

    def observe(self, cfv: dict[int, list[float]]) -> None: ...


class RegretMatchingLearner:
    """Regret matching at every learner node with counterfactual rewards."""

    def __init__(self, game: AdversaryGame, step=rm_step):
        self.step = step
        self.olo = {h: OloState(len(game.tree.children[h])) for h in game.learner_nodes}

    def strategy(self) -> dict[int, list[float]]:
        return {h: s.current for h, s in self.olo.items()}

    def observe(self, cfv: dict[int, list[float]]) -> None:
        for h, c in cfv.items():
            self.step(self.olo[h], c)


def play_round(game: AdversaryGame, sample: AdversaryRound, sigma: dict[int, list[float]]):
    """Returns (achieved value, cfv per learner node, adversary reach per node)."""
    tree = game.tree
    n = tree.num_nodes
    q = [0.0] * n
    q[0] = 1.0
    for h in range(n):
        a = tree.actor[h]
        if a == TERMINAL or q[h] == 0.0:
            continue
        kids = tree.children[h]
        if a == game.learner:
            for c in kids:
                q[c] = q[h]
        else:
            k = sample.choice.get(h)
            if k is None:
                continue
            q[kids[k]] = q[h]
    V = [0.0] * n
    for h in range(n - 1, -1, -1):
        a = tree.actor[h]
        if a == TERMINAL:
            V[h] = sample.utility.get(h, 0.0)
        elif a == game.learner:
            V[h] = sum(p * V[c] for p, c in zip(sigma[h], tree.children[h]))
        else:
            k = sample.choice.get(h)
            V[h] = V[tree.children[h][k]] if k is not None else 0.0
    cfv = {h: [q[h] * V[c] for c in tree.children[h]] for h in game.learner_nodes}
    return V[0], cfv, q


def hindsight_best(game: AdversaryGame, gains: Sequence[float]) -> float:
    """max over pure learner strategies of sum_z [strategy reaches z] * gains[z].

    Exhaustive enumeration over all pure strategies of the learner.
    """
    tree = game.tree
    nodes = game.learner_nodes
    A = game.spec.branching
    if A ** len(nodes) > MAX_ENUMERATION:
        raise ValueError("too many pure strategies for exhaustive enumeration")
    # leaf -> list of (learner node, action) on its path
    need = {}
    for z in game.terminals:
        req = []
        h = z
        while tree.parent[h] >= 0:
            p = tree.parent[h]
            if tree.actor[p] == game.learner:
                req.append((nodes.index(p), tree.parent_action[h]))
            h = p
        need[z] = req
    live = [z for z in game.terminals if gains[z] != 0.0]
    best = -math.inf
    for combo in itertools.product(range(A), repeat=len(nodes)):
        total = 0.0
        for z in live:
            if all(combo[i] == a for i, a in need[z]):
                total += gains[z]
        best = max(best, total)
    return best


def hindsight_best_dp(game: AdversaryGame, gains: Sequence[float]) -> float:
    tree = game.tree
    V = [0.0] * tree.num_nodes
    for h in range(tree.num_nodes - 1, -1, -1):
        a = tree.actor[h]
        if a == TERMINAL:
            V[h] = gains[h]
        elif a == game.learner:
            V[h] = max(V[c] for c in tree.children[h])
        else:
            V[h] = sum(V[c] for c in tree.children[h])
    return V[0]


@dataclass
class RegretRun:
    seed: int
    regret: float
    checkpoints: list[int]
    regret_curve: list[float]
    achieved: float
    best: float
    subtree_regret: dict[int, float] = field(default_factory=dict)


def run_learner(game: AdversaryGame, learner: Learner, seed: int, rounds: int,
                checkpoints: Sequence[int] = (), track_subtrees: bool = False) -> RegretRun:
    rng = np.random.default_rng(seed)
    tree = game.tree
    gains = [0.0] * tree.num_nodes
    achieved = 0.0
    marks = sorted(set(c for c in checkpoints if 1 <= c <= rounds))
    curve = []
    # per opponent-root-action bookkeeping
    root_split = track_subtrees and tree.actor[0] != game.learner and tree.actor[0] != TERMINAL
    sub_achieved: dict[int, float] = {}
    for t in range(1, rounds + 1):
        sample = adversary_round(game, rng)
        sigma = learner.strategy()
        value, cfv, q = play_round(game, sample, sigma)
        achieved += value
        if root_split:
            k = sample.choice.get(0)
            if k is not None:
                sub_achieved[k] = sub_achieved.get(k, 0.0) + value
        for z in game.terminals:
            if q[z]:
                gains[z] += sample.utility.get(z, 0.0)
        learner.observe(cfv)
        if marks and t == marks[0]:
            marks.pop(0)
            curve.append(hindsight_best_dp(game, gains) - achieved)
    best = hindsight_best(game, gains)
    run = RegretRun(seed, best - achieved, sorted(set(c for c in checkpoints if 1 <= c <= rounds)),
                    curve, achieved, best)
    if root_split:
        for k, child in enumerate(tree.children[0]):
            lo, hi = child, _subtree_end(tree, child)
            sub_gains = [g if lo <= z < hi else 0.0 for z, g in enumerate(gains)]
            run.subtree_regret[k] = hindsight_best(game, sub_gains) - sub_achieved.get(k, 0.0)
    return run


def _subtree_end(tree: GameTree, h: int) -> int:
    """One past the last preorder id in the subtree of ``h``."""
    while tree.children[h]:
        h = tree.children[h][-1]
    return h + 1


def theory_curve(xi: int, branching: int, T: int) -> float:
    return math.sqrt(xi * T * math.log(branching))


def upper_curve(xi: int, depth: int, branching: int, T: int) -> float:
    return 2.0 * math.sqrt(2.0 * xi * depth * branching * T)


@dataclass
class LowerBoundReport:
    spec: AdversarySpec
    xi: int
    depth: int
    runs: list[RegretRun]
    checkpoints: list[int]
    nodes: int = 0
    learner_nodes: int = 0

    @property
    def mean_regret(self) -> float:
        return float(np.mean([r.regret for r in self.runs]))

    def mean_curve(self) -> list[float]:
        if not self.checkpoints:
            return []
        return list(np.mean([r.regret_curve for r in self.runs], axis=0))

    def to_csv(self) -> str:
        from .metrics import CSV_HEADER
        A = self.spec.branching
        rows = [",".join(CSV_HEADER + ("theory_curve",))]
        for T, R in zip(self.checkpoints, self.mean_curve()):
            avg = R / T
            theory = math.sqrt(self.xi * math.log(A) / T)
            rows.append(",".join([str(T), str(T * self.nodes), format(avg, ".17g"),
                                  format(avg, ".17g"), format(0.0, ".17g"),
                                  str(T * self.learner_nodes), format(theory, ".17g")]))
        return "\n".join(rows) + "\n"


def measure_lower_bound(spec: AdversarySpec, seeds: Sequence[int],
                        learner_factory: Callable[[AdversaryGame], Learner] = RegretMatchingLearner,
                        checkpoints: Sequence[int] | None = None) -> LowerBoundReport:
    game = build_adversary_game(spec)
    if checkpoints is None:
        checkpoints = sorted({max(1, int(round(spec.rounds * f))) for f in (0.1, 0.25, 0.5, 1.0)})
    runs = [run_learner(game, learner_factory(game), s, spec.rounds, checkpoints) for s in seeds]
    return LowerBoundReport(spec, game.xi, game.tree.depth, runs, list(checkpoints),
                            nodes=game.tree.num_nodes, learner_nodes=len(game.learner_nodes))
