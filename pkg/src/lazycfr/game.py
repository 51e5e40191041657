"""Index-addressed game trees for two-player zero-sum extensive-form games.

A game is first described by a :class:`GameSpec` (either produced by one of
the generators in :mod:`lazycfr.games` or parsed from the line-oriented text
format below) and then compiled by :func:`build_game` into an immutable
:class:`GameTree`.  Nodes are renumbered in preorder so that every parent has
a smaller identifier than its children; solvers rely on this for top-down and
bottom-up sweeps over arbitrary node subsets.

Every non-terminal node carries one observation label per player.  For a
player's own decision nodes the label *is* the information set; for all other
nodes it is the structural grouping used by that player's infoset tree
(:func:`build_infoset_index`).

Text format
-----------
One record per line, ``#`` starts a comment::

    node <id> <p1|p2> [<label1> <label2>]
    chance <id> <prob> <prob> ... [| <label1> <label2>]
    terminal <id> <u1> [<u2>]
    edge <parent> <action-label> <child>

Edges fix the action order of their parent in order of appearance; chance
probabilities are matched to the edges of the chance node in that order.
Missing labels default to ``#<id>`` (the player observes the exact node).
Utilities are rescaled into ``[-1, 1]`` by the largest absolute payoff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Sequence

P1, P2, CHANCE, TERMINAL = 0, 1, 2, 3
ACTOR_NAMES = {P1: "p1", P2: "p2", CHANCE: "chance", TERMINAL: "terminal"}
_ACTOR_CODES = {"p1": P1, "p2": P2, "chance": CHANCE, "terminal": TERMINAL}

PROB_TOL = 1e-9


class GameValidationError(ValueError):
    """Raised when a game description does not define a valid game."""


@dataclass
class NodeSpec:
    kind: str
    labels: tuple[str, str] | None = None
    probs: tuple[float, ...] = ()
    utility: float | tuple[float, float] | None = None


@dataclass
class GameSpec:
    """Unvalidated game description: nodes keyed by any hashable, plus edges."""

    nodes: dict[Hashable, NodeSpec] = field(default_factory=dict)
    edges: list[tuple[Hashable, str, Hashable]] = field(default_factory=list)
    name: str = "game"
    params: dict = field(default_factory=dict)

    def add_node(self, key, kind, labels=None, probs=(), utility=None):
        if key in self.nodes:
            raise GameValidationError(f"duplicate node id {key!r}")
        self.nodes[key] = NodeSpec(kind, labels, tuple(probs), utility)
        return key

    def add_edge(self, parent, label, child):
        self.edges.append((parent, str(label), child))


@dataclass(frozen=True)
class Infoset:
    id: int
    owner: int
    key: str
    members: tuple[int, ...]
    actions: tuple[str, ...]
    depth: int

    @property
    def num_actions(self) -> int:
        return len(self.actions)


@dataclass(frozen=True)
class HistoryNode:
    """Read-only view of one node of a :class:`GameTree`."""

    id: int
    actor: int
    actions: tuple[str, ...]
    children: tuple[int, ...]
    chance_probs: tuple[float, ...]
    utility: float
    labels: tuple[str, str]
    infoset: int


class GameTree:
    """Immutable preorder-indexed game tree.

    The per-node data lives in flat lists (``actor``, ``children``, ...) so
    that traversals can index them directly.  ``utility`` holds normalized
    player-1 payoffs; multiply by ``scale`` for native units.
    """

    def __init__(self, *, actor, children, actions, parent, parent_action,
                 chance_probs, utility, depth, labels, infoset, infosets,
                 scale, name="game", params=None, source_keys=None):
        self.actor: list[int] = actor
        self.children: list[tuple[int, ...]] = children
        self.actions: list[tuple[str, ...]] = actions
        self.parent: list[int] = parent
        self.parent_action: list[int] = parent_action
        self.chance_probs: list[tuple[float, ...]] = chance_probs
        self.utility: list[float] = utility
        self.depth_of: list[int] = depth
        self.labels: list[tuple[str, str]] = labels
        self.infoset: list[int] = infoset
        self.infosets: list[Infoset] = infosets
        self.scale = scale
        self.name = name
        self.params = dict(params or {})
        self.source_keys = source_keys
        self.root = 0
        self.player_infosets: tuple[tuple[int, ...], tuple[int, ...]] = (
            tuple(I.id for I in infosets if I.owner == P1),
            tuple(I.id for I in infosets if I.owner == P2),
        )
        decision = [len(c) for a, c in zip(actor, children) if a in (P1, P2)]
        self.max_actions = max(decision, default=0)
        self.depth = max(depth, default=0)

    def __len__(self) -> int:
        return len(self.actor)

    @property
    def num_nodes(self) -> int:
        return len(self.actor)

    @property
    def num_terminals(self) -> int:
        return sum(1 for a in self.actor if a == TERMINAL)

    def node(self, h: int) -> HistoryNode:
        return HistoryNode(h, self.actor[h], self.actions[h], self.children[h],
                           self.chance_probs[h], self.utility[h], self.labels[h],
                           self.infoset[h])

    def is_terminal(self, h: int) -> bool:
        return self.actor[h] == TERMINAL

    def decision_histories(self, player: int) -> list[int]:
        return [h for h, a in enumerate(self.actor) if a == player]

    def find(self, path: Sequence[str]) -> int:
        """Node reached from the root by following action labels."""
        h = self.root
        for label in path:
            h = self.children[h][self.actions[h].index(label)]
        return h

    def path(self, h: int) -> list[str]:
        out = []
        while self.parent[h] >= 0:
            p = self.parent[h]
            out.append(self.actions[p][self.parent_action[h]])
            h = p
        return out[::-1]

    def summary(self) -> dict:
        return {
            "name": self.name,
            "nodes": self.num_nodes,
            "terminals": self.num_terminals,
            "infosets_p1": len(self.player_infosets[P1]),
            "infosets_p2": len(self.player_infosets[P2]),
            "max_actions": self.max_actions,
            "depth": self.depth,
            "scale": self.scale,
        }


def _utility_pair(u) -> tuple[float, float]:
    if isinstance(u, (tuple, list)):
        if len(u) != 2:
            raise GameValidationError(f"terminal utility must be u1 or (u1, u2), got {u!r}")
        return float(u[0]), float(u[1])
    u1 = float(u)
    return u1, -u1


def build_game(spec: GameSpec) -> GameTree:
    """Validate ``spec`` and compile it into a preorder-indexed :class:`GameTree`."""
    nodes = spec.nodes
    if not nodes:
        raise GameValidationError("game has no nodes")
    kids: dict[Hashable, list[tuple[str, Hashable]]] = {k: [] for k in nodes}
    parent_of: dict[Hashable, Hashable] = {}
    for p, label, c in spec.edges:
        if p not in nodes or c not in nodes:
            raise GameValidationError(f"edge {p!r} -{label}-> {c!r} references an unknown node")
        if c in parent_of:
            raise GameValidationError(f"node {c!r} has more than one parent")
        if p == c:
            raise GameValidationError(f"self-loop at node {p!r}")
        parent_of[c] = p
        kids[p].append((label, c))
    roots = [k for k in nodes if k not in parent_of]
    if len(roots) != 1:
        raise GameValidationError(
            f"expected exactly one root, found {len(roots)} (cyclic or disconnected spec)")
    root = roots[0]

    order: list[Hashable] = []
    stack = [root]
    while stack:
        k = stack.pop()
        order.append(k)
        stack.extend(c for _, c in reversed(kids[k]))
    if len(order) != len(nodes):
        raise GameValidationError("spec contains a cycle or nodes unreachable from the root")
    index = {k: i for i, k in enumerate(order)}

    n = len(order)
    actor = [0] * n
    children: list[tuple[int, ...]] = [()] * n
    actions: list[tuple[str, ...]] = [()] * n
    parent = [-1] * n
    parent_action = [-1] * n
    chance_probs: list[tuple[float, ...]] = [()] * n
    raw_u = [0.0] * n
    depth = [0] * n
    labels: list[tuple[str, str]] = [("", "")] * n

    for i, k in enumerate(order):
        ns = nodes[k]
        if ns.kind not in _ACTOR_CODES:
            raise GameValidationError(f"node {k!r}: unknown kind {ns.kind!r}")
        a = _ACTOR_CODES[ns.kind]
        actor[i] = a
        edges = kids[k]
        children[i] = tuple(index[c] for _, c in edges)
        actions[i] = tuple(lbl for lbl, _ in edges)
        if len(set(actions[i])) != len(actions[i]):
            raise GameValidationError(f"node {k!r}: duplicate action labels {actions[i]}")
        for j, (_, c) in enumerate(edges):
            parent[index[c]] = i
            parent_action[index[c]] = j
            depth[index[c]] = depth[i] + 1
        if a == TERMINAL:
            if edges:
                raise GameValidationError(f"terminal node {k!r} has children")
            if ns.utility is None:
                raise GameValidationError(f"terminal node {k!r} has no utility")
            u1, u2 = _utility_pair(ns.utility)
            if not (math.isfinite(u1) and math.isfinite(u2)):
                raise GameValidationError(f"terminal node {k!r}: non-finite utility")
            if abs(u1 + u2) > PROB_TOL * max(1.0, abs(u1)):
                raise GameValidationError(f"terminal node {k!r} is not zero-sum: ({u1}, {u2})")
            raw_u[i] = u1
            labels[i] = (f"#{i}", f"#{i}")
            continue
        if not edges:
            raise GameValidationError(f"non-terminal node {k!r} has no actions")
        if a == CHANCE:
            probs = tuple(float(p) for p in ns.probs)
            if len(probs) != len(edges):
                raise GameValidationError(
                    f"chance node {k!r}: {len(probs)} probabilities for {len(edges)} outcomes")
            if any(p < 0 or not math.isfinite(p) for p in probs):
                raise GameValidationError(f"chance node {k!r}: invalid probability in {probs}")
            if abs(sum(probs) - 1.0) > PROB_TOL:
                raise GameValidationError(
                    f"chance node {k!r}: probabilities sum to {sum(probs)!r}, not 1")
            chance_probs[i] = probs
        lab = ns.labels if ns.labels is not None else (f"#{i}", f"#{i}")
        labels[i] = (str(lab[0]), str(lab[1]))

    scale = max((abs(u) for u, a in zip(raw_u, actor) if a == TERMINAL), default=0.0)
    if scale == 0.0:
        scale = 1.0
    utility = [u / scale for u in raw_u]

    groups: dict[tuple[int, str], list[int]] = {}
    for i in range(n):
        if actor[i] in (P1, P2):
            groups.setdefault((actor[i], labels[i][actor[i]]), []).append(i)
    infosets: list[Infoset] = []
    infoset = [-1] * n
    for (owner, key), members in sorted(groups.items(), key=lambda kv: kv[1][0]):
        acts = actions[members[0]]
        for h in members[1:]:
            if actions[h] != acts:
                raise GameValidationError(
                    f"infoset {key!r} of {ACTOR_NAMES[owner]} mixes action lists "
                    f"{acts} and {actions[h]}")
        iid = len(infosets)
        for h in members:
            infoset[h] = iid
        d = 1 + max(depth[h] for h in members)
        infosets.append(Infoset(iid, owner, key, tuple(members), acts, d))

    return GameTree(actor=actor, children=children, actions=actions, parent=parent,
                    parent_action=parent_action, chance_probs=chance_probs,
                    utility=utility, depth=depth, labels=labels, infoset=infoset,
                    infosets=infosets, scale=scale, name=spec.name,
                    params=spec.params, source_keys=order)


# ---------------------------------------------------------------------------
# text format


def parse_game_text(text: str, name: str = "game") -> GameSpec:
    """Parse the line-oriented text format into a :class:`GameSpec`."""
    spec = GameSpec(name=name)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        kind = tok[0]
        try:
            if kind == "node":
                if len(tok) not in (3, 5) or tok[2] not in ("p1", "p2"):
                    raise ValueError("expected: node <id> <p1|p2> [<label1> <label2>]")
                labels = (tok[3], tok[4]) if len(tok) == 5 else None
                spec.add_node(tok[1], tok[2], labels=labels)
            elif kind == "chance":
                body, labels = tok[2:], None
                if "|" in body:
                    cut = body.index("|")
                    lab = body[cut + 1:]
                    if len(lab) != 2:
                        raise ValueError("chance labels must be '| <label1> <label2>'")
                    labels, body = (lab[0], lab[1]), body[:cut]
                spec.add_node(tok[1], "chance", labels=labels,
                              probs=tuple(float(x) for x in body))
            elif kind == "terminal":
                if len(tok) not in (3, 4):
                    raise ValueError("expected: terminal <id> <u1> [<u2>]")
                u = float(tok[2]) if len(tok) == 3 else (float(tok[2]), float(tok[3]))
                spec.add_node(tok[1], "terminal", utility=u)
            elif kind == "edge":
                if len(tok) != 4:
                    raise ValueError("expected: edge <parent> <action-label> <child>")
                spec.add_edge(tok[1], tok[2], tok[3])
            else:
                raise ValueError(f"unknown record {kind!r}")
        except (ValueError, GameValidationError) as exc:
            raise GameValidationError(f"line {lineno}: {exc}") from None
    return spec


def format_game_text(tree: GameTree) -> str:
    """Serialize a tree back to the text format (utilities in native units)."""
    lines = []
    for h in range(tree.num_nodes):
        a = tree.actor[h]
        l1, l2 = tree.labels[h]
        if a in (P1, P2):
            lines.append(f"node n{h} {ACTOR_NAMES[a]} {l1} {l2}")
        elif a == CHANCE:
            probs = " ".join(repr(p) for p in tree.chance_probs[h])
            lines.append(f"chance n{h} {probs} | {l1} {l2}")
        else:
            lines.append(f"terminal n{h} {tree.utility[h] * tree.scale!r}")
    for h in range(tree.num_nodes):
        for label, c in zip(tree.actions[h], tree.children[h]):
            lines.append(f"edge n{h} {label} n{c}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# per-player infoset trees


@dataclass(frozen=True)
class IndexNode:
    """One node of a player's infoset tree (owned infoset or structural group)."""

    id: int
    actor: int
    label: str
    members: tuple[int, ...]
    parent: int
    children: tuple[int, ...]
    infoset: int
    depth: int


@dataclass
class InfosetIndex:
    """Player-centric infoset tree with precomputed succ links.

    ``succ[I][a]`` lists the nearest own infosets below action ``a`` of own
    infoset ``I`` (global infoset ids); ``pa[I]`` is the nearest own ancestor
    or -1.  ``top`` are own infosets without an own ancestor.
    """

    player: int
    nodes: list[IndexNode]
    node_of: list[int]
    roots: tuple[int, ...]
    own: tuple[int, ...]
    succ: dict[int, tuple[tuple[int, ...], ...]]
    pa: dict[int, int]
    top: tuple[int, ...]
    depth: dict[int, int]
    terminal_groups: dict[str, tuple[int, ...]] = field(default_factory=dict)

    def succ_all(self, I: int) -> tuple[int, ...]:
        return tuple(J for group in self.succ[I] for J in group)

    def own_order(self) -> list[int]:
        """Own infosets ordered so that pa(I) precedes I."""
        out, queue = [], list(self.top)
        while queue:
            nxt = []
            for I in queue:
                out.append(I)
                nxt.extend(self.succ_all(I))
            queue = nxt
        return out


def build_infoset_index(tree: GameTree, player: int) -> InfosetIndex:
    """Partition all non-terminal histories by ``player``'s observation labels."""
    if player not in (P1, P2):
        raise ValueError(f"player must be 0 or 1, got {player!r}")
    n = tree.num_nodes
    node_of = [-1] * n
    keyed: dict[str, int] = {}
    members: list[list[int]] = []
    actors: list[int] = []
    labels: list[str] = []
    for h in range(n):
        a = tree.actor[h]
        if a == TERMINAL:
            continue
        lab = tree.labels[h][player]
        gid = keyed.get(lab)
        if gid is None:
            gid = keyed[lab] = len(members)
            members.append([])
            actors.append(a)
            labels.append(lab)
        elif actors[gid] != a:
            raise GameValidationError(
                f"label {lab!r} of {ACTOR_NAMES[player]} groups nodes with different actors")
        members[gid].append(h)
        node_of[h] = gid

    parents = [-1] * len(members)
    child_sets: list[dict[int, None]] = [dict() for _ in members]
    for gid, mem in enumerate(members):
        ps = {node_of[tree.parent[h]] if tree.parent[h] >= 0 else -1 for h in mem}
        if len(ps) != 1:
            raise GameValidationError(
                f"{ACTOR_NAMES[player]} group {labels[gid]!r} has members with different "
                f"observation histories (imperfect recall)")
        parents[gid] = ps.pop()
        if parents[gid] >= 0:
            child_sets[parents[gid]][gid] = None

    # nearest own infosets reachable below each node, computed bottom-up
    below: list[tuple[int, ...]] = [()] * n
    for h in range(n - 1, -1, -1):
        a = tree.actor[h]
        if a == TERMINAL:
            continue
        if a == player and h != -1:
            below[h] = (tree.infoset[h],)
        else:
            acc: dict[int, None] = {}
            for c in tree.children[h]:
                if tree.actor[c] == player:
                    acc[tree.infoset[c]] = None
                else:
                    for J in below[c]:
                        acc[J] = None
            below[h] = tuple(acc)

    def reach_below(c: int) -> tuple[int, ...]:
        if tree.actor[c] == player:
            return (tree.infoset[c],)
        return below[c] if tree.actor[c] != TERMINAL else ()

    own = tree.player_infosets[player]
    succ: dict[int, tuple[tuple[int, ...], ...]] = {}
    pa: dict[int, int] = {I: -1 for I in own}
    for I in own:
        info = tree.infosets[I]
        per_action = []
        for a in range(info.num_actions):
            acc = {}
            for h in info.members:
                for J in reach_below(tree.children[h][a]):
                    acc[J] = None
            per_action.append(tuple(sorted(acc)))
        succ[I] = tuple(per_action)
        for group in per_action:
            for J in group:
                if pa[J] not in (-1, I):
                    raise GameValidationError(
                        f"infoset {tree.infosets[J].key!r} has two own parents (imperfect recall)")
                pa[J] = I
    top = tuple(I for I in own if pa[I] == -1)

    depth_g = [0] * len(members)
    for gid in range(len(members)):
        depth_g[gid] = 1 + max(tree.depth_of[h] for h in members[gid])
    nodes = [
        IndexNode(gid, actors[gid], labels[gid], tuple(members[gid]), parents[gid],
                  tuple(child_sets[gid]),
                  tree.infoset[members[gid][0]] if actors[gid] == player else -1,
                  depth_g[gid])
        for gid in range(len(members))
    ]
    roots = tuple(g for g in range(len(members)) if parents[g] == -1)

    terminal_groups: dict[str, list[int]] = {}
    for h in range(n):
        if tree.actor[h] == TERMINAL:
            key = f"{labels[node_of[tree.parent[h]]]}/{tree.actions[tree.parent[h]][tree.parent_action[h]]}" \
                if tree.parent[h] >= 0 else "root"
            terminal_groups.setdefault(key, []).append(h)

    return InfosetIndex(player=player, nodes=nodes, node_of=node_of, roots=roots, own=own,
                        succ=succ, pa=pa, top=top,
                        depth={I: tree.infosets[I].depth for I in own},
                        terminal_groups={k: tuple(v) for k, v in terminal_groups.items()})


# ---------------------------------------------------------------------------
# strategies and reach


class StrategyProfile:
    """Behavior strategies for both players, one probability list per infoset."""

    def __init__(self, tree: GameTree, probs: Sequence[Sequence[float]]):
        if len(probs) != len(tree.infosets):
            raise ValueError(f"profile covers {len(probs)} infosets, tree has {len(tree.infosets)}")
        self.tree = tree
        self.probs: list[list[float]] = [list(map(float, p)) for p in probs]
        for I, p in zip(tree.infosets, self.probs):
            if len(p) != I.num_actions:
                raise ValueError(f"infoset {I.key!r}: {len(p)} probabilities for {I.num_actions} actions")

    @classmethod
    def uniform(cls, tree: GameTree) -> "StrategyProfile":
        return cls(tree, [[1.0 / I.num_actions] * I.num_actions for I in tree.infosets])

    def copy(self) -> "StrategyProfile":
        return StrategyProfile(self.tree, self.probs)

    def __getitem__(self, I: int) -> list[float]:
        return self.probs[I]

    def with_infoset(self, I: int, dist: Sequence[float]) -> "StrategyProfile":
        out = self.copy()
        out.probs[I] = list(map(float, dist))
        return out

    def by_key(self) -> dict[tuple[int, str], list[float]]:
        return {(I.owner, I.key): self.probs[I.id] for I in self.tree.infosets}

    def validate(self, tol: float = PROB_TOL) -> None:
        for I, p in zip(self.tree.infosets, self.probs):
            if any(x < -tol for x in p) or abs(sum(p) - 1.0) > tol:
                raise ValueError(f"infoset {I.key!r}: {p} is not a distribution")

    def max_abs_diff(self, other: "StrategyProfile") -> float:
        return max((abs(x - y) for p, q in zip(self.probs, other.probs) for x, y in zip(p, q)),
                   default=0.0)


def action_probs(tree: GameTree, profile: StrategyProfile, h: int) -> tuple[float, ...] | list[float]:
    a = tree.actor[h]
    if a == CHANCE:
        return tree.chance_probs[h]
    return profile.probs[tree.infoset[h]]


@dataclass
class ReachDecomposition:
    """Per-history reach factors; ``total[h] = p1[h] * p2[h] * chance[h]``."""

    p1: list[float]
    p2: list[float]
    chance: list[float]
    total: list[float]
    infoset_total: list[float]
    infoset_own: list[float]
    infoset_others: list[float]

    def player(self, i: int) -> list[float]:
        return self.p1 if i == P1 else self.p2

    def others(self, i: int) -> list[float]:
        mine = self.p2 if i == P1 else self.p1
        return [m * c for m, c in zip(mine, self.chance)]


def reach(tree: GameTree, profile: StrategyProfile) -> ReachDecomposition:
    n = tree.num_nodes
    r = [[0.0] * n, [0.0] * n, [0.0] * n]
    r[0][0] = r[1][0] = r[2][0] = 1.0
    for h in range(n):
        a = tree.actor[h]
        if a == TERMINAL:
            continue
        probs = action_probs(tree, profile, h)
        base = (r[0][h], r[1][h], r[2][h])
        for p, c in zip(probs, tree.children[h]):
            r[0][c], r[1][c], r[2][c] = base
            r[a][c] = base[a] * p
    total = [x * y * z for x, y, z in zip(r[0], r[1], r[2])]
    m = len(tree.infosets)
    it, own, oth = [0.0] * m, [0.0] * m, [0.0] * m
    for I in tree.infosets:
        opp = 1 - I.owner
        it[I.id] = sum(total[h] for h in I.members)
        own[I.id] = r[I.owner][I.members[0]]
        oth[I.id] = sum(r[opp][h] * r[2][h] for h in I.members)
    return ReachDecomposition(r[0], r[1], r[2], total, it, own, oth)


def expected_value(tree: GameTree, profile: StrategyProfile) -> float:
    """Player-1 expected utility (normalized units); player 2 gets the negation."""
    value = [0.0] * tree.num_nodes
    for h in range(tree.num_nodes - 1, -1, -1):
        if tree.actor[h] == TERMINAL:
            value[h] = tree.utility[h]
        else:
            probs = action_probs(tree, profile, h)
            value[h] = sum(p * value[c] for p, c in zip(probs, tree.children[h]))
    return value[0]


def history_values(tree: GameTree, profile: StrategyProfile) -> list[float]:
    """Player-1 expected utility of every subtree under ``profile``."""
    value = [0.0] * tree.num_nodes
    for h in range(tree.num_nodes - 1, -1, -1):
        if tree.actor[h] == TERMINAL:
            value[h] = tree.utility[h]
        else:
            probs = action_probs(tree, profile, h)
            value[h] = sum(p * value[c] for p, c in zip(probs, tree.children[h]))
    return value


def iter_terminals(tree: GameTree) -> Iterable[int]:
    return (h for h, a in enumerate(tree.actor) if a == TERMINAL)
