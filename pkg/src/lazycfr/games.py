"""Built-in benchmark games.

All generators return a :class:`~lazycfr.game.GameSpec`; pass it through
:func:`~lazycfr.game.build_game` (or use :func:`load`) to get a tree.

Labels follow one convention throughout: a player's observation label is
their private card followed by the public action/card history, so the owner's
label at a decision node identifies the infoset and the opponent's label at the
same node places it in the opponent's structural infoset tree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

from .game import GameSpec, GameTree, build_game

KUHN_CARDS = ("J", "Q", "K")
LEDUC_RANKS = ("J", "Q", "K")


def kuhn() -> GameSpec:
    """Three-card Kuhn poker with ante 1 and bet 1 (payoffs +-1 / +-2)."""
    spec = GameSpec(name="kuhn")
    ids = itertools.count()
    root = spec.add_node(next(ids), "chance", labels=("deal", "deal"),
                         probs=[1 / 6] * 6)
    rank = {c: i for i, c in enumerate(KUHN_CARDS)}

    def showdown(c1, c2, stake):
        return stake if rank[c1] > rank[c2] else -stake

    for c1, c2 in itertools.permutations(KUHN_CARDS, 2):
        def lab(hist):
            return (f"{c1}:{hist}", f"{c2}:{hist}")

        def term(parent, action, u):
            spec.add_edge(parent, action, spec.add_node(next(ids), "terminal", utility=u))

        p1 = spec.add_node(next(ids), "p1", labels=lab(""))
        spec.add_edge(root, f"{c1}{c2}", p1)
        # p1 checks
        p2c = spec.add_node(next(ids), "p2", labels=lab("c"))
        spec.add_edge(p1, "c", p2c)
        term(p2c, "c", showdown(c1, c2, 1))
        p1cb = spec.add_node(next(ids), "p1", labels=lab("cb"))
        spec.add_edge(p2c, "b", p1cb)
        term(p1cb, "f", -1)
        term(p1cb, "c", showdown(c1, c2, 2))
        # p1 bets
        p2b = spec.add_node(next(ids), "p2", labels=lab("b"))
        spec.add_edge(p1, "b", p2b)
        term(p2b, "f", 1)
        term(p2b, "c", showdown(c1, c2, 2))
    return spec


@dataclass(frozen=True)
class LeducConfig:
    """Leduc hold'em parameters; ``bet_maximum`` caps raises per betting round."""

    bet_maximum: int = 2
    ante: int = 1
    round_bet_sizes: tuple[int, int] = (2, 4)

    def __post_init__(self):
        if int(self.bet_maximum) != self.bet_maximum or self.bet_maximum < 1:
            raise ValueError(f"bet_maximum must be a positive integer, got {self.bet_maximum!r}")
        if self.ante < 0:
            raise ValueError(f"ante must be nonnegative, got {self.ante!r}")
        if len(self.round_bet_sizes) != 2 or min(self.round_bet_sizes) <= 0:
            raise ValueError(f"round_bet_sizes must be two positive sizes, got {self.round_bet_sizes!r}")


def leduc_private_deals() -> list[tuple[str, str, float]]:
    """Rank-level private deals with their probabilities (two copies of each rank)."""
    out = []
    for r1 in LEDUC_RANKS:
        for r2 in LEDUC_RANKS:
            p = (2 / 6) * ((1 if r1 == r2 else 2) / 5)
            out.append((r1, r2, p))
    return out


def leduc_public_cards(r1: str, r2: str) -> list[tuple[str, float]]:
    out = []
    for r in LEDUC_RANKS:
        left = 2 - (r1 == r) - (r2 == r)
        if left:
            out.append((r, left / 4))
    return out


def leduc_showdown(r1: str, r2: str, pub: str) -> int:
    """+1 if player 1 wins, -1 if player 2 wins, 0 on a tie."""
    if r1 == pub:
        return 1
    if r2 == pub:
        return -1
    order = LEDUC_RANKS.index
    return (order(r1) > order(r2)) - (order(r1) < order(r2))


def leduc(config: LeducConfig | int | None = None) -> GameSpec:
    """Leduc hold'em: two betting rounds, player 1 first in each round."""
    if config is None:
        config = LeducConfig()
    elif isinstance(config, int):
        config = LeducConfig(bet_maximum=config)
    spec = GameSpec(name=f"leduc-{config.bet_maximum}",
                    params={"bet_maximum": config.bet_maximum, "ante": config.ante,
                            "round_bet_sizes": list(config.round_bet_sizes)})
    ids = itertools.count()
    deals = leduc_private_deals()
    root = spec.add_node(next(ids), "chance", labels=("deal", "deal"),
                         probs=[p for _, _, p in deals])
    cap = config.bet_maximum

    def betting(parent, action, r1, r2, pub, rnd, hist, contrib, raises, to_act, prefix):
        """Create the node reached by ``action`` from ``parent`` in round ``rnd``."""
        lab = (f"{r1}{prefix}{hist}", f"{r2}{prefix}{hist}")
        node = spec.add_node(next(ids), "p1" if to_act == 0 else "p2", labels=lab)
        spec.add_edge(parent, action, node)
        size = config.round_bet_sizes[rnd]
        facing = contrib[1 - to_act] > contrib[to_act]
        if facing:
            # fold: the folder forfeits what they have put in
            u = -contrib[0] if to_act == 0 else contrib[1]
            spec.add_edge(node, "f", spec.add_node(next(ids), "terminal", utility=u))
        matched = list(contrib)
        matched[to_act] = contrib[1 - to_act]
        if facing or hist:
            # call, or check behind: the round closes
            close(node, "c", r1, r2, pub, rnd, hist + "c", tuple(matched), prefix)
        else:
            betting(node, "c", r1, r2, pub, rnd, hist + "c", contrib, raises, 1 - to_act, prefix)
        if raises < cap:
            raised = list(matched)
            raised[to_act] += size
            betting(node, "r", r1, r2, pub, rnd, hist + "r", tuple(raised), raises + 1,
                    1 - to_act, prefix)

    def close(parent, action, r1, r2, pub, rnd, hist, contrib, prefix):
        if rnd == 0:
            pubs = leduc_public_cards(r1, r2)
            lab = (f"{r1}:{hist}", f"{r2}:{hist}")
            ch = spec.add_node(next(ids), "chance", labels=lab, probs=[p for _, p in pubs])
            spec.add_edge(parent, action, ch)
            for card, _ in pubs:
                betting(ch, card, r1, r2, card, 1, "", contrib, 0, 0, f":{hist}/{card}:")
        else:
            u = leduc_showdown(r1, r2, pub) * contrib[0]
            spec.add_edge(parent, action, spec.add_node(next(ids), "terminal", utility=u))

    for r1, r2, _ in deals:
        betting(root, f"{r1}{r2}", r1, r2, None, 0, "", (config.ante, config.ante), 0, 0, ":")
    return spec


def gadget_matrix(payoffs: Sequence[Sequence[float]], name: str = "gadget") -> GameSpec:
    """One simultaneous move: player 1 picks a row, player 2 a column without seeing it."""
    rows = [list(map(float, r)) for r in payoffs]
    if not rows or not rows[0] or any(len(r) != len(rows[0]) for r in rows):
        raise ValueError("payoff matrix must be a nonempty rectangle")
    spec = GameSpec(name=name, params={"payoffs": rows})
    ids = itertools.count()
    root = spec.add_node(next(ids), "p1", labels=("r", "r"))
    for i, row in enumerate(rows):
        col = spec.add_node(next(ids), "p2", labels=(f"r:{i}", "c"))
        spec.add_edge(root, f"a{i}", col)
        for j, u in enumerate(row):
            spec.add_edge(col, f"b{j}", spec.add_node(next(ids), "terminal", utility=u))
    return spec


MATCHING_PENNIES = ((1.0, -1.0), (-1.0, 1.0))
ROCK_PAPER_SCISSORS = ((0.0, -1.0, 1.0), (1.0, 0.0, -1.0), (-1.0, 1.0, 0.0))


def alternating_tree(branching: int, depth: int, utilities: Sequence[float] | None = None,
                     first: int = 0, name: str | None = None) -> GameSpec:
    """Perfect-information full ``branching``-ary tree with alternating movers.

    ``depth`` counts decision layers in total. Leaves take ``utilities`` in
    left-to-right order, or 0 when omitted.
    """
    if branching < 1 or depth < 0:
        raise ValueError("branching must be >= 1 and depth >= 0")
    leaves = branching ** depth
    if utilities is None:
        utilities = [0.0] * leaves
    if len(utilities) != leaves:
        raise ValueError(f"expected {leaves} leaf utilities, got {len(utilities)}")
    spec = GameSpec(name=name or f"alt-{branching}x{depth}",
                    params={"branching": branching, "depth": depth, "first": first})
    ids = itertools.count()
    leaf = iter(utilities)

    def grow(level, path):
        if level == depth:
            return spec.add_node(next(ids), "terminal", utility=float(next(leaf)))
        mover = "p1" if (level + first) % 2 == 0 else "p2"
        key = "n" + "".join(map(str, path))
        node = spec.add_node(next(ids), mover, labels=(key, key))
        for a in range(branching):
            spec.add_edge(node, str(a), grow(level + 1, path + (a,)))
        return node

    grow(0, ())
    return spec


def load(name: str, **kwargs) -> GameTree:
    """Build a named game: ``kuhn``, ``leduc`` (``bet_maximum``), ``matching_pennies``, ``rps``."""
    if name == "kuhn":
        return build_game(kuhn())
    if name == "leduc":
        return build_game(leduc(LeducConfig(**kwargs)))
    if name in ("gadget", "matching_pennies"):
        return build_game(gadget_matrix(kwargs.get("payoffs", MATCHING_PENNIES)))
    if name == "rps":
        return build_game(gadget_matrix(ROCK_PAPER_SCISSORS, name="rps"))
    raise ValueError(f"unknown game {name!r}")
