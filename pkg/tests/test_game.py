import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from lazycfr.game import (CHANCE, P1, P2, TERMINAL, GameSpec, GameValidationError,
                          StrategyProfile, build_game, build_infoset_index, expected_value,
                          format_game_text, parse_game_text, reach)
from lazycfr.games import alternating_tree, gadget_matrix, kuhn, leduc


def random_profile(tree, rng):
    probs = []
    for I in tree.infosets:
        w = [rng.random() + 1e-3 for _ in range(I.num_actions)]
        s = sum(w)
        probs.append([x / s for x in w])
    return StrategyProfile(tree, probs)


@pytest.fixture(scope="module")
def kuhn_tree():
    return build_game(kuhn())


def test_kuhn_terminal_count_matches_enumeration(kuhn_tree):
    # each ordered deal ends in one of cc, cbf, cbc, bf, bc
    lines = ["cc", "cbf", "cbc", "bf", "bc"]
    expected = len(list(itertools.permutations("JQK", 2))) * len(lines)
    assert kuhn_tree.num_terminals == expected == 30


def test_single_terminal_game():
    spec = GameSpec()
    spec.add_node("z", "terminal", utility=0.0)
    tree = build_game(spec)
    assert tree.num_nodes == 1
    assert expected_value(tree, StrategyProfile.uniform(tree)) == 0.0


def test_rejects_bad_chance_distribution():
    text = """
    chance r 0.5 0.6
    terminal a 1
    terminal b -1
    edge r x a
    edge r y b
    """
    with pytest.raises(GameValidationError, match="sum"):
        build_game(parse_game_text(text))


def test_rejects_cycle():
    spec = GameSpec()
    spec.add_node("a", "p1")
    spec.add_node("b", "p2")
    spec.add_edge("a", "x", "b")
    spec.add_edge("b", "y", "a")
    with pytest.raises(GameValidationError):
        build_game(spec)


def test_rejects_second_parent():
    spec = GameSpec()
    spec.add_node("a", "p1")
    spec.add_node("b", "p2")
    spec.add_node("z", "terminal", utility=1)
    spec.add_edge("a", "x", "b")
    spec.add_edge("a", "y", "z")
    spec.add_edge("b", "y", "z")
    with pytest.raises(GameValidationError, match="parent"):
        build_game(spec)


def test_rejects_non_zero_sum():
    spec = GameSpec()
    spec.add_node("z", "terminal", utility=(1.0, 0.5))
    with pytest.raises(GameValidationError, match="zero-sum"):
        build_game(spec)


def test_rejects_mixed_action_lists_in_infoset():
    text = """
    chance r 0.5 0.5
    node a p1 I x
    node b p1 I y
    terminal z1 1
    terminal z2 -1
    terminal z3 1
    terminal z4 0
    edge r d1 a
    edge r d2 b
    edge a left z1
    edge a right z2
    edge b left z3
    edge b up z4
    """
    with pytest.raises(GameValidationError, match="action lists"):
        build_game(parse_game_text(text))


def test_normalization_records_scale():
    tree = build_game(gadget_matrix([[4.0, -2.0], [0.0, 1.0]]))
    assert tree.scale == 4.0
    assert max(abs(u) for u in tree.utility) == 1.0


def test_text_format_round_trip(kuhn_tree):
    again = build_game(parse_game_text(format_game_text(kuhn_tree)))
    assert again.num_nodes == kuhn_tree.num_nodes
    assert again.scale == kuhn_tree.scale
    assert [I.key for I in again.infosets] == [I.key for I in kuhn_tree.infosets]
    prof = StrategyProfile.uniform(kuhn_tree)
    assert expected_value(again, StrategyProfile.uniform(again)) == pytest.approx(
        expected_value(kuhn_tree, prof), abs=1e-15)


def test_parse_reports_line_numbers():
    with pytest.raises(GameValidationError, match="line 2"):
        parse_game_text("terminal z 0\nbogus record\n")


def test_kuhn_infosets_per_player(kuhn_tree):
    ix1 = build_infoset_index(kuhn_tree, P1)
    ix2 = build_infoset_index(kuhn_tree, P2)
    assert len(ix1.own) == 6
    assert len(ix2.own) == 6


def test_matrix_game_index_is_single_root():
    tree = build_game(gadget_matrix([[1, -1], [-1, 1]]))
    ix = build_infoset_index(tree, P1)
    assert ix.top == ix.own and len(ix.own) == 1
    assert ix.succ_all(ix.own[0]) == ()


def test_kuhn_uniform_reach_examples(kuhn_tree):
    r = reach(kuhn_tree, StrategyProfile.uniform(kuhn_tree))
    for h in kuhn_tree.children[0]:
        assert r.total[h] == pytest.approx(1 / 6)
        assert r.p1[h] == r.p2[h] == 1.0
    z = kuhn_tree.find(["JQ", "c", "c"])
    assert kuhn_tree.actor[z] == TERMINAL
    assert r.total[z] == pytest.approx((1 / 6) * (1 / 2) * (1 / 2), abs=1e-15)


def test_zero_action_probability_propagates(kuhn_tree):
    prof = StrategyProfile.uniform(kuhn_tree)
    root_j = kuhn_tree.infoset[kuhn_tree.find(["JQ"])]
    prof.probs[root_j] = [0.0, 1.0]
    r = reach(kuhn_tree, prof)
    below = kuhn_tree.find(["JQ", "c"])
    stack = [below]
    while stack:
        h = stack.pop()
        assert r.p1[h] == 0.0
        stack.extend(kuhn_tree.children[h])


def test_kuhn_equilibrium_value():
    tree = build_game(kuhn())
    # one member of the classic equilibrium family, alpha = 1/3
    alpha = 1 / 3
    prof = StrategyProfile.uniform(tree)
    plan = {
        (P1, "J:"): [1 - alpha, alpha], (P1, "Q:"): [1.0, 0.0], (P1, "K:"): [1 - 3 * alpha, 3 * alpha],
        (P1, "J:cb"): [1.0, 0.0], (P1, "Q:cb"): [2 / 3 - alpha, alpha + 1 / 3], (P1, "K:cb"): [0.0, 1.0],
        (P2, "J:c"): [2 / 3, 1 / 3], (P2, "Q:c"): [1.0, 0.0], (P2, "K:c"): [0.0, 1.0],
        (P2, "J:b"): [1.0, 0.0], (P2, "Q:b"): [2 / 3, 1 / 3], (P2, "K:b"): [0.0, 1.0],
    }
    for I in tree.infosets:
        prof.probs[I.id] = plan[(I.owner, I.key)]
    assert expected_value(tree, prof) * tree.scale == pytest.approx(-1 / 18, abs=1e-12)


def test_symmetric_gadget_uniform_value_zero():
    tree = build_game(gadget_matrix([[1, -1], [-1, 1]]))
    assert expected_value(tree, StrategyProfile.uniform(tree)) == 0.0


@pytest.mark.parametrize("spec_fn", [kuhn, lambda: leduc(2), lambda: alternating_tree(2, 5)])
def test_infoset_partition_covers_decisions(spec_fn):
    tree = build_game(spec_fn())
    for p in (P1, P2):
        owned = sum(len(tree.infosets[I].members) for I in tree.player_infosets[p])
        assert owned == len(tree.decision_histories(p))


@pytest.mark.parametrize("spec_fn", [kuhn, lambda: leduc(2)])
def test_succ_skips_only_foreign_infosets(spec_fn):
    tree = build_game(spec_fn())
    for p in (P1, P2):
        ix = build_infoset_index(tree, p)
        for I in ix.own:
            for J in ix.succ_all(I):
                assert tree.infosets[J].owner == p
                assert tree.infosets[J].depth > tree.infosets[I].depth
                # walk from each member of J up to a member of I: no own node in between
                for h in tree.infosets[J].members:
                    x = tree.parent[h]
                    while tree.actor[x] != p:
                        x = tree.parent[x]
                    assert tree.infoset[x] == I


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_reach_factorizes_and_zero_sum(seed):
    rng = random.Random(seed)
    tree = build_game(kuhn() if seed % 2 else leduc(1))
    prof = random_profile(tree, rng)
    r = reach(tree, prof)
    for h in range(tree.num_nodes):
        assert abs(r.total[h] - r.p1[h] * r.p2[h] * r.chance[h]) <= 1e-12
        assert 0.0 <= r.total[h] <= 1.0
    v1 = expected_value(tree, prof)
    leaves = sum(r.total[z] * tree.utility[z] for z in range(tree.num_nodes)
                 if tree.actor[z] == TERMINAL)
    assert v1 == pytest.approx(leaves, abs=1e-12)
    assert v1 + (-v1) == 0.0


def test_infoset_reach_aggregates(kuhn_tree):
    prof = random_profile(kuhn_tree, random.Random(3))
    r = reach(kuhn_tree, prof)
    for I in kuhn_tree.infosets:
        assert r.infoset_total[I.id] == pytest.approx(sum(r.total[h] for h in I.members), abs=1e-15)
