import itertools

import pytest

from lazycfr.game import CHANCE, P1, P2, StrategyProfile, build_game, expected_value
from lazycfr.games import (MATCHING_PENNIES, ROCK_PAPER_SCISSORS, LeducConfig, gadget_matrix,
                           kuhn, leduc, leduc_public_cards)
from lazycfr.metrics import exploitability

LEDUC5_INFOSETS = 1224


def betting_sequences(cap):
    """Independent enumeration of one Leduc betting round as action strings."""
    decisions, closing = [], []

    def walk(seq, actor, raises, facing):
        decisions.append((seq, actor))
        if facing:
            closing.append(seq + "c")
        elif seq:
            closing.append(seq + "c")
        else:
            walk(seq + "c", 1 - actor, raises, False)
        if raises < cap:
            walk(seq + "r", 1 - actor, raises + 1, True)

    walk("", 0, 0, False)
    return decisions, closing


def leduc_infoset_oracle(cap):
    dec, close = betting_sequences(cap)
    per_player = []
    for p in (0, 1):
        mine = sum(1 for _, a in dec if a == p)
        per_player.append(3 * mine + 3 * len(close) * 3 * mine)
    return per_player


def test_kuhn_counts():
    tree = build_game(kuhn())
    assert len(tree.infosets) == 12
    assert tree.num_terminals == 30
    assert len(tree.player_infosets[P1]) == len(tree.player_infosets[P2]) == 6


@pytest.mark.parametrize("cap", [1, 2, 3, 5])
def test_leduc_infoset_count_matches_enumeration(cap):
    tree = build_game(leduc(cap))
    expected = leduc_infoset_oracle(cap)
    assert [len(tree.player_infosets[p]) for p in (P1, P2)] == expected


def test_leduc_two_raises_is_the_usual_rank_level_size():
    # 144 infosets per player with ranks as the private observation
    tree = build_game(leduc(2))
    assert len(tree.infosets) == 288


def test_leduc5_golden_count():
    assert len(build_game(leduc(5)).infosets) == LEDUC5_INFOSETS


def test_leduc_monotone_in_raise_cap():
    assert len(build_game(leduc(1)).infosets) < len(build_game(leduc(2)).infosets)


def test_leduc_private_deal_multiplicities():
    tree = build_game(leduc(1))
    probs = dict(zip(tree.actions[0], tree.chance_probs[0]))
    # 6 * 5 ordered card deals collapsed onto ranks
    counts = {}
    cards = ["J", "J", "Q", "Q", "K", "K"]
    for i, j in itertools.permutations(range(6), 2):
        key = cards[i] + cards[j]
        counts[key] = counts.get(key, 0) + 1
    assert sum(counts.values()) == 30
    for key, c in counts.items():
        assert probs[key] == pytest.approx(c / 30, abs=1e-15)


def test_leduc_public_card_conditions_on_removed_cards():
    assert dict(leduc_public_cards("J", "J")) == {"Q": 0.5, "K": 0.5}
    assert dict(leduc_public_cards("J", "Q")) == {"J": 0.25, "Q": 0.25, "K": 0.5}
    tree = build_game(leduc(1))
    for h in range(tree.num_nodes):
        if tree.actor[h] == CHANCE:
            assert abs(sum(tree.chance_probs[h]) - 1.0) <= 1e-12


def test_leduc_uniform_value_in_range():
    tree = build_game(leduc(2))
    v = expected_value(tree, StrategyProfile.uniform(tree))
    assert -1.0 <= v <= 1.0


def test_leduc_config_validation():
    with pytest.raises(ValueError):
        LeducConfig(bet_maximum=0)
    with pytest.raises(ValueError):
        LeducConfig(round_bet_sizes=(2, 0))


def test_leduc_payoff_scale():
    # a capped-out hand puts ante + cap * 2 + cap * 4 in front of each player
    for cap in (1, 2, 5):
        assert build_game(leduc(cap)).scale == 1 + 2 * cap + 4 * cap


def test_leduc_tie_splits_pot():
    tree = build_game(leduc(1))
    z = tree.find(["JJ", "c", "c", "K", "c", "c"])
    assert tree.utility[z] == 0.0
    z = tree.find(["JQ", "c", "c", "J", "c", "c"])
    assert tree.utility[z] * tree.scale == 1.0


def test_matching_pennies_uniform_equilibrium():
    tree = build_game(gadget_matrix(MATCHING_PENNIES))
    prof = StrategyProfile.uniform(tree)
    assert expected_value(tree, prof) == 0.0
    assert exploitability(tree, prof) == pytest.approx(0.0, abs=1e-15)


def test_one_by_one_matrix_value():
    tree = build_game(gadget_matrix([[0.3]]))
    assert expected_value(tree, StrategyProfile.uniform(tree)) * tree.scale == pytest.approx(0.3)


def test_rps_uniform_has_zero_exploitability():
    tree = build_game(gadget_matrix(ROCK_PAPER_SCISSORS))
    assert exploitability(tree, StrategyProfile.uniform(tree)) == pytest.approx(0.0, abs=1e-15)


def test_gadget_rejects_ragged_matrix():
    with pytest.raises(ValueError):
        gadget_matrix([[1, 2], [3]])
