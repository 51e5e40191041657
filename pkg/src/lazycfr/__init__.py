"""Counterfactual regret minimization with lazy updates for two-player zero-sum games."""

__version__ = "0.1.0"

from .game import (GameSpec, GameTree, GameValidationError, InfosetIndex, StrategyProfile,
                   build_game, build_infoset_index, expected_value, parse_game_text, reach)
from .games import LeducConfig, gadget_matrix, kuhn, leduc
from .cfr import CfrState, average_strategy, cfr_plus_round, cfr_round, compute_cfv, mccfr_round
from .lazy import LazyState, lazy_plus_round, lazy_round
from .metrics import best_response, compute_xi, exploitability, external_regret

__all__ = [
    "GameSpec", "GameTree", "GameValidationError", "InfosetIndex", "StrategyProfile",
    "build_game", "build_infoset_index", "expected_value", "parse_game_text", "reach",
    "LeducConfig", "gadget_matrix", "kuhn", "leduc",
    "CfrState", "average_strategy", "cfr_plus_round", "cfr_round", "compute_cfv", "mccfr_round",
    "LazyState", "lazy_plus_round", "lazy_round",
    "best_response", "compute_xi", "exploitability", "external_regret",
]
