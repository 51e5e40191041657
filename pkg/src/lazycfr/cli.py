"""Experiment driver: ``lazycfr run`` and ``lazycfr compare``.

``run`` writes a convergence CSV plus a JSON manifest next to it.  The CSV
holds only deterministic quantities so that a rerun with the same flags and
seed is byte-identical; timings live in the manifest.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

from . import __version__
from .adversary import AdversarySpec, RegretMatchingLearner, measure_lower_bound
from .cfr import CfrState, cfr_plus_round, cfr_round, mccfr_round
from .game import GameTree, build_game
from .games import MATCHING_PENNIES, LeducConfig, gadget_matrix, kuhn, leduc
from .lazy import LazyState, lazy_plus_round, lazy_round
from .metrics import ConvergenceLog, evaluate, xi_report
from .olo import rm_plus_step, rm_step

GAMES = ("kuhn", "leduc", "gadget", "adversary")
SOLVERS = ("cfr", "cfr_plus", "mccfr", "lazy_cfr", "lazy_cfr_plus")
ENV_OUTPUT_DIR = "LAZYCFR_OUTPUT_DIR"

EXIT_USAGE = 2
EXIT_OUTPUT = 3


class OutputError(OSError):
    pass


@dataclass
class RunConfig:
    game: str = "kuhn"
    solver: str = "cfr"
    rounds: int = 1000
    eval_every: int = 100
    eval_unit: str = "rounds"
    threshold: float = 1.0
    seed: int = 0
    bet_maximum: int = 2
    payoffs: list = field(default_factory=lambda: [list(r) for r in MATCHING_PENNIES])
    branching: int = 2
    depth: int = 2
    native_units: bool = False
    out: str | None = None

    def validate(self) -> None:
        if self.game not in GAMES:
            raise ValueError(f"unknown game {self.game!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if self.rounds < 1:
            raise ValueError("--rounds must be at least 1")
        if self.eval_every < 1:
            raise ValueError("--eval-every must be at least 1")
        if self.eval_unit not in ("rounds", "nodes"):
            raise ValueError("--eval-unit must be 'rounds' or 'nodes'")
        if not (self.threshold >= 0.0 and math.isfinite(self.threshold)):
            raise ValueError("--threshold must be a nonnegative number")
        if self.bet_maximum < 1:
            raise ValueError("--bet-max must be at least 1")
        if self.game == "adversary" and self.solver not in ("cfr", "cfr_plus"):
            raise ValueError("the adversary game runs the regret-matching learner (cfr or cfr_plus)")

    def game_key(self) -> dict:
        key = {"game": self.game}
        if self.game == "leduc":
            key["bet_maximum"] = self.bet_maximum
        elif self.game == "gadget":
            key["payoffs"] = self.payoffs
        elif self.game == "adversary":
            key.update(branching=self.branching, depth=self.depth)
        return key

    def default_name(self) -> str:
        tag = self.game if self.game != "leduc" else f"leduc{self.bet_maximum}"
        return f"{tag}-{self.solver}-seed{self.seed}.csv"


def make_tree(config: RunConfig) -> GameTree:
    if config.game == "kuhn":
        return build_game(kuhn())
    if config.game == "leduc":
        return build_game(leduc(LeducConfig(bet_maximum=config.bet_maximum)))
    if config.game == "gadget":
        return build_game(gadget_matrix(config.payoffs))
    raise ValueError(f"{config.game!r} has no solver tree")


def make_solver(tree: GameTree, config: RunConfig):
    s = config.solver
    if s == "cfr":
        return CfrState.new(tree), cfr_round
    if s == "cfr_plus":
        return CfrState.new(tree, plus=True), cfr_plus_round
    if s == "mccfr":
        return CfrState.new(tree, seed=config.seed), mccfr_round
    if s == "lazy_cfr":
        return LazyState.new(tree, theta=config.threshold), lazy_round
    if s == "lazy_cfr_plus":
        return LazyState.new(tree, theta=config.threshold, plus=True), lazy_plus_round
    raise ValueError(f"unknown solver {s!r}")


@dataclass
class RunResult:
    config: RunConfig
    log: ConvergenceLog
    csv: str
    manifest: dict


def run(config: RunConfig) -> RunResult:
    config.validate()
    if config.game == "adversary":
        return _run_adversary(config)
    started = time.perf_counter()
    tree = make_tree(config)
    state, step = make_solver(tree, config)
    log = ConvergenceLog(scale=tree.scale, native_units=config.native_units)
    eval_nodes = 0
    next_mark = config.eval_every
    for _ in range(config.rounds):
        step(state)
        progress = state.t if config.eval_unit == "rounds" else state.touched_nodes
        due = progress >= next_mark
        if due:
            while next_mark <= progress:
                next_mark += config.eval_every
        if due or (state.t == config.rounds and not log.records and config.eval_unit == "nodes"):
            log.append(evaluate(state))
            eval_nodes += 3 * tree.num_nodes
    if config.eval_unit == "nodes" and log.records and log.records[-1].round != state.t:
        log.append(evaluate(state))
        eval_nodes += 3 * tree.num_nodes
    csv_text = log.to_csv()
    manifest = {
        "version": __version__,
        "config": asdict(config),
        "game": tree.summary(),
        "xi": xi_report(tree).as_dict(),
        "scale": tree.scale,
        "units": "native" if config.native_units else "normalized",
        "records": len(log.records),
        "final": asdict(log.records[-1]) if log.records else None,
        "evaluation_nodes": eval_nodes,
        "wall_clock_seconds": time.perf_counter() - started,
    }
    return RunResult(config, log, csv_text, manifest)


def _run_adversary(config: RunConfig) -> RunResult:
    started = time.perf_counter()
    spec = AdversarySpec(branching=config.branching, depth=config.depth, seed=config.seed,
                         rounds=config.rounds)
    step = rm_step if config.solver == "cfr" else rm_plus_step
    marks = list(range(config.eval_every, config.rounds + 1, config.eval_every))
    report = measure_lower_bound(spec, [config.seed],
                                 lambda g: RegretMatchingLearner(g, step), checkpoints=marks)
    csv_text = report.to_csv()
    manifest = {
        "version": __version__,
        "config": asdict(config),
        "xi": report.xi,
        "depth": report.depth,
        "final_regret": report.runs[0].regret,
        "wall_clock_seconds": time.perf_counter() - started,
    }
    return RunResult(config, ConvergenceLog(), csv_text, manifest)


def output_path(config: RunConfig) -> Path:
    if config.out:
        return Path(config.out)
    base = Path(os.environ.get(ENV_OUTPUT_DIR, "."))
    return base / config.default_name()


def write_result(result: RunResult, path: Path) -> Path:
    manifest_path = path.with_suffix(".json")
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(result.csv)
        manifest_path.write_text(json.dumps(result.manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise OutputError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return manifest_path


# ---------------------------------------------------------------------------
# compare


@dataclass
class Comparison:
    targets: list[float]
    solvers: list[str]
    nodes: dict[str, list[int | None]]
    ratios: dict[str, list[float | None]]

    def table(self) -> str:
        lines = ["target," + ",".join(f"{s}_nodes" for s in self.solvers)
                 + "," + ",".join(f"{s}_ratio" for s in self.solvers[1:])]
        for i, tgt in enumerate(self.targets):
            cells = [format(tgt, "g")]
            cells += ["" if self.nodes[s][i] is None else str(self.nodes[s][i]) for s in self.solvers]
            cells += ["" if self.ratios[s][i] is None else format(self.ratios[s][i], ".6g")
                      for s in self.solvers[1:]]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def compare_logs(named_logs: Sequence[tuple[str, ConvergenceLog]], targets: Sequence[float]) -> Comparison:
    """Touched nodes at which each log first reaches each target.

    Ratios are baseline nodes (first entry) divided by each solver's nodes,
    so a ratio of 3 means three times fewer touched nodes than the baseline.
    """
    if not named_logs:
        raise ValueError("compare needs at least one run")
    solvers = [name for name, _ in named_logs]
    nodes: dict[str, list] = {}
    for name, log in named_logs:
        nodes[name] = []
        for tgt in targets:
            rec = log.first_round_below(tgt)
            nodes[name].append(rec.touched_nodes if rec else None)
    base = nodes[solvers[0]]
    ratios = {}
    for name in solvers:
        ratios[name] = [b / x if b is not None and x else None for b, x in zip(base, nodes[name])]
    return Comparison(list(targets), solvers, nodes, ratios)


def compare(configs: Sequence[RunConfig], targets: Sequence[float]) -> Comparison:
    if not configs:
        raise ValueError("compare needs at least one config")
    key = configs[0].game_key()
    for c in configs[1:]:
        if c.game_key() != key:
            raise ValueError(f"mismatched games: {key} vs {c.game_key()}")
    results = [run(c) for c in configs]
    return compare_logs([(f"{r.config.solver}" if i == 0 or r.config.solver != results[0].config.solver
                          else f"{r.config.solver}#{i}", r.log) for i, r in enumerate(results)],
                        targets)


# ---------------------------------------------------------------------------
# argument parsing


def _add_run_flags(p: argparse.ArgumentParser, solver_many: bool = False) -> None:
    p.add_argument("--game", choices=GAMES, default="kuhn")
    p.add_argument("--bet-max", type=int, default=2, dest="bet_maximum",
                   help="raises allowed per betting round (leduc)")
    p.add_argument("--payoffs", type=json.loads, default=None,
                   help="payoff matrix as JSON for the gadget game")
    p.add_argument("--branching", type=int, default=2, help="adversary branching factor")
    p.add_argument("--depth", type=int, default=2, help="adversary decisions per player")
    if solver_many:
        p.add_argument("--solvers", required=True,
                       help="comma-separated solvers; the first is the baseline")
    else:
        p.add_argument("--solver", choices=SOLVERS, default="cfr")
    p.add_argument("--rounds", type=int, default=1000)
    p.add_argument("--eval-every", type=int, default=100,
                   help="evaluation cadence in --eval-unit units")
    p.add_argument("--eval-unit", choices=("rounds", "nodes"), default="rounds")
    p.add_argument("--threshold", type=float, default=1.0, help="lazy update trigger mass")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--native-units", action="store_true",
                   help="report exploitability and regret in the game's own payoff units")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lazycfr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run one solver and write a convergence CSV")
    _add_run_flags(p_run)
    p_run.add_argument("--out", default=None, help=f"CSV path (default: ${ENV_OUTPUT_DIR} or .)")
    p_cmp = sub.add_parser("compare", help="run several solvers on one game and compare")
    _add_run_flags(p_cmp, solver_many=True)
    p_cmp.add_argument("--targets", default="0.05",
                       help="comma-separated exploitability targets")
    p_cmp.add_argument("--out", default=None, help="write the comparison table here")
    return parser


def _config_from(args, solver: str) -> RunConfig:
    cfg = RunConfig(game=args.game, solver=solver, rounds=args.rounds,
                    eval_every=args.eval_every, eval_unit=args.eval_unit,
                    threshold=args.threshold, seed=args.seed, bet_maximum=args.bet_maximum,
                    branching=args.branching, depth=args.depth,
                    native_units=args.native_units, out=getattr(args, "out", None))
    if args.payoffs is not None:
        cfg.payoffs = args.payoffs
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            config = _config_from(args, args.solver)
            config.validate()
        else:
            solvers = [s.strip() for s in args.solvers.split(",") if s.strip()]
            if not solvers:
                parser.error("--solvers needs at least one solver")
            configs = [_config_from(args, s) for s in solvers]
            for c in configs:
                c.validate()
            targets = [float(x) for x in args.targets.split(",") if x.strip()]
            if not targets:
                parser.error("--targets needs at least one value")
    except ValueError as exc:
        parser.error(str(exc))

    try:
        if args.command == "run":
            result = run(config)
            path = output_path(config)
            write_result(result, path)
            final = result.manifest.get("final")
            if final:
                print(f"{path}: {len(result.log.records)} records, "
                      f"exploitability {final['exploitability']:.6g} (normalized)")
            else:
                print(f"{path}: written")
        else:
            comparison = compare(configs, targets)
            text = comparison.table()
            if args.out:
                try:
                    Path(args.out).write_text(text)
                except OSError as exc:
                    raise OutputError(f"cannot write {args.out}: {exc.strerror or exc}") from exc
            sys.stdout.write(text)
    except OutputError as exc:
        print(f"lazycfr: error: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    return 0


if __name__ == "__main__":
    sys.exit(main())
