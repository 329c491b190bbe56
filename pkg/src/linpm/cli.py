"""Command line interface: run experiments, classify games, sweep horizons."""

import argparse
import json
import sys

from .classify import classify
from .games import Game
from .harness import build_any_game, load_config, run_experiment, run_sweep


def _game_doc(path: str) -> dict:
    """Accept either a full experiment config or a bare game document."""
    with open(path) as fh:
        doc = json.load(fh)
    if isinstance(doc, dict) and "game" in doc:
        return doc["game"]
    return doc


def _cmd_run(args) -> int:
    config = load_config(args.config)
    summary = run_experiment(config, out_dir=args.out)
    print(json.dumps(summary, sort_keys=True))
    return 0


def _cmd_classify(args) -> int:
    game = build_any_game(_game_doc(args.config))
    if not isinstance(game, Game):
        raise ValueError("classification applies to plain finite linear games")
    report = classify(game)
    print(json.dumps({
        "name": game.name,
        "dim": game.dim,
        "n_actions": game.n_actions,
        "pareto": list(report.pareto),
        "neighbors": [list(e) for e in report.neighbor_edges],
        "globally_observable": report.globally_observable,
        "locally_observable": report.locally_observable,
        "regime": report.regime,
        "alignment_upper": report.alignment_upper,
    }, sort_keys=True))
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    horizons = [int(tok) for tok in args.horizons.split(",") if tok.strip()]
    result = run_sweep(config, horizons, out_dir=args.out)
    print(json.dumps(result, sort_keys=True))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="linpm",
        description="Simulator for stochastic linear partial monitoring with "
                    "information directed sampling.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a seeded experiment from a JSON config")
    p_run.add_argument("--config", required=True, help="path to the JSON config")
    p_run.add_argument("--out", default=None, help="output directory (overrides out_path)")
    p_run.set_defaults(func=_cmd_run)

    p_cls = sub.add_parser("classify", help="report the minimax regime of the configured game")
    p_cls.add_argument("--config", required=True, help="experiment config or bare game JSON")
    p_cls.set_defaults(func=_cmd_classify)

    p_swp = sub.add_parser("sweep", help="run the experiment across several horizons")
    p_swp.add_argument("--config", required=True, help="path to the JSON config")
    p_swp.add_argument("--horizons", required=True,
                       help="comma separated horizon list, e.g. 500,1000,2000,4000")
    p_swp.add_argument("--out", default=None, help="output directory (overrides out_path)")
    p_swp.set_defaults(func=_cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
