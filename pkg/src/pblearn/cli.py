"""Command-line entry point: ``pblearn {run,solve-ne,diagnose,validate-schedule}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys

import numpy as np

from . import diagnostics, harness, learner
from .games import assemble_hat_M, load_game
from .vi_oracle import OracleError, best_response_gap, solve_game


def _cmd_run(args) -> int:
    changes = {}
    if args.seeds is not None:
        changes["n_seeds"] = args.seeds
    if args.out is not None:
        changes["out_dir"] = args.out
    if args.override_schedule_check:
        changes["override_schedule_check"] = True
    cfg = harness.load_config(args.config, **changes)
    ens = harness.run_experiment(cfg)
    q = ens.quantiles()
    print(json.dumps({
        "out_dir": cfg.out_dir,
        "n_runs": len(ens.runs),
        "T": cfg.T,
        "median_error_first": float(q["median"][min(1, cfg.T)]),
        "median_error_final": float(q["median"][-1]),
        "max_infeasibility": max(r.max_infeasibility for r in ens.runs),
    }, indent=1))
    return 0


def _cmd_solve(args) -> int:
    cfg = harness.load_config(args.config)
    game = harness.build_game(cfg)
    sols = solve_game(game, tol=args.tol)
    print(json.dumps({
        "equilibria": [s.a_star.tolist() for s in sols],
        "residuals": [s.residual for s in sols],
        "iterations": [s.iterations for s in sols],
        "best_response_gaps": [best_response_gap(game, s.a_star) for s in sols],
        "lipschitz": float(np.linalg.norm(assemble_hat_M(game).matm, 2)),
    }, indent=1))
    return 0


def _default_mu(game) -> np.ndarray:
    # projection of the even split: the "centre" of each action set
    return np.concatenate([f.project(np.full(f.dim, f.budget / f.dim)) for f in game.sets.factors])


def _cmd_diagnose(args) -> int:
    game = load_game(args.game)
    mu = _default_mu(game) if args.mu is None else np.array([float(v) for v in args.mu.split(",")])
    if args.check == "score":
        report = diagnostics.score_estimator_check(game, mu, args.sigma[0], args.samples, args.seed)
    elif args.check == "mixed":
        report = diagnostics.mixed_mapping_mc(game, mu, args.sigma[0], args.samples, args.seed)
    else:
        report = diagnostics.bias_scaling_check(game, mu, args.sigma, args.samples, args.seed)
    print(diagnostics.report_json(report))
    return 0


def _cmd_validate(args) -> int:
    spec = learner.ScheduleSpec(args.gamma_c, args.gamma_a, args.sigma_c, args.sigma_a)
    check = learner.validate_schedule(spec)
    print(json.dumps({"valid": check.valid, "violated": list(check.violated)}))
    return 0 if check.valid else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pblearn", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a seeded learner ensemble")
    p.add_argument("--config", required=True)
    p.add_argument("--seeds", type=int, help="override n_seeds")
    p.add_argument("--out", help="override out_dir")
    p.add_argument("--override-schedule-check", action="store_true")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("solve-ne", help="solve the instance's equilibrium with the VI oracle")
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("diagnose", help="Monte Carlo estimator checks on a saved game")
    p.add_argument("--game", required=True, help="game instance JSON")
    p.add_argument("--check", choices=["score", "bias", "mixed"], required=True)
    p.add_argument("--sigma", type=float, nargs="+", required=True,
                   help="one sigma, or a decreasing ladder for --check bias")
    p.add_argument("--samples", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mu", help="comma-separated joint mean (default: centre of each action set)")
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("validate-schedule", help="check power-law schedule exponents; exit 1 if invalid")
    p.add_argument("--gamma-a", type=float, required=True)
    p.add_argument("--sigma-a", type=float, required=True)
    p.add_argument("--gamma-c", type=float, default=1.0)
    p.add_argument("--sigma-c", type=float, default=0.1)
    p.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ValueError, OracleError, OSError, KeyError) as exc:
        print(f"pblearn {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
