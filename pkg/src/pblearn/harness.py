"""Seeded experiment ensembles: one game instance, many learner runs, CSV/JSON output.

Config files are flat ``key = value`` text (``#`` starts a comment) or JSON;
keys are the field names of :class:`ExperimentConfig`. Range-valued keys take
two comma-separated numbers, e.g. ``c_range = 0, 5``.

CSV files are UTF-8, comma separated, ``.`` decimal point, and start with a
``# columns: ...`` line. Floats are written with 17 significant digits so a
rerun with the same config reproduces them byte for byte.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import learner
from .games import assemble_hat_M, load_game, random_instance, save_game
from .vi_oracle import OracleError, VISolution, solve_game, vi_residual

log = logging.getLogger(__name__)


@dataclass
class ExperimentConfig:
    N: int = 10
    d: int = 4
    upper: float = 6.0
    c_range: tuple = (0.0, 5.0)
    budget_range: tuple = (0.5, 10.0)
    instance_seed: int = 0
    game_path: str | None = None
    gamma_c: float = 1.0
    gamma_a: float = 0.51
    sigma_c: float = 0.1
    sigma_a: float = 0.2
    T: int = 100
    n_seeds: int = 20
    base_seed: int = 0
    out_dir: str | None = None
    record_mu: bool = False
    record_x: bool = False
    override_schedule_check: bool = False
    workers: int = 1

    def __post_init__(self):
        self.c_range = tuple(float(v) for v in self.c_range)
        self.budget_range = tuple(float(v) for v in self.budget_range)
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        check = learner.validate_schedule(self.schedule)
        if not check.valid and not self.override_schedule_check:
            raise learner.ScheduleError(
                f"schedule violates {', '.join(check.violated)}; set override_schedule_check to run anyway"
            )

    @property
    def schedule(self) -> learner.ScheduleSpec:
        return learner.ScheduleSpec(self.gamma_c, self.gamma_a, self.sigma_c, self.sigma_a)


def _parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _parse_range(v) -> tuple:
    parts = v if isinstance(v, (list, tuple)) else str(v).split(",")
    if len(parts) != 2:
        raise ValueError(f"range needs two values, got {v!r}")
    return tuple(float(p) for p in parts)


def _optional_str(v):
    return None if v in (None, "", "none", "None") else str(v)


_CONVERTERS = {
    "N": int, "d": int, "T": int, "n_seeds": int, "base_seed": int, "instance_seed": int, "workers": int,
    "upper": float, "gamma_c": float, "gamma_a": float, "sigma_c": float, "sigma_a": float,
    "c_range": _parse_range, "budget_range": _parse_range,
    "game_path": _optional_str, "out_dir": _optional_str,
    "record_mu": _parse_bool, "record_x": _parse_bool, "override_schedule_check": _parse_bool,
}


def config_from_mapping(raw: dict, base_dir: Path | None = None) -> ExperimentConfig:
    unknown = set(raw) - set(_CONVERTERS)
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {k: _CONVERTERS[k](v) for k, v in raw.items()}
    if base_dir is not None and kwargs.get("game_path"):
        p = Path(kwargs["game_path"])
        kwargs["game_path"] = str(p if p.is_absolute() else base_dir / p)
    return ExperimentConfig(**kwargs)


def load_config(path, **overrides) -> ExperimentConfig:
    """Parse a config file; ``overrides`` replace file values before validation."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".json":
        raw = json.loads(text)
    else:
        raw = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            raw[key] = value
    raw.update(overrides)
    return config_from_mapping(raw, base_dir=path.parent)


def build_game(cfg: ExperimentConfig):
    if cfg.game_path:
        return load_game(cfg.game_path)
    return random_instance(cfg.instance_seed, cfg.N, cfg.d, cfg.upper, cfg.c_range, cfg.budget_range)


def ground_truth(game, tol: float = 1e-10) -> list[VISolution]:
    """Cached equilibria if they still certify, otherwise a fresh oracle solve."""
    mapping = assemble_hat_M(game)
    cached = [np.asarray(e, dtype=float) for e in getattr(game, "equilibria", [])]
    if cached and all(vi_residual(e, mapping, game.sets) <= 100 * tol for e in cached):
        return [VISolution(e, vi_residual(e, mapping, game.sets), 0, True) for e in cached]
    sols = solve_game(game, tol=tol)
    game.equilibria = [s.a_star for s in sols]
    return sols


def relative_error(mu: np.ndarray, equilibria) -> np.ndarray:
    """Row-wise ``min_k ||mu - a*_k|| / ||a*_k||`` over the known equilibria."""
    mu = np.atleast_2d(mu)
    errs = [np.linalg.norm(mu - a, axis=1) / np.linalg.norm(a) for a in equilibria]
    return np.min(errs, axis=0)


@dataclass
class RunRecord:
    seed: int
    relative_error: np.ndarray  # (T+1,)
    step_beta: np.ndarray  # (T+1,), 0 at t=0
    mu: np.ndarray | None = None
    states: np.ndarray | None = None
    max_infeasibility: float = 0.0
    wall_time: float = 0.0

    @property
    def final_error(self) -> float:
        return float(self.relative_error[-1])


def _single_run(game, equilibria, cfg: ExperimentConfig, seed: int) -> RunRecord:
    start = time.perf_counter()
    traj = learner.run(
        game.payoff_oracle(),
        game.sets,
        cfg.schedule,
        T=cfg.T,
        seed=seed,
        record_states=cfg.record_x,
        allow_invalid_schedule=cfg.override_schedule_check,
    )
    infeas = max(game.sets.distance(m) for m in traj.mu)
    return RunRecord(
        seed=seed,
        relative_error=relative_error(traj.mu, equilibria),
        step_beta=np.concatenate([[0.0], traj.betas]),
        mu=traj.mu if cfg.record_mu else None,
        states=traj.states,
        max_infeasibility=float(infeas),
        wall_time=time.perf_counter() - start,
    )


def error_quantiles(errors) -> dict:
    """Nearest-rank (inverted-CDF) quartiles per column of an ``(n_runs, T+1)`` array."""
    errors = np.atleast_2d(np.asarray(errors, dtype=float))
    q = np.quantile(errors, [0.25, 0.5, 0.75], axis=0, method="inverted_cdf")
    return {"q25": q[0], "median": q[1], "q75": q[2]}


@dataclass
class Ensemble:
    config: ExperimentConfig
    game: object
    equilibria: list
    runs: list = field(default_factory=list)

    @property
    def errors(self) -> np.ndarray:
        return np.array([r.relative_error for r in self.runs])

    def quantiles(self) -> dict:
        return error_quantiles(self.errors)

    def summary(self) -> dict:
        q = self.quantiles()
        return {
            "config": {k: v for k, v in dataclasses.asdict(self.config).items()},
            "seeds": [r.seed for r in self.runs],
            "equilibria": [np.asarray(e).tolist() for e in self.equilibria],
            "t": list(range(self.errors.shape[1])),
            "median": q["median"].tolist(),
            "q25": q["q25"].tolist(),
            "q75": q["q75"].tolist(),
            "final_errors": [r.final_error for r in self.runs],
            "max_infeasibility": max(r.max_infeasibility for r in self.runs),
            "wall_time_s": [r.wall_time for r in self.runs],
        }


def _fmt(v) -> str:
    return format(float(v), ".17g")


def write_run_csv(rec: RunRecord, path) -> None:
    T = rec.relative_error.shape[0] - 1
    cols = ["t", "relative_error", "step_beta"]
    if rec.mu is not None:
        cols += [f"mu_{k}" for k in range(rec.mu.shape[1])]
    if rec.states is not None:
        cols += [f"x_{k}" for k in range(rec.states.shape[1])]
    lines = [
        "# columns: " + ",".join(cols)
        + " (step_beta = gamma*sigma^2 of the update that produced row t; x_* = state sampled at iteration t)",
        ",".join(cols),
    ]
    for t in range(T + 1):
        row = [str(t), _fmt(rec.relative_error[t]), _fmt(rec.step_beta[t])]
        if rec.mu is not None:
            row += [_fmt(v) for v in rec.mu[t]]
        if rec.states is not None:
            row += [""] * rec.states.shape[1] if t == 0 else [_fmt(v) for v in rec.states[t - 1]]
        lines.append(",".join(row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def emit_plotdata(ensemble: Ensemble, out_dir) -> Path:
    """Write ``error_median.csv`` with the per-t median and quartiles."""
    if not ensemble.runs:
        raise ValueError("empty ensemble")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    q = ensemble.quantiles()
    lines = ["# columns: t,median,q25,q75 (nearest-rank quantiles of relative error over seeds)", "t,median,q25,q75"]
    for t in range(q["median"].shape[0]):
        lines.append(",".join([str(t), _fmt(q["median"][t]), _fmt(q["q25"][t]), _fmt(q["q75"][t])]))
    path = out / "error_median.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def run_experiment(cfg: ExperimentConfig) -> Ensemble:
    """Solve the instance once, then run ``n_seeds`` learners with seeds ``base_seed + k``."""
    game = build_game(cfg)
    try:
        sols = ground_truth(game)
    except OracleError as exc:
        raise OracleError(f"no ground-truth equilibrium for this instance: {exc}") from exc
    equilibria = [s.a_star for s in sols]
    log.info("oracle: %d equilibrium(s), residual %.2e", len(sols), max(s.residual for s in sols))

    seeds = [cfg.base_seed + k for k in range(cfg.n_seeds)]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            runs = list(pool.map(_single_run, [game] * len(seeds), [equilibria] * len(seeds), [cfg] * len(seeds), seeds))
    else:
        runs = [_single_run(game, equilibria, cfg, s) for s in seeds]
    ens = Ensemble(config=cfg, game=game, equilibria=equilibria, runs=runs)

    if cfg.out_dir:
        out = Path(cfg.out_dir)
        (out / "runs").mkdir(parents=True, exist_ok=True)
        save_game(game, out / "instance.json")
        for k, rec in enumerate(runs):
            write_run_csv(rec, out / "runs" / f"run_{k:03d}.csv")
        (out / "ensemble_summary.json").write_text(json.dumps(ens.summary(), indent=1) + "\n", encoding="utf-8")
        emit_plotdata(ens, out)
    return ens
