"""Monte Carlo checks of the Gaussian-smoothing identities behind the learner.

Two independent estimators target the smoothed mapping ``M~(mu)``, the
gradient of each player's cost averaged over ``x ~ N(mu, sigma^2 I)``:

* score (payoff-only): ``J_i(x) * (x_i - mu_i) / sigma^2``
* pathwise:           ``M(x)``

A game used here needs ``costs(x)`` and ``game_mapping(x)`` batched over
leading axes, plus ``mixed_mapping(mu, sigma)`` giving ``M~`` in closed form.

Sampling is split into fixed-size chunks, each with its own child seed, and
the chunk statistics are merged in order, so results depend only on ``seed``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .core import check_finite

CHUNK = 50_000
MIN_SAMPLES = 100


@dataclass
class EstimatorReport:
    mc_mean: np.ndarray
    analytic: np.ndarray
    std_err: np.ndarray
    n_samples: int
    max_z_score: float

    def to_dict(self) -> dict:
        return {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}


@dataclass
class BiasReport:
    sigmas: list
    q_norms: list
    ratios: list
    std_errs: list  # standard error of each q_norm, taken as the norm of the per-coordinate errors
    analytic_norms: list

    def to_dict(self) -> dict:
        return asdict(self)


class _Moments:
    """Chunk-mergeable mean and sum of squared deviations (Chan et al.)."""

    def __init__(self, size: int):
        self.n = 0
        self.mean = np.zeros(size)
        self.m2 = np.zeros(size)

    def add(self, block: np.ndarray):
        nb = block.shape[0]
        mb = block.mean(0)
        m2b = ((block - mb) ** 2).sum(0)
        n = self.n + nb
        delta = mb - self.mean
        self.mean = self.mean + delta * (nb / n)
        self.m2 = self.m2 + m2b + delta**2 * (self.n * nb / n)
        self.n = n

    def std_err(self) -> np.ndarray:
        return np.sqrt(self.m2 / (self.n - 1) / self.n)


def _accumulate(fn, mu: np.ndarray, sigma: float, n_samples: int, seed) -> _Moments:
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {n_samples}")
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    sizes = [CHUNK] * (n_samples // CHUNK)
    if n_samples % CHUNK:
        sizes.append(n_samples % CHUNK)
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    children = root.spawn(len(sizes))
    acc = _Moments(mu.size)
    for size, child in zip(sizes, children):
        z = np.random.default_rng(child).standard_normal((size, mu.size))
        acc.add(fn(mu + sigma * z, z))
    return acc


def _report(acc: _Moments, analytic: np.ndarray) -> EstimatorReport:
    se = acc.std_err()
    dev = np.abs(acc.mean - analytic)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, dev / se, np.where(dev > 0, np.inf, 0.0))
    return EstimatorReport(acc.mean, np.asarray(analytic, dtype=float), se, acc.n, float(z.max()))


def score_estimator(game, x: np.ndarray, mu: np.ndarray, sigma: float) -> np.ndarray:
    """Payoff-only gradient estimate for a batch of joint states ``x``."""
    costs = game.costs(x)
    per_coord = np.repeat(costs, game.sets.dims, axis=-1)
    return per_coord * (x - mu) / sigma**2


def score_estimator_check(game, mu, sigma: float, n_samples: int, seed=0) -> EstimatorReport:
    """Average the score estimator over Gaussian draws and compare with ``M~(mu)``."""
    mu = check_finite(mu, "mu")
    acc = _accumulate(lambda x, z: score_estimator(game, x, mu, sigma), mu, sigma, n_samples, seed)
    return _report(acc, game.mixed_mapping(mu, sigma))


def mixed_mapping_mc(game, mu, sigma: float, n_samples: int, seed=0) -> EstimatorReport:
    """Pathwise estimate of ``M~(mu)``: the average of ``M(x)`` over Gaussian draws.

    ``mc_mean`` holds the estimate; the report also carries its standard errors
    and the closed-form value for comparison.
    """
    mu = check_finite(mu, "mu")
    acc = _accumulate(lambda x, z: game.game_mapping(x), mu, sigma, n_samples, seed)
    return _report(acc, game.mixed_mapping(mu, sigma))


def bias_scaling_check(game, mu, sigmas, n_samples: int, seed=0) -> BiasReport:
    """Estimate ``||M~(mu) - M(mu)||`` along a decreasing ladder of sigmas."""
    mu = check_finite(mu, "mu")
    sigmas = [float(s) for s in sigmas]
    if not sigmas or any(s <= 0 for s in sigmas):
        raise ValueError("sigmas must be positive")
    if any(b >= a for a, b in zip(sigmas, sigmas[1:])):
        raise ValueError("sigmas must be strictly decreasing")
    m_mu = game.game_mapping(mu)
    seeds = np.random.SeedSequence(seed).spawn(len(sigmas))
    q_norms, std_errs, analytic = [], [], []
    for s, child in zip(sigmas, seeds):
        acc = _accumulate(lambda x, z: game.game_mapping(x) - m_mu, mu, s, n_samples, child)
        q_norms.append(float(np.linalg.norm(acc.mean)))
        std_errs.append(float(np.linalg.norm(acc.std_err())))
        analytic.append(float(np.linalg.norm(game.mixed_mapping(mu, s) - m_mu)))
    return BiasReport(
        sigmas=sigmas,
        q_norms=q_norms,
        ratios=[q / s for q, s in zip(q_norms, sigmas)],
        std_errs=std_errs,
        analytic_norms=analytic,
    )


def report_json(report) -> str:
    return json.dumps(report.to_dict(), indent=1)
