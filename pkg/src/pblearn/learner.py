"""Payoff-based learning with Gaussian mixed strategies.

Each player keeps a feasible mean ``mu_i``, plays a state ``x_i ~ N(mu_i, sigma(t)^2 I)``,
observes only its own scalar cost at the joint state, and moves its mean by

    mu_i <- Proj_{A_i}[ mu_i - gamma(t+1) sigma(t+1)^2 * J_i * (x_i - mu_i) / sigma(t)^2 ].

This module only ever touches the game through a payoff oracle: either an object
with a ``payoffs(x) -> (N,)`` method or a callable ``oracle(i, x) -> float``.
"""

from __future__ import annotations

import functools
import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import NonFiniteError, ProductSet, check_finite

log = logging.getLogger(__name__)

DIVERGENT_STEP = "sum_gamma_sigma2_diverges"
SUMMABLE_BIAS = "sum_gamma_sigma3_converges"
SUMMABLE_GAMMA2 = "sum_gamma2_converges"


class ScheduleError(ValueError):
    pass


@dataclass(frozen=True)
class ScheduleSpec:
    """Power-law schedules ``gamma(t) = gamma_c / t**gamma_a``, ``sigma(t) = sigma_c / t**sigma_a``.

    Time is 1-based; iteration ``t`` samples with ``sigma(t)`` and steps with
    ``gamma(t+1) * sigma(t+1)**2``.
    """

    gamma_c: float = 1.0
    gamma_a: float = 0.51
    sigma_c: float = 0.1
    sigma_a: float = 0.2

    def gamma(self, t):
        return self.gamma_c / np.power(t, self.gamma_a, dtype=float)

    def sigma(self, t):
        return self.sigma_c / np.power(t, self.sigma_a, dtype=float)

    def beta(self, t):
        return self.gamma(t) * self.sigma(t) ** 2


DEFAULT_SCHEDULE = ScheduleSpec(1.0, 0.51, 0.1, 0.2)


@dataclass(frozen=True)
class ScheduleCheck:
    valid: bool
    violated: tuple[str, ...]


def _exact(x) -> Fraction:
    # decimal reading of the float, so 0.51 + 2*0.2 compares as 91/100
    return Fraction(str(x))


@functools.lru_cache(maxsize=256)
def validate_schedule(s: ScheduleSpec) -> ScheduleCheck:
    """p-series test of the three summability conditions, in exact arithmetic.

    ``sum t^-p`` diverges iff ``p <= 1``.
    """
    if not isinstance(s, ScheduleSpec):
        raise ScheduleError(f"unsupported schedule form: {type(s).__name__}")
    if not (s.gamma_c > 0 and s.sigma_c > 0):
        raise ScheduleError("schedule coefficients must be positive")
    if not (s.gamma_a > 0 and s.sigma_a > 0):
        raise ScheduleError("schedule exponents must be positive")
    a, b = _exact(s.gamma_a), _exact(s.sigma_a)
    violated = []
    if not a + 2 * b <= 1:
        violated.append(DIVERGENT_STEP)
    if not a + 3 * b > 1:
        violated.append(SUMMABLE_BIAS)
    if not 2 * a > 1:
        violated.append(SUMMABLE_GAMMA2)
    return ScheduleCheck(valid=not violated, violated=tuple(violated))


@dataclass
class LearnerState:
    mu: np.ndarray
    t: int = 0  # completed iterations
    rng: np.random.Generator = field(default_factory=np.random.default_rng)


@dataclass
class SampleRecord:
    x: np.ndarray
    sigma_used: float
    payoffs: np.ndarray | None = None


def sample_states(state: LearnerState, sigma_t: float) -> SampleRecord:
    """Draw every coordinate independently from ``N(mu, sigma_t^2)``.

    ``sigma_t == 0`` returns the means themselves without consuming randomness.
    """
    if sigma_t < 0 or not np.isfinite(sigma_t):
        raise ValueError(f"sigma_t must be a finite non-negative number, got {sigma_t}")
    if sigma_t == 0:
        return SampleRecord(x=state.mu.copy(), sigma_used=0.0)
    x = state.mu + sigma_t * state.rng.standard_normal(state.mu.shape)
    return SampleRecord(x=x, sigma_used=float(sigma_t))


def mean_step(mu, x, payoffs, sigma_t: float, beta_next: float, sets: ProductSet) -> np.ndarray:
    """One projected update for all players given their observed payoffs."""
    mu = np.asarray(mu, dtype=float)
    dev = np.asarray(x, dtype=float) - mu
    payoffs = np.asarray(payoffs, dtype=float)
    if sigma_t == 0:
        return sets.project(mu)
    per_coord = np.repeat(payoffs, sets.dims)
    return sets.project(mu - beta_next * per_coord * dev / sigma_t**2)


def update_means(
    state: LearnerState,
    rec: SampleRecord,
    s: ScheduleSpec,
    sets: ProductSet,
    *,
    allow_invalid_schedule: bool = False,
) -> LearnerState:
    """Apply the projected mean update for iteration ``state.t + 1``."""
    check = validate_schedule(s)
    if not check.valid and not allow_invalid_schedule:
        raise ScheduleError(f"schedule violates {', '.join(check.violated)}")
    if rec.payoffs is None:
        raise ValueError("sample record has no payoffs")
    payoffs = np.asarray(rec.payoffs, dtype=float)
    if payoffs.shape != (sets.n_players,):
        raise ValueError(f"expected {sets.n_players} payoffs, got shape {payoffs.shape}")
    if not np.all(np.isfinite(payoffs)):
        bad = np.flatnonzero(~np.isfinite(payoffs)).tolist()
        raise NonFiniteError(f"non-finite payoff for players {bad} at iteration {state.t + 1}")
    beta_next = float(s.beta(state.t + 2))
    mu = mean_step(state.mu, rec.x, payoffs, rec.sigma_used, beta_next, sets)
    return LearnerState(mu=mu, t=state.t + 1, rng=state.rng)


@dataclass
class Trajectory:
    """Mean path ``mu[0..T]`` plus, optionally, the sampled states and payoffs."""

    mu: np.ndarray  # (T+1, N*d)
    sigmas: np.ndarray  # (T,) sampling sigma at iterations 1..T
    betas: np.ndarray  # (T,) step gamma*sigma^2 applied at iterations 1..T
    states: np.ndarray | None = None  # (T, N*d)
    payoffs: np.ndarray | None = None  # (T, N)
    seed: object = None

    @property
    def T(self) -> int:
        return self.mu.shape[0] - 1


def run(
    oracle,
    sets: ProductSet,
    s: ScheduleSpec,
    mu0=None,
    T: int = 100,
    seed=None,
    *,
    record_states: bool = False,
    allow_invalid_schedule: bool = False,
) -> Trajectory:
    """Run ``T`` sample -> pay -> update rounds.

    ``mu0=None`` draws the initial means from each action set's ``sample``;
    otherwise ``mu0`` is projected onto the sets first.
    """
    if T < 0:
        raise ValueError("T must be non-negative")
    check = validate_schedule(s)
    if not check.valid:
        if not allow_invalid_schedule:
            raise ScheduleError(f"schedule violates {', '.join(check.violated)}")
        log.warning("running with invalid schedule (%s)", ", ".join(check.violated))

    rng = np.random.default_rng(seed)
    mu = sets.sample(rng) if mu0 is None else sets.project(check_finite(mu0, "mu0"))
    state = LearnerState(mu=mu, t=0, rng=rng)

    ts = np.arange(1, T + 1)
    sigmas = np.asarray(s.sigma(ts), dtype=float)
    betas = np.asarray(s.beta(ts + 1), dtype=float)
    mus = np.empty((T + 1, sets.size))
    mus[0] = mu
    states = np.empty((T, sets.size)) if record_states else None
    pays = np.empty((T, sets.n_players)) if record_states else None

    payoffs_of = getattr(oracle, "payoffs", None)
    if payoffs_of is None:
        def payoffs_of(x):
            return np.array([oracle(i, x) for i in range(sets.n_players)])

    for k in range(T):
        rec = sample_states(state, sigmas[k])
        rec.payoffs = payoffs_of(rec.x)
        state = update_means(state, rec, s, sets, allow_invalid_schedule=allow_invalid_schedule)
        mus[k + 1] = state.mu
        if record_states:
            states[k] = rec.x
            pays[k] = rec.payoffs
    return Trajectory(mu=mus, sigmas=sigmas, betas=betas, states=states, payoffs=pays, seed=seed)
