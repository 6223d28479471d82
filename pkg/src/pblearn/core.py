"""Joint-vector helpers and exact Euclidean projections onto player action sets.

A joint vector is a flat float array of length ``N * d`` laid out player-major:
player ``i`` owns entries ``[i*d, (i+1)*d)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np


class NonFiniteError(ValueError):
    """Raised when NaN or infinite values reach a numeric routine."""


def check_finite(x, name: str = "input") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or infinite entries")
    return arr


def split(x, n_players: int, dim: int) -> np.ndarray:
    """View a joint vector (or a batch of them) as ``(..., N, d)``."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != n_players * dim:
        raise ValueError(
            f"joint vector has length {x.shape[-1]}, expected {n_players}*{dim}"
        )
    return x.reshape(x.shape[:-1] + (n_players, dim))


def stack(blocks) -> np.ndarray:
    """Inverse of :func:`split`: ``(..., N, d)`` -> ``(..., N*d)``."""
    blocks = np.asarray(blocks, dtype=float)
    return blocks.reshape(blocks.shape[:-2] + (blocks.shape[-2] * blocks.shape[-1],))


class ActionSet(Protocol):
    dim: int

    def project(self, p: np.ndarray) -> np.ndarray: ...

    def sample(self, rng: np.random.Generator) -> np.ndarray: ...


def _box_budget_rows(P: np.ndarray, upper, budget) -> np.ndarray:
    """Row-wise projection onto ``{0 <= a <= upper, sum(a) = budget}``.

    The minimiser is ``clip(p - lam, 0, upper)`` for the multiplier ``lam``
    solving ``sum(clip(p - lam, 0, upper)) = budget``. The sum is piecewise
    linear and non-increasing in ``lam`` with kinks at ``p_k`` and
    ``p_k - upper``, so evaluating it at every kink brackets the root inside a
    linear piece, where it is solved in closed form.
    """
    n, d = P.shape
    upper = np.broadcast_to(np.asarray(upper, dtype=float), (n,))
    budget = np.broadcast_to(np.asarray(budget, dtype=float), (n,))

    kinks = np.sort(np.concatenate([P, P - upper[:, None]], axis=1), axis=1)
    sums = np.zeros_like(kinks)
    tmp = np.empty_like(kinks)
    ucol = upper[:, None]
    for k in range(d):
        np.subtract(P[:, k:k + 1], kinks, out=tmp)
        np.maximum(tmp, 0.0, out=tmp)
        np.minimum(tmp, ucol, out=tmp)
        sums += tmp
    # sums[:, 0] == d*upper >= budget and sums[:, -1] == 0 <= budget
    j = np.argmax(sums <= budget[:, None], axis=1)
    j = np.maximum(j, 1)
    rows = np.arange(n)
    lo, hi = kinks[rows, j - 1], kinks[rows, j]
    s_lo, s_hi = sums[rows, j - 1], sums[rows, j]
    drop = s_lo - s_hi
    with np.errstate(divide="ignore", invalid="ignore"):
        lam = np.where(drop > 0, lo + (s_lo - budget) * (hi - lo) / np.where(drop > 0, drop, 1.0), lo)
    out = np.clip(P - lam[:, None], 0.0, upper[:, None])

    # Re-solve the multiplier on the free coordinates to remove interpolation round-off.
    free = (out > 0.0) & (out < upper[:, None])
    n_free = free.sum(1)
    at_upper = (out >= upper[:, None]).sum(1)
    has_free = n_free > 0
    if np.any(has_free):
        lam_exact = (np.where(free, P, 0.0).sum(1) - (budget - upper * at_upper)) / np.maximum(n_free, 1)
        refined = np.clip(P - lam_exact[:, None], 0.0, upper[:, None])
        same_support = ((refined > 0.0) & (refined < upper[:, None])) == free
        keep = has_free & same_support.all(1)
        out[keep] = refined[keep]
    return out


@dataclass(frozen=True)
class BoxBudgetSet:
    """Consumption profile over ``dim`` periods with per-period cap and fixed total."""

    dim: int
    upper: float
    budget: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        check_finite([self.upper, self.budget], "BoxBudgetSet parameters")
        if self.upper <= 0:
            raise ValueError(f"upper bound must be positive, got {self.upper}")
        if not 0.0 <= self.budget <= self.dim * self.upper:
            raise ValueError(
                f"empty set: budget {self.budget} outside [0, {self.dim * self.upper}]"
            )

    def project(self, p) -> np.ndarray:
        return project_box_budget(p, self)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        # uniform on the box, then projected; skewed towards the faces of the slice
        return self.project(rng.uniform(0.0, self.upper, self.dim))

    def contains(self, p, tol: float = 1e-10) -> bool:
        p = np.asarray(p, dtype=float)
        return bool(
            np.all(p >= -tol)
            and np.all(p <= self.upper + tol)
            and abs(p.sum() - self.budget) <= tol * max(1.0, self.budget)
        )


@dataclass(frozen=True)
class BoxSet:
    """Plain box ``lower <= a <= upper`` (no budget)."""

    dim: int
    lower: float
    upper: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not self.lower <= self.upper:
            raise ValueError("empty box")

    def project(self, p) -> np.ndarray:
        p = check_finite(p, "point")
        if p.shape != (self.dim,):
            raise ValueError(f"expected shape ({self.dim},), got {p.shape}")
        return np.clip(p, self.lower, self.upper)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, self.dim)


def project_box_budget(p, box: BoxBudgetSet) -> np.ndarray:
    """Euclidean projection of ``p`` onto a :class:`BoxBudgetSet`."""
    p = check_finite(p, "point")
    if p.shape != (box.dim,):
        raise ValueError(f"expected shape ({box.dim},), got {p.shape}")
    return _box_budget_rows(p[None, :], box.upper, box.budget)[0]


class ProductSet:
    """Cartesian product of per-player action sets; projects factor-wise."""

    def __init__(self, factors: Sequence[ActionSet]):
        factors = list(factors)
        if not factors:
            raise ValueError("ProductSet needs at least one factor")
        self.factors = factors
        self.dims = [f.dim for f in factors]
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)])
        self._batched = all(isinstance(f, BoxBudgetSet) for f in factors) and len(set(self.dims)) == 1
        if self._batched:
            self._upper = np.array([f.upper for f in factors])
            self._budget = np.array([f.budget for f in factors])

    @property
    def n_players(self) -> int:
        return len(self.factors)

    @property
    def size(self) -> int:
        return int(self.offsets[-1])

    def block(self, x, i: int) -> np.ndarray:
        return np.asarray(x)[..., self.offsets[i]:self.offsets[i + 1]]

    def project(self, p) -> np.ndarray:
        return project_joint(p, self)

    def project_player(self, i: int, p) -> np.ndarray:
        return self.factors[i].project(p)

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return self.sample_batch(rng, 1)[0]

    def sample_batch(self, rng: np.random.Generator, n: int) -> np.ndarray:
        """``n`` feasible joint points, shape ``(n, size)``."""
        if self._batched:
            d, N = self.dims[0], self.n_players
            raw = rng.uniform(0.0, 1.0, (n, N, d)) * self._upper[None, :, None]
            rows = _box_budget_rows(
                raw.reshape(-1, d), np.tile(self._upper, n), np.tile(self._budget, n)
            )
            return rows.reshape(n, N * d)
        return np.array([np.concatenate([f.sample(rng) for f in self.factors]) for _ in range(n)])

    def distance(self, p) -> float:
        """Euclidean distance from ``p`` to the set."""
        p = np.asarray(p, dtype=float)
        return float(np.linalg.norm(p - self.project(p)))

    def __len__(self):
        return len(self.factors)

    def __repr__(self):
        return f"ProductSet({self.factors!r})"


def project_joint(p, sets: ProductSet) -> np.ndarray:
    """Project a joint vector onto ``A_1 x ... x A_N`` one player at a time."""
    p = check_finite(p, "joint vector")
    if p.ndim != 1 or p.shape[0] != sets.size:
        raise ValueError(f"joint vector has shape {p.shape}, expected ({sets.size},)")
    if sets._batched:
        d = sets.dims[0]
        return _box_budget_rows(p.reshape(-1, d), sets._upper, sets._budget).reshape(-1)
    return np.concatenate([f.project(sets.block(p, i)) for i, f in enumerate(sets.factors)])
