"""Quadratic aggregative (demand-response) games and a smooth quartic variant.

Player ``i`` picks a consumption profile ``a_i`` in ``R^d`` and pays

    J_i(a) = a_i' Q_i a_i + 2 (C_i * mean_j(a_j) + c_i)' a_i

subject to ``0 <= a_ik <= upper`` and ``sum_k a_ik = budget_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import BoxBudgetSet, ProductSet, check_finite, split, stack


@dataclass(frozen=True)
class GameMappingAffine:
    """``M(a) = matm @ a + mvec``."""

    matm: np.ndarray
    mvec: np.ndarray

    def __call__(self, a):
        return np.asarray(a, dtype=float) @ self.matm.T + self.mvec


class PayoffOracle:
    """Bandit access to a game: maps a joint state to each player's own cost.

    Nothing else about the game (gradients, matrices, other players' sets) is
    reachable through this object.
    """

    def __init__(self, costs_fn, n_players: int):
        self._costs = costs_fn
        self.n_players = n_players

    def __call__(self, i: int, x) -> float:
        if not 0 <= i < self.n_players:
            raise IndexError(f"player index {i} out of range")
        return float(self._costs(x)[i])

    def payoffs(self, x) -> np.ndarray:
        return np.asarray(self._costs(x), dtype=float)


@dataclass
class QuadraticAggregativeGame:
    Qm: np.ndarray  # (N, d, d)
    Cm: np.ndarray  # (N, d, d)
    cv: np.ndarray  # (N, d)
    sets: ProductSet
    equilibria: list = field(default_factory=list)

    def __post_init__(self):
        self.Qm = check_finite(self.Qm, "Qm")
        self.Cm = check_finite(self.Cm, "Cm")
        self.cv = check_finite(self.cv, "cv")
        N, d = self.cv.shape
        if self.Qm.shape != (N, d, d) or self.Cm.shape != (N, d, d):
            raise ValueError("Qm and Cm must have shape (N, d, d) matching cv (N, d)")
        if self.sets.n_players != N or any(k != d for k in self.sets.dims):
            raise ValueError("action sets do not match the game dimensions")

    @property
    def N(self) -> int:
        return self.cv.shape[0]

    @property
    def d(self) -> int:
        return self.cv.shape[1]

    def _blocks(self, x):
        x = check_finite(x, "joint action")
        return split(x, self.N, self.d)

    def costs(self, x) -> np.ndarray:
        """All players' costs at ``x``; batched over leading axes -> ``(..., N)``."""
        a = self._blocks(x)
        price = np.einsum("nkl,...l->...nk", self.Cm, a.mean(axis=-2)) + self.cv
        private = np.einsum("...nk,nkl,...nl->...n", a, self.Qm, a)
        return private + 2.0 * np.einsum("...nk,...nk->...n", price, a)

    def cost(self, i: int, x) -> float:
        if not 0 <= i < self.N:
            raise IndexError(f"player index {i} out of range")
        return float(self.costs(x)[..., i])

    def game_mapping(self, a) -> np.ndarray:
        """Stacked own-action gradients; batched over leading axes."""
        a = self._blocks(a)
        N = self.N
        sym_q = self.Qm + np.swapaxes(self.Qm, -1, -2)
        g = np.einsum("nkl,...nl->...nk", sym_q, a)
        g += (2.0 / N) * np.einsum("nlk,...nl->...nk", self.Cm, a)
        g += 2.0 * np.einsum("nkl,...l->...nk", self.Cm, a.mean(axis=-2))
        g += 2.0 * self.cv
        return stack(g)

    def mixed_mapping(self, mu, sigma: float) -> np.ndarray:
        # gradient is affine, so Gaussian smoothing leaves it unchanged
        return self.game_mapping(mu)

    def payoff_oracle(self) -> PayoffOracle:
        return PayoffOracle(self.costs, self.N)

    def to_dict(self) -> dict:
        return {
            "kind": "quadratic_aggregative",
            "N": self.N,
            "d": self.d,
            "Qm": self.Qm.tolist(),
            "Cm": self.Cm.tolist(),
            "cv": self.cv.tolist(),
            "sets": [{"dim": f.dim, "upper": f.upper, "budget": f.budget} for f in self.sets.factors],
            "equilibria": [np.asarray(e).tolist() for e in self.equilibria],
        }


@dataclass
class SmoothTestGame:
    """Quadratic game plus ``eps * sum_k a_ik**4`` in every player's cost.

    The extra term makes the game mapping cubic, so Gaussian smoothing has a
    non-zero bias ``12 * eps * mu * sigma**2`` per coordinate.
    """

    base: QuadraticAggregativeGame
    eps: float = 0.05

    def __post_init__(self):
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    N = property(lambda self: self.base.N)
    d = property(lambda self: self.base.d)
    sets = property(lambda self: self.base.sets)

    def costs(self, x) -> np.ndarray:
        a = self.base._blocks(x)
        return self.base.costs(x) + self.eps * (a**4).sum(-1)

    def cost(self, i: int, x) -> float:
        if not 0 <= i < self.N:
            raise IndexError(f"player index {i} out of range")
        return float(self.costs(x)[..., i])

    def game_mapping(self, a) -> np.ndarray:
        a = check_finite(a, "joint action")
        return self.base.game_mapping(a) + 4.0 * self.eps * a**3

    def mixed_mapping(self, mu, sigma: float) -> np.ndarray:
        """Exact Gaussian average of the mapping: E[(m + s z)^3] = m^3 + 3 m s^2."""
        mu = check_finite(mu, "mean")
        return self.game_mapping(mu) + 12.0 * self.eps * sigma**2 * mu

    def smoothing_bias(self, mu, sigma: float) -> np.ndarray:
        return self.mixed_mapping(mu, sigma) - self.game_mapping(mu)

    def payoff_oracle(self) -> PayoffOracle:
        return PayoffOracle(self.costs, self.N)

    def to_dict(self) -> dict:
        out = self.base.to_dict()
        out["kind"] = "smooth_quartic"
        out["eps"] = self.eps
        return out


def cost(game, i: int, x) -> float:
    return game.cost(i, x)


def game_mapping(game, a) -> np.ndarray:
    return game.game_mapping(a)


def assemble_hat_M(game: QuadraticAggregativeGame) -> GameMappingAffine:
    """Jacobian and offset of the quadratic game's mapping.

    Block ``(i, j)`` is ``delta_ij (Q_i + Q_i' + 2 C_i'/N) + 2 C_i / N`` and the
    offset is ``2 c``.
    """
    N, d = game.N, game.d
    blocks = np.zeros((N, N, d, d))
    blocks += (2.0 / N) * game.Cm[:, None, :, :]
    own = game.Qm + np.swapaxes(game.Qm, -1, -2) + (2.0 / N) * np.swapaxes(game.Cm, -1, -2)
    blocks[np.arange(N), np.arange(N)] += own
    matm = blocks.transpose(0, 2, 1, 3).reshape(N * d, N * d)
    return GameMappingAffine(matm=matm, mvec=2.0 * game.cv.reshape(-1))


@dataclass(frozen=True)
class AssumptionReport:
    per_player_convex: bool
    psd_hat_M: bool
    lipschitz_estimate: float
    min_eig_sym_hat_M: float

    @property
    def strongly_monotone(self) -> bool:
        return self.min_eig_sym_hat_M > 1e-10


def check_assumptions(game: QuadraticAggregativeGame, tol: float = 1e-10) -> AssumptionReport:
    """Convexity in own action, PSD-ness of the Jacobian, and a Lipschitz constant.

    Player ``i``'s own-action Hessian is ``2 * sym(Q_i + 2 C_i / N)``.
    """
    N = game.N
    own = game.Qm + (2.0 / N) * game.Cm
    own_sym = 0.5 * (own + np.swapaxes(own, -1, -2))
    convex = bool(np.all(np.linalg.eigvalsh(own_sym) >= -tol))
    matm = assemble_hat_M(game).matm
    min_eig = float(np.linalg.eigvalsh(0.5 * (matm + matm.T)).min())
    return AssumptionReport(
        per_player_convex=convex,
        psd_hat_M=min_eig >= -tol,
        lipschitz_estimate=float(np.linalg.norm(matm, 2)),
        min_eig_sym_hat_M=min_eig,
    )


def random_instance(
    seed,
    N: int,
    d: int = 4,
    upper: float = 6.0,
    c_range=(0.0, 5.0),
    budget_range=(0.5, 10.0),
) -> QuadraticAggregativeGame:
    """Identity ``Q_i``, ``C_i``; uniform price offsets and budgets."""
    lo_c, hi_c = c_range
    lo_b, hi_b = budget_range
    if not (lo_c < hi_c and lo_b < hi_b):
        raise ValueError("ranges must be non-degenerate")
    if lo_b <= 0 or hi_b >= d * upper:
        raise ValueError(f"budget range {budget_range} must lie inside (0, {d * upper})")
    rng = np.random.default_rng(seed)
    cv = rng.uniform(lo_c, hi_c, (N, d))
    budgets = rng.uniform(lo_b, hi_b, N)
    eye = np.broadcast_to(np.eye(d), (N, d, d)).copy()
    sets = ProductSet([BoxBudgetSet(d, float(upper), float(b)) for b in budgets])
    return QuadraticAggregativeGame(Qm=eye, Cm=eye.copy(), cv=cv, sets=sets)


def game_from_dict(doc: dict):
    sets = ProductSet([BoxBudgetSet(int(s["dim"]), float(s["upper"]), float(s["budget"])) for s in doc["sets"]])
    base = QuadraticAggregativeGame(
        Qm=np.array(doc["Qm"], dtype=float),
        Cm=np.array(doc["Cm"], dtype=float),
        cv=np.array(doc["cv"], dtype=float),
        sets=sets,
        equilibria=[np.array(e, dtype=float) for e in doc.get("equilibria", [])],
    )
    if (base.N, base.d) != (doc.get("N", base.N), doc.get("d", base.d)):
        raise ValueError("N/d fields disagree with matrix shapes")
    kind = doc.get("kind", "quadratic_aggregative")
    if kind == "smooth_quartic":
        return SmoothTestGame(base, eps=float(doc["eps"]))
    if kind != "quadratic_aggregative":
        raise ValueError(f"unknown game kind {kind!r}")
    return base


def save_game(game, path) -> None:
    Path(path).write_text(json.dumps(game.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_game(path):
    return game_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
