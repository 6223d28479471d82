"""Ground-truth equilibria through the variational-inequality view of the game.

For convex games the Nash equilibria are exactly the points ``a*`` in ``A``
with ``(M(a*), y - a*) >= 0`` for every feasible ``y``. Here they are computed
with Korpelevich's extragradient method and certified two ways: by the natural
residual and by each player's best-response gap.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ProductSet, check_finite
from .games import QuadraticAggregativeGame, assemble_hat_M, check_assumptions


class OracleError(RuntimeError):
    pass


@dataclass
class VISolution:
    a_star: np.ndarray
    residual: float
    iterations: int
    converged: bool


def vi_residual(a, mapping, sets: ProductSet) -> float:
    """Natural residual ``||a - Proj_A(a - M(a))||``; zero exactly on SOL(A, M)."""
    a = check_finite(a, "point")
    return float(np.linalg.norm(a - sets.project(a - mapping(a))))


def solve_vi_extragradient(
    mapping,
    sets: ProductSet,
    step: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    *,
    lipschitz: float | None = None,
    x0=None,
) -> VISolution:
    """Extragradient iterations until the natural residual drops below ``tol``.

    Either ``step`` or ``lipschitz`` must be given; the default step is
    ``0.9 / lipschitz``. On hitting ``max_iter`` the iterate with the smallest
    residual is returned with ``converged=False``.
    """
    if step is None:
        if lipschitz is None or lipschitz <= 0:
            raise ValueError("need a step size or a positive Lipschitz estimate")
        step = 0.9 / lipschitz
    elif lipschitz is not None and step * lipschitz >= 1.0:
        raise ValueError(f"step {step} must be below 1/L = {1.0 / lipschitz}")

    x = sets.project(np.zeros(sets.size) if x0 is None else check_finite(x0, "x0"))
    best_x, best_r = x, np.inf
    for k in range(max_iter + 1):
        mx = mapping(x)
        r = float(np.linalg.norm(x - sets.project(x - mx)))
        if r < best_r:
            best_x, best_r = x, r
        if r <= tol:
            return VISolution(a_star=x, residual=r, iterations=k, converged=True)
        if k == max_iter:
            break
        y = sets.project(x - step * mx)
        x = sets.project(x - step * mapping(y))
    return VISolution(a_star=best_x, residual=best_r, iterations=max_iter, converged=False)


def solve_vi_multistart(
    mapping,
    sets: ProductSet,
    step: float | None = None,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    *,
    lipschitz: float | None = None,
    n_starts: int = 8,
    seed=0,
    radius: float = 1e-6,
) -> list[VISolution]:
    """Solve from ``n_starts`` random feasible starts; keep one solution per cluster."""
    rng = np.random.default_rng(seed)
    found: list[VISolution] = []
    for x0 in sets.sample_batch(rng, n_starts):
        sol = solve_vi_extragradient(mapping, sets, step, tol, max_iter, lipschitz=lipschitz, x0=x0)
        if not sol.converged:
            continue
        if all(np.linalg.norm(sol.a_star - f.a_star) > radius for f in found):
            found.append(sol)
    return found


def solve_game(
    game: QuadraticAggregativeGame,
    tol: float = 1e-10,
    max_iter: int = 100_000,
    seed=0,
) -> list[VISolution]:
    """All equilibria the oracle can find for a quadratic game.

    A strongly monotone mapping has a unique solution, so one run suffices;
    otherwise eight seeded starts are clustered.
    """
    report = check_assumptions(game)
    if not (report.per_player_convex and report.psd_hat_M):
        raise OracleError("game violates the convexity/monotonicity conditions the oracle relies on")
    mapping = assemble_hat_M(game)
    L = report.lipschitz_estimate
    if report.strongly_monotone:
        sols = [solve_vi_extragradient(mapping, game.sets, tol=tol, max_iter=max_iter, lipschitz=L)]
    else:
        sols = solve_vi_multistart(mapping, game.sets, tol=tol, max_iter=max_iter, lipschitz=L, seed=seed)
    if not sols or not all(s.converged for s in sols):
        best = min((s.residual for s in sols), default=np.inf)
        raise OracleError(f"extragradient did not reach residual {tol} (best {best:.3e})")
    return sols


def _own_lipschitz(game, i: int) -> float:
    own = game.Qm[i] + (2.0 / game.N) * game.Cm[i]
    return float(np.linalg.norm(own + own.T, 2))


def best_response_gap(
    game, a, tol: float = 1e-10, max_iter: int = 100_000, *, lipschitz: float | None = None
) -> float:
    """Largest gain any single player can get by deviating from ``a``.

    Each player's convex best-response problem is solved by projected gradient
    with step ``1/L_i`` started at its current action. That makes the cost
    non-increasing, so the gap is never negative beyond round-off. Games other
    than :class:`QuadraticAggregativeGame` must pass ``lipschitz``, a bound on
    every player's own-gradient Lipschitz constant over the action sets.
    """
    if lipschitz is None and not isinstance(game, QuadraticAggregativeGame):
        raise ValueError("lipschitz is required for non-quadratic games")
    sets = game.sets
    a = check_finite(a, "joint action")
    if sets.distance(a) > 1e-8 * max(1.0, float(np.linalg.norm(a))):
        raise ValueError("best_response_gap needs a feasible joint action")
    gap = -np.inf
    for i in range(game.N):
        L = _own_lipschitz(game, i) if lipschitz is None else lipschitz
        step = 1.0 / L if L > 0 else 1.0
        lo, hi = sets.offsets[i], sets.offsets[i + 1]
        z = a.copy()
        b = a[lo:hi].copy()
        for _ in range(max_iter):
            z[lo:hi] = b
            g = game.game_mapping(z)[lo:hi]
            b_next = sets.project_player(i, b - step * g)
            moved = float(np.linalg.norm(b_next - b))
            b = b_next
            if moved <= tol * step:
                break
        z[lo:hi] = b
        gap = max(gap, game.cost(i, a) - game.cost(i, z))
    return float(gap)


@dataclass(frozen=True)
class PseudoMonotoneReport:
    violations: int
    n_pairs: int


def check_pseudo_monotone_sampled(mapping, sets: ProductSet, n_pairs: int, seed=0, tol: float = 1e-9) -> PseudoMonotoneReport:
    """Count sampled feasible pairs where ``(M(y), x-y) >= 0`` but ``(M(x), x-y) < -tol``.

    Zero violations is necessary for pseudo-monotonicity, not sufficient.
    """
    if n_pairs <= 0:
        return PseudoMonotoneReport(0, 0)
    rng = np.random.default_rng(seed)
    x = sets.sample_batch(rng, n_pairs)
    y = sets.sample_batch(rng, n_pairs)
    diff = x - y
    lhs = np.einsum("nk,nk->n", mapping(y), diff)
    rhs = np.einsum("nk,nk->n", mapping(x), diff)
    return PseudoMonotoneReport(int(np.count_nonzero((lhs >= 0) & (rhs < -tol))), n_pairs)
