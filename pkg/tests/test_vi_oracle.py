import numpy as np
import pytest

from pblearn.core import BoxSet, ProductSet
from pblearn.games import QuadraticAggregativeGame, assemble_hat_M, check_assumptions, random_instance
from pblearn.vi_oracle import (
    best_response_gap,
    check_pseudo_monotone_sampled,
    solve_game,
    solve_vi_extragradient,
    solve_vi_multistart,
    vi_residual,
)


def parabola_game(lower=1.0, upper=6.0):
    sets = ProductSet([BoxSet(1, lower, upper)])
    return QuadraticAggregativeGame(Qm=np.ones((1, 1, 1)), Cm=np.zeros((1, 1, 1)), cv=np.zeros((1, 1)), sets=sets)


def test_single_player_boundary_minimiser():
    g = parabola_game()
    sol = solve_vi_extragradient(assemble_hat_M(g), g.sets, lipschitz=2.0, tol=1e-12)
    assert sol.converged
    assert sol.a_star[0] == pytest.approx(1.0, abs=1e-12)


def test_step_must_respect_lipschitz():
    g = parabola_game()
    with pytest.raises(ValueError):
        solve_vi_extragradient(assemble_hat_M(g), g.sets, step=0.6, lipschitz=2.0)
    with pytest.raises(ValueError):
        solve_vi_extragradient(assemble_hat_M(g), g.sets)


def test_residual_recomputed_after_solve():
    g = random_instance(2, 6)
    mapping = assemble_hat_M(g)
    sol = solve_vi_extragradient(mapping, g.sets, tol=1e-10, lipschitz=check_assumptions(g).lipschitz_estimate)
    assert sol.converged
    assert vi_residual(sol.a_star, mapping, g.sets) <= 1e-10
    assert vi_residual(sol.a_star, mapping, g.sets) == vi_residual(sol.a_star, mapping, g.sets)


def test_two_starts_agree():
    g = random_instance(8, 10)
    mapping = assemble_hat_M(g)
    L = check_assumptions(g).lipschitz_estimate
    rng = np.random.default_rng(0)
    a = solve_vi_extragradient(mapping, g.sets, lipschitz=L, x0=g.sets.sample(rng))
    b = solve_vi_extragradient(mapping, g.sets, lipschitz=L, x0=g.sets.sample(rng))
    assert np.linalg.norm(a.a_star - b.a_star) <= 1e-8


def test_max_iter_reports_unconverged():
    g = random_instance(0, 10)
    sol = solve_vi_extragradient(assemble_hat_M(g), g.sets, lipschitz=4.2, max_iter=3)
    assert not sol.converged and sol.iterations == 3 and sol.residual > 1e-10


def test_interior_residual_is_gradient_norm():
    g = parabola_game(-10.0, 10.0)
    mapping = assemble_hat_M(g)
    # M(a) = 2a; at a=0.3 the unit step stays inside the box
    assert vi_residual(np.array([0.3]), mapping, g.sets) == pytest.approx(0.6)


def test_gap_at_equilibrium_and_away():
    g = random_instance(5, 10)
    a_star = solve_game(g)[0].a_star
    assert 0 <= best_response_gap(g, a_star) + 1e-12 and best_response_gap(g, a_star) <= 1e-6
    far = g.sets.sample(np.random.default_rng(1))
    assert best_response_gap(g, far) > 1e-3


def test_gap_single_player_is_suboptimality():
    g = parabola_game()
    assert best_response_gap(g, np.array([3.0])) == pytest.approx(9.0 - 1.0)


def test_gap_rejects_infeasible_point():
    g = parabola_game()
    with pytest.raises(ValueError):
        best_response_gap(g, np.array([0.0]))


@pytest.mark.parametrize("seed", range(10))
def test_residual_and_gap_certify_same_point(seed):
    g = random_instance(100 + seed, 6)
    sol = solve_game(g, tol=1e-9)[0]
    assert sol.residual <= 1e-9
    assert best_response_gap(g, sol.a_star) <= 100 * 1e-9


def test_multistart_clusters_unique_solution():
    g = random_instance(3, 4)
    sols = solve_vi_multistart(assemble_hat_M(g), g.sets, lipschitz=check_assumptions(g).lipschitz_estimate, n_starts=4)
    assert len(sols) == 1


def test_multistart_finds_a_continuum_sample():
    # M = 0 on a box: every point solves the VI, so distinct starts stay distinct
    sets = ProductSet([BoxSet(2, 0.0, 1.0)])
    sols = solve_vi_multistart(lambda a: np.zeros_like(a), sets, step=0.5, n_starts=8, seed=3)
    assert len(sols) == 8


def test_pseudo_monotone_sampler():
    g = random_instance(0, 10)
    assert check_pseudo_monotone_sampled(assemble_hat_M(g), g.sets, 10_000, seed=0).violations == 0
    box = ProductSet([BoxSet(3, -1.0, 1.0)])
    assert check_pseudo_monotone_sampled(lambda a: -a, box, 10_000, seed=0).violations > 0
    assert check_pseudo_monotone_sampled(lambda a: -a, box, 0).violations == 0
