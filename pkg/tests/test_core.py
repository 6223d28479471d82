import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import brute_force_box_budget
from pblearn.core import (
    BoxBudgetSet,
    BoxSet,
    NonFiniteError,
    ProductSet,
    project_box_budget,
    project_joint,
    split,
    stack,
)


def test_feasible_point_is_unchanged():
    np.testing.assert_allclose(project_box_budget([1.0, 2.0], BoxBudgetSet(2, 6.0, 3.0)), [1.0, 2.0])


def test_symmetric_point_splits_budget_evenly():
    np.testing.assert_allclose(project_box_budget([10.0, 10.0], BoxBudgetSet(2, 6.0, 6.0)), [3.0, 3.0])


@pytest.mark.parametrize("budget", [0.0, 24.0])
def test_extreme_budgets(budget):
    box = BoxBudgetSet(4, 6.0, budget)
    out = project_box_budget([3.0, -1.0, 9.0, 0.5], box)
    np.testing.assert_allclose(out, np.full(4, budget / 4))


def test_empty_set_rejected():
    with pytest.raises(ValueError):
        BoxBudgetSet(2, 1.0, 3.0)
    with pytest.raises(ValueError):
        BoxBudgetSet(2, 1.0, -0.1)


def test_nan_rejected():
    with pytest.raises(NonFiniteError):
        project_box_budget([np.nan, 1.0], BoxBudgetSet(2, 6.0, 3.0))
    with pytest.raises(NonFiniteError):
        project_box_budget([np.inf, 1.0], BoxBudgetSet(2, 6.0, 3.0))


def test_matches_brute_force_oracle():
    rng = np.random.default_rng(7)
    for _ in range(500):
        d = int(rng.integers(1, 9))
        upper = rng.uniform(0.5, 8.0)
        box = BoxBudgetSet(d, upper, rng.uniform(0.0, d * upper))
        p = rng.uniform(-5, 15, d)
        out = project_box_budget(p, box)
        ref = brute_force_box_budget(p, box.upper, box.budget)
        assert np.linalg.norm(out - ref) <= 1e-8
        assert np.all(out >= 0) and np.all(out <= upper)
        assert abs(out.sum() - box.budget) <= 1e-12 * max(1.0, box.budget)


boxes = st.integers(1, 8).flatmap(
    lambda d: st.tuples(
        st.just(d),
        st.floats(0.1, 10.0),
        st.floats(0.0, 1.0),
        st.lists(st.floats(-20, 20), min_size=d, max_size=d),
        st.lists(st.floats(-20, 20), min_size=d, max_size=d),
    )
)


def _box(d, upper, frac):
    return BoxBudgetSet(d, upper, frac * d * upper)


@settings(max_examples=300, deadline=None)
@given(boxes)
def test_idempotent(args):
    d, upper, frac, p, _ = args
    box = _box(d, upper, frac)
    once = project_box_budget(p, box)
    np.testing.assert_allclose(project_box_budget(once, box), once, atol=1e-12, rtol=0)


@settings(max_examples=300, deadline=None)
@given(boxes)
def test_non_expansive(args):
    d, upper, frac, p, q = args
    box = _box(d, upper, frac)
    p, q = np.array(p), np.array(q)
    gap = np.linalg.norm(project_box_budget(p, box) - project_box_budget(q, box))
    assert gap <= np.linalg.norm(p - q) + 1e-12


@settings(max_examples=300, deadline=None)
@given(boxes, st.integers(0, 2**32 - 1))
def test_variational_inequality(args, seed):
    d, upper, frac, p, _ = args
    box = _box(d, upper, frac)
    p = np.array(p)
    proj = project_box_budget(p, box)
    y = box.sample(np.random.default_rng(seed))
    assert np.dot(p - proj, y - proj) <= 1e-10 * max(1.0, np.linalg.norm(p - y))


def test_split_stack_roundtrip():
    x = np.arange(12.0)
    blocks = split(x, 3, 4)
    assert blocks.shape == (3, 4)
    np.testing.assert_array_equal(blocks[1], [4, 5, 6, 7])
    np.testing.assert_array_equal(stack(blocks), x)
    with pytest.raises(ValueError):
        split(x, 5, 2)


def test_project_joint_identity_on_feasible():
    sets = ProductSet([BoxBudgetSet(2, 6.0, 3.0), BoxBudgetSet(2, 6.0, 4.0)])
    p = np.array([1.0, 2.0, 2.0, 2.0])
    np.testing.assert_allclose(project_joint(p, sets), p)


def test_project_joint_is_per_factor():
    a, b = BoxBudgetSet(2, 6.0, 3.0), BoxBudgetSet(2, 6.0, 8.0)
    sets = ProductSet([a, b])
    p = np.array([3.0, 3.0, 1.0, 1.0])
    out = project_joint(p, sets)
    np.testing.assert_allclose(out[:2], project_box_budget(p[:2], a))
    np.testing.assert_allclose(out[2:], project_box_budget(p[2:], b))


def test_project_joint_random_matches_playerwise():
    rng = np.random.default_rng(3)
    factors = [BoxBudgetSet(4, 6.0, b) for b in rng.uniform(0.5, 10, 7)]
    sets = ProductSet(factors)
    for _ in range(50):
        p = rng.uniform(-5, 15, 28)
        expect = np.concatenate([project_box_budget(p[4 * i:4 * i + 4], f) for i, f in enumerate(factors)])
        np.testing.assert_allclose(project_joint(p, sets), expect, atol=1e-14)
        np.testing.assert_allclose(project_joint(project_joint(p, sets), sets), project_joint(p, sets), atol=1e-12)


def test_mixed_factor_types():
    sets = ProductSet([BoxSet(1, 1.0, 6.0), BoxBudgetSet(2, 6.0, 2.0)])
    out = sets.project(np.array([0.0, 5.0, 5.0]))
    np.testing.assert_allclose(out, [1.0, 1.0, 1.0])
    assert sets.sample_batch(np.random.default_rng(0), 5).shape == (5, 3)


def test_project_joint_dimension_mismatch():
    sets = ProductSet([BoxBudgetSet(2, 6.0, 3.0)])
    with pytest.raises(ValueError):
        project_joint(np.zeros(3), sets)


def test_sample_batch_feasible():
    sets = ProductSet([BoxBudgetSet(4, 6.0, b) for b in (0.5, 5.0, 23.0)])
    pts = sets.sample_batch(np.random.default_rng(1), 200)
    assert max(sets.distance(p) for p in pts) <= 1e-12
