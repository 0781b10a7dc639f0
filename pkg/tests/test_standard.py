import numpy as np
import pytest

from oracles import random_spec
from seqmdp import (
    ModelSpec,
    backward_induction_sequential,
    backward_induction_standard,
    evaluate_standard_exact,
)


def test_single_state_max():
    spec = ModelSpec(G=np.ones((1, 1, 2)), R=[[[3.0, 7.0]]], rN=[0.0], x1=[1.0])
    policy, values = backward_induction_standard(spec)
    assert values.V[0, 0] == 7.0
    np.testing.assert_array_equal(policy.p[0, 0], [0, 1])


def test_ties_pick_lowest_action(rng):
    spec = random_spec(rng, 3, 4, 5)
    spec = ModelSpec(G=spec.G, R=np.repeat(spec.R[..., :1], 4, axis=2), rN=spec.rN, x1=spec.x1)
    G = spec.G.copy()
    G[:] = G[:, :, :1]
    spec = ModelSpec(G=G, R=spec.R, rN=spec.rN, x1=spec.x1)
    policy, values = backward_induction_standard(spec)
    assert np.all(policy.p[..., 0] == 1)
    # telescoping: V[t] = R[t, :, 0] + G V[t+1]
    V = spec.rN
    for t in range(3, -1, -1):
        V = spec.R[t, :, 0] + G[:, :, 0] @ V
        np.testing.assert_allclose(values.V[t], V, atol=1e-10)


def test_worked_standard_value(worked):
    _, values = backward_induction_standard(worked)
    assert values.V[0, 0] == 5.0
    assert values.value(worked.x1) == 5.0


def test_terminal_row_is_exact(rng):
    spec = random_spec(rng, 4, 3, 4)
    _, values = backward_induction_standard(spec)
    np.testing.assert_array_equal(values.V[-1], spec.rN)


def test_reward_shift_monotonicity(rng):
    spec = random_spec(rng, 4, 3, 6)
    _, base = backward_induction_standard(spec)
    c, stage = 3.25, 3
    R = spec.R.copy()
    R[stage] += c
    _, shifted = backward_induction_standard(
        ModelSpec(G=spec.G, R=R, rN=spec.rN, x1=spec.x1))
    np.testing.assert_allclose(shifted.V[: stage + 1] - base.V[: stage + 1], c, atol=1e-10)
    np.testing.assert_allclose(shifted.V[stage + 1:], base.V[stage + 1:], atol=1e-12)


def test_policy_evaluation_consistency(rng):
    for _ in range(20):
        spec = random_spec(rng, 4, 3, 5, time_varying=True)
        policy, values = backward_induction_standard(spec)
        assert evaluate_standard_exact(spec, policy).value == pytest.approx(
            values.value(spec.x1), abs=1e-10)


def test_dominated_by_sequential(rng):
    for _ in range(20):
        spec = random_spec(rng, 3, 3, 4)
        _, std = backward_induction_standard(spec)
        _, seq = backward_induction_sequential(spec)
        assert seq.value(spec.x1) >= std.value(spec.x1) - 1e-9


def test_discount_applied(rng):
    spec = random_spec(rng, 3, 2, 4)
    disc = ModelSpec(G=spec.G, R=spec.R, rN=spec.rN, x1=spec.x1, gamma=0.9)
    _, values = backward_induction_standard(disc)
    V = 0.9 ** 3 * spec.rN
    for t in range(2, -1, -1):
        V = np.max(0.9 ** t * spec.R[t] + np.einsum("ijk,j->ik", spec.G, V), axis=1)
    np.testing.assert_allclose(values.V[0], V, atol=1e-10)
