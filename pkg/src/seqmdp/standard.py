"""Backward induction for the ordinary (non-observing) finite-horizon MDP."""
from __future__ import annotations

import numpy as np

from .model import ModelSpec, StandardPolicy, ValueTable, check_model


def q_factors(spec: ModelSpec, t: int, V_next) -> np.ndarray:
    """``(n, m)`` table of ``R[t, i, k] + sum_j G[t, i, j, k] * V_next[j]``."""
    return spec.stage_rewards[t] + np.einsum("ijk,j->ik", spec.kernel(t), V_next)


def backward_induction_standard(spec: ModelSpec) -> tuple[StandardPolicy, ValueTable]:
    """Optimal deterministic policy and value table.

    Ties between actions go to the lowest action index.
    """
    spec = check_model(spec)
    N, n = spec.N, spec.n
    V = np.empty((N, n))
    V[N - 1] = spec.terminal_rewards
    actions = np.empty((N - 1, n), dtype=int)
    for t in range(N - 2, -1, -1):
        Q = q_factors(spec, t, V[t + 1])
        # np.argmax returns the first maximizer
        actions[t] = np.argmax(Q, axis=1)
        V[t] = Q[np.arange(n), actions[t]]
    return StandardPolicy.deterministic(actions, spec.m), ValueTable(V)
