"""scikit-learn style front ends for the two solvers.

``fit`` takes a :class:`~seqmdp.model.ModelSpec` (or its JSON dict) in place
of a data matrix; fitted state lives in trailing-underscore attributes.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .model import (
    ModelSpec,
    check_model,
    evaluate_policy_exact,
    evaluate_standard_exact,
)
from .sequential import solve_sequential
from .standard import backward_induction_standard


def _check_fitted_model(est, model) -> ModelSpec:
    model = check_model(model)
    if (model.n, model.m, model.N) != (est.n_states_, est.n_actions_, est.horizon_):
        raise ValueError(
            f"model has (n, m, N) = {(model.n, model.m, model.N)}, solver was fitted on "
            f"{(est.n_states_, est.n_actions_, est.horizon_)}")
    return model


class StandardMDPSolver(BaseEstimator):
    """Backward induction for the ordinary MDP (observations ignored)."""

    def fit(self, model, y=None):
        model = check_model(model)
        self.policy_, self.values_ = backward_induction_standard(model)
        self.value_ = self.values_.value(model.x1)
        self.n_states_, self.n_actions_, self.horizon_ = model.n, model.m, model.N
        return self

    def predict(self, states, epoch: int = 0) -> np.ndarray:
        """Optimal (0-based) action for each state at ``epoch``."""
        check_is_fitted(self, "policy_")
        states = check_array(np.atleast_1d(states), ensure_2d=False, dtype=np.int64)
        return self.policy_.p[epoch, states].argmax(axis=-1)

    def score(self, model, y=None) -> float:
        """Exact expected total reward of the fitted policy on ``model``."""
        check_is_fitted(self, "policy_")
        return evaluate_standard_exact(_check_fitted_model(self, model), self.policy_).value


class SequentialMDPSolver(BaseEstimator):
    """Backward induction with per-state LPs for sequentially observed MDPs.

    Parameters
    ----------
    n_jobs : int or None
        Threads used for the independent per-state LPs within an epoch.
    """

    def __init__(self, n_jobs=None):
        self.n_jobs = n_jobs

    def fit(self, model, y=None):
        model = check_model(model)
        sol = solve_sequential(model, n_jobs=self.n_jobs)
        self.policy_, self.values_ = sol.policy, sol.values
        self.value_ = self.values_.value(model.x1)
        self.lp_iterations_ = sol.iterations
        self.reach_ = sol.z
        self.report_ = sol.report()
        self.n_states_, self.n_actions_, self.horizon_ = model.n, model.m, model.N
        return self

    def predict_proba(self, observations) -> np.ndarray:
        """Acceptance probability for rows ``(epoch, state, phase, candidate)``, 0-based."""
        check_is_fitted(self, "policy_")
        obs = check_array(observations, dtype=np.int64)
        if obs.shape[1] != 4:
            raise ValueError("observations need 4 columns: epoch, state, phase, candidate")
        t, i, k, j = obs.T
        return self.policy_.P[t, i, j, k]

    def predict(self, observations) -> np.ndarray:
        """Accept (1) or reject (0) each observed candidate transition."""
        return (self.predict_proba(observations) >= 0.5).astype(int)

    def score(self, model, y=None) -> float:
        check_is_fitted(self, "policy_")
        return evaluate_policy_exact(_check_fitted_model(self, model), self.policy_).value
