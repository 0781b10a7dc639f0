import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from oracles import random_spec
from seqmdp import SequentialMDPSolver, StandardMDPSolver


def test_params_roundtrip():
    est = SequentialMDPSolver(n_jobs=3)
    assert est.get_params() == {"n_jobs": 3}
    assert clone(est).n_jobs == 3
    assert StandardMDPSolver().get_params() == {}


def test_fit_worked(worked):
    seq = SequentialMDPSolver().fit(worked)
    std = StandardMDPSolver().fit(worked.to_dict())
    assert seq.value_ == pytest.approx(7.5, abs=1e-10)
    assert std.value_ == 5.0
    assert seq.score(worked) == pytest.approx(7.5, abs=1e-10)
    assert std.score(worked) == 5.0
    # at epoch 1 in state 1: reject a move to state 1 at phase 1, accept state 2
    obs = [[0, 0, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]
    np.testing.assert_array_equal(seq.predict(obs), [0, 1, 1])
    np.testing.assert_array_equal(std.predict([0, 1]), [0, 0])


def test_not_fitted(worked):
    with pytest.raises(NotFittedError):
        SequentialMDPSolver().predict([[0, 0, 0, 0]])
    with pytest.raises(NotFittedError):
        StandardMDPSolver().score(worked)


def test_score_requires_matching_model(worked, rng):
    est = SequentialMDPSolver().fit(worked)
    with pytest.raises(ValueError):
        est.score(random_spec(rng, 3, 2, 2))


def test_bad_observations(worked):
    est = SequentialMDPSolver().fit(worked)
    with pytest.raises(ValueError):
        est.predict([[0, 0, 0]])


def test_report(rng):
    spec = random_spec(rng, 3, 3, 4)
    est = SequentialMDPSolver(n_jobs=2).fit(spec)
    assert est.lp_iterations_.shape == (3, 3)
    assert est.report_["total_lp_iterations"] == int(est.lp_iterations_.sum())
    assert est.value_ >= StandardMDPSolver().fit(spec).value_ - 1e-9
