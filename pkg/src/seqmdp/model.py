"""Domain types and probability kinematics for sequentially observed MDPs.

Conventions
-----------
All arrays are 0-based. Shapes, with ``n`` states, ``m`` actions and ``N``
reward stages (``N - 1`` decision epochs):

* ``G``  : ``(n, n, m)`` time-invariant or ``(N-1, n, n, m)``, indexed
  ``[t, i, j, k]`` = Prob(next state ``j`` | state ``i``, action ``k``).
* ``R``  : ``(N-1, n, m)`` stage rewards.
* ``rN`` : ``(n,)`` terminal rewards.
* ``x1`` : ``(n,)`` initial distribution.

A *slice* is the ``(n, m)`` block ``G[t, i]`` (or ``P[t, i]``) for one
epoch and origin state, indexed ``[j, k]``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping

import numpy as np

STRICT_TOL = 1e-12
NORMALIZE_TOL = 1e-9


class InvalidModelError(ValueError):
    """Raised when a model or policy violates its invariants."""


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """A finite-horizon sequential MDP instance.

    Construction only checks shapes; use :func:`validate_model` for a full
    report or :func:`check_model` to normalize and reject bad inputs.
    ``gamma < 1`` is applied by rescaling rewards, see
    :attr:`stage_rewards` and :attr:`terminal_rewards`.
    """

    G: np.ndarray
    R: np.ndarray
    rN: np.ndarray
    x1: np.ndarray
    gamma: float = 1.0
    meta: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        G = _frozen(self.G)
        R = _frozen(self.R)
        rN = _frozen(self.rN)
        x1 = _frozen(self.x1)
        if G.ndim not in (3, 4):
            raise InvalidModelError(f"G must be 3-d or 4-d, got {G.ndim}-d")
        if R.ndim != 3:
            raise InvalidModelError(f"R must be 3-d [t][i][k], got {R.ndim}-d")
        n, m = R.shape[1], R.shape[2]
        N = R.shape[0] + 1
        if n < 1 or m < 1:
            raise InvalidModelError("need at least one state and one action")
        if N < 2:
            raise InvalidModelError("horizon N must be at least 2")
        expected = (n, n, m) if G.ndim == 3 else (N - 1, n, n, m)
        if G.shape != expected:
            raise InvalidModelError(f"G has shape {G.shape}, expected {expected}")
        if rN.shape != (n,):
            raise InvalidModelError(f"rN has shape {rN.shape}, expected ({n},)")
        if x1.shape != (n,):
            raise InvalidModelError(f"x1 has shape {x1.shape}, expected ({n},)")
        gamma = float(self.gamma)
        if not 0.0 < gamma <= 1.0:
            raise InvalidModelError(f"gamma must lie in (0, 1], got {gamma}")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "R", R)
        object.__setattr__(self, "rN", rN)
        object.__setattr__(self, "x1", x1)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "meta", dict(self.meta))

    @property
    def n(self) -> int:
        return self.R.shape[1]

    @property
    def m(self) -> int:
        return self.R.shape[2]

    @property
    def N(self) -> int:
        return self.R.shape[0] + 1

    @property
    def time_invariant(self) -> bool:
        return self.G.ndim == 3

    def kernel(self, t: int) -> np.ndarray:
        """``(n, n, m)`` kernel for epoch ``t`` (0-based)."""
        if not 0 <= t < self.N - 1:
            raise IndexError(f"epoch {t} outside 0..{self.N - 2}")
        return self.G if self.time_invariant else self.G[t]

    @cached_property
    def stage_rewards(self) -> np.ndarray:
        """Stage rewards with the discount folded in: ``gamma**t * R[t]``."""
        if self.gamma == 1.0:
            return self.R
        scale = self.gamma ** np.arange(self.N - 1)
        return _frozen(self.R * scale[:, None, None])

    @cached_property
    def terminal_rewards(self) -> np.ndarray:
        if self.gamma == 1.0:
            return self.rN
        return _frozen(self.rN * self.gamma ** (self.N - 1))

    def to_dict(self) -> dict:
        d = {
            "n": self.n,
            "m": self.m,
            "N": self.N,
            "gamma": self.gamma,
            "G": self.G.tolist(),
            "R": self.R.tolist(),
            "rN": self.rN.tolist(),
            "x1": self.x1.tolist(),
        }
        d.update(self.meta)
        return d

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "ModelSpec":
        try:
            spec = cls(
                G=d["G"], R=d["R"], rN=d["rN"], x1=d["x1"], gamma=d.get("gamma", 1.0),
                meta={k: v for k, v in d.items() if k not in _MODEL_KEYS},
            )
        except KeyError as exc:
            raise InvalidModelError(f"model is missing key {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, InvalidModelError):
                raise
            raise InvalidModelError(f"malformed model arrays: {exc}") from None
        for key, value in (("n", spec.n), ("m", spec.m), ("N", spec.N)):
            if key in d and int(d[key]) != value:
                raise InvalidModelError(f"declared {key}={d[key]} but arrays imply {value}")
        return spec


_MODEL_KEYS = frozenset({"n", "m", "N", "gamma", "G", "R", "rN", "x1"})


@dataclass(frozen=True, eq=False)
class SequentialPolicy:
    """Acceptance probabilities ``P[t, i, j, k]``; last phase always accepts."""

    P: np.ndarray

    def __post_init__(self):
        P = _frozen(self.P)
        if P.ndim != 4 or P.shape[1] != P.shape[2]:
            raise InvalidModelError(f"P must have shape (N-1, n, n, m), got {P.shape}")
        object.__setattr__(self, "P", P)

    def to_dict(self) -> dict:
        return {"kind": "sequential", "P": self.P.tolist()}


@dataclass(frozen=True, eq=False)
class StandardPolicy:
    """Action distributions ``p[t, i, k]`` of an ordinary Markov policy."""

    p: np.ndarray

    def __post_init__(self):
        p = _frozen(self.p)
        if p.ndim != 3:
            raise InvalidModelError(f"p must have shape (N-1, n, m), got {p.shape}")
        object.__setattr__(self, "p", p)

    @classmethod
    def deterministic(cls, actions, m: int) -> "StandardPolicy":
        actions = np.asarray(actions, dtype=int)
        p = np.zeros(actions.shape + (m,))
        np.put_along_axis(p, actions[..., None], 1.0, axis=-1)
        return cls(p)

    def to_dict(self) -> dict:
        return {"kind": "standard", "p": self.p.tolist()}


@dataclass(frozen=True, eq=False)
class ValueTable:
    """Optimal value vectors ``V[t]`` for stages ``t = 0..N-1``."""

    V: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "V", _frozen(self.V))

    def value(self, x1) -> float:
        return float(np.dot(x1, self.V[0]))

    def to_dict(self) -> dict:
        return {"V": self.V.tolist()}


def policy_from_dict(d: Mapping[str, Any]) -> SequentialPolicy | StandardPolicy:
    kind = d.get("kind")
    try:
        if kind == "sequential":
            return SequentialPolicy(d["P"])
        if kind == "standard":
            return StandardPolicy(d["p"])
    except KeyError as exc:
        raise InvalidModelError(f"policy is missing key {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InvalidModelError):
            raise
        raise InvalidModelError(f"malformed policy arrays: {exc}") from None
    raise InvalidModelError(f"unknown policy kind {kind!r}")


# --------------------------------------------------------------------------
# validation
# --------------------------------------------------------------------------

@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok

    def __str__(self) -> str:
        if self.ok:
            return "pass"
        return "\n".join(self.violations)


def validate_model(spec: ModelSpec, tol: float = STRICT_TOL) -> ValidationReport:
    """List every violated invariant of ``spec``; indices are reported 1-based."""
    report = ValidationReport()
    G = spec.G if not spec.time_invariant else spec.G[None]
    if np.any(~np.isfinite(G)) or np.any(G < 0):
        for t, i, j, k in zip(*np.nonzero(~(G >= 0))):
            report.violations.append(
                f"G[t={t + 1}][i={i + 1}][j={j + 1}][k={k + 1}] = {G[t, i, j, k]} is not a probability")
    sums = G.sum(axis=2)
    for t, i, k in zip(*np.nonzero(~(np.abs(sums - 1.0) <= tol))):
        report.violations.append(
            f"G column (t={t + 1}, i={i + 1}, k={k + 1}) sums to {sums[t, i, k]!r}, not 1")
    x1 = spec.x1
    if np.any(~(x1 >= 0)) or not abs(x1.sum() - 1.0) <= tol:
        report.violations.append(f"initial distribution x1 sums to {x1.sum()!r} or has negative entries")
    for name, arr in (("R", spec.R), ("rN", spec.rN)):
        bad = np.argwhere(~np.isfinite(arr))
        for idx in bad:
            report.violations.append(f"{name}{[int(v) + 1 for v in idx]} is not finite")
    return report


def check_model(spec: ModelSpec | Mapping[str, Any]) -> ModelSpec:
    """Coerce ``spec`` to a valid :class:`ModelSpec`.

    Distributions within 1e-9 of stochastic are renormalized; anything
    further off raises :class:`InvalidModelError`.
    """
    if not isinstance(spec, ModelSpec):
        spec = ModelSpec.from_dict(spec)
    report = validate_model(spec, tol=NORMALIZE_TOL)
    if not report.ok:
        raise InvalidModelError(str(report))
    if validate_model(spec).ok:
        return spec
    G = np.clip(spec.G, 0.0, None)
    G = G / G.sum(axis=-2, keepdims=True)
    x1 = np.clip(spec.x1, 0.0, None)
    x1 = x1 / x1.sum()
    return ModelSpec(G=G, R=spec.R, rN=spec.rN, x1=x1, gamma=spec.gamma, meta=spec.meta)


def check_sequential_policy(spec: ModelSpec, policy: SequentialPolicy) -> SequentialPolicy:
    expected = (spec.N - 1, spec.n, spec.n, spec.m)
    if policy.P.shape != expected:
        raise InvalidModelError(f"policy has shape {policy.P.shape}, model needs {expected}")
    P = policy.P
    if np.any(~(P >= -NORMALIZE_TOL)) or np.any(~(P <= 1 + NORMALIZE_TOL)):
        raise InvalidModelError("acceptance probabilities must lie in [0, 1]")
    if np.any(np.abs(P[..., -1] - 1.0) > NORMALIZE_TOL):
        raise InvalidModelError("last phase must always accept (P[..., m] = 1)")
    return policy


def check_standard_policy(spec: ModelSpec, policy: StandardPolicy) -> StandardPolicy:
    expected = (spec.N - 1, spec.n, spec.m)
    if policy.p.shape != expected:
        raise InvalidModelError(f"policy has shape {policy.p.shape}, model needs {expected}")
    p = policy.p
    if np.any(~(p >= 0)) or np.any(np.abs(p.sum(axis=-1) - 1.0) > NORMALIZE_TOL):
        raise InvalidModelError("standard policy rows must be probability distributions")
    return policy


# --------------------------------------------------------------------------
# kinematics
# --------------------------------------------------------------------------

def _check_slices(G_slice, P_slice):
    G_slice = np.asarray(G_slice, dtype=float)
    P_slice = np.asarray(P_slice, dtype=float)
    if G_slice.ndim != 2 or G_slice.shape != P_slice.shape:
        raise ValueError(
            f"kernel slice {G_slice.shape} and acceptance slice {P_slice.shape} must be equal (n, m)")
    return G_slice, P_slice


def acceptance_rates(G_slice, P_slice) -> np.ndarray:
    """Vector of ``q(a_k)`` for every phase; the last entry is exactly 1."""
    G_slice, P_slice = _check_slices(G_slice, P_slice)
    # a full-acceptance phase can round to 1 + ulp; keep it a probability
    q = np.clip(np.einsum("jk,jk->k", G_slice, P_slice), 0.0, 1.0)
    q[-1] = 1.0
    return q


def q_value(G_slice, P_slice, k: int) -> float:
    """Probability that phase ``k`` accepts, given phases ``< k`` rejected."""
    G_slice, P_slice = _check_slices(G_slice, P_slice)
    m = G_slice.shape[1]
    if not 0 <= k < m:
        raise ValueError(f"phase {k} outside 0..{m - 1}")
    if k == m - 1:
        return 1.0
    return float(G_slice[:, k] @ P_slice[:, k])


def phase_reach(q) -> np.ndarray:
    """Probability of reaching each phase: ``prod_{l<k} (1 - q_l)``."""
    q = np.asarray(q, dtype=float)
    reach = np.ones_like(q)
    reach[1:] = np.cumprod(1.0 - q[:-1])
    return reach


def action_choice_probs(G_slice, P_slice) -> np.ndarray:
    q = acceptance_rates(G_slice, P_slice)
    return phase_reach(q) * q


def transition_column(G_slice, P_slice) -> np.ndarray:
    """Distribution of the next state under the sequential decision rule."""
    G_slice, P_slice = _check_slices(G_slice, P_slice)
    reach = phase_reach(acceptance_rates(G_slice, P_slice))
    return (G_slice * P_slice) @ reach


def propagate(x, M, tol: float = NORMALIZE_TOL) -> np.ndarray:
    """One step of the state density: ``M @ x`` for column-stochastic ``M``."""
    x = np.asarray(x, dtype=float)
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[1] != x.shape[0]:
        raise ValueError(f"incompatible shapes x{x.shape}, M{M.shape}")
    if np.any(x < -tol) or abs(x.sum() - 1.0) > tol:
        raise ValueError("x is not a probability distribution")
    if np.any(M < -tol) or np.any(np.abs(M.sum(axis=0) - 1.0) > tol):
        raise ValueError("M is not column-stochastic")
    return M @ x


@dataclass(frozen=True)
class Evaluation:
    value: float
    densities: np.ndarray  # (N, n)


def evaluate_policy_exact(spec: ModelSpec, policy: SequentialPolicy) -> Evaluation:
    """Expected total reward of ``policy`` by forward density propagation."""
    check_sequential_policy(spec, policy)
    R, rN = spec.stage_rewards, spec.terminal_rewards
    n = spec.n
    x = spec.x1.copy()
    densities = [x]
    total = 0.0
    for t in range(spec.N - 1):
        G = spec.kernel(t)
        M = np.empty((n, n))
        r = np.empty(n)
        for i in range(n):
            r[i] = action_choice_probs(G[i], policy.P[t, i]) @ R[t, i]
            M[:, i] = transition_column(G[i], policy.P[t, i])
        total += x @ r
        x = propagate(x, M)
        densities.append(x)
    total += x @ rN
    return Evaluation(float(total), np.array(densities))


def evaluate_standard_exact(spec: ModelSpec, policy: StandardPolicy) -> Evaluation:
    """Expected total reward of an ordinary Markov policy."""
    check_standard_policy(spec, policy)
    R, rN = spec.stage_rewards, spec.terminal_rewards
    x = spec.x1.copy()
    densities = [x]
    total = 0.0
    for t in range(spec.N - 1):
        p = policy.p[t]
        total += x @ np.einsum("ik,ik->i", p, R[t])
        M = np.einsum("ijk,ik->ji", spec.kernel(t), p)
        x = M @ x
        densities.append(x)
    total += x @ rN
    return Evaluation(float(total), np.array(densities))


def embed_standard(policy: StandardPolicy) -> SequentialPolicy:
    """Sequential policy that ignores observations and takes the same action.

    Phases before the chosen action reject everything, the chosen phase
    accepts everything. Only deterministic policies can be embedded.
    """
    p = policy.p
    is_det = np.all((np.abs(p) <= STRICT_TOL) | (np.abs(p - 1.0) <= STRICT_TOL), axis=-1)
    if not np.all(is_det) or np.any(np.abs(p.sum(axis=-1) - 1.0) > STRICT_TOL):
        raise InvalidModelError("only deterministic standard policies can be embedded")
    T, n, m = p.shape
    chosen = p.argmax(axis=-1)
    accept = (np.arange(m)[None, None, :] >= chosen[..., None]).astype(float)
    P = np.broadcast_to(accept[:, :, None, :], (T, n, n, m))
    return SequentialPolicy(P)


# --------------------------------------------------------------------------
# io
# --------------------------------------------------------------------------

def load_model(path) -> ModelSpec:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidModelError(f"cannot read model {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidModelError("model file must hold a JSON object")
    return check_model(data)


def save_model(spec: ModelSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), sort_keys=True) + "\n")


def load_policy(path) -> SequentialPolicy | StandardPolicy:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InvalidModelError(f"cannot read policy {path}: {exc}") from None
    if not isinstance(data, dict):
        raise InvalidModelError("policy file must hold a JSON object")
    return policy_from_dict(data)


def save_policy(policy: SequentialPolicy | StandardPolicy, path) -> None:
    Path(path).write_text(json.dumps(policy.to_dict(), sort_keys=True) + "\n")
