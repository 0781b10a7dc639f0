"""Optimal policies for MDPs whose transitions are observed phase by phase.

For each epoch ``t`` and origin state ``i`` the choice of acceptance matrix
``P`` is rewritten in the variables

    X(j, k) = prod_{l<k} (1 - q(a_l)) * P(j, k)

in which both the expected stage reward and the next-state distribution
are linear. The per-state problem then becomes a small LP whose vertex
solution maps back to a 0/1 acceptance rule. Two independent oracles
(an optimal-stopping recursion over phases and exhaustive enumeration of
deterministic rules) are provided for cross-checking.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .lp import CanonicalLp, LpError, LpResult, solve_lp
from .model import ModelSpec, SequentialPolicy, ValueTable, check_model
from .standard import q_factors

Z_TOL = 1e-9
TIE_TOL = 1e-12  # relative; equal continuations accept despite rounding
BRUTE_FORCE_MAX_BITS = 20


@dataclass(frozen=True, eq=False)
class PhaseLp:
    """The LP for one (epoch, state) pair.

    Variables are ``X`` flattened phase-major: index ``k * n + j``.
    """

    H: np.ndarray
    G: np.ndarray
    lp: CanonicalLp

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.H.shape[1]

    def unflatten(self, x) -> np.ndarray:
        return np.asarray(x, dtype=float).reshape(self.m, self.n).T


@dataclass(frozen=True, eq=False)
class XSolution:
    X: np.ndarray
    z: np.ndarray
    objective: float


def reach_from_x(X, G_slice) -> np.ndarray:
    """``z(k) = 1 - sum_{l<k} sum_s G(s, l) X(s, l)``, with ``z(0) = 1``."""
    accepted = np.einsum("sl,sl->l", np.asarray(G_slice, float), np.asarray(X, float))
    z = np.ones(accepted.size)
    z[1:] -= np.cumsum(accepted[:-1])
    return z


def build_H(spec: ModelSpec, t: int, i: int, V_next) -> np.ndarray:
    """Objective coefficients ``H(j, k) = (R[t, i, k] + V_next[j]) * G[t, i, j, k]``."""
    V_next = np.asarray(V_next, dtype=float)
    if V_next.shape != (spec.n,):
        raise ValueError(f"V_next has shape {V_next.shape}, expected ({spec.n},)")
    G = spec.kernel(t)[i]
    return (spec.stage_rewards[t, i][None, :] + V_next[:, None]) * G


def build_lp(H, G_slice) -> PhaseLp:
    """Encode the per-state program in canonical form.

    For phases ``k < m-1``: ``X(j,k) + sum_{l<k} sum_s G(s,l) X(s,l) <= 1``
    (together with ``X >= 0``); for the last phase the same row holds with
    equality.
    """
    H = np.asarray(H, dtype=float)
    G = np.asarray(G_slice, dtype=float)
    if H.ndim != 2 or H.shape != G.shape:
        raise ValueError(f"H {H.shape} and G {G.shape} must both be (n, m)")
    n, m = H.shape
    d = n * m
    # coupling[k] holds the coefficients of sum_{l<k} sum_s G(s,l) X(s,l)
    coupling = np.zeros((m, d))
    flatG = G.T.ravel()
    for k in range(1, m):
        coupling[k, : k * n] = flatG[: k * n]
    rows = np.repeat(coupling, n, axis=0)
    rows[np.arange(d), np.arange(d)] += 1.0
    split = (m - 1) * n
    lp = CanonicalLp(
        c=H.T.ravel(),
        A=rows[:split], b=np.ones(split),
        E=rows[split:], f=np.ones(n),
    )
    return PhaseLp(H=H, G=G, lp=lp)


def x_from_p(P_slice, G_slice) -> np.ndarray:
    """Map an acceptance matrix to the linearizing ``X`` variables."""
    P = np.asarray(P_slice, dtype=float)
    G = np.asarray(G_slice, dtype=float)
    if P.shape != G.shape or P.ndim != 2:
        raise ValueError(f"P {P.shape} and G {G.shape} must both be (n, m)")
    m = P.shape[1]
    X = np.empty_like(P)
    z = 1.0
    for k in range(m):
        X[:, k] = z * P[:, k]
        if k < m - 1:
            z *= max(0.0, 1.0 - G[:, k] @ P[:, k])
    return X


def recover_policy(X, G_slice, tol: float = Z_TOL) -> np.ndarray:
    """Invert :func:`x_from_p`; unreachable phases (``z <= tol``) accept."""
    X = np.asarray(X, dtype=float)
    z = reach_from_x(X, G_slice)
    P = np.ones_like(X)
    live = z > tol
    P[:, live] = X[:, live] / z[live]
    P = np.clip(P, 0.0, 1.0)
    P[:, -1] = 1.0
    return P


def solve_phase_lp(H, G_slice) -> tuple[XSolution, LpResult]:
    """Solve the per-state LP, skipping destinations no action can reach.

    Destinations with ``G(j, :) == 0`` carry zero objective weight and do
    not enter any coupling term, so they are fixed at ``X = 0`` (``X = z``
    in the last phase) instead of being handed to the simplex.
    """
    H = np.asarray(H, dtype=float)
    G = np.asarray(G_slice, dtype=float)
    n, m = H.shape
    support = np.flatnonzero(np.any(G > 0.0, axis=1))
    phase = build_lp(H[support], G[support])
    res = solve_lp(phase.lp)
    if not res.optimal:
        raise LpError(f"per-state LP reported {res.status.value}; these programs are always "
                      "feasible and bounded")
    X = np.zeros((n, m))
    X[support] = phase.unflatten(res.x)
    z = reach_from_x(X, G)
    X[:, -1] = np.where(np.isin(np.arange(n), support), X[:, -1], z[-1])
    return XSolution(X=X, z=z, objective=res.objective), res


@dataclass
class SequentialSolution:
    policy: SequentialPolicy
    values: ValueTable
    iterations: np.ndarray  # (N-1, n) simplex pivots per LP
    z: np.ndarray  # (N-1, n, m)
    seconds: float = 0.0

    def report(self) -> dict:
        return {
            "values": self.values.V.tolist(),
            "lp_iterations": self.iterations.tolist(),
            "total_lp_iterations": int(self.iterations.sum()),
            "wall_clock_seconds": self.seconds,
        }


def solve_sequential(spec: ModelSpec, n_jobs: int | None = 1) -> SequentialSolution:
    """Backward induction with one LP per (epoch, state); returns diagnostics too."""
    spec = check_model(spec)
    N, n, m = spec.N, spec.n, spec.m
    start = time.perf_counter()
    V = np.empty((N, n))
    V[N - 1] = spec.terminal_rewards
    P = np.empty((N - 1, n, n, m))
    iterations = np.zeros((N - 1, n), dtype=int)
    Z = np.empty((N - 1, n, m))

    def solve_state(t, i):
        G = spec.kernel(t)[i]
        if m == 1:
            # nothing to choose; match the standard recursion bit for bit
            value = q_factors(spec, t, V[t + 1])[i, 0]
            return XSolution(np.ones((n, 1)), np.ones(1), float(value)), 0, np.ones((n, 1))
        sol, res = solve_phase_lp(build_H(spec, t, i, V[t + 1]), G)
        return sol, res.iterations, recover_policy(sol.X, G)

    pool = ThreadPoolExecutor(n_jobs) if n_jobs and n_jobs > 1 else None
    try:
        for t in range(N - 2, -1, -1):
            if pool is None:
                results = [solve_state(t, i) for i in range(n)]
            else:
                results = list(pool.map(lambda i: solve_state(t, i), range(n)))
            for i, (sol, iters, Pi) in enumerate(results):
                V[t, i] = sol.objective
                P[t, i] = Pi
                iterations[t, i] = iters
                Z[t, i] = sol.z
    finally:
        if pool is not None:
            pool.shutdown()
    return SequentialSolution(
        policy=SequentialPolicy(P), values=ValueTable(V), iterations=iterations, z=Z,
        seconds=time.perf_counter() - start,
    )


def backward_induction_sequential(spec: ModelSpec, n_jobs: int | None = 1
                                  ) -> tuple[SequentialPolicy, ValueTable]:
    sol = solve_sequential(spec, n_jobs=n_jobs)
    return sol.policy, sol.values


# --------------------------------------------------------------------------
# oracles
# --------------------------------------------------------------------------

def phase_recursion_value(spec: ModelSpec, t: int, i: int, V_next):
    """Optimal-stopping recursion over phases.

    ``W[k]`` is the value of being at phase ``k``; a candidate ``j`` is
    accepted iff its continuation ``R[t,i,k] + V_next[j]`` is at least
    ``W[k+1]`` (up to rounding). Returns ``(W[0], P)``.
    """
    V_next = np.asarray(V_next, dtype=float)
    G = spec.kernel(t)[i]
    payoff = spec.stage_rewards[t, i][None, :] + V_next[:, None]
    m = spec.m
    P = np.ones((spec.n, m))
    W = G[:, m - 1] @ payoff[:, m - 1]
    for k in range(m - 2, -1, -1):
        accept = payoff[:, k] >= W - TIE_TOL * max(1.0, abs(W))
        P[:, k] = accept
        W = G[:, k] @ np.where(accept, payoff[:, k], W)
    return float(W), P


def brute_force_phase_value(spec: ModelSpec, t: int, i: int, V_next,
                            max_bits: int = BRUTE_FORCE_MAX_BITS) -> float:
    """Best value over every deterministic acceptance matrix."""
    n, m = spec.n, spec.m
    bits = n * (m - 1)
    if bits > max_bits:
        raise ValueError(f"brute force over 2**{bits} rules is too large (limit 2**{max_bits})")
    H = build_H(spec, t, i, V_next)
    G = spec.kernel(t)[i]
    best = -np.inf
    chunk = 1 << min(bits, 14)
    codes = np.arange(1 << bits)
    for lo in range(0, codes.size, chunk):
        c = codes[lo:lo + chunk]
        free = ((c[:, None] >> np.arange(bits)) & 1).astype(float)
        P = np.ones((c.size, n, m))
        P[:, :, : m - 1] = free.reshape(c.size, m - 1, n).transpose(0, 2, 1)
        # batched x_from_p
        z = np.ones(c.size)
        value = np.zeros(c.size)
        for k in range(m):
            Xk = z[:, None] * P[:, :, k]
            value += Xk @ H[:, k]
            z = z * (1.0 - P[:, :, k] @ G[:, k])
        best = max(best, float(value.max()))
    return best

