"""Monte Carlo execution of the phase-by-phase observation protocol.

Each rollout owns an independent PCG64 stream seeded from
``SeedSequence([seed, rollout_index])``, so any rollout can be reproduced
in isolation and results do not depend on how rollouts are scheduled.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .model import ModelSpec, SequentialPolicy, check_model, check_sequential_policy


def make_rng(seed: int, index: int = 0) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), int(index)])))


@dataclass(frozen=True)
class EpochRecord:
    state: int
    observed: tuple[int, ...]  # candidate next states seen at phases before acceptance
    phase: int
    action: int
    reward: float
    next_state: int


@dataclass
class Trajectory:
    epochs: list[EpochRecord] = field(default_factory=list)
    terminal_reward: float = 0.0

    @property
    def total_reward(self) -> float:
        return math.fsum([e.reward for e in self.epochs] + [self.terminal_reward])

    def to_dict(self) -> dict:
        """1-based states, phases and actions, as in every file format."""
        return {
            "epochs": [
                {
                    "t": t + 1,
                    "state": e.state + 1,
                    "observed": [j + 1 for j in e.observed],
                    "phase": e.phase + 1,
                    "action": e.action + 1,
                    "reward": e.reward,
                    "next_state": e.next_state + 1,
                }
                for t, e in enumerate(self.epochs)
            ],
            "terminal_reward": self.terminal_reward,
            "total_reward": self.total_reward,
        }


class _Sampler:
    """Cumulative-sum inversion tables built once per (spec, policy)."""

    def __init__(self, spec: ModelSpec):
        # cdf[..., i, k, :] runs over destination states in index order
        self.cdf = np.cumsum(np.moveaxis(spec.G, -2, -1), axis=-1)
        self.time_invariant = spec.time_invariant
        self.x1_cdf = np.cumsum(spec.x1)

    @staticmethod
    def draw(cdf, u) -> int:
        j = int(np.searchsorted(cdf, u * cdf[-1], side="right"))
        return min(j, cdf.size - 1)

    def next_state(self, t, i, k, u) -> int:
        cdf = self.cdf[i, k] if self.time_invariant else self.cdf[t, i, k]
        return self.draw(cdf, u)


def _rollout(spec, P, sampler, rng, start_state=None) -> Trajectory:
    R, rN = spec.stage_rewards, spec.terminal_rewards
    m = spec.m
    if start_state is None:
        i = sampler.draw(sampler.x1_cdf, rng.random())
    else:
        i = start_state
    traj = Trajectory()
    for t in range(spec.N - 1):
        observed = []
        for k in range(m):
            j = sampler.next_state(t, i, k, rng.random())
            if k == m - 1:
                break
            if rng.random() < P[t, i, j, k]:
                break
            observed.append(j)
        traj.epochs.append(EpochRecord(
            state=i, observed=tuple(observed), phase=k, action=k,
            reward=float(R[t, i, k]), next_state=j,
        ))
        i = j
    traj.terminal_reward = float(rN[i])
    return traj


def rollout(spec: ModelSpec, policy: SequentialPolicy, seed: int,
            start_state: int | None = None, index: int = 0) -> Trajectory:
    """Simulate one episode; ``start_state`` is 0-based, drawn from ``x1`` if omitted."""
    spec = check_model(spec)
    check_sequential_policy(spec, policy)
    if start_state is not None and not 0 <= start_state < spec.n:
        raise ValueError(f"start state {start_state} outside 0..{spec.n - 1}")
    return _rollout(spec, policy.P, _Sampler(spec), make_rng(seed, index), start_state)


def rollouts(spec: ModelSpec, policy: SequentialPolicy, num_rollouts: int, seed: int,
             start_state: int | None = None, n_jobs: int | None = 1) -> list[Trajectory]:
    spec = check_model(spec)
    check_sequential_policy(spec, policy)
    sampler = _Sampler(spec)

    def one(index):
        return _rollout(spec, policy.P, sampler, make_rng(seed, index), start_state)

    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(n_jobs) as pool:
            return list(pool.map(one, range(num_rollouts)))
    return [one(index) for index in range(num_rollouts)]


def estimate_value(spec: ModelSpec, policy: SequentialPolicy, num_rollouts: int, seed: int,
                   start_state: int | None = None, n_jobs: int | None = 1
                   ) -> tuple[float, float]:
    """Sample mean and standard error of the total reward."""
    if num_rollouts < 1:
        raise ValueError("num_rollouts must be at least 1")
    return summarize(rollouts(spec, policy, num_rollouts, seed, start_state, n_jobs))


def summarize(trajectories) -> tuple[float, float]:
    """Mean and standard error of total rewards; exact when every total agrees."""
    totals = np.array([tr.total_reward for tr in trajectories])
    if np.all(totals == totals[0]):
        return float(totals[0]), 0.0
    # ndarray.sum uses pairwise summation
    mean = float(totals.sum() / totals.size)
    stderr = float(np.sqrt(np.sum((totals - mean) ** 2) / (totals.size - 1) / totals.size))
    return mean, stderr


def dump_trajectories(trajectories, fh) -> None:
    for tr in trajectories:
        fh.write(json.dumps(tr.to_dict(), sort_keys=True) + "\n")
