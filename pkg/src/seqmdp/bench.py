"""Grid-world benchmark and the standard-vs-sequential value comparison."""
from __future__ import annotations

import csv
from dataclasses import asdict, dataclass

import numpy as np

from .model import ModelSpec, check_model
from .sequential import solve_sequential
from .standard import backward_induction_standard

ACTIONS = ("up", "down", "left", "right", "stay")
_MOVES = ((-1, 0), (1, 0), (0, -1), (0, 1), (0, 0))
STAY = 4


@dataclass(frozen=True)
class GridConfig:
    width: int = 10
    height: int = 10
    p_success: float = 0.6
    horizon: int = 10
    reward_low: float = 0.0
    reward_high: float = 100.0
    seed: int = 0
    per_action_rewards: bool = True

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid must have positive width and height")
        if not 0.0 < self.p_success <= 1.0:
            raise ValueError("p_success must lie in (0, 1]")
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        if not self.reward_low <= self.reward_high:
            raise ValueError("reward_low must not exceed reward_high")

    @property
    def n(self) -> int:
        return self.width * self.height


def grid_kernel(width: int, height: int, p_success: float) -> np.ndarray:
    """``(n, n, 5)`` kernel indexed ``[i, j, k]`` with cells numbered row-major.

    The commanded move gets ``p_success``; the remaining mass is split evenly
    over the other four moves. Any move that would leave the grid lands on
    the current cell instead.
    """
    n = width * height
    G = np.zeros((n, n, len(ACTIONS)))
    slip = (1.0 - p_success) / (len(ACTIONS) - 1)
    for i in range(n):
        r, c = divmod(i, width)
        targets = []
        for dr, dc in _MOVES:
            rr, cc = r + dr, c + dc
            inside = 0 <= rr < height and 0 <= cc < width
            targets.append(rr * width + cc if inside else i)
        for k in range(len(ACTIONS)):
            # count slip shares per target before scaling to limit rounding
            shares = np.bincount(targets, minlength=n).astype(float)
            shares[targets[k]] -= 1
            G[i, :, k] = shares * slip
            G[i, targets[k], k] += p_success
    return G


def make_grid_world(cfg: GridConfig) -> ModelSpec:
    rng = np.random.default_rng(cfg.seed)
    n, m, T = cfg.n, len(ACTIONS), cfg.horizon - 1
    if cfg.per_action_rewards:
        R = rng.uniform(cfg.reward_low, cfg.reward_high, size=(T, n, m))
    else:
        R = np.repeat(rng.uniform(cfg.reward_low, cfg.reward_high, size=(T, n, 1)), m, axis=2)
    rN = rng.uniform(cfg.reward_low, cfg.reward_high, size=n)
    return ModelSpec(
        G=grid_kernel(cfg.width, cfg.height, cfg.p_success),
        R=R, rN=rN, x1=np.full(n, 1.0 / n),
        meta={"grid": asdict(cfg)},
    )


@dataclass(frozen=True, eq=False)
class Comparison:
    v_std: np.ndarray
    v_seq: np.ndarray

    @property
    def delta(self) -> np.ndarray:
        return self.v_seq - self.v_std


def compare_values(spec: ModelSpec, n_jobs: int | None = 1) -> Comparison:
    """First-stage optimal values of both models, per start state."""
    spec = check_model(spec)
    _, std_values = backward_induction_standard(spec)
    seq = solve_sequential(spec, n_jobs=n_jobs)
    return Comparison(v_std=std_values.V[0].copy(), v_seq=seq.values.V[0].copy())


def write_values_csv(fh, comparison: Comparison, width: int | None = None) -> None:
    """Columns ``state,row,col,v_std,v_seq,delta``; all indices 1-based.

    ``row``/``col`` are left empty when the model carries no grid layout.
    """
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["state", "row", "col", "v_std", "v_seq", "delta"])
    for i, (vs, vq, dv) in enumerate(zip(comparison.v_std, comparison.v_seq, comparison.delta)):
        if width:
            r, c = divmod(i, width)
            row, col = r + 1, c + 1
        else:
            row = col = ""
        writer.writerow([i + 1, row, col, f"{vs:.12g}", f"{vq:.12g}", f"{dv:.12g}"])
