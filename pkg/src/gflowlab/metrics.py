"""Evaluation metrics and brute-force oracles.

IGD and PC-ent compare a sample set against reference points (the enumerated
true Pareto front, or a discretization of the hypercube's extreme faces);
Avg-PCC measures controllability as the per-objective Pearson correlation
between conditioning vectors and achieved rewards. The oracles (true front,
exact tempered target distribution, total variation) are exact enumerations.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from . import env as env_mod
from .conditioning import Conditioning, conditional_reward
from .env import GridSpec, LandscapeSpec


@dataclass
class SampleSet:
    """Achieved reward vectors paired with the conditioning payloads that produced them."""

    rewards: np.ndarray  # (N, K)
    payloads: np.ndarray  # (N, K): w for preference mode, d_g for goal mode
    in_focus: np.ndarray | None = None  # (N,) bool, goal mode only

    def __post_init__(self):
        self.rewards = np.atleast_2d(np.asarray(self.rewards, dtype=np.float64))
        self.payloads = np.atleast_2d(np.asarray(self.payloads, dtype=np.float64))
        if self.rewards.shape != self.payloads.shape:
            raise ValueError("rewards and payloads must have matching (N, K) shapes")

    def __len__(self) -> int:
        return len(self.rewards)

    def subset(self, keep: np.ndarray) -> "SampleSet":
        return SampleSet(
            self.rewards[keep],
            self.payloads[keep],
            None if self.in_focus is None else self.in_focus[keep],
        )

    def nonzero(self) -> "SampleSet":
        return self.subset(np.linalg.norm(self.rewards, axis=1) > 0.0)

    def zero_reward_fraction(self) -> float:
        if len(self) == 0:
            return 0.0
        return float(np.mean(np.linalg.norm(self.rewards, axis=1) == 0.0))


def igd(samples: np.ndarray | SampleSet, references: np.ndarray) -> float:
    """Mean over reference points of the squared distance to the closest sample."""
    s = samples.rewards if isinstance(samples, SampleSet) else np.atleast_2d(samples)
    p = np.atleast_2d(np.asarray(references, dtype=np.float64))
    if len(s) == 0 or len(p) == 0:
        raise ValueError("igd needs nonempty sample and reference sets")
    d2 = ((p[:, None, :] - s[None, :, :]) ** 2).sum(axis=2)
    return float(d2.min(axis=1).mean())


def nearest_reference(samples: np.ndarray, references: np.ndarray) -> np.ndarray:
    """Index of the closest reference per sample (Euclidean, lowest index on ties)."""
    d2 = ((np.atleast_2d(samples)[:, None, :] - np.atleast_2d(references)[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1)


def pc_ent(samples: np.ndarray | SampleSet, references: np.ndarray) -> float:
    """Entropy (natural log) of the sample counts clustered to nearest reference points.

    Counts are normalized by the sample count so the value tops out at
    log(len(references)) for cluster-uniform samples.
    """
    s = samples.rewards if isinstance(samples, SampleSet) else np.atleast_2d(samples)
    p = np.atleast_2d(np.asarray(references, dtype=np.float64))
    if len(s) == 0 or len(p) == 0:
        raise ValueError("pc_ent needs nonempty sample and reference sets")
    counts = np.bincount(nearest_reference(s, p), minlength=len(p))
    q = counts[counts > 0] / len(s)
    return float(-(q * np.log(q)).sum())


def _pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Pearson correlation; 0 when either argument has zero variance."""
    sx, sy = x.std(), y.std()
    if sx == 0.0 or sy == 0.0:
        return 0.0
    return float(((x - x.mean()) * (y - y.mean())).mean() / (sx * sy))


def avg_pcc(samples: SampleSet) -> float:
    """Mean over objectives of the Pearson correlation between payload and reward columns."""
    if len(samples) < 2:
        raise ValueError("avg_pcc needs at least 2 samples")
    k = samples.rewards.shape[1]
    return float(
        np.mean([_pearson(samples.rewards[:, i], samples.payloads[:, i]) for i in range(k)])
    )


def goal_accuracy(samples: SampleSet) -> float:
    """Fraction of samples inside their prescribed focus region."""
    if samples.in_focus is None:
        raise ValueError("goal_accuracy needs goal-mode samples with in_focus flags")
    if len(samples) == 0:
        raise ValueError("goal_accuracy needs a nonempty sample set")
    return float(np.mean(samples.in_focus))


def filter_out_of_focus(samples: SampleSet) -> SampleSet:
    if samples.in_focus is None:
        raise ValueError("filter_out_of_focus needs goal-mode samples")
    return samples.subset(samples.in_focus.astype(bool))


# -- oracles -------------------------------------------------------------------


def non_dominated(points: np.ndarray) -> np.ndarray:
    """Boolean mask of points not dominated by any other point (maximization).

    p dominates q iff p >= q componentwise and p != q; duplicate points do not
    dominate each other.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
    n = len(pts)
    keep = np.ones(n, dtype=bool)
    for i in range(n):
        if not keep[i]:
            continue
        geq = np.all(pts >= pts[i], axis=1)
        dominators = geq & np.any(pts != pts[i], axis=1)
        if np.any(dominators):
            keep[i] = False
    return keep


def true_front(spec: GridSpec, landscape: LandscapeSpec) -> np.ndarray:
    """Non-dominated unique nonzero masked reward vectors over all terminals."""
    _, rewards = env_mod.enumerate_terminals(spec, landscape)
    rewards = rewards[np.linalg.norm(rewards, axis=1) > 0.0]
    rewards = np.unique(rewards, axis=0)
    if len(rewards) == 0:
        return rewards
    return rewards[non_dominated(rewards)]


def hypercube_face_references(k: int, resolution: int) -> np.ndarray:
    """Lattice points of [0,1]^K with at least one coordinate equal to 1."""
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    ticks = np.linspace(0.0, 1.0, resolution)
    pts = [p for p in product(ticks, repeat=k) if max(p) == 1.0]
    return np.array(pts)


def default_face_resolution(k: int) -> int:
    return {2: 17, 3: 9, 4: 5}.get(k, 5)


def exact_distribution(spec: GridSpec, landscape: LandscapeSpec,
                       conditioning: Conditioning, beta: float,
                       shaped: bool = True, reward_floor: float = 1e-8) -> np.ndarray:
    """p(x) proportional to max(R_c(x), floor)^beta over all H^D terminals (row-major order)."""
    _, rewards = env_mod.enumerate_terminals(spec, landscape)
    scalars = np.array([conditional_reward(r, conditioning, shaped) for r in rewards])
    logp = beta * np.log(np.maximum(scalars, reward_floor))
    logp -= logp.max()
    p = np.exp(logp)
    return p / p.sum()


def tv_distance(p_hat: np.ndarray, p: np.ndarray) -> float:
    """(1/2) sum |p_hat - p| over a shared support."""
    p_hat = np.asarray(p_hat, dtype=np.float64)
    p = np.asarray(p, dtype=np.float64)
    if p_hat.shape != p.shape:
        raise ValueError(f"support mismatch: {p_hat.shape} vs {p.shape}")
    return float(0.5 * np.abs(p_hat - p).sum())


# -- reporting -----------------------------------------------------------------


@dataclass
class MetricReport:
    """Per-seed metric values with mean +/- standard error aggregation."""

    per_seed: dict[str, list[float]] = field(default_factory=dict)

    def add(self, name: str, value: float) -> None:
        self.per_seed.setdefault(name, []).append(float(value))

    def mean(self, name: str) -> float:
        return float(np.mean(self.per_seed[name]))

    def sem(self, name: str) -> float | None:
        vals = self.per_seed[name]
        if len(vals) < 2:
            return None
        return float(np.std(vals, ddof=1) / np.sqrt(len(vals)))

    def summary(self) -> dict[str, dict]:
        out = {}
        for name, vals in self.per_seed.items():
            out[name] = {"values": list(vals), "mean": self.mean(name), "sem": self.sem(name)}
        return out

    def format_cell(self, name: str) -> str:
        sem = self.sem(name)
        if sem is None:
            return f"{self.mean(name):.3f}"
        return f"{self.mean(name):.3f} +/- {sem:.3f}"
