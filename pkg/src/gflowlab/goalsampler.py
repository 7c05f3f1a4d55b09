"""Goal-direction sources: Uniform-GS and the learned tabular sampler Tab-GS.

Tab-GS keeps, for each direction in a fixed set D_G, whether it was ever
drawn as a goal and how many achieved samples landed angularly closest to
it. Sampling is uniform over D_G for the first quarter of training, then
proportional to a three-valued weight table (never drawn: 1, hit: 1,
drawn-and-missed: 0.1); counts freeze at three quarters so the model can
settle against a stationary goal distribution.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .conditioning import FocusGoal

MISS_WEIGHT = 0.1
PHASE_WEIGHTED = 0.25
PHASE_FREEZE = 0.75

DEFAULT_POINTS_PER_AXIS = {2: 64, 3: 16, 4: 8}


def build_direction_set(k: int, points_per_axis: int) -> np.ndarray:
    """Normalized lattice points of the unit-hypercube faces where some coordinate is 1."""
    if points_per_axis < 2:
        raise ValueError(f"points_per_axis must be >= 2, got {points_per_axis}")
    ticks = np.linspace(0.0, 1.0, points_per_axis)
    seen = {}
    for p in product(ticks, repeat=k):
        if max(p) != 1.0:
            continue
        v = np.array(p) / np.linalg.norm(p)
        key = tuple(np.round(v, 12))
        if key not in seen:
            seen[key] = v
    return np.array(list(seen.values()))


def uniform_direction(k: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform on the positive orthant of the unit hypersphere: |g|/||g|| for g ~ N(0, I)."""
    if k < 2:
        raise ValueError(f"need K >= 2, got {k}")
    g = np.abs(rng.standard_normal(k))
    return g / np.linalg.norm(g)


def default_points_per_axis(k: int) -> int:
    return DEFAULT_POINTS_PER_AXIS.get(k, 8)


@dataclass
class UniformGS:
    """Stateless source drawing goal directions uniformly on the positive orthant."""

    k: int
    c_g: float = 0.98
    m_g: float = 0.20

    kind = "uniform"

    def sample_goal(self, rng: np.random.Generator, step: int, total_steps: int) -> FocusGoal:
        return FocusGoal(uniform_direction(self.k, rng), self.c_g, self.m_g)

    def observe(self, achieved_r: np.ndarray) -> None:
        pass


@dataclass
class TabGS:
    """Tabular goal sampler over a fixed direction set with the three-phase schedule."""

    directions: np.ndarray  # (n, K) unit rows
    c_g: float = 0.98
    m_g: float = 0.20
    hit_counts: np.ndarray = field(default=None)  # type: ignore[assignment]
    drawn: np.ndarray = field(default=None)  # type: ignore[assignment]
    frozen: bool = False

    kind = "tabular"

    def __post_init__(self):
        n = len(self.directions)
        if self.hit_counts is None:
            self.hit_counts = np.zeros(n, dtype=np.int64)
        if self.drawn is None:
            self.drawn = np.zeros(n, dtype=bool)

    @classmethod
    def for_objectives(cls, k: int, points_per_axis: int | None = None,
                       c_g: float = 0.98, m_g: float = 0.20) -> "TabGS":
        ppa = points_per_axis or default_points_per_axis(k)
        return cls(build_direction_set(k, ppa), c_g=c_g, m_g=m_g)

    def weight(self, index: int) -> float:
        if not self.drawn[index] or self.hit_counts[index] > 0:
            return 1.0
        return MISS_WEIGHT

    def weights(self) -> np.ndarray:
        return np.where(~self.drawn | (self.hit_counts > 0), 1.0, MISS_WEIGHT)

    def probabilities(self, step: int, total_steps: int) -> np.ndarray:
        if step < PHASE_WEIGHTED * total_steps:
            return np.full(len(self.directions), 1.0 / len(self.directions))
        w = self.weights()
        return w / w.sum()

    def stationary_probabilities(self) -> np.ndarray:
        w = self.weights()
        return w / w.sum()

    def sample_goal(self, rng: np.random.Generator, step: int, total_steps: int) -> FocusGoal:
        if step >= PHASE_FREEZE * total_steps:
            self.frozen = True
        p = self.probabilities(step, total_steps)
        idx = int(rng.choice(len(self.directions), p=p))
        if not self.frozen:
            self.drawn[idx] = True
        return FocusGoal(self.directions[idx], self.c_g, self.m_g)

    def sample_stationary(self, rng: np.random.Generator) -> FocusGoal:
        idx = int(rng.choice(len(self.directions), p=self.stationary_probabilities()))
        return FocusGoal(self.directions[idx], self.c_g, self.m_g)

    def nearest_index(self, r: np.ndarray) -> int:
        """Direction with maximal cosine similarity to r; lowest index on ties."""
        return int(np.argmax(self.directions @ np.asarray(r, dtype=np.float64)))

    def observe(self, achieved_r: np.ndarray) -> None:
        """Credit each nonzero achieved reward vector to its angularly nearest direction."""
        if self.frozen:
            return
        r = np.atleast_2d(np.asarray(achieved_r, dtype=np.float64))
        r = r[np.linalg.norm(r, axis=1) > 0.0]
        if len(r) == 0:
            return
        nearest = np.argmax(r @ self.directions.T, axis=1)
        np.add.at(self.hit_counts, nearest, 1)

    def state_dict(self) -> dict:
        return {
            "hit_counts": self.hit_counts.tolist(),
            "drawn": self.drawn.astype(int).tolist(),
            "frozen": self.frozen,
        }

    def load_state_dict(self, state: dict) -> None:
        self.hit_counts = np.array(state["hit_counts"], dtype=np.int64)
        self.drawn = np.array(state["drawn"], dtype=bool)
        self.frozen = bool(state["frozen"])


GoalSource = UniformGS | TabGS
