"""Preference vectors, focus goals, and their reward transforms.

A preference scalarizes the objective vector with nonnegative weights summing
to one. A focus goal is a cone in objective space: direction d_g, cosine
threshold c_g, and a limit coefficient m_g that sets how far the shaped
reward decays at the cone boundary.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PREFERENCE = "preference"
GOAL = "goal"


@dataclass(frozen=True)
class PreferenceVector:
    w: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        object.__setattr__(self, "w", w)
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError(f"preferences must be nonnegative and sum to 1, got {w}")

    @property
    def payload(self) -> np.ndarray:
        return self.w

    mode = PREFERENCE


@dataclass(frozen=True)
class FocusGoal:
    d_g: np.ndarray
    c_g: float = 0.98
    m_g: float = 0.20

    def __post_init__(self):
        d = np.asarray(self.d_g, dtype=np.float64)
        object.__setattr__(self, "d_g", d)
        if np.any(d < 0) or abs(np.linalg.norm(d) - 1.0) > 1e-9:
            raise ValueError(f"goal direction must be a unit vector in the nonnegative orthant, got {d}")
        if not 0.0 < self.c_g < 1.0:
            raise ValueError(f"cosine threshold must be in (0, 1), got {self.c_g}")
        if not 0.0 < self.m_g <= 1.0:
            raise ValueError(f"limit coefficient must be in (0, 1], got {self.m_g}")

    @property
    def payload(self) -> np.ndarray:
        return self.d_g

    mode = GOAL


Conditioning = PreferenceVector | FocusGoal


def sample_preference(k: int, rng: np.random.Generator) -> PreferenceVector:
    """Flat Dirichlet: uniform on the K-simplex."""
    if k < 2:
        raise ValueError(f"need K >= 2 objectives, got {k}")
    return PreferenceVector(rng.dirichlet(np.ones(k)))


def scalarize(r: np.ndarray, w: PreferenceVector | np.ndarray) -> float:
    w = w.w if isinstance(w, PreferenceVector) else np.asarray(w)
    return float(np.dot(np.asarray(r, dtype=np.float64), w))


def cosine_sim(r: np.ndarray, d_g: np.ndarray) -> float:
    """Cosine between r and d_g; defined as 0 for r = 0 (masked samples have no direction)."""
    r = np.asarray(r, dtype=np.float64)
    nr = np.linalg.norm(r)
    if nr == 0.0:
        return 0.0
    d = np.asarray(d_g, dtype=np.float64)
    return float(np.dot(r, d) / (nr * np.linalg.norm(d)))


def in_focus(r: np.ndarray, goal: FocusGoal) -> bool:
    return cosine_sim(r, goal.d_g) >= goal.c_g


def alpha_coef(r: np.ndarray, goal: FocusGoal) -> float:
    """Shaping coefficient cos(r, d_g)^(log m_g / log c_g); equals m_g at the cone boundary."""
    cos = cosine_sim(r, goal.d_g)
    if cos < goal.c_g:
        raise ValueError(f"alpha_coef called out of focus (cos={cos} < c_g={goal.c_g})")
    if goal.m_g == 1.0:
        return 1.0
    return float(cos ** (np.log(goal.m_g) / np.log(goal.c_g)))


def goal_reward(r: np.ndarray, goal: FocusGoal, shaped: bool) -> float:
    """Sum of objectives inside the cone (optionally shaped by alpha), zero outside."""
    if not in_focus(r, goal):
        return 0.0
    total = float(np.sum(r))
    return alpha_coef(r, goal) * total if shaped else total


def conditional_reward(r: np.ndarray, conditioning: Conditioning, shaped: bool = True) -> float:
    if isinstance(conditioning, PreferenceVector):
        return scalarize(r, conditioning)
    return goal_reward(r, conditioning, shaped)


# -- batched variants (training/eval hot path) --------------------------------


def cosine_sim_batch(r: np.ndarray, d: np.ndarray) -> np.ndarray:
    """Row-wise cosine between r (N,K) and unit directions d (N,K) or (K,); 0 where r = 0."""
    r = np.atleast_2d(np.asarray(r, dtype=np.float64))
    d = np.asarray(d, dtype=np.float64)
    if d.ndim == 1:
        d = np.broadcast_to(d, r.shape)
    nr = np.linalg.norm(r, axis=1)
    nd = np.linalg.norm(d, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        cos = np.einsum("ij,ij->i", r, d) / (nr * nd)
    cos[nr == 0.0] = 0.0
    return cos


def goal_reward_batch(r: np.ndarray, d: np.ndarray, c_g: float, m_g: float, shaped: bool) -> np.ndarray:
    cos = cosine_sim_batch(r, d)
    total = np.atleast_2d(r).sum(axis=1)
    out = np.where(cos >= c_g, total, 0.0)
    if shaped and m_g != 1.0:
        alpha = np.where(cos > 0.0, cos, 1.0) ** (np.log(m_g) / np.log(c_g))
        out = np.where(cos >= c_g, alpha * total, 0.0)
    return out


def conditional_reward_batch(r: np.ndarray, payloads: np.ndarray, mode: str,
                             c_g: float, m_g: float, shaped: bool) -> np.ndarray:
    """Scalar rewards for rows of r under per-row conditioning payloads."""
    r = np.atleast_2d(np.asarray(r, dtype=np.float64))
    payloads = np.atleast_2d(np.asarray(payloads, dtype=np.float64))
    if mode == PREFERENCE:
        return np.einsum("ij,ij->i", r, payloads)
    return goal_reward_batch(r, payloads, c_g, m_g, shaped)


# -- fixed-width encoding fed to the networks ----------------------------------

MODE_ONE_HOT = {PREFERENCE: (1.0, 0.0), GOAL: (0.0, 1.0)}


def encoding_width(k: int) -> int:
    return k + 2


def encode(conditioning: Conditioning) -> np.ndarray:
    """Payload values followed by a one-hot mode flag; width K+2."""
    payload = conditioning.payload
    return np.concatenate([payload, MODE_ONE_HOT[conditioning.mode]])


def encode_batch(payloads: np.ndarray, mode: str) -> np.ndarray:
    payloads = np.atleast_2d(np.asarray(payloads, dtype=np.float64))
    flags = np.tile(MODE_ONE_HOT[mode], (len(payloads), 1))
    return np.concatenate([payloads, flags], axis=1)
