"""Hypergrid generation environment with tabulated multi-objective rewards.

States are D-dimensional coordinate vectors on a side-H grid; actions either
increment one coordinate or stop. Objective images live in [0,1]^K and can be
carved up by named unreachable-region masks, which null the reward of any
terminal whose image falls inside them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError

ENUMERATION_CAP = 10**7

STOP = -1  # action encoding: 0..D-1 increment that dimension, STOP ends the trajectory


@dataclass(frozen=True)
class GridSpec:
    dimensions: int
    side: int
    objectives: int

    def __post_init__(self):
        if self.dimensions < 1:
            raise ConfigError(f"grid dimensions must be >= 1, got {self.dimensions}")
        # side == 1 is the degenerate single-state grid (only Stop legal),
        # usable with tabulated objectives
        if self.side < 1:
            raise ConfigError(f"grid side must be >= 1, got {self.side}")
        if self.objectives < 2:
            raise ConfigError(f"objective count must be >= 2, got {self.objectives}")

    @property
    def n_states(self) -> int:
        return self.side**self.dimensions

    @property
    def n_actions(self) -> int:
        return self.dimensions + 1


@dataclass(frozen=True)
class State:
    coords: tuple[int, ...]
    done: bool = False


def default_grid(objectives: int) -> GridSpec:
    """Default grids keep enumeration instant: K=2 -> 33^2, K=3 -> 17^3, K=4 -> 9^4."""
    sides = {2: 33, 3: 17, 4: 9}
    if objectives not in sides:
        raise ConfigError(f"no default grid for K={objectives}")
    return GridSpec(dimensions=objectives, side=sides[objectives], objectives=objectives)


# -- mask presets -------------------------------------------------------------
#
# Each preset is a pure predicate over objective space; True means the reward
# is nulled there. For K > 2 the 2-D predicate applies to the first two
# objective coordinates.


def _disk(r: np.ndarray, cx: float, cy: float, radius: float) -> np.ndarray:
    return (r[:, 0] - cx) ** 2 + (r[:, 1] - cy) ** 2 < radius**2


def _dots_mask(r: np.ndarray, n_dots: int, radius: float, arc_radius: float,
               angles: tuple[float, ...] | None = None) -> np.ndarray:
    if angles is None:
        # interior midpoints of a uniform partition of the quarter arc
        angles = tuple((i + 0.5) / n_dots * np.pi / 2 for i in range(n_dots))
    inside_any = np.zeros(len(r), dtype=bool)
    for th in angles:
        inside_any |= _disk(r, arc_radius * np.cos(th), arc_radius * np.sin(th), radius)
    return ~inside_any


MASK_PRESETS = {
    "unrestrained": lambda r, p: np.zeros(len(r), dtype=bool),
    "restrained-convex": lambda r, p: r[:, 0] + r[:, 1] > p["threshold"],
    "concave": lambda r, p: _disk(r, 1.0, 1.0, p["radius"]),
    "concave-sharp": lambda r, p: _disk(r, 1.05, 0.75, p["radius"])
    | _disk(r, 0.75, 1.05, p["radius"]),
    "multi-concave": lambda r, p: (r[:, 0] + r[:, 1] > p["threshold"])
    | _disk(r, 0.9, 0.6, p["radius"])
    | _disk(r, 0.6, 0.9, p["radius"]),
    "4-dots": lambda r, p: _dots_mask(
        r, 4, p["radius"], p["arc_radius"],
        angles=tuple((i + 1) / 5 * np.pi / 2 for i in range(4)),
    ),
    "16-dots": lambda r, p: _dots_mask(r, 16, p["radius"], p["arc_radius"]),
}

MASK_DEFAULTS = {
    "unrestrained": {},
    "restrained-convex": {"threshold": 1.25},
    "concave": {"radius": 0.8},
    "concave-sharp": {"radius": 0.6},
    "multi-concave": {"threshold": 1.5, "radius": 0.15},
    "4-dots": {"radius": 0.06, "arc_radius": 0.9},
    "16-dots": {"radius": 0.06, "arc_radius": 0.9},
}

LANDSCAPE_NAMES = tuple(MASK_PRESETS)


@dataclass
class LandscapeSpec:
    """Objective source plus an unreachable-region mask over objective space."""

    preset: str = "unrestrained"
    params: dict = field(default_factory=dict)
    source: str = "linear-coords"  # or "tabulated"
    table: np.ndarray | None = None  # (H^D, K), row-major by coordinate

    def __post_init__(self):
        if self.preset not in MASK_PRESETS:
            raise ConfigError(
                f"unknown landscape preset {self.preset!r}; known: {', '.join(MASK_PRESETS)}"
            )
        if self.source not in ("linear-coords", "tabulated"):
            raise ConfigError(f"unknown objective source {self.source!r}")
        unknown = set(self.params) - set(MASK_DEFAULTS[self.preset])
        if unknown:
            raise ConfigError(
                f"preset {self.preset!r} does not take parameters {sorted(unknown)}"
            )
        self.params = {**MASK_DEFAULTS[self.preset], **self.params}

    def mask(self, r: np.ndarray) -> np.ndarray:
        """True where the reward must be nulled. r is (N, K)."""
        r = np.atleast_2d(np.asarray(r, dtype=np.float64))
        return MASK_PRESETS[self.preset](r, self.params)


# -- state/action mechanics ---------------------------------------------------


def initial_state(spec: GridSpec) -> State:
    return State(coords=(0,) * spec.dimensions, done=False)


def legal_action_mask(spec: GridSpec, state: State) -> np.ndarray:
    """Boolean vector over D+1 actions (increments then Stop). Stop is always legal."""
    if state.done:
        raise ValueError("no legal actions in a done state")
    mask = np.ones(spec.n_actions, dtype=bool)
    for d, c in enumerate(state.coords):
        mask[d] = c < spec.side - 1
    return mask


def apply_action(spec: GridSpec, state: State, action: int) -> State:
    if state.done:
        raise ValueError("cannot act in a done state")
    if action == STOP or action == spec.dimensions:
        return State(coords=state.coords, done=True)
    if not 0 <= action < spec.dimensions:
        raise ValueError(f"action {action} out of range for D={spec.dimensions}")
    if state.coords[action] >= spec.side - 1:
        raise ValueError(f"increment of dim {action} illegal at {state.coords}")
    coords = list(state.coords)
    coords[action] += 1
    return State(coords=tuple(coords), done=False)


def parents(spec: GridSpec, state: State) -> list[tuple[State, int]]:
    """All (parent, action) pairs leading into state. Empty for the initial state."""
    if state.done:
        return [(State(coords=state.coords, done=False), STOP)]
    out = []
    for d, c in enumerate(state.coords):
        if c > 0:
            coords = list(state.coords)
            coords[d] -= 1
            out.append((State(coords=tuple(coords)), d))
    return out


# -- objectives and masking ---------------------------------------------------


def objectives_batch(spec: GridSpec, landscape: LandscapeSpec, coords: np.ndarray) -> np.ndarray:
    """Unmasked objective vectors for a (N, D) int coordinate batch."""
    coords = np.atleast_2d(np.asarray(coords))
    k = spec.objectives
    if landscape.source == "linear-coords":
        if k > spec.dimensions:
            raise ConfigError("linear-coords objectives need K <= D")
        if spec.side < 2:
            raise ConfigError("linear-coords objectives need side >= 2")
        return coords[:, :k].astype(np.float64) / (spec.side - 1)
    if landscape.table is None:
        raise ConfigError("tabulated objective source has no table loaded")
    flat = np.ravel_multi_index(coords.T, (spec.side,) * spec.dimensions)
    return landscape.table[flat]


def objectives(spec: GridSpec, landscape: LandscapeSpec, state: State) -> np.ndarray:
    return objectives_batch(spec, landscape, np.array([state.coords]))[0]


def masked_reward_batch(landscape: LandscapeSpec, r: np.ndarray) -> np.ndarray:
    """Zero out reward vectors whose image falls inside the mask."""
    r = np.atleast_2d(np.asarray(r, dtype=np.float64))
    out = r.copy()
    out[landscape.mask(r)] = 0.0
    return out


def masked_reward(landscape: LandscapeSpec, r: np.ndarray) -> np.ndarray:
    return masked_reward_batch(landscape, np.asarray(r)[None, :])[0]


def all_coords(spec: GridSpec) -> np.ndarray:
    """All H^D coordinate tuples, row-major (last dimension fastest)."""
    if spec.n_states > ENUMERATION_CAP:
        raise ConfigError(
            f"{spec.n_states} states exceeds the enumeration cap {ENUMERATION_CAP}"
        )
    grids = np.meshgrid(*[np.arange(spec.side)] * spec.dimensions, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def enumerate_terminals(spec: GridSpec, landscape: LandscapeSpec) -> tuple[np.ndarray, np.ndarray]:
    """(coords (H^D, D), masked reward vectors (H^D, K)) over every grid point."""
    coords = all_coords(spec)
    return coords, masked_reward_batch(landscape, objectives_batch(spec, landscape, coords))


def load_objective_table(spec: GridSpec, path: str | Path) -> np.ndarray:
    """Parse the exhaustive text table: one line per grid point, "i_1 .. i_D r_1 .. r_K"."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"objective table not found: {path}")
    raw = np.loadtxt(path, dtype=np.float64, ndmin=2)
    d, k = spec.dimensions, spec.objectives
    if raw.shape[1] != d + k:
        raise ConfigError(
            f"objective table rows must have {d + k} columns (D={d} coords + K={k} values), "
            f"got {raw.shape[1]}"
        )
    if raw.shape[0] != spec.n_states:
        raise ConfigError(
            f"objective table must cover all {spec.n_states} grid points, got {raw.shape[0]} rows"
        )
    coords = raw[:, :d].astype(np.int64)
    values = raw[:, d:]
    if np.any(coords < 0) or np.any(coords >= spec.side):
        raise ConfigError("objective table has coordinates outside the grid")
    if np.any(values < 0) or np.any(values > 1):
        raise ConfigError("objective values must lie in [0, 1]")
    flat = np.ravel_multi_index(coords.T, (spec.side,) * d)
    if len(np.unique(flat)) != spec.n_states:
        raise ConfigError("objective table has duplicate grid points")
    table = np.empty((spec.n_states, k))
    table[flat] = values
    return table
