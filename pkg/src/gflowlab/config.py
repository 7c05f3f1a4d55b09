"""Run configuration: flat key=value text with dotted sections.

Keys mirror the training pipeline's hyperparameter table
(train.focus_cosine_threshold, train.limit_reward_coef, ...). Unknown keys
are rejected; every value is validated before any training starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .conditioning import GOAL, PREFERENCE
from .env import GridSpec, LandscapeSpec, LANDSCAPE_NAMES, default_grid, load_objective_table
from .errors import ConfigError
from .gfn import TrainConfig
from .goalsampler import TabGS, UniformGS, default_points_per_axis
from .metrics import default_face_resolution


def _parse_bool(s: str) -> bool:
    low = s.strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _parse_int_list(s: str) -> list[int]:
    return [int(x) for x in s.replace(",", " ").split()]


# key -> (parser, default). None defaults are resolved contextually.
KEYS: dict = {
    "grid.objectives": (int, 2),
    "grid.dimensions": (int, None),
    "grid.side": (int, None),
    "landscape.preset": (str, "unrestrained"),
    "landscape.source": (str, "linear-coords"),
    "landscape.table_path": (str, ""),
    "landscape.param.threshold": (float, None),
    "landscape.param.radius": (float, None),
    "landscape.param.arc_radius": (float, None),
    "mode": (str, GOAL),
    "goal_source": (str, "uniform"),
    "goal_source.points_per_axis": (int, None),
    "net.hidden_sizes": (_parse_int_list, [128, 128]),
    "train.batch_size": (int, 64),
    "train.beta": (float, 60.0),
    "train.n_steps": (int, 10000),
    "train.lr_pf": (float, 1e-4),
    "train.lr_z": (float, 1e-3),
    "train.tau": (float, 0.95),
    "train.epsilon": (float, 0.01),
    "train.buffer_capacity": (int, 100000),
    "train.warmup_trajectories": (int, 1000),
    "train.hindsight_ratio": (float, 0.30),
    "train.focus_cosine_threshold": (float, 0.98),
    "train.limit_reward_coef": (float, 0.20),
    "train.shaped_reward": (_parse_bool, True),
    "train.reward_floor": (float, 1e-8),
    "train.init_stop_bias": (float, -3.0),
    "train.logz_scale": (float, 100.0),
    "train.log_every": (int, 50),
    "train.checkpoint_every": (int, 0),
    "eval.n_samples": (int, 5000),
    "eval.reference": (str, "faces"),  # faces | front
    "eval.face_resolution": (int, None),
    "seeds": (_parse_int_list, [0, 1, 2]),
    "output_dir": (str, "runs/out"),
}

MODES = (PREFERENCE, GOAL)
GOAL_SOURCES = ("uniform", "tabular")
REFERENCES = ("faces", "front")


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse key=value lines; '#' starts a comment; blank lines ignored."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = stripped.split("=", 1)
        key = key.strip()
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        raw[key] = value.strip()
    return raw


@dataclass
class RunConfig:
    """Fully resolved configuration for one experiment cell (all seeds)."""

    grid: GridSpec
    landscape: LandscapeSpec
    mode: str
    goal_source_kind: str
    points_per_axis: int
    train: TrainConfig
    eval_n_samples: int
    eval_reference: str
    face_resolution: int
    seeds: list[int]
    output_dir: Path
    text: str = ""  # resolved key=value echo embedded in reports

    def make_goal_source(self):
        if self.mode != GOAL:
            return None
        c_g = self.train.focus_cosine_threshold
        m_g = self.train.limit_reward_coef
        if self.goal_source_kind == "uniform":
            return UniformGS(self.grid.objectives, c_g, m_g)
        return TabGS.for_objectives(self.grid.objectives, self.points_per_axis, c_g, m_g)

    def with_seed(self, seed: int) -> "RunConfig":
        return replace(self, train=replace(self.train, seed=seed), seeds=[seed])


def resolve(raw: dict[str, str], base_dir: Path | None = None) -> RunConfig:
    """Validate raw strings and build the RunConfig; unknown keys already rejected."""
    values: dict = {}
    for key, (parser, default) in KEYS.items():
        if key in raw:
            try:
                values[key] = parser(raw[key])
            except (ValueError, TypeError) as err:
                raise ConfigError(f"bad value for {key}: {raw[key]!r} ({err})") from err
        else:
            values[key] = default

    k = values["grid.objectives"]
    if values["grid.dimensions"] is None or values["grid.side"] is None:
        grid_default = default_grid(k)
        if values["grid.dimensions"] is None:
            values["grid.dimensions"] = grid_default.dimensions
        if values["grid.side"] is None:
            values["grid.side"] = grid_default.side
    grid = GridSpec(values["grid.dimensions"], values["grid.side"], k)

    if values["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {values['mode']!r}")
    if values["goal_source"] not in GOAL_SOURCES:
        raise ConfigError(f"goal_source must be one of {GOAL_SOURCES}")
    if values["landscape.preset"] not in LANDSCAPE_NAMES:
        raise ConfigError(
            f"landscape.preset must be one of {', '.join(LANDSCAPE_NAMES)}")
    if values["eval.reference"] not in REFERENCES:
        raise ConfigError(f"eval.reference must be one of {REFERENCES}")
    if values["eval.n_samples"] < 0:
        raise ConfigError("eval.n_samples must be >= 0")
    if not values["seeds"]:
        raise ConfigError("seeds must be nonempty")

    params = {}
    for pkey in ("threshold", "radius", "arc_radius"):
        v = values[f"landscape.param.{pkey}"]
        if v is not None:
            params[pkey] = v
    table = None
    if values["landscape.source"] == "tabulated":
        if not values["landscape.table_path"]:
            raise ConfigError("tabulated source needs landscape.table_path")
        path = Path(values["landscape.table_path"])
        if base_dir is not None and not path.is_absolute():
            path = base_dir / path
        table = load_objective_table(grid, path)
    landscape = LandscapeSpec(
        preset=values["landscape.preset"], params=params,
        source=values["landscape.source"], table=table)

    train = TrainConfig(
        beta=values["train.beta"],
        tau=values["train.tau"],
        epsilon=values["train.epsilon"],
        lr_pf=values["train.lr_pf"],
        lr_z=values["train.lr_z"],
        batch_size=values["train.batch_size"],
        n_steps=values["train.n_steps"],
        buffer_capacity=values["train.buffer_capacity"],
        warmup_trajectories=values["train.warmup_trajectories"],
        hindsight_ratio=values["train.hindsight_ratio"],
        focus_cosine_threshold=values["train.focus_cosine_threshold"],
        limit_reward_coef=values["train.limit_reward_coef"],
        shaped_reward=values["train.shaped_reward"],
        reward_floor=values["train.reward_floor"],
        hidden_sizes=tuple(values["net.hidden_sizes"]),
        init_stop_bias=values["train.init_stop_bias"],
        logz_scale=values["train.logz_scale"],
        log_every=values["train.log_every"],
        checkpoint_every=values["train.checkpoint_every"],
        seed=values["seeds"][0],
    )
    train.validate()

    ppa = values["goal_source.points_per_axis"] or default_points_per_axis(k)
    res = values["eval.face_resolution"] or default_face_resolution(k)

    cfg = RunConfig(
        grid=grid,
        landscape=landscape,
        mode=values["mode"],
        goal_source_kind=values["goal_source"],
        points_per_axis=ppa,
        train=train,
        eval_n_samples=values["eval.n_samples"],
        eval_reference=values["eval.reference"],
        face_resolution=res,
        seeds=list(values["seeds"]),
        output_dir=Path(values["output_dir"]),
    )
    cfg.text = echo(raw)
    return cfg


def echo(raw: dict[str, str]) -> str:
    """Deterministic key=value echo of the explicit settings."""
    return "\n".join(f"{k} = {raw[k]}" for k in sorted(raw))


def load(path: str | Path, overrides: list[str] | None = None) -> RunConfig:
    """Read a config file and apply --set key=value overrides."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = parse_config_text(path.read_text(), source=str(path))
    for item in overrides or []:
        if "=" not in item:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        key, value = item.split("=", 1)
        key = key.strip()
        if key not in KEYS:
            raise ConfigError(f"unknown override key {key!r}")
        raw[key] = value.strip()
    return resolve(raw, base_dir=path.parent)


def from_pairs(pairs: dict[str, str]) -> RunConfig:
    """Build a RunConfig from explicit string pairs (tests, presets)."""
    for key in pairs:
        if key not in KEYS:
            raise ConfigError(f"unknown key {key!r}")
    return resolve(dict(pairs))
