"""Trajectory-balance training of the conditional GFlowNet.

The model is a policy MLP mapping (state one-hots || conditioning encoding)
to D+1 action logits plus a log-partition MLP over the conditioning encoding
alone. Trajectories are collected from a soft-updated sampler copy with
epsilon exploration, stored raw in a FIFO replay buffer, and hindsight
relabeling is applied at draw time to goal-mode records that missed their
cone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import conditioning as cond_mod
from . import env as env_mod
from . import nnet
from .conditioning import (
    GOAL,
    PREFERENCE,
    Conditioning,
    FocusGoal,
    conditional_reward_batch,
    cosine_sim_batch,
    encode,
    encode_batch,
    encoding_width,
)
from .env import GridSpec, LandscapeSpec, State
from .errors import ConfigError, TrainingError
from .goalsampler import GoalSource


@dataclass
class TrainConfig:
    """Hyperparameters; defaults mirror the training pipeline's hyperparameter table."""

    beta: float = 60.0
    tau: float = 0.95
    epsilon: float = 0.01
    lr_pf: float = 1e-4
    lr_z: float = 1e-3
    batch_size: int = 64
    n_steps: int = 10000
    buffer_capacity: int = 100000
    warmup_trajectories: int = 1000
    hindsight_ratio: float = 0.30
    focus_cosine_threshold: float = 0.98
    limit_reward_coef: float = 0.20
    shaped_reward: bool = True
    reward_floor: float = 1e-8
    hidden_sizes: tuple[int, ...] = tuple(nnet.DEFAULT_HIDDEN)
    init_stop_bias: float = -3.0
    logz_scale: float = 100.0
    log_every: int = 50
    checkpoint_every: int = 0
    seed: int = 0

    def validate(self) -> None:
        checks = [
            (0 <= self.epsilon <= 1, "epsilon must be in [0, 1]"),
            (0 <= self.tau <= 1, "tau must be in [0, 1]"),
            (self.beta >= 0, "beta must be nonnegative"),
            (self.lr_pf > 0 and self.lr_z > 0, "learning rates must be positive"),
            (self.batch_size >= 1, "batch_size must be >= 1"),
            (self.n_steps >= 0, "n_steps must be >= 0"),
            (self.buffer_capacity >= self.batch_size, "buffer_capacity must be >= batch_size"),
            (self.warmup_trajectories >= 0, "warmup_trajectories must be >= 0"),
            (0 <= self.hindsight_ratio <= 1, "hindsight_ratio must be in [0, 1]"),
            (0 < self.focus_cosine_threshold < 1, "focus_cosine_threshold must be in (0, 1)"),
            (0 < self.limit_reward_coef <= 1, "limit_reward_coef must be in (0, 1]"),
            (self.reward_floor > 0, "reward_floor must be positive"),
            (self.logz_scale > 0, "logz_scale must be positive"),
            (len(self.hidden_sizes) >= 1 and all(h >= 1 for h in self.hidden_sizes),
             "hidden_sizes must be positive"),
            (self.log_every >= 1, "log_every must be >= 1"),
            (self.checkpoint_every >= 0, "checkpoint_every must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)


def state_encoding_width(spec: GridSpec) -> int:
    return spec.dimensions * spec.side + 1


def encode_states(coords: np.ndarray, spec: GridSpec) -> np.ndarray:
    """One-hot block per grid dimension plus a trailing done flag (0 here: the
    policy only ever sees non-done states)."""
    coords = np.atleast_2d(np.asarray(coords))
    n, d = coords.shape
    out = np.zeros((n, state_encoding_width(spec)))
    cols = coords + np.arange(d) * spec.side
    out[np.arange(n)[:, None], cols] = 1.0
    return out


def encode_state(state: State, spec: GridSpec) -> np.ndarray:
    enc = encode_states(np.array([state.coords]), spec)[0]
    if state.done:
        enc[-1] = 1.0
    return enc


@dataclass
class GFNModel:
    """Forward policy P_F(a|s,c) and conditional log-partition estimator."""

    spec: GridSpec
    policy: nnet.Network
    logz: nnet.Network

    @classmethod
    def create(cls, spec: GridSpec, hidden_sizes: tuple[int, ...], seed: int,
               init_stop_bias: float = 0.0) -> "GFNModel":
        k = spec.objectives
        in_width = state_encoding_width(spec) + encoding_width(k)
        policy = nnet.init_network(
            [in_width, *hidden_sizes, spec.n_actions], seed=seed)
        # discourage the untrained 3-action policy from stopping immediately,
        # so exploration actually reaches high-coordinate-sum regions
        policy.biases[-1][spec.dimensions] = init_stop_bias
        logz = nnet.init_network(
            [encoding_width(k), *hidden_sizes, 1], seed=seed + 1)
        return cls(spec, policy, logz)

    def copy(self) -> "GFNModel":
        return GFNModel(self.spec, self.policy.copy(), self.logz.copy())


@dataclass
class Trajectory:
    """Full state/action path ending in Stop, with its conditioning and rewards."""

    states: list[State]
    actions: list[int]  # 0..D-1 increments, D = Stop
    conditioning: Conditioning
    reward_vec: np.ndarray
    scalar_reward: float


@dataclass
class TrajRecord:
    """Compact replay-buffer record: the action string determines all states."""

    actions: np.ndarray  # int16, ends with the Stop index D
    payload: np.ndarray  # (K,) preference weights or goal direction
    reward_vec: np.ndarray  # (K,) masked achieved objectives


class ReplayBuffer:
    """Bounded FIFO ring; eviction strictly oldest-first."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ConfigError("buffer capacity must be >= 1")
        self.capacity = capacity
        self._records: list[TrajRecord] = []
        self._next = 0
        self.total_inserted = 0

    def __len__(self) -> int:
        return len(self._records)

    def push(self, record: TrajRecord) -> None:
        if len(self._records) < self.capacity:
            self._records.append(record)
        else:
            self._records[self._next] = record
        self._next = (self._next + 1) % self.capacity
        self.total_inserted += 1

    def extend(self, records: list[TrajRecord]) -> None:
        for r in records:
            self.push(r)

    def records(self) -> list[TrajRecord]:
        return list(self._records)

    def draw(self, rng: np.random.Generator, n: int) -> list[TrajRecord]:
        """Uniform draw; without replacement when the buffer holds >= n records."""
        size = len(self._records)
        if size == 0:
            raise TrainingError("cannot draw from an empty replay buffer")
        idx = rng.choice(size, size=n, replace=size < n)
        return [self._records[i] for i in idx]


# -- sampling -------------------------------------------------------------------


def _masked_probs(logits: np.ndarray, legal: np.ndarray) -> np.ndarray:
    z = np.where(legal, logits, -np.inf)
    z = z - z.max(axis=1, keepdims=True)
    p = np.exp(z)
    return p / p.sum(axis=1, keepdims=True)


def _categorical_rows(probs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    u = rng.random((len(probs), 1))
    idx = (probs.cumsum(axis=1) < u).sum(axis=1)
    return np.minimum(idx, probs.shape[1] - 1)


def rollout_batch(policy: nnet.Network, spec: GridSpec, cond_enc: np.ndarray,
                  epsilon: float, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample one trajectory per conditioning row from the masked policy.

    Returns (terminal coords (B, D), padded actions (B, Lmax) int16 with -1
    padding, lengths (B,)).
    """
    b = len(cond_enc)
    d, h = spec.dimensions, spec.side
    max_steps = d * (h - 1) + 1
    coords = np.zeros((b, d), dtype=np.int64)
    actions = np.full((b, max_steps), -1, dtype=np.int16)
    lengths = np.zeros(b, dtype=np.int64)
    alive = np.arange(b)
    t = 0
    while len(alive):
        sub = coords[alive]
        x = np.concatenate([encode_states(sub, spec), cond_enc[alive]], axis=1)
        logits = nnet.apply(policy, x)
        legal = np.concatenate([sub < h - 1, np.ones((len(alive), 1), dtype=bool)], axis=1)
        probs = _masked_probs(logits, legal)
        if epsilon > 0.0:
            explore = rng.random(len(alive)) < epsilon
            if explore.any():
                uniform = legal[explore] / legal[explore].sum(axis=1, keepdims=True)
                probs[explore] = uniform
        acts = _categorical_rows(probs, rng)
        actions[alive, t] = acts.astype(np.int16)
        stopped = acts == d
        if stopped.any():
            lengths[alive[stopped]] = t + 1
        moving = ~stopped
        coords[alive[moving], acts[moving]] += 1
        alive = alive[moving]
        t += 1
    return coords, actions[:, : lengths.max()], lengths


def sample_trajectory(sampler_model: GFNModel, spec: GridSpec, landscape: LandscapeSpec,
                      conditioning: Conditioning, epsilon: float, rng: np.random.Generator,
                      shaped: bool = True) -> Trajectory:
    """Roll out a single trajectory; masked actions never occur."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
    enc = encode(conditioning)[None, :]
    coords, actions, lengths = rollout_batch(sampler_model.policy, spec, enc, epsilon, rng)
    acts = [int(a) for a in actions[0, : lengths[0]]]
    states = [env_mod.initial_state(spec)]
    for a in acts:
        states.append(env_mod.apply_action(spec, states[-1], a))
    r = env_mod.masked_reward(landscape, env_mod.objectives(spec, landscape, states[-1]))
    scalar = cond_mod.conditional_reward(r, conditioning, shaped)
    return Trajectory(states, acts, conditioning, r, scalar)


def sample_conditional(model: GFNModel, spec: GridSpec, landscape: LandscapeSpec,
                       conditioning: Conditioning, n: int, rng: np.random.Generator
                       ) -> list[tuple[tuple[int, ...], np.ndarray, bool]]:
    """n greedy-free (epsilon=0) rollouts from the learned model."""
    if n == 0:
        return []
    enc = np.tile(encode(conditioning), (n, 1))
    coords, _, _ = rollout_batch(model.policy, spec, enc, 0.0, rng)
    rewards = env_mod.masked_reward_batch(landscape, env_mod.objectives_batch(spec, landscape, coords))
    out = []
    for c, r in zip(coords, rewards):
        flag = (isinstance(conditioning, FocusGoal)
                and cond_mod.in_focus(r, conditioning))
        out.append((tuple(int(v) for v in c), r, flag))
    return out


# -- trajectory-balance pieces ----------------------------------------------------


def uniform_backward_logprob(spec: GridSpec, trajectory: Trajectory) -> float:
    """Sum of log(1/|parents|) over increment transitions; the Stop edge is deterministic."""
    total = 0.0
    for s, a in zip(trajectory.states[1:], trajectory.actions):
        if a == spec.dimensions:
            continue
        total -= np.log(len(env_mod.parents(spec, s)))
    return float(total)


def log_reward(r: np.ndarray, conditioning: Conditioning, cfg: TrainConfig) -> float:
    """beta * log of the floored conditional reward."""
    value = cond_mod.conditional_reward(r, conditioning, cfg.shaped_reward)
    return float(cfg.beta * np.log(max(value, cfg.reward_floor)))


def _assemble(records: list[TrajRecord], spec: GridSpec, mode: str) -> dict:
    """Flatten variable-length records into one big (state, action) row matrix."""
    b = len(records)
    d, h = spec.dimensions, spec.side
    lengths = np.array([len(r.actions) for r in records])
    lmax = int(lengths.max())
    acts = np.full((b, lmax), -1, dtype=np.int64)
    for i, r in enumerate(records):
        acts[i, : lengths[i]] = r.actions
    valid = acts >= 0
    inc = valid & (acts < d)
    onehot = np.zeros((b, lmax, d))
    bi, ti = np.nonzero(inc)
    onehot[bi, ti, acts[bi, ti]] = 1.0
    coords_after = np.cumsum(onehot, axis=1)
    coords_before = coords_after - onehot
    # uniform backward policy: one parent per strictly positive coordinate
    pos_counts = (coords_after > 0).sum(axis=2)
    with np.errstate(divide="ignore"):
        log_pb = -np.where(inc, np.log(np.maximum(pos_counts, 1)), 0.0).sum(axis=1)

    payloads = np.stack([r.payload for r in records])
    rewards = np.stack([r.reward_vec for r in records])
    cond_enc = encode_batch(payloads, mode)
    row_b, row_t = np.nonzero(valid)
    states = coords_before[row_b, row_t].astype(np.int64)
    x = np.concatenate([encode_states(states, spec), cond_enc[row_b]], axis=1)
    legal = np.concatenate(
        [states < h - 1, np.ones((len(states), 1), dtype=bool)], axis=1)
    return {
        "x": x,
        "legal": legal,
        "act": acts[row_b, row_t],
        "traj_id": row_b,
        "n_traj": b,
        "log_pb": log_pb,
        "payloads": payloads,
        "rewards": rewards,
        "cond_enc": cond_enc,
    }


def _tb_terms(model: GFNModel, batch: dict, cfg: TrainConfig, mode: str,
              want_grads: bool) -> dict:
    """Per-trajectory balance residuals and (optionally) parameter gradients."""
    logits, cache = nnet.forward(model.policy, batch["x"])
    z = np.where(batch["legal"], logits, -np.inf)
    zmax = z.max(axis=1, keepdims=True)
    lse = zmax + np.log(np.exp(z - zmax).sum(axis=1, keepdims=True))
    logp = z - lse
    rows = np.arange(len(logp))
    log_pf = np.bincount(batch["traj_id"], weights=logp[rows, batch["act"]],
                         minlength=batch["n_traj"])
    # the head output is scaled so the conditional log-partition can span the
    # [beta*log(floor), beta*log(K)] range at the configured learning rate
    logz_out, logz_cache = nnet.forward(model.logz, batch["cond_enc"])
    logz = cfg.logz_scale * logz_out[:, 0]
    scalar = conditional_reward_batch(
        batch["rewards"], batch["payloads"], mode,
        cfg.focus_cosine_threshold, cfg.limit_reward_coef, cfg.shaped_reward)
    log_r = cfg.beta * np.log(np.maximum(scalar, cfg.reward_floor))
    delta = logz + log_pf - log_r - batch["log_pb"]
    loss = float(np.mean(delta**2))
    if not np.isfinite(loss):
        raise TrainingError(f"non-finite trajectory-balance loss (logZ={logz!r})")
    out = {"loss": loss, "delta": delta, "logz": logz}
    if want_grads:
        coeff = 2.0 * delta / batch["n_traj"]
        probs = np.exp(logp)
        grad_rows = -probs * coeff[batch["traj_id"], None]
        grad_rows[rows, batch["act"]] += coeff[batch["traj_id"]]
        out["policy_grads"] = nnet.backward(model.policy, cache, grad_rows)
        out["logz_grads"] = nnet.backward(
            model.logz, logz_cache, cfg.logz_scale * coeff[:, None])
    return out


def tb_loss(model: GFNModel, trajectory: Trajectory, cfg: TrainConfig,
            mode: str | None = None) -> float:
    """(logZ + sum log P_F - log R - log P_B)^2 for one trajectory."""
    if not trajectory.actions or trajectory.actions[-1] != model.spec.dimensions:
        raise ValueError("trajectory must terminate with Stop")
    mode = mode or trajectory.conditioning.mode
    record = TrajRecord(
        np.array(trajectory.actions, dtype=np.int16),
        trajectory.conditioning.payload,
        np.asarray(trajectory.reward_vec, dtype=np.float64),
    )
    batch = _assemble([record], model.spec, mode)
    return _tb_terms(model, batch, cfg, mode, want_grads=False)["loss"]


def hindsight_relabel(record: TrajRecord, rng: np.random.Generator | None = None) -> TrajRecord:
    """Point the goal at the direction actually achieved: d_g <- r / ||r||."""
    norm = float(np.linalg.norm(record.reward_vec))
    if norm == 0.0:
        return record
    return TrajRecord(record.actions, record.reward_vec / norm, record.reward_vec)


# -- trainer ---------------------------------------------------------------------


@dataclass
class StepStats:
    loss: float
    logz_mean: float
    goal_accuracy: float | None
    in_focus_fraction: float | None
    zero_reward_fraction: float
    relabel_count: int
    relabel_cos_min: float | None
    relabel_cos_max: float | None


@dataclass
class TrainResult:
    model: GFNModel
    sampler: GFNModel
    log: list[dict]
    relabel_count: int
    relabel_cos_min: float | None
    relabel_cos_max: float | None


class Trainer:
    """Owns the mutable training state; one logical thread."""

    def __init__(self, spec: GridSpec, landscape: LandscapeSpec, mode: str,
                 goal_source: GoalSource | None, cfg: TrainConfig):
        cfg.validate()
        if mode not in (PREFERENCE, GOAL):
            raise ConfigError(f"unknown conditioning mode {mode!r}")
        if mode == GOAL and goal_source is None:
            raise ConfigError("goal mode needs a goal source")
        self.spec = spec
        self.landscape = landscape
        self.mode = mode
        self.goal_source = goal_source
        self.cfg = cfg
        seeds = np.random.SeedSequence(cfg.seed).spawn(2)
        self.model = GFNModel.create(
            spec, cfg.hidden_sizes, seed=int(seeds[0].generate_state(1)[0]),
            init_stop_bias=cfg.init_stop_bias)
        self.sampler = self.model.copy()
        self.opt_pf = nnet.AdamState.for_network(self.model.policy, cfg.lr_pf)
        self.opt_z = nnet.AdamState.for_network(self.model.logz, cfg.lr_z)
        self.buffer = ReplayBuffer(cfg.buffer_capacity)
        self.rng = np.random.default_rng(seeds[1])
        self.step_index = 0
        self.relabel_count = 0
        self.relabel_cos_min: float | None = None
        self.relabel_cos_max: float | None = None

    # conditioning draws ----------------------------------------------------

    def _draw_payloads(self, n: int) -> np.ndarray:
        if self.mode == PREFERENCE:
            return self.rng.dirichlet(np.ones(self.spec.objectives), size=n)
        goals = [
            self.goal_source.sample_goal(self.rng, self.step_index, self.cfg.n_steps)
            for _ in range(n)
        ]
        return np.stack([g.d_g for g in goals])

    # collection ------------------------------------------------------------

    def _collect(self, n: int) -> tuple[list[TrajRecord], np.ndarray, np.ndarray]:
        payloads = self._draw_payloads(n)
        cond_enc = encode_batch(payloads, self.mode)
        coords, actions, lengths = rollout_batch(
            self.sampler.policy, self.spec, cond_enc, self.cfg.epsilon, self.rng)
        rewards = env_mod.masked_reward_batch(
            self.landscape, env_mod.objectives_batch(self.spec, self.landscape, coords))
        records = [
            TrajRecord(actions[i, : lengths[i]].copy(), payloads[i], rewards[i])
            for i in range(n)
        ]
        return records, payloads, rewards

    def warmup(self) -> None:
        remaining = self.cfg.warmup_trajectories
        while remaining > 0:
            n = min(remaining, self.cfg.batch_size)
            records, _, rewards = self._collect(n)
            self.buffer.extend(records)
            if self.goal_source is not None:
                self.goal_source.observe(rewards)
            remaining -= n

    # hindsight ---------------------------------------------------------------

    def _apply_hindsight(self, records: list[TrajRecord]) -> tuple[list[TrajRecord], int, float | None, float | None]:
        if self.mode != GOAL or self.cfg.hindsight_ratio == 0.0:
            return records, 0, None, None
        rewards = np.stack([r.reward_vec for r in records])
        payloads = np.stack([r.payload for r in records])
        cos = cosine_sim_batch(rewards, payloads)
        eligible = (cos < self.cfg.focus_cosine_threshold) & (
            np.linalg.norm(rewards, axis=1) > 0.0)
        (idx,) = np.nonzero(eligible)
        if len(idx) == 0:
            return records, 0, None, None
        chosen = idx[self.rng.random(len(idx)) < self.cfg.hindsight_ratio]
        if len(chosen) == 0:
            return records, 0, None, None
        out = list(records)
        for i in chosen:
            out[i] = hindsight_relabel(out[i])
        new_cos = cosine_sim_batch(
            np.stack([out[i].reward_vec for i in chosen]),
            np.stack([out[i].payload for i in chosen]))
        return out, len(chosen), float(new_cos.min()), float(new_cos.max())

    # one full step -----------------------------------------------------------

    def train_step(self) -> StepStats:
        cfg = self.cfg
        fresh, payloads, rewards = self._collect(cfg.batch_size)
        self.buffer.extend(fresh)
        batch_records = self.buffer.draw(self.rng, cfg.batch_size)
        batch_records, n_relabel, cos_min, cos_max = self._apply_hindsight(batch_records)

        batch = _assemble(batch_records, self.spec, self.mode)
        terms = _tb_terms(self.model, batch, cfg, self.mode, want_grads=True)
        try:
            nnet.adam_step(self.model.policy, terms["policy_grads"], self.opt_pf)
            nnet.adam_step(self.model.logz, terms["logz_grads"], self.opt_z)
        except TrainingError as err:
            raise TrainingError(str(err), step=self.step_index) from err
        nnet.soft_update(self.sampler.policy, self.model.policy, cfg.tau)

        if self.goal_source is not None:
            self.goal_source.observe(rewards)

        zero_frac = float(np.mean(np.linalg.norm(rewards, axis=1) == 0.0))
        acc = None
        focus_frac = None
        if self.mode == GOAL:
            cos = cosine_sim_batch(rewards, payloads)
            acc = float(np.mean(cos >= cfg.focus_cosine_threshold))
            train_cos = cosine_sim_batch(
                np.stack([r.reward_vec for r in batch_records]),
                np.stack([r.payload for r in batch_records]))
            focus_frac = float(np.mean(train_cos >= cfg.focus_cosine_threshold))

        self.relabel_count += n_relabel
        if cos_min is not None:
            self.relabel_cos_min = cos_min if self.relabel_cos_min is None else min(self.relabel_cos_min, cos_min)
            self.relabel_cos_max = cos_max if self.relabel_cos_max is None else max(self.relabel_cos_max, cos_max)
        self.step_index += 1
        return StepStats(terms["loss"], float(np.mean(terms["logz"])), acc,
                         focus_frac, zero_frac, n_relabel, cos_min, cos_max)

    # loop ----------------------------------------------------------------------

    def run(self, n_steps: int | None = None) -> list[dict]:
        """Run train steps until cfg.n_steps, logging every cfg.log_every steps."""
        cfg = self.cfg
        target = cfg.n_steps if n_steps is None else min(cfg.n_steps, self.step_index + n_steps)
        log: list[dict] = []
        window: list[StepStats] = []
        while self.step_index < target:
            window.append(self.train_step())
            if self.step_index % cfg.log_every == 0 or self.step_index == target:
                mean = lambda vals: (float(np.mean(vals)) if vals else None)
                accs = [w.goal_accuracy for w in window if w.goal_accuracy is not None]
                focus = [w.in_focus_fraction for w in window if w.in_focus_fraction is not None]
                log.append({
                    "step": self.step_index,
                    "mean_loss": mean([w.loss for w in window]),
                    "logZ_mean": mean([w.logz_mean for w in window]),
                    "goal_accuracy": mean(accs),
                    "in_focus_fraction": mean(focus),
                    "zero_reward_fraction": mean([w.zero_reward_fraction for w in window]),
                })
                window = []
        return log


def train(spec: GridSpec, landscape: LandscapeSpec, mode: str,
          goal_source: GoalSource | None, cfg: TrainConfig) -> TrainResult:
    """Warmup collection followed by cfg.n_steps trajectory-balance steps."""
    trainer = Trainer(spec, landscape, mode, goal_source, cfg)
    trainer.warmup()
    log = trainer.run()
    return TrainResult(trainer.model, trainer.sampler, log,
                       trainer.relabel_count, trainer.relabel_cos_min,
                       trainer.relabel_cos_max)
