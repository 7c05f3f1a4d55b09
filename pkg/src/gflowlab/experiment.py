"""Seeded experiment orchestration: training runs, evaluation, comparison
grids, and oracle emission.

Each cell (algorithm x landscape x seed) trains in-process, evaluates with a
deterministic evaluation RNG, and writes line-delimited logs next to the
rendered figures. Outputs carry no timestamps, so identical configs and
seeds produce byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import checkpoint as ckpt_mod
from . import env as env_mod
from . import metrics as metrics_mod
from . import plots
from .conditioning import GOAL, PREFERENCE, cosine_sim_batch, encode_batch
from .config import RunConfig
from .env import LANDSCAPE_NAMES
from .errors import ConfigError
from .gfn import Trainer, rollout_batch
from .goalsampler import TabGS, uniform_direction
from .metrics import MetricReport, SampleSet

ALGORITHMS = ("pref", "goal", "goal-tabgs")
METRIC_NAMES = ("igd", "pc_ent", "avg_pcc", "goal_accuracy", "zero_reward_fraction")


def algorithm_overrides(algorithm: str, batch_size: str = "64") -> dict[str, str]:
    """Per-algorithm config deltas mirroring the hyperparameter table's two columns."""
    if algorithm == "pref":
        # the preference-conditioned column trains purely on-policy
        return {"mode": PREFERENCE, "train.buffer_capacity": batch_size,
                "train.warmup_trajectories": "0", "train.hindsight_ratio": "0.0"}
    if algorithm == "goal":
        return {"mode": GOAL, "goal_source": "uniform"}
    if algorithm == "goal-tabgs":
        return {"mode": GOAL, "goal_source": "tabular"}
    raise ConfigError(f"unknown algorithm {algorithm!r}; known: {ALGORITHMS}")


def config_digest(run: RunConfig, seed: int) -> str:
    payload = run.text + f"\nseed={seed}"
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# -- evaluation -----------------------------------------------------------------


@dataclass
class EvalResult:
    samples: SampleSet
    coords: np.ndarray
    scalars: np.ndarray
    metrics: dict


def draw_eval_payloads(run: RunConfig, goal_source, n: int,
                       rng: np.random.Generator) -> np.ndarray:
    if run.mode == PREFERENCE:
        return rng.dirichlet(np.ones(run.grid.objectives), size=n)
    if isinstance(goal_source, TabGS):
        # evaluation draws from the frozen stationary goal distribution
        p = goal_source.stationary_probabilities()
        idx = rng.choice(len(goal_source.directions), size=n, p=p)
        return goal_source.directions[idx]
    return np.stack([uniform_direction(run.grid.objectives, rng) for _ in range(n)])


def references_for(run: RunConfig) -> np.ndarray:
    if run.eval_reference == "front":
        return metrics_mod.true_front(run.grid, run.landscape)
    return metrics_mod.hypercube_face_references(run.grid.objectives, run.face_resolution)


def evaluate(run: RunConfig, model, goal_source, seed: int,
             n: int | None = None, payloads: np.ndarray | None = None) -> EvalResult:
    """Sample the trained model under fresh conditionings and score it."""
    n = run.eval_n_samples if n is None else n
    rng = np.random.default_rng(np.random.SeedSequence((seed, 0xE7A1)))
    if n == 0:
        empty = SampleSet(np.zeros((0, run.grid.objectives)),
                          np.zeros((0, run.grid.objectives)), np.zeros(0, dtype=bool))
        return EvalResult(empty, np.zeros((0, run.grid.dimensions), dtype=int),
                          np.zeros(0), {name: None for name in METRIC_NAMES})
    if payloads is None:
        payloads = draw_eval_payloads(run, goal_source, n, rng)
    else:
        payloads = np.asarray(payloads, dtype=np.float64)[
            np.arange(n) % len(payloads)]
    enc = encode_batch(payloads, run.mode)
    coords, _, _ = rollout_batch(model.policy, run.grid, enc, 0.0, rng)
    rewards = env_mod.masked_reward_batch(
        run.landscape, env_mod.objectives_batch(run.grid, run.landscape, coords))
    tc = run.train
    from .conditioning import conditional_reward_batch
    scalars = conditional_reward_batch(rewards, payloads, run.mode,
                                       tc.focus_cosine_threshold,
                                       tc.limit_reward_coef, tc.shaped_reward)
    flags = None
    if run.mode == GOAL:
        flags = cosine_sim_batch(rewards, payloads) >= tc.focus_cosine_threshold
    samples = SampleSet(rewards, payloads, flags)

    refs = references_for(run)
    kept = (metrics_mod.filter_out_of_focus(samples) if run.mode == GOAL
            else samples.nonzero())
    m: dict = {
        "zero_reward_fraction": samples.zero_reward_fraction(),
        "goal_accuracy": (metrics_mod.goal_accuracy(samples)
                          if run.mode == GOAL else None),
        "n_kept": len(kept),
    }
    if len(kept) >= 2 and len(refs) > 0:
        m["igd"] = metrics_mod.igd(kept, refs)
        m["pc_ent"] = metrics_mod.pc_ent(kept, refs)
        m["avg_pcc"] = metrics_mod.avg_pcc(kept)
    else:
        m["igd"] = m["pc_ent"] = m["avg_pcc"] = None
    if run.mode == GOAL and len(kept) > 0:
        m["mean_in_cone_cosine"] = float(
            np.mean(cosine_sim_batch(kept.rewards, kept.payloads)))
    else:
        m["mean_in_cone_cosine"] = None
    return EvalResult(samples, coords, scalars, m)


# -- one cell -------------------------------------------------------------------


def write_jsonl(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_jsonl(path: Path) -> list[dict]:
    return [json.loads(line) for line in Path(path).read_text().splitlines() if line]


def sample_log_records(seed: int, result: EvalResult) -> list[dict]:
    recs = []
    s = result.samples
    for i in range(len(s)):
        recs.append({
            "seed": seed,
            "payload": [float(v) for v in s.payloads[i]],
            "coords": [int(v) for v in result.coords[i]],
            "reward": [float(v) for v in s.rewards[i]],
            "in_focus": (bool(s.in_focus[i]) if s.in_focus is not None else None),
            "scalar_reward": float(result.scalars[i]),
        })
    return recs


def train_one_seed(run: RunConfig, seed: int) -> Trainer:
    seeded = run.with_seed(seed)
    trainer = Trainer(seeded.grid, seeded.landscape, seeded.mode,
                      seeded.make_goal_source(), seeded.train)
    trainer.warmup()
    return trainer


def run_cell(run: RunConfig, seed: int, out_dir: Path,
             write_checkpoint: bool = False, figures: bool = True,
             reuse: bool = False) -> dict:
    """Train one seed end to end, evaluate, and write the cell's artifacts."""
    out_dir = Path(out_dir)
    digest = config_digest(run, seed)
    summary_path = out_dir / "summary.json"
    if reuse and summary_path.exists():
        summary = json.loads(summary_path.read_text())
        if summary.get("config_digest") == digest:
            return summary

    seeded = run.with_seed(seed)
    trainer = train_one_seed(run, seed)
    log = trainer.run()
    result = evaluate(seeded, trainer.model, trainer.goal_source, seed)

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.txt").write_text(run.text + f"\n# seed = {seed}\n")
    write_jsonl(out_dir / "train_log.jsonl", log)
    write_jsonl(out_dir / "samples.jsonl", sample_log_records(seed, result))
    summary = {
        "config_digest": digest,
        "seed": seed,
        "mode": run.mode,
        "landscape": run.landscape.preset,
        "metrics": result.metrics,
        "relabel_count": trainer.relabel_count,
        "relabel_cos_min": trainer.relabel_cos_min,
        "relabel_cos_max": trainer.relabel_cos_max,
        "final_log": (log[-1] if log else None),
        "train_log_path": "train_log.jsonl",
        "tabgs": (trainer.goal_source.state_dict()
                  if isinstance(trainer.goal_source, TabGS) else None),
    }
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=1)
    if write_checkpoint:
        ckpt_mod.save(out_dir / "checkpoint.gfl", trainer, seeded)
    if figures:
        if log:
            plots.learning_curves_png(log, out_dir / "learning_curves.png")
        if len(result.samples) > 0:
            plots.emit_scatter_svg(result.samples.rewards, result.samples.payloads,
                                   "angle", out_dir / "scatter_angle.svg")
            plots.emit_scatter_svg(result.samples.rewards, result.samples.payloads,
                                   "density", out_dir / "scatter_density.svg")
    return summary


# -- comparison grids -------------------------------------------------------------


def _cell_worker(args: tuple) -> tuple[str, str, int, dict | None, str | None]:
    algo, preset, seed, pairs, out_dir, reuse = args
    from .config import from_pairs
    try:
        run = from_pairs(pairs)
        summary = run_cell(run, seed, Path(out_dir), reuse=reuse)
        return algo, preset, seed, summary, None
    except Exception as err:  # cell isolation: a failure must not sink the grid
        return algo, preset, seed, None, f"{type(err).__name__}: {err}"


def compare(base_pairs: dict[str, str], algorithms: list[str],
            landscapes: list[str], seeds: list[int], out_dir: Path,
            workers: int = 2, reuse: bool = False,
            extra_axis: dict[str, list[str]] | None = None) -> dict:
    """Train/evaluate every (algorithm, landscape, seed) cell and build the
    aligned comparison table. Failed cells are marked and skipped."""
    out_dir = Path(out_dir)
    jobs = []
    axis_items = list((extra_axis or {"": [""]}).items())
    axis_key, axis_values = axis_items[0]
    for algo in algorithms:
        for preset in landscapes:
            for axis_value in axis_values:
                for seed in seeds:
                    pairs = dict(base_pairs)
                    pairs.update(algorithm_overrides(
                        algo, pairs.get("train.batch_size", "64")))
                    pairs["landscape.preset"] = preset
                    pairs["seeds"] = str(seed)
                    label = algo if not axis_key else f"{algo}[{axis_key}={axis_value}]"
                    if axis_key:
                        pairs[axis_key] = axis_value
                    cell_dir = out_dir / label / preset / f"seed{seed}"
                    jobs.append((label, preset, seed, pairs, str(cell_dir), reuse))

    results: dict = {}
    errors: dict = {}
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for algo, preset, seed, summary, err in pool.map(_cell_worker, jobs):
                if err is None:
                    results[(algo, preset, seed)] = summary
                else:
                    errors[(algo, preset, seed)] = err
    else:
        for job in jobs:
            algo, preset, seed, summary, err = _cell_worker(job)
            if err is None:
                results[(algo, preset, seed)] = summary
            else:
                errors[(algo, preset, seed)] = err

    labels = []
    for algo in algorithms:
        for axis_value in axis_values:
            labels.append(algo if not axis_key else f"{algo}[{axis_key}={axis_value}]")
    table = build_table(results, labels, landscapes, seeds)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(table)
    rows = []
    for (algo, preset, seed), summary in sorted(results.items()):
        rows.append({"algorithm": algo, "landscape": preset, "seed": seed,
                     **{k: summary["metrics"].get(k) for k in METRIC_NAMES}})
    for (algo, preset, seed), err in sorted(errors.items()):
        rows.append({"algorithm": algo, "landscape": preset, "seed": seed,
                     "error": err})
    write_jsonl(out_dir / "metrics.jsonl", rows)

    cells_first_seed = {}
    for (algo, preset, seed), summary in results.items():
        if seed != seeds[0]:
            continue
        samples_path = out_dir / algo / preset / f"seed{seed}" / "samples.jsonl"
        if samples_path.exists():
            recs = read_jsonl(samples_path)
            cells_first_seed[(algo, preset)] = {
                "rewards": np.array([r["reward"] for r in recs]),
                "payloads": np.array([r["payload"] for r in recs]),
            }
    if cells_first_seed and base_pairs.get("grid.objectives", "2") == "2":
        plots.comparison_grid_png(cells_first_seed, landscapes, labels,
                                  "angle", out_dir / "comparison_angle.png")
        plots.comparison_grid_png(cells_first_seed, landscapes, labels,
                                  "density", out_dir / "comparison_density.png")
    return {"results": results, "errors": errors, "table": table}


def build_table(results: dict, algorithms: list[str], landscapes: list[str],
                seeds: list[int]) -> str:
    """Aligned text table: metric x algorithm rows, landscape columns,
    mean +/- sem over seeds."""
    col_w = max(22, max((len(l) for l in landscapes), default=10) + 2)
    name_w = max(len(a) for a in algorithms) + 12
    lines = []
    header = " " * name_w + "".join(f"{l:>{col_w}}" for l in landscapes)
    lines.append(header)
    for metric in ("igd", "avg_pcc", "pc_ent", "goal_accuracy"):
        for algo in algorithms:
            report_cells = []
            for preset in landscapes:
                rep = MetricReport()
                for seed in seeds:
                    summary = results.get((algo, preset, seed))
                    if summary is None:
                        continue
                    v = summary["metrics"].get(metric)
                    if v is not None:
                        rep.add(metric, v)
                if metric in rep.per_seed:
                    report_cells.append(rep.format_cell(metric))
                else:
                    report_cells.append("failed" if any(
                        (algo, preset, s) not in results for s in seeds) else "-")
            label = f"{metric} | {algo}"
            lines.append(f"{label:<{name_w}}" + "".join(
                f"{c:>{col_w}}" for c in report_cells))
        lines.append("")
    return "\n".join(lines) + "\n"


# -- oracle emission ----------------------------------------------------------------


def emit_oracle(run: RunConfig, out_dir: Path) -> dict:
    """Write the enumerated true front, the exact tempered distribution for a
    centered conditioning, and the landscape figure."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    front = metrics_mod.true_front(run.grid, run.landscape)
    coords, rewards = env_mod.enumerate_terminals(run.grid, run.landscape)
    masked = np.linalg.norm(rewards, axis=1) == 0.0

    with open(out_dir / "front.txt", "w") as fh:
        for p in front:
            fh.write(" ".join(repr(float(v)) for v in p) + "\n")

    from .conditioning import FocusGoal, PreferenceVector
    k = run.grid.objectives
    if run.mode == GOAL:
        conditioning = FocusGoal(np.ones(k) / np.sqrt(k),
                                 run.train.focus_cosine_threshold,
                                 run.train.limit_reward_coef)
    else:
        conditioning = PreferenceVector(np.ones(k) / k)
    p = metrics_mod.exact_distribution(run.grid, run.landscape, conditioning,
                                       run.train.beta, run.train.shaped_reward,
                                       run.train.reward_floor)
    with open(out_dir / "exact_distribution.txt", "w") as fh:
        for c, prob in zip(coords, p):
            fh.write(" ".join(str(int(v)) for v in c) + " " + repr(float(prob)) + "\n")

    raw_image = env_mod.objectives_batch(run.grid, run.landscape, coords)
    if k == 2:
        plots.landscape_png(raw_image, masked, front, out_dir / "landscape.png")
    return {"front_size": len(front), "n_terminals": len(coords),
            "masked_fraction": float(masked.mean())}
