"""Single-file checkpoint container.

Layout: magic + version, a JSON header (config echo, step, RNG state, Tab-GS
state, buffer bookkeeping), then flat binary sections (networks, optimizer
moments, replay records, optional objective table) as shape-headed
little-endian float64 blocks. A loaded checkpoint resumes training
bit-identically.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import nnet
from .config import RunConfig, parse_config_text, resolve
from .errors import ConfigError
from .gfn import ReplayBuffer, Trainer, TrajRecord
from .goalsampler import TabGS

MAGIC = b"GFLB"
VERSION = 1


def _pack_buffer(buffer: ReplayBuffer) -> tuple[dict, bytes]:
    records = buffer._records
    lengths = np.array([len(r.actions) for r in records], dtype=np.int64)
    actions = (np.concatenate([r.actions for r in records])
               if records else np.zeros(0, dtype=np.int16))
    payloads = (np.stack([r.payload for r in records])
                if records else np.zeros((0, 0)))
    rewards = (np.stack([r.reward_vec for r in records])
               if records else np.zeros((0, 0)))
    meta = {
        "capacity": buffer.capacity,
        "next": buffer._next,
        "total_inserted": buffer.total_inserted,
        "n_records": len(records),
    }
    blob = struct.pack("<Q", actions.size) + actions.astype("<i2").tobytes()
    blob += nnet.arrays_to_bytes([lengths.astype(np.float64), payloads, rewards])
    return meta, blob


def _unpack_buffer(meta: dict, blob: bytes, offset: int) -> tuple[ReplayBuffer, int]:
    (n_actions,) = struct.unpack_from("<Q", blob, offset)
    offset += 8
    actions = np.frombuffer(blob, dtype="<i2", count=n_actions, offset=offset).copy()
    offset += 2 * n_actions
    arrays, offset = nnet.arrays_from_bytes(blob, offset)
    lengths = arrays[0].astype(np.int64)
    payloads, rewards = arrays[1], arrays[2]
    buf = ReplayBuffer(meta["capacity"])
    pos = 0
    for i, ln in enumerate(lengths):
        buf._records.append(TrajRecord(
            actions[pos: pos + ln].copy(), payloads[i].copy(), rewards[i].copy()))
        pos += int(ln)
    buf._next = meta["next"]
    buf.total_inserted = meta["total_inserted"]
    return buf, offset


def save(path: str | Path, trainer: Trainer, run: RunConfig) -> None:
    header = {
        "version": VERSION,
        "config_text": run.text,
        "mode": trainer.mode,
        "step": trainer.step_index,
        "rng_state": trainer.rng.bit_generator.state,
        "opt_pf_step": trainer.opt_pf.step,
        "opt_z_step": trainer.opt_z.step,
        "relabel": {
            "count": trainer.relabel_count,
            "cos_min": trainer.relabel_cos_min,
            "cos_max": trainer.relabel_cos_max,
        },
        "tabgs": (trainer.goal_source.state_dict()
                  if isinstance(trainer.goal_source, TabGS) else None),
        "has_table": run.landscape.table is not None,
    }
    buffer_meta, buffer_blob = _pack_buffer(trainer.buffer)
    header["buffer"] = buffer_meta

    sections = [
        nnet.network_to_bytes(trainer.model.policy),
        nnet.network_to_bytes(trainer.model.logz),
        nnet.network_to_bytes(trainer.sampler.policy),
        nnet.arrays_to_bytes(trainer.opt_pf.m + trainer.opt_pf.v),
        nnet.arrays_to_bytes(trainer.opt_z.m + trainer.opt_z.v),
        buffer_blob,
    ]
    if run.landscape.table is not None:
        sections.append(nnet.arrays_to_bytes([run.landscape.table]))

    payload = json.dumps(header, sort_keys=True).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack("<Q", len(payload)))
        fh.write(payload)
        for sec in sections:
            fh.write(sec)


@dataclass
class Checkpoint:
    run: RunConfig
    header: dict
    policy: nnet.Network
    logz: nnet.Network
    sampler_policy: nnet.Network
    opt_pf_moments: list[np.ndarray]
    opt_z_moments: list[np.ndarray]
    buffer: ReplayBuffer

    @property
    def step(self) -> int:
        return self.header["step"]

    @property
    def mode(self) -> str:
        return self.header["mode"]

    def restore_trainer(self) -> Trainer:
        """Rebuild a Trainer that continues bit-identically from this state."""
        run = self.run
        trainer = Trainer(run.grid, run.landscape, self.mode,
                          run.make_goal_source(), run.train)
        trainer.model.policy = self.policy.copy()
        trainer.model.logz = self.logz.copy()
        trainer.sampler.policy = self.sampler_policy.copy()
        n = len(self.opt_pf_moments) // 2
        trainer.opt_pf.m = [a.copy() for a in self.opt_pf_moments[:n]]
        trainer.opt_pf.v = [a.copy() for a in self.opt_pf_moments[n:]]
        trainer.opt_pf.step = self.header["opt_pf_step"]
        nz = len(self.opt_z_moments) // 2
        trainer.opt_z.m = [a.copy() for a in self.opt_z_moments[:nz]]
        trainer.opt_z.v = [a.copy() for a in self.opt_z_moments[nz:]]
        trainer.opt_z.step = self.header["opt_z_step"]
        trainer.buffer = self.buffer
        trainer.rng.bit_generator.state = self.header["rng_state"]
        trainer.step_index = self.header["step"]
        rel = self.header["relabel"]
        trainer.relabel_count = rel["count"]
        trainer.relabel_cos_min = rel["cos_min"]
        trainer.relabel_cos_max = rel["cos_max"]
        if self.header["tabgs"] is not None:
            trainer.goal_source.load_state_dict(self.header["tabgs"])
        return trainer


def load(path: str | Path) -> Checkpoint:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"checkpoint not found: {path}")
    blob = path.read_bytes()
    if blob[:4] != MAGIC:
        raise ConfigError(f"{path} is not a checkpoint (bad magic)")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != VERSION:
        raise ConfigError(f"checkpoint version {version} unsupported (want {VERSION})")
    (n_json,) = struct.unpack_from("<Q", blob, 8)
    offset = 16
    header = json.loads(blob[offset: offset + n_json].decode("utf-8"))
    offset += n_json

    policy, offset = nnet.network_from_bytes(blob, offset)
    logz, offset = nnet.network_from_bytes(blob, offset)
    sampler_policy, offset = nnet.network_from_bytes(blob, offset)
    opt_pf, offset = nnet.arrays_from_bytes(blob, offset)
    opt_z, offset = nnet.arrays_from_bytes(blob, offset)
    buffer, offset = _unpack_buffer(header["buffer"], blob, offset)

    raw = parse_config_text(header["config_text"], source=str(path))
    table = None
    if header["has_table"]:
        arrays, offset = nnet.arrays_from_bytes(blob, offset)
        table = arrays[0]
        # the embedded table takes precedence over any stale table_path
        raw.pop("landscape.table_path", None)
        raw["landscape.source"] = "linear-coords"
    run = resolve(raw)
    run.text = header["config_text"]
    if table is not None:
        from .env import LandscapeSpec
        run.landscape = LandscapeSpec(
            preset=raw.get("landscape.preset", "unrestrained"),
            params=run.landscape.params, source="tabulated", table=table)

    return Checkpoint(run, header, policy, logz, sampler_policy,
                      opt_pf, opt_z, buffer)
