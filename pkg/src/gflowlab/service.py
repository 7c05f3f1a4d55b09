"""HTTP inference service over a trained checkpoint.

Three JSON endpoints: GET /model/info, POST /sample, GET /landscape. The
loaded checkpoint is immutable shared state; every request owns an isolated
RNG derived from its seed field, so identical requests produce byte-identical
responses regardless of interleaving.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import numpy as np

from . import env as env_mod
from . import metrics as metrics_mod
from .checkpoint import Checkpoint, load as load_checkpoint
from .conditioning import GOAL, PREFERENCE, cosine_sim_batch, encode_batch
from .gfn import GFNModel, rollout_batch

MAX_SAMPLES = 10**5


@dataclass
class ServiceState:
    """Immutable after load: model, config, cached landscape image and front."""

    checkpoint: Checkpoint
    model: GFNModel
    points: np.ndarray  # (H^D, K) unmasked objective image
    masked: np.ndarray  # (H^D,) bool
    front: np.ndarray  # (F, K)

    @classmethod
    def from_checkpoint(cls, path: str | Path) -> "ServiceState":
        ck = load_checkpoint(path)
        run = ck.run
        model = GFNModel(run.grid, ck.policy, ck.logz)
        coords, rewards = env_mod.enumerate_terminals(run.grid, run.landscape)
        raw = env_mod.objectives_batch(run.grid, run.landscape, coords)
        masked = np.linalg.norm(rewards, axis=1) == 0.0
        front = metrics_mod.true_front(run.grid, run.landscape)
        return cls(ck, model, raw, masked, front)


class ApiError(Exception):
    def __init__(self, status: int, message: str):
        super().__init__(message)
        self.status = status
        self.message = message


def handle_model_info(state: ServiceState) -> dict:
    run = state.checkpoint.run
    return {
        "K": run.grid.objectives,
        "D": run.grid.dimensions,
        "H": run.grid.side,
        "mode": state.checkpoint.mode,
        "landscape": run.landscape.preset,
        "c_g": run.train.focus_cosine_threshold,
        "m_g": run.train.limit_reward_coef,
        "training_steps": state.checkpoint.step,
    }


def handle_sample(state: ServiceState, body: dict) -> dict:
    run = state.checkpoint.run
    k = run.grid.objectives
    mode = body.get("mode")
    if mode not in (PREFERENCE, GOAL):
        raise ApiError(400, f"mode must be '{PREFERENCE}' or '{GOAL}'")
    if mode != state.checkpoint.mode:
        raise ApiError(400, f"checkpoint was trained in {state.checkpoint.mode!r} mode")
    n = body.get("n")
    if not isinstance(n, int) or n < 0 or n > MAX_SAMPLES:
        raise ApiError(400, f"n must be an integer in [0, {MAX_SAMPLES}]")
    seed = body.get("seed", 0)
    if not isinstance(seed, int):
        raise ApiError(400, "seed must be an integer")

    if mode == GOAL:
        d_g = body.get("d_g")
        if not isinstance(d_g, list) or len(d_g) != k:
            raise ApiError(400, f"d_g must be a list of {k} numbers")
        d = np.asarray(d_g, dtype=np.float64)
        if np.any(d < 0):
            raise ApiError(400, "d_g must be componentwise nonnegative")
        norm = float(np.linalg.norm(d))
        if norm == 0.0:
            raise ApiError(422, "d_g must have a direction (zero vector given)")
        payload = d / norm
        c_g = body.get("c_g_override", run.train.focus_cosine_threshold)
        if not isinstance(c_g, (int, float)) or not 0.0 < c_g < 1.0:
            raise ApiError(400, "c_g_override must be in (0, 1)")
    else:
        w = body.get("w")
        if not isinstance(w, list) or len(w) != k:
            raise ApiError(400, f"w must be a list of {k} numbers")
        payload = np.asarray(w, dtype=np.float64)
        if np.any(payload < 0) or abs(payload.sum() - 1.0) > 1e-9:
            raise ApiError(400, "w must be nonnegative and sum to 1")
        c_g = run.train.focus_cosine_threshold

    if n == 0:
        return {"samples": []}

    rng = np.random.default_rng(seed)
    enc = encode_batch(np.tile(payload, (n, 1)), mode)
    coords, _, _ = rollout_batch(state.model.policy, run.grid, enc, 0.0, rng)
    rewards = env_mod.masked_reward_batch(
        run.landscape, env_mod.objectives_batch(run.grid, run.landscape, coords))
    from .conditioning import conditional_reward_batch
    scalars = conditional_reward_batch(
        rewards, np.tile(payload, (n, 1)), mode,
        c_g, run.train.limit_reward_coef, run.train.shaped_reward)
    out: dict = {"samples": []}
    if mode == GOAL:
        flags = cosine_sim_batch(rewards, payload) >= c_g
        out["goal_accuracy"] = float(np.mean(flags))
    for i in range(n):
        rec = {
            "coords": [int(v) for v in coords[i]],
            "r": [float(v) for v in rewards[i]],
            "scalar_reward": float(scalars[i]),
        }
        if mode == GOAL:
            rec["in_focus"] = bool(flags[i])
        out["samples"].append(rec)
    return out


def handle_landscape(state: ServiceState) -> dict:
    return {
        "points": [
            {"r": [float(v) for v in p], "masked": bool(m)}
            for p, m in zip(state.points, state.masked)
        ],
        "front": [[float(v) for v in p] for p in state.front],
    }


def _make_handler(state: ServiceState, cors: bool):
    class Handler(BaseHTTPRequestHandler):
        def log_message(self, fmt, *args):
            pass

        def _send(self, status: int, payload: dict) -> None:
            body = json.dumps(payload, sort_keys=True).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json; charset=utf-8")
            self.send_header("Content-Length", str(len(body)))
            if cors:
                self.send_header("Access-Control-Allow-Origin", "*")
                self.send_header("Access-Control-Allow-Headers", "Content-Type")
                self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
            self.end_headers()
            self.wfile.write(body)

        def do_OPTIONS(self):
            self._send(204 if cors else 405, {})

        def do_GET(self):
            if self.path == "/model/info":
                self._send(200, handle_model_info(state))
            elif self.path == "/landscape":
                self._send(200, handle_landscape(state))
            else:
                self._send(404, {"error": f"unknown path {self.path}"})

        def do_POST(self):
            if self.path != "/sample":
                self._send(404, {"error": f"unknown path {self.path}"})
                return
            try:
                length = int(self.headers.get("Content-Length", 0))
                body = json.loads(self.rfile.read(length) or b"{}")
                if not isinstance(body, dict):
                    raise ApiError(400, "request body must be a JSON object")
                self._send(200, handle_sample(state, body))
            except ApiError as err:
                self._send(err.status, {"error": err.message})
            except json.JSONDecodeError:
                self._send(400, {"error": "request body is not valid JSON"})

    return Handler


def make_server(state: ServiceState, host: str = "127.0.0.1", port: int = 0,
                cors: bool = False) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), _make_handler(state, cors))


def serve_forever(checkpoint_path: str | Path, host: str, port: int,
                  cors: bool = False) -> None:
    state = ServiceState.from_checkpoint(checkpoint_path)
    server = make_server(state, host, port, cors)
    print(f"serving {checkpoint_path} on http://{host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()


def start_background(checkpoint_path: str | Path, host: str = "127.0.0.1",
                     port: int = 0, cors: bool = False) -> tuple[ThreadingHTTPServer, int]:
    """Start the service on a daemon thread; returns (server, bound port)."""
    state = ServiceState.from_checkpoint(checkpoint_path)
    server = make_server(state, host, port, cors)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, server.server_address[1]
