"""Minimal feedforward network with hand-written reverse-mode gradients.

This is the only learning substrate in the package: tanh hidden layers, a
linear output layer, an Adam-style optimizer, and the soft update used for
the sampling copy of the policy. Everything is float64 numpy and fully
deterministic given a seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, TrainingError

DEFAULT_HIDDEN = (128, 128)


@dataclass
class Network:
    """Fully-connected net. weights[l] has shape (n_in, n_out), biases[l] (n_out,)."""

    layer_sizes: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    def copy(self) -> "Network":
        return Network(
            list(self.layer_sizes),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
        )

    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases


@dataclass
class Gradients:
    """Shape tree congruent with the owning Network's parameters."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]

    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases


@dataclass
class AdamState:
    """Per-parameter moment accumulators for the adaptive-moment update."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_network(cls, net: Network, lr: float) -> "AdamState":
        return cls(
            lr=lr,
            m=[np.zeros_like(p) for p in net.params()],
            v=[np.zeros_like(p) for p in net.params()],
        )


def init_network(layer_sizes: list[int], seed: int) -> Network:
    """Glorot-uniform weights in [-s, s] with s = sqrt(6/(fan_in+fan_out)), zero biases."""
    if len(layer_sizes) < 2 or any(s < 1 for s in layer_sizes):
        raise ConfigError(f"layer_sizes needs >= 2 entries, all >= 1, got {layer_sizes}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for n_in, n_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        s = np.sqrt(6.0 / (n_in + n_out))
        weights.append(rng.uniform(-s, s, size=(n_in, n_out)))
        biases.append(np.zeros(n_out))
    return Network(list(layer_sizes), weights, biases)


def forward(net: Network, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    """Run the net on a vector (n_in,) or batch (N, n_in).

    Returns (output, cache); the cache holds each layer's input activation and
    is what backward() consumes.
    """
    x = np.asarray(x, dtype=np.float64)
    squeeze = x.ndim == 1
    a = x[None, :] if squeeze else x
    if a.shape[1] != net.layer_sizes[0]:
        raise ValueError(
            f"input width {a.shape[1]} != first layer size {net.layer_sizes[0]}"
        )
    cache = [a]
    last = net.n_layers - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w + b
        a = z if l == last else np.tanh(z)
        if l != last:
            cache.append(a)
    return (a[0] if squeeze else a), cache


def apply(net: Network, x: np.ndarray) -> np.ndarray:
    """Forward pass without keeping a cache (sampling/eval hot path)."""
    a = np.asarray(x, dtype=np.float64)
    last = net.n_layers - 1
    for l, (w, b) in enumerate(zip(net.weights, net.biases)):
        a = a @ w + b
        if l != last:
            np.tanh(a, out=a)
    return a


def backward(net: Network, cache: list[np.ndarray], output_grad: np.ndarray) -> Gradients:
    """Gradient of <output_grad, output> w.r.t. every parameter.

    For batched caches the gradient sums over rows, i.e. it differentiates
    sum_n <output_grad[n], output[n]>.
    """
    g = np.asarray(output_grad, dtype=np.float64)
    if g.ndim == 1:
        g = g[None, :]
    if len(cache) != net.n_layers or g.shape != (cache[0].shape[0], net.layer_sizes[-1]):
        raise ValueError("cache/output_grad shapes do not match this network")
    gw: list[np.ndarray] = [None] * net.n_layers  # type: ignore[list-item]
    gb: list[np.ndarray] = [None] * net.n_layers  # type: ignore[list-item]
    delta = g
    for l in range(net.n_layers - 1, -1, -1):
        gw[l] = cache[l].T @ delta
        gb[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ net.weights[l].T) * (1.0 - cache[l] ** 2)
    return Gradients(gw, gb)


def adam_step(net: Network, grads: Gradients, state: AdamState) -> tuple[Network, AdamState]:
    """Bias-corrected adaptive-moment update, in place on net and state."""
    gs = grads.params()
    ps = net.params()
    if len(gs) != len(state.m) or any(g.shape != p.shape for g, p in zip(gs, ps)):
        raise ValueError("gradient shapes do not match the network")
    for g in gs:
        if not np.all(np.isfinite(g)):
            raise TrainingError("non-finite gradient", step=state.step)
    state.step += 1
    t = state.step
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t
    for p, g, m, v in zip(ps, gs, state.m, state.v):
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return net, state


def soft_update(target: Network, source: Network, tau: float) -> Network:
    """theta_t <- tau * theta_t + (1 - tau) * theta_s, in place on target."""
    if not 0.0 <= tau <= 1.0:
        raise ValueError(f"tau must be in [0, 1], got {tau}")
    if target.layer_sizes != source.layer_sizes:
        raise ValueError("networks have different shapes")
    for pt, ps in zip(target.params(), source.params()):
        pt *= tau
        pt += (1.0 - tau) * ps
    return target


# -- flat binary serialization (checkpoint sections) --
#
# Layout: u32 array count, then per array a u32 ndim, u64 dims, and the raw
# little-endian float64 data.

_ORDER = "<"


def arrays_to_bytes(arrays: list[np.ndarray]) -> bytes:
    out = [np.array([len(arrays)], dtype=f"{_ORDER}u4").tobytes()]
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=f"{_ORDER}f8")
        out.append(np.array([a.ndim], dtype=f"{_ORDER}u4").tobytes())
        out.append(np.array(a.shape, dtype=f"{_ORDER}u8").tobytes())
        out.append(a.tobytes())
    return b"".join(out)


def arrays_from_bytes(buf: bytes, offset: int = 0) -> tuple[list[np.ndarray], int]:
    """Parse arrays_to_bytes output; returns (arrays, next offset)."""
    (count,) = np.frombuffer(buf, dtype=f"{_ORDER}u4", count=1, offset=offset)
    offset += 4
    arrays = []
    for _ in range(int(count)):
        (ndim,) = np.frombuffer(buf, dtype=f"{_ORDER}u4", count=1, offset=offset)
        offset += 4
        shape = np.frombuffer(buf, dtype=f"{_ORDER}u8", count=int(ndim), offset=offset)
        offset += 8 * int(ndim)
        n = int(np.prod(shape)) if len(shape) else 1
        data = np.frombuffer(buf, dtype=f"{_ORDER}f8", count=n, offset=offset)
        offset += 8 * n
        arrays.append(data.reshape([int(s) for s in shape]).copy())
    return arrays, offset


def network_to_bytes(net: Network) -> bytes:
    sizes = np.array(net.layer_sizes, dtype=np.float64)
    return arrays_to_bytes([sizes] + net.params())


def network_from_bytes(buf: bytes, offset: int = 0) -> tuple[Network, int]:
    arrays, offset = arrays_from_bytes(buf, offset)
    sizes = [int(s) for s in arrays[0]]
    n = len(sizes) - 1
    net = Network(sizes, arrays[1 : 1 + n], arrays[1 + n : 1 + 2 * n])
    for (n_in, n_out), w, b in zip(zip(sizes[:-1], sizes[1:]), net.weights, net.biases):
        if w.shape != (n_in, n_out) or b.shape != (n_out,):
            raise ValueError("corrupt network section: shapes inconsistent")
    return net, offset
