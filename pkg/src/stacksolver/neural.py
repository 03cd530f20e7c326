"""From-scratch feed-forward Q-network: ReLU hidden layers, linear output,
backpropagation and SGD-with-momentum updates, binary checkpoints.

The dense-layer kernels come from the compiled extension when it built
successfully, with a pure-NumPy fallback selected at import
(``stacksolver.neural.BACKEND`` names the active one).
"""

from __future__ import annotations

import os
import struct
from dataclasses import dataclass, field

import numpy as np

if os.environ.get("STACKSOLVER_PURE_PY"):
    from . import _kernels_py as _k
else:
    try:
        from . import _kernels as _k
    except ImportError:
        from . import _kernels_py as _k

BACKEND = "compiled" if _k.COMPILED else "numpy"


@dataclass
class NetworkParams:
    sizes: list  # [d_in, h_1, ..., A]
    weights: list  # per layer, shape (out, in)
    biases: list  # per layer, shape (out,)
    vel_w: list = field(default_factory=list)  # momentum buffers
    vel_b: list = field(default_factory=list)

    @property
    def n_layers(self):
        return len(self.weights)

    def copy(self):
        return NetworkParams(
            sizes=list(self.sizes),
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            vel_w=[v.copy() for v in self.vel_w],
            vel_b=[v.copy() for v in self.vel_b],
        )


def param_count(sizes) -> int:
    return sum(sizes[i] * sizes[i + 1] + sizes[i + 1] for i in range(len(sizes) - 1))


def init_network(sizes, rng) -> NetworkParams:
    """Zero-mean scaled-uniform weights (bound 1/sqrt(fan_in)), zero biases."""
    if len(sizes) < 2:
        raise ValueError("need at least input and output sizes")
    weights, biases = [], []
    for d_in, d_out in zip(sizes, sizes[1:]):
        bound = 1.0 / np.sqrt(d_in)
        weights.append(rng.uniform(-bound, bound, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))
    return NetworkParams(
        sizes=list(sizes),
        weights=weights,
        biases=biases,
        vel_w=[np.zeros_like(w) for w in weights],
        vel_b=[np.zeros_like(b) for b in biases],
    )


def forward(params: NetworkParams, x: np.ndarray) -> np.ndarray:
    """Q-values for a single input (d_in,) or a batch (B, d_in)."""
    single = x.ndim == 1
    a = np.ascontiguousarray(x.reshape(1, -1) if single else x)
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = _k.dense_forward(a, w, b, i < last)
    return a[0] if single else a


def _forward_acts(params, x):
    acts = [np.ascontiguousarray(x)]
    last = params.n_layers - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        acts.append(_k.dense_forward(acts[-1], w, b, i < last))
    return acts


def backward_and_step(params: NetworkParams, inputs, actions, targets,
                      eta: float, mu: float = 0.0) -> float:
    """One batched update on the mean squared Bellman residual.

    The gradient flows only through the selected-action output component of
    each sample.  Returns the pre-update loss.
    """
    batch = inputs.shape[0]
    acts = _forward_acts(params, inputs)
    q = acts[-1]
    rows = np.arange(batch)
    resid = q[rows, actions] - targets
    loss = float(np.mean(resid * resid))
    if not np.isfinite(loss):
        raise FloatingPointError(f"non-finite loss {loss}")

    delta = np.zeros_like(q)
    delta[rows, actions] = 2.0 * resid / batch
    grads_w = [None] * params.n_layers
    grads_b = [None] * params.n_layers
    for i in range(params.n_layers - 1, -1, -1):
        relu = i < params.n_layers - 1
        delta, grads_w[i], grads_b[i] = _k.dense_backward(
            acts[i], acts[i + 1], params.weights[i], delta, relu)

    for i in range(params.n_layers):
        if not np.isfinite(grads_w[i]).all() or not np.isfinite(grads_b[i]).all():
            raise FloatingPointError(f"non-finite gradient in layer {i}")
        if mu == 0.0:
            params.weights[i] -= eta * grads_w[i]
            params.biases[i] -= eta * grads_b[i]
        else:
            params.vel_w[i] *= mu
            params.vel_w[i] += grads_w[i]
            params.vel_b[i] *= mu
            params.vel_b[i] += grads_b[i]
            params.weights[i] -= eta * params.vel_w[i]
            params.biases[i] -= eta * params.vel_b[i]
    return loss


def blend(target: NetworkParams, online: NetworkParams, eps_hat: float):
    """Target-network alignment: theta_hat <- (1 - eps_hat) theta_hat + eps_hat theta."""
    for tw, ow in zip(target.weights + target.biases, online.weights + online.biases):
        if eps_hat == 1.0:
            tw[...] = ow
        else:
            tw *= 1.0 - eps_hat
            tw += eps_hat * ow


# ---------------------------------------------------------------------------
# Checkpoints: header (magic, version, layer sizes, seed, epoch) followed by
# flat little-endian float64 weight/bias arrays in layer order.
# ---------------------------------------------------------------------------

_MAGIC = b"SSCK"
_VERSION = 1


def save_checkpoint(path, params: NetworkParams, seed: int, epoch: int):
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(params.sizes)))
        fh.write(struct.pack(f"<{len(params.sizes)}q", *params.sizes))
        fh.write(struct.pack("<Qq", seed, epoch))
        for w, b in zip(params.weights, params.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path):
    """Returns (params, seed, epoch); bit-exact round trip with save."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        version, n_sizes = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        sizes = list(struct.unpack(f"<{n_sizes}q", fh.read(8 * n_sizes)))
        seed, epoch = struct.unpack("<Qq", fh.read(16))
        weights, biases = [], []
        for d_in, d_out in zip(sizes, sizes[1:]):
            w = np.frombuffer(fh.read(8 * d_in * d_out), dtype="<f8").reshape(d_out, d_in)
            b = np.frombuffer(fh.read(8 * d_out), dtype="<f8")
            weights.append(w.astype(np.float64))
            biases.append(b.astype(np.float64))
        trailing = fh.read(1)
        if trailing:
            raise ValueError(f"{path}: trailing bytes in checkpoint")
    params = NetworkParams(sizes=sizes, weights=weights, biases=biases)
    params.vel_w = [np.zeros_like(w) for w in weights]
    params.vel_b = [np.zeros_like(b) for b in biases]
    return params, seed, epoch
