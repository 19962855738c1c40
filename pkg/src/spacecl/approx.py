"""Small multilayer perceptrons with hand-written backprop, SGD/Adam and a gradient checker."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .core import format_float
from .errors import InvalidArgumentError, NumericDomainError, ShapeError

ACTIVATIONS = ("relu", "tanh")


@dataclass
class MlpParams:
    """Layer weights (out x in) and biases; hidden layers share one activation, the last is linear."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"
    # when set, every weight and bias is a view into this one flat array
    buffer: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise InvalidArgumentError(f"activation must be one of {ACTIVATIONS}")
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ShapeError("need one bias per weight matrix and at least one layer")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ShapeError(f"layer {k}: weight {w.shape} incompatible with bias {b.shape}")
            if k and w.shape[1] != self.weights[k - 1].shape[0]:
                raise ShapeError(f"layer {k} expects {w.shape[1]} inputs, previous layer emits {self.weights[k - 1].shape[0]}")

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def sizes(self) -> list[int]:
        return [self.input_dim] + [w.shape[0] for w in self.weights]

    def arrays(self) -> list[np.ndarray]:
        """Parameters in layer-major order: W0, b0, W1, b1, ..."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray], activation: str) -> "MlpParams":
        return cls(list(arrays[0::2]), list(arrays[1::2]), activation)

    def copy(self) -> "MlpParams":
        if self.buffer is not None:
            return _view_buffer(self.buffer.copy(), self.sizes, self.activation)
        return MlpParams([w.copy() for w in self.weights], [b.copy() for b in self.biases], self.activation)

    def contiguous(self) -> "MlpParams":
        """Copy whose arrays all live in one flat buffer (enables the fast optimizer path)."""
        flat = np.concatenate([a.reshape(-1) for a in self.arrays()])
        return _view_buffer(flat, self.sizes, self.activation)

    def zeros_like(self) -> "MlpParams":
        return MlpParams([np.zeros_like(w) for w in self.weights], [np.zeros_like(b) for b in self.biases], self.activation)


def _view_buffer(flat: np.ndarray, sizes: Sequence[int], activation: str) -> MlpParams:
    weights, biases = [], []
    offset = 0
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[offset:offset + fan_out * fan_in].reshape(fan_out, fan_in))
        offset += fan_out * fan_in
        biases.append(flat[offset:offset + fan_out])
        offset += fan_out
    return MlpParams(weights, biases, activation, buffer=flat)


def init_mlp(sizes: Sequence[int], activation: str = "relu", rng: Optional[np.random.Generator] = None) -> MlpParams:
    """Uniform init in +-1/sqrt(fan_in) for every weight and bias."""
    if len(sizes) < 2:
        raise ShapeError("an MLP needs at least input and output sizes")
    rng = rng if rng is not None else np.random.default_rng(0)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpParams(weights, biases, activation)


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    return np.maximum(z, 0.0) if kind == "relu" else np.tanh(z)


def _act_grad(z: np.ndarray, a: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0).astype(z.dtype)
    return 1.0 - a * a


def _as_batch(params: MlpParams, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    batch = x[None, :] if single else x
    if batch.ndim != 2 or batch.shape[1] != params.input_dim:
        raise ShapeError(f"input of shape {x.shape} does not match input dimension {params.input_dim}")
    return batch, single


def _forward_cache(params: MlpParams, batch: np.ndarray):
    inputs, pre = [], []
    h = batch
    last = len(params.weights) - 1
    for k, (w, b) in enumerate(zip(params.weights, params.biases)):
        inputs.append(h)
        z = h @ w.T + b
        pre.append(z)
        h = z if k == last else _act(z, params.activation)
    return h, (inputs, pre)


def forward_with_cache(params: MlpParams, batch: np.ndarray):
    """Batched forward pass that also returns what :func:`backward` needs."""
    batch, _ = _as_batch(params, batch)
    return _forward_cache(params, batch)


def backward(params: MlpParams, cache, output_gradient: np.ndarray) -> MlpParams:
    inputs, pre = cache
    n_layers = len(params.weights)
    grad_w: list = [None] * n_layers
    grad_b: list = [None] * n_layers
    delta = output_gradient
    for k in range(n_layers - 1, -1, -1):
        grad_w[k] = delta.T @ inputs[k]
        grad_b[k] = delta.sum(axis=0)
        if k:
            delta = (delta @ params.weights[k]) * _act_grad(pre[k - 1], inputs[k], params.activation)
    return MlpParams(grad_w, grad_b, params.activation)


def mlp_forward(params: MlpParams, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of row vectors."""
    batch, single = _as_batch(params, x)
    out, _ = _forward_cache(params, batch)
    return out[0] if single else out


def mlp_gradient(params: MlpParams, x, output_gradient) -> MlpParams:
    """Reverse-mode gradient of ``<output_gradient, f(x)>`` w.r.t. every parameter.

    For a batch, gradients are summed over rows. The result reuses
    :class:`MlpParams` as a container with matching shapes.
    """
    batch, single = _as_batch(params, x)
    g = np.asarray(output_gradient, dtype=float)
    g = g[None, :] if single and g.ndim == 1 else g
    if g.shape != (batch.shape[0], params.output_dim):
        raise ShapeError(f"output gradient of shape {np.shape(output_gradient)} does not match output {params.output_dim}")
    _, cache = _forward_cache(params, batch)
    return backward(params, cache, g)


@dataclass
class OptimizerState:
    kind: str = "adam"
    learning_rate: float = 1e-3
    first: list[np.ndarray] = field(default_factory=list)
    second: list[np.ndarray] = field(default_factory=list)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if self.kind not in ("sgd", "adam"):
            raise InvalidArgumentError(f"unknown optimizer {self.kind!r}")
        if not self.learning_rate > 0:
            raise InvalidArgumentError("learning rate must be positive")


def make_optimizer(params: MlpParams, kind: str = "adam", learning_rate: float = 1e-3) -> OptimizerState:
    source = [params.buffer] if params.buffer is not None else params.arrays()
    zeros = [np.zeros_like(a) for a in source]
    return OptimizerState(kind, learning_rate, zeros, [z.copy() for z in zeros])


def optimizer_step(state: OptimizerState, params: MlpParams, gradients: MlpParams) -> tuple[MlpParams, OptimizerState]:
    """One SGD or bias-corrected Adam step. Inputs are left untouched."""
    new_params = params.copy()
    new_state = replace(state, first=[m.copy() for m in state.first], second=[v.copy() for v in state.second])
    apply_update(new_state, new_params, gradients)
    return new_params, new_state


def apply_update(state: OptimizerState, params: MlpParams, gradients: MlpParams) -> None:
    """In-place counterpart of :func:`optimizer_step`; mutates ``params`` and ``state``."""
    grads = gradients.arrays()
    current = params.arrays()
    if params.buffer is not None and len(state.first) == 1:
        # flat path: params and moments are single vectors
        current = [params.buffer]
        grads = [np.concatenate([g.reshape(-1) for g in grads])]
    if len(grads) != len(current) or any(g.shape != p.shape for g, p in zip(grads, current)):
        raise ShapeError("gradient shapes do not match parameter shapes")
    if not np.isfinite(sum(float(g.sum()) for g in grads)):
        if not all(np.isfinite(g).all() for g in grads):
            raise NumericDomainError("non-finite gradient")
    state.step += 1
    lr = state.learning_rate
    if state.kind == "sgd":
        for p, g in zip(current, grads):
            p -= lr * g
        return
    if len(state.first) != len(current) or any(m.shape != p.shape for m, p in zip(state.first, current)):
        raise ShapeError("optimizer moments do not mirror parameter shapes")
    b1, b2 = state.beta1, state.beta2
    c1 = 1 - b1**state.step
    c2 = 1 - b2**state.step
    for p, m, v, g in zip(current, state.first, state.second, grads):
        m *= b1
        m += (1 - b1) * g
        v *= b2
        v += (1 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + state.eps)


def gradient_check(params: MlpParams, x, probe: int, step: float = 1e-5) -> float:
    """Largest relative gap between backprop and central differences for output ``probe``."""
    if not 0 <= probe < params.output_dim:
        raise InvalidArgumentError(f"probe {probe} outside output dimension {params.output_dim}")
    x = np.asarray(x, dtype=float)
    onehot = np.zeros(params.output_dim)
    onehot[probe] = 1.0
    analytic = mlp_gradient(params, x, onehot).arrays()
    probe_params = params.copy()
    worst = 0.0
    for arr, grad in zip(probe_params.arrays(), analytic):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            plus = mlp_forward(probe_params, x)[probe]
            flat[k] = orig - step
            minus = mlp_forward(probe_params, x)[probe]
            flat[k] = orig
            numeric = (plus - minus) / (2 * step)
            denom = max(abs(gflat[k]), abs(numeric), 1e-8)
            worst = max(worst, abs(gflat[k] - numeric) / denom)
    return worst


def save_params(params: MlpParams, path, metadata: Optional[dict] = None) -> None:
    """CSV checkpoint: ``#`` metadata lines, then one row per array ``name,rows,cols,values...``."""
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        fh.write(f"# activation: {params.activation}\n")
        for key, value in (metadata or {}).items():
            fh.write(f"# {key}: {value}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["name", "rows", "cols", "values"])
        for k, (w, b) in enumerate(zip(params.weights, params.biases)):
            writer.writerow([f"W{k}", w.shape[0], w.shape[1]] + [format_float(v) for v in w.reshape(-1)])
            writer.writerow([f"b{k}", b.shape[0], 1] + [format_float(v) for v in b])


def load_params(path) -> tuple[MlpParams, dict]:
    metadata = {}
    rows = []
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                metadata[key.strip()] = value.strip()
            else:
                rows.append(line)
    reader = csv.reader(rows)
    next(reader, None)
    arrays = []
    for row in reader:
        if not row:
            continue
        name, n_rows, n_cols = row[0], int(row[1]), int(row[2])
        values = np.array([float(v) for v in row[3:]], dtype=float)
        arrays.append(values.reshape(n_rows, n_cols) if name.startswith("W") else values)
    activation = metadata.pop("activation", "relu")
    return MlpParams.from_arrays(arrays, activation), metadata
