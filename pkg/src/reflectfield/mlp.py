"""The reflectance-field network: a 14-layer ReLU MLP over encoded positions.

Forward evaluation produces a raw 8-vector per point which the output heads
map to (density, normal, albedo, roughness); the reverse pass is
hand-specialized to this architecture. A skip connection re-injects the
encoded input at layer SKIP_LAYER so deep layers keep access to the
high-frequency features.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

DEPTH = 14          # linear layers, ReLU between them
HEAD_DIM = 8        # sigma(1) + normal(3) + albedo(3) + roughness(1)
SKIP_LAYER = 7      # encoded input concatenated to this layer's input
CHECKPOINT_MAGIC = b"NRFCKPT1"


@dataclass
class MlpParams:
    weights: list          # [(out, in) float64]
    biases: list           # [(out,) float64]
    width: int
    n_freqs: int           # encoding frequencies per coordinate

    @property
    def in_dim(self):
        return 6 * self.n_freqs

    def n_params(self):
        return sum(w.size for w in self.weights) + sum(b.size for b in self.biases)

    def copy(self):
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases],
                         self.width, self.n_freqs)


@dataclass
class FieldOutput:
    """Per-point rendering properties. All arrays share the leading shape."""
    sigma: np.ndarray      # (...,)  >= 0
    normal: np.ndarray     # (..., 3) unit
    albedo: np.ndarray     # (..., 3) in [0, 1]
    roughness: np.ndarray  # (...,) in [0.01, 1]


def layer_dims(width, n_freqs):
    in_dim = 6 * n_freqs
    dims = []
    for i in range(DEPTH):
        d_in = in_dim if i == 0 else width
        if i == SKIP_LAYER:
            d_in += in_dim
        d_out = HEAD_DIM if i == DEPTH - 1 else width
        dims.append((d_out, d_in))
    return dims


def init_params(seed, width, n_freqs=10):
    """Glorot-uniform weights, zero biases; deterministic for a given seed."""
    if width < 8:
        raise ValueError("width must be >= 8")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for d_out, d_in in layer_dims(width, n_freqs):
        limit = np.sqrt(6.0 / (d_in + d_out))
        weights.append(rng.uniform(-limit, limit, size=(d_out, d_in)))
        biases.append(np.zeros(d_out))
    return MlpParams(weights, biases, width, n_freqs)


def zero_grads(params):
    return MlpParams([np.zeros_like(w) for w in params.weights],
                     [np.zeros_like(b) for b in params.biases],
                     params.width, params.n_freqs)


def accumulate_grads(into, other):
    for a, b in zip(into.weights, other.weights):
        a += b
    for a, b in zip(into.biases, other.biases):
        a += b
    return into


def mlp_forward(params, encoded, need_cache=False):
    """Raw head outputs (P, 8) for encoded inputs (P, 6W).

    With need_cache, also returns the per-layer inputs and pre-activations
    needed by mlp_backward.
    """
    encoded = np.atleast_2d(encoded)
    if encoded.shape[1] != params.in_dim:
        raise ValueError(
            f"encoded dim {encoded.shape[1]} != expected {params.in_dim}")
    h = encoded
    inputs, preacts = [], []
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        if i == SKIP_LAYER:
            h = np.concatenate([h, encoded], axis=1)
        z = h @ w.T + b
        if need_cache:
            inputs.append(h)
            preacts.append(z)
        h = z if i == DEPTH - 1 else np.maximum(z, 0.0)
    if need_cache:
        return h, (inputs, preacts)
    return h


def mlp_backward(params, cache, d_raw, grads):
    """Accumulate d(loss)/d(params) into `grads` given d(loss)/d(raw outputs)."""
    inputs, preacts = cache
    dz = np.atleast_2d(d_raw)
    for i in range(DEPTH - 1, -1, -1):
        if i < DEPTH - 1:
            dz = dz * (preacts[i] > 0.0)
        grads.weights[i] += dz.T @ inputs[i]
        grads.biases[i] += dz.sum(axis=0)
        if i > 0:
            dz = dz @ params.weights[i]
            if i == SKIP_LAYER:  # drop the gradient into the re-injected encoding
                dz = dz[:, : params.width]
    return grads


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


NORMAL_EPS = 1e-8


def apply_heads(raw):
    """Map raw 8-vectors to a FieldOutput enforcing all range invariants."""
    raw = np.atleast_2d(raw)
    sigma = _softplus(raw[:, 0])
    normal = geometry_normalize_or_up(raw[:, 1:4])
    albedo = _sigmoid(raw[:, 4:7])
    roughness = 0.01 + 0.99 * _sigmoid(raw[:, 7])
    return FieldOutput(sigma, normal, albedo, roughness)


def geometry_normalize_or_up(v):
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    bad = n < NORMAL_EPS
    out = v / np.where(bad, 1.0, n)
    return np.where(bad, np.array([0.0, 0.0, 1.0]), out)


def heads_backward(raw, d_sigma, d_normal, d_albedo, d_roughness):
    """Pull gradients at the head outputs back to the raw 8-vector."""
    raw = np.atleast_2d(raw)
    d_raw = np.zeros_like(raw)
    # sigma = softplus(r0)
    d_raw[:, 0] = d_sigma * _sigmoid(raw[:, 0])
    # normal = r / |r| (constant fallback has zero gradient)
    r = raw[:, 1:4]
    nrm = np.linalg.norm(r, axis=-1, keepdims=True)
    ok = (nrm >= NORMAL_EPS)
    safe = np.where(ok, nrm, 1.0)
    unit = r / safe
    proj = d_normal - unit * np.sum(d_normal * unit, axis=-1, keepdims=True)
    d_raw[:, 1:4] = np.where(ok, proj / safe, 0.0)
    # albedo = sigmoid(r4..6)
    a = _sigmoid(raw[:, 4:7])
    d_raw[:, 4:7] = d_albedo * a * (1.0 - a)
    # roughness = 0.01 + 0.99 sigmoid(r7)
    s = _sigmoid(raw[:, 7])
    d_raw[:, 7] = d_roughness * 0.99 * s * (1.0 - s)
    return d_raw


def field_forward(params, encoded):
    """FieldOutput at encoded positions (the everyday inference entry point)."""
    return apply_heads(mlp_forward(params, encoded))


def make_mlp_field(params):
    """Field function: points (P, 3) -> FieldOutput, via encode + MLP + heads."""
    from .geometry import encode_points

    def field(points):
        return field_forward(params, encode_points(points, params.n_freqs))

    return field


def save_checkpoint(path, params):
    """Binary little-endian checkpoint; round trips bit-exactly."""
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<iiii", DEPTH, params.width, params.n_freqs, HEAD_DIM))
        for w, b in zip(params.weights, params.biases):
            f.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_checkpoint(path):
    with open(path, "rb") as f:
        magic = f.read(8)
        if magic != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file (magic {magic!r})")
        depth, width, n_freqs, head_dim = struct.unpack("<iiii", f.read(16))
        if depth != DEPTH or head_dim != HEAD_DIM:
            raise ValueError(f"{path}: unsupported architecture {depth}/{head_dim}")
        weights, biases = [], []
        for d_out, d_in in layer_dims(width, n_freqs):
            w = np.frombuffer(f.read(8 * d_out * d_in), dtype="<f8").reshape(d_out, d_in)
            b = np.frombuffer(f.read(8 * d_out), dtype="<f8")
            weights.append(w.astype(np.float64))
            biases.append(b.astype(np.float64))
    return MlpParams(weights, biases, width, n_freqs)
