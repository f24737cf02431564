"""Attention MLP that lifts normalized 2D soft keypoints to 3D, with hand-written backprop.

Layout per sample (``k`` keypoints, token width ``D``, ``H`` heads)::

    tokens = xy @ W_embed + b_embed + index_embed          (k, D)
    tokens = tokens + MHSA(tokens)                         skipped when H == 0
    hidden = gelu(flatten(tokens) @ W1 + b1)               (hidden_dim,)
    out    = (hidden @ W2 + b2).reshape(k, 3)

The key projection has no bias: it would add the same score to every key of
a query row, which softmax cancels.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import struct
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ContractViolation, FormatVersionError
from .metrics import pdj

log = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
MODEL_MAGIC = b"POSELIFT"
ALLOWED_HEADS = (0, 2, 4)
_GELU_C = math.sqrt(2.0 / math.pi)


@dataclass
class LifterConfig:
    k_s: int = 13
    token_dim: int = 64
    heads: int = 4
    hidden_dim: int = 256
    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 1e-3
    seed: int = 0
    train_fraction: float = 0.8

    def __post_init__(self):
        if self.heads not in ALLOWED_HEADS:
            raise ContractViolation(f"heads must be one of {ALLOWED_HEADS}, got {self.heads}")
        if self.heads and self.token_dim % self.heads:
            raise ContractViolation("token_dim must be divisible by heads")
        if self.epochs < 1 or self.batch_size < 1 or self.k_s < 1:
            raise ContractViolation("epochs, batch_size and k_s must be at least 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ContractViolation("train_fraction must lie in (0, 1)")


def param_shapes(cfg: LifterConfig) -> dict[str, tuple[int, ...]]:
    k, d = cfg.k_s, cfg.token_dim
    shapes = {"embed.W": (2, d), "embed.b": (d,), "embed.index": (k, d)}
    if cfg.heads:
        shapes.update(
            {
                "attn.Wq": (d, d), "attn.bq": (d,),
                "attn.Wk": (d, d),
                "attn.Wv": (d, d), "attn.bv": (d,),
                "attn.Wo": (d, d), "attn.bo": (d,),
            }
        )  # fmt: skip
    shapes.update(
        {
            "mlp.W1": (k * d, cfg.hidden_dim), "mlp.b1": (cfg.hidden_dim,),
            "mlp.W2": (cfg.hidden_dim, k * 3), "mlp.b2": (k * 3,),
        }
    )  # fmt: skip
    return shapes


def init_params(cfg: LifterConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Fan-in scaled uniform weights, zero biases."""
    params = {}
    for name, shape in param_shapes(cfg).items():
        if len(shape) == 1:
            params[name] = np.zeros(shape)
        else:
            bound = 1.0 / math.sqrt(shape[0] if name != "embed.index" else shape[1])
            params[name] = rng.uniform(-bound, bound, size=shape)
    return params


@dataclass
class LifterModel:
    config: LifterConfig
    params: dict[str, np.ndarray]

    @classmethod
    def initialize(cls, config: LifterConfig) -> LifterModel:
        return cls(config, init_params(config, np.random.default_rng([config.seed, 1])))

    def copy(self) -> LifterModel:
        return LifterModel(self.config, {k: v.copy() for k, v in self.params.items()})


# ---------------------------------------------------------------- forward / backward


def _gelu_tanh(z):
    return np.tanh(_GELU_C * (z + 0.044715 * z**3))


def gelu(z, t=None):
    t = _gelu_tanh(z) if t is None else t
    return 0.5 * z * (1.0 + t)


def gelu_grad(z, t=None):
    t = _gelu_tanh(z) if t is None else t
    return 0.5 * (1.0 + t) + 0.5 * z * (1.0 - t * t) * _GELU_C * (1.0 + 3 * 0.044715 * z * z)


def _outer_sum(a, b):
    """``sum_{batch, token} a[..., i] * b[..., j]`` as one matmul."""
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


def softmax(s, axis=-1):
    e = np.exp(s - s.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def embed(params, x):
    return x @ params["embed.W"] + params["embed.b"] + params["embed.index"]


def self_attention(params, tokens, heads):
    """Residual multi-head self-attention; returns ``(tokens + attn, cache)``."""
    b, k, d = tokens.shape
    dh = d // heads

    def split(m):
        return m.reshape(b, k, heads, dh).transpose(0, 2, 1, 3)

    q = split(tokens @ params["attn.Wq"] + params["attn.bq"])
    kk = split(tokens @ params["attn.Wk"])
    v = split(tokens @ params["attn.Wv"] + params["attn.bv"])
    attn = softmax(q @ kk.transpose(0, 1, 3, 2) / math.sqrt(dh))
    mixed = (attn @ v).transpose(0, 2, 1, 3).reshape(b, k, d)
    out = tokens + mixed @ params["attn.Wo"] + params["attn.bo"]
    return out, {"q": q, "k": kk, "v": v, "attn": attn, "mixed": mixed}


def _self_attention_backward(params, tokens, cache, d_out, heads, grads):
    b, k, d = tokens.shape
    dh = d // heads
    q, kk, v, attn, mixed = (cache[n] for n in ("q", "k", "v", "attn", "mixed"))
    grads["attn.Wo"] = _outer_sum(mixed, d_out)
    grads["attn.bo"] = d_out.sum(axis=(0, 1))
    d_mixed = (d_out @ params["attn.Wo"].T).reshape(b, k, heads, dh).transpose(0, 2, 1, 3)
    d_attn = d_mixed @ v.transpose(0, 1, 3, 2)
    d_v = attn.transpose(0, 1, 3, 2) @ d_mixed
    d_s = attn * (d_attn - np.sum(d_attn * attn, axis=-1, keepdims=True)) / math.sqrt(dh)
    d_q = d_s @ kk
    d_k = d_s.transpose(0, 1, 3, 2) @ q

    def merge(m):
        return m.transpose(0, 2, 1, 3).reshape(b, k, d)

    d_q, d_k, d_v = merge(d_q), merge(d_k), merge(d_v)
    grads["attn.Wq"] = _outer_sum(tokens, d_q)
    grads["attn.bq"] = d_q.sum(axis=(0, 1))
    grads["attn.Wk"] = _outer_sum(tokens, d_k)
    grads["attn.Wv"] = _outer_sum(tokens, d_v)
    grads["attn.bv"] = d_v.sum(axis=(0, 1))
    return d_out + d_q @ params["attn.Wq"].T + d_k @ params["attn.Wk"].T + d_v @ params["attn.Wv"].T


def _forward(model: LifterModel, x):
    cfg, p = model.config, model.params
    t0 = embed(p, x)
    cache = {"x": x, "t0": t0}
    if cfg.heads:
        t1, cache["attn"] = self_attention(p, t0, cfg.heads)
    else:
        t1 = t0
    flat = t1.reshape(len(x), -1)
    z = flat @ p["mlp.W1"] + p["mlp.b1"]
    t = _gelu_tanh(z)
    h = gelu(z, t)
    out = (h @ p["mlp.W2"] + p["mlp.b2"]).reshape(len(x), cfg.k_s, 3)
    cache.update(flat=flat, z=z, t=t, h=h)
    return out, cache


def _check_input(model, k2d):
    x = np.asarray(k2d, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.ndim != 3 or x.shape[1:] != (model.config.k_s, 2):
        raise ContractViolation(f"expected input (..., {model.config.k_s}, 2), got {np.shape(k2d)}")
    return x, single


def forward(model: LifterModel, k2d) -> np.ndarray:
    """Lift ``(k_s, 2)`` or ``(n, k_s, 2)`` inputs to ``(..., k_s, 3)``."""
    x, single = _check_input(model, k2d)
    if not np.all(np.isfinite(x)):
        raise ContractViolation("input contains non-finite values")
    out, _ = _forward(model, x)
    return out[0] if single else out


def attention_weights(model: LifterModel, k2d) -> np.ndarray:
    """Softmax attention maps ``(n, H, k_s, k_s)`` for inspection."""
    if not model.config.heads:
        raise ContractViolation("model has no attention block")
    x, _ = _check_input(model, k2d)
    return _forward(model, x)[1]["attn"]["attn"]


def loss(pred, target) -> float:
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ContractViolation(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def gradients(model: LifterModel, inputs, targets) -> tuple[float, dict[str, np.ndarray]]:
    """Mean batch MSE and its exact gradient with respect to every parameter."""
    x, _ = _check_input(model, inputs)
    y = np.asarray(targets, dtype=float).reshape(len(x), model.config.k_s, 3)
    if len(x) == 0:
        raise ContractViolation("empty batch")
    cfg, p = model.config, model.params
    out, c = _forward(model, x)
    resid = out - y
    value = float(np.mean(resid**2))

    grads: dict[str, np.ndarray] = {}
    d_out = (2.0 / resid.size) * resid.reshape(len(x), -1)
    grads["mlp.W2"] = c["h"].T @ d_out
    grads["mlp.b2"] = d_out.sum(axis=0)
    d_z = (d_out @ p["mlp.W2"].T) * gelu_grad(c["z"], c["t"])
    grads["mlp.W1"] = c["flat"].T @ d_z
    grads["mlp.b1"] = d_z.sum(axis=0)
    d_t = (d_z @ p["mlp.W1"].T).reshape(c["t0"].shape)
    if cfg.heads:
        d_t = _self_attention_backward(p, c["t0"], c["attn"], d_t, cfg.heads, grads)
    grads["embed.W"] = _outer_sum(x, d_t)
    grads["embed.b"] = d_t.sum(axis=(0, 1))
    grads["embed.index"] = d_t.sum(axis=0)
    return value, {name: grads[name] for name in p}


def lift(model: LifterModel, k2d) -> np.ndarray:
    """``forward`` with a warning for inputs outside the normalized [0, 1] range."""
    x = np.asarray(k2d, dtype=float)
    if np.any(np.isnan(x)):
        raise ContractViolation("input contains NaN")
    if np.any((x < 0) | (x > 1)):
        warnings.warn("keypoints outside [0, 1]; expected normalize2d output", stacklevel=2)
    return forward(model, x)


# ---------------------------------------------------------------- training


class Adam:
    def __init__(self, params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        c1 = 1.0 - self.beta1**self.t
        c2 = 1.0 - self.beta2**self.t
        for k, g in grads.items():
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


@dataclass
class TrainReport:
    train_mse: list[float]
    val_mse: list[float]
    best_epoch: int
    final_val_mse: float
    final_pdj_02: float
    final_pdj_005: float
    seed: int
    wall_clock: float = field(default=0.0, compare=False)

    def epochs_csv(self) -> str:
        lines = ["epoch,train_mse,val_mse"]
        lines += [f"{i + 1},{t:.9f},{v:.9f}" for i, (t, v) in enumerate(zip(self.train_mse, self.val_mse))]
        return "\n".join(lines) + "\n"

    def summary(self) -> dict:
        """Deterministic summary (wall clock excluded)."""
        d = asdict(self)
        d.pop("wall_clock")
        d.pop("train_mse")
        d.pop("val_mse")
        return d


def split_indices(n: int, seed: int, train_fraction: float = 0.8) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle split into (train, validation) index arrays."""
    if n < 2:
        raise ContractViolation("need at least two records to split")
    perm = np.random.default_rng([seed, 0]).permutation(n)
    n_train = min(max(int(round(train_fraction * n)), 1), n - 1)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def records_to_arrays(records, soft_subset) -> tuple[np.ndarray, np.ndarray]:
    """Stack inputs ``(n, k_s, 2)`` and soft-subset 3D targets ``(n, k_s, 3)``."""
    x = np.stack([r.k2d_norm for r in records])
    y = np.stack([r.k3d_norm[list(soft_subset)] for r in records])
    return x, y


def _all_finite(params) -> bool:
    return all(np.all(np.isfinite(v)) for v in params.values())


def train_arrays(x, y, config: LifterConfig) -> tuple[LifterModel, TrainReport]:
    """Mini-batch Adam on a seeded 80/20 split; keeps the best-validation weights."""
    start = time.perf_counter()
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[1:] != (config.k_s, 2) or y.shape[1:] != (config.k_s, 3) or len(x) != len(y):
        raise ContractViolation(f"data shapes {x.shape}, {y.shape} do not match k_s={config.k_s}")
    tr, va = split_indices(len(x), config.seed, config.train_fraction)
    model = LifterModel.initialize(config)
    opt = Adam(model.params, lr=config.learning_rate)
    rng = np.random.default_rng([config.seed, 2])
    best, best_val, best_epoch = model.copy(), np.inf, 0
    train_hist, val_hist = [], []
    for epoch in range(config.epochs):
        order = tr[rng.permutation(len(tr))]
        total = 0.0
        for lo in range(0, len(order), config.batch_size):
            idx = order[lo : lo + config.batch_size]
            value, grads = gradients(model, x[idx], y[idx])
            if not np.isfinite(value):
                raise FloatingPointError(f"non-finite loss at epoch {epoch + 1}")
            opt.step(model.params, grads)
            total += value * len(idx)
        if not _all_finite(model.params):
            raise FloatingPointError(f"non-finite weights after epoch {epoch + 1}")
        train_hist.append(total / len(tr))
        val = loss(forward(model, x[va]), y[va])
        val_hist.append(val)
        if val < best_val:
            best, best_val, best_epoch = model.copy(), val, epoch + 1
        log.debug("epoch %d train %.6f val %.6f", epoch + 1, train_hist[-1], val)
    pred = forward(best, x[va])
    report = TrainReport(
        train_mse=train_hist,
        val_mse=val_hist,
        best_epoch=best_epoch,
        final_val_mse=loss(pred, y[va]),
        final_pdj_02=pdj(pred, y[va], 0.2),
        final_pdj_005=pdj(pred, y[va], 0.05),
        seed=config.seed,
        wall_clock=time.perf_counter() - start,
    )
    return best, report


def train(records, config: LifterConfig, soft_subset=None) -> tuple[LifterModel, TrainReport]:
    """Train on dataset records; targets are the soft-subset rows of ``k3d_norm``."""
    records = list(records)
    if len(records) < 2:
        raise ContractViolation("need at least two records")
    if soft_subset is None:
        from .skeleton import species_skeleton

        soft_subset = species_skeleton(records[0].species).soft_subset
    x, y = records_to_arrays(records, soft_subset)
    return train_arrays(x, y, config)


# ---------------------------------------------------------------- model file


def blob_checksum(blob: bytes) -> str:
    return hashlib.blake2b(blob, digest_size=8).hexdigest()


def model_to_bytes(model: LifterModel) -> bytes:
    """Magic, u64 header length, JSON header, little-endian float32 weight blob."""
    directory, chunks, offset = [], [], 0
    for name, arr in model.params.items():
        data = np.ascontiguousarray(arr, dtype="<f4").tobytes()
        directory.append({"name": name, "shape": list(arr.shape), "offset": offset, "nbytes": len(data)})
        chunks.append(data)
        offset += len(data)
    blob = b"".join(chunks)
    header = {
        "format_version": MODEL_FORMAT_VERSION,
        "config": asdict(model.config),
        "tensors": directory,
        "dtype": "float32-le",
        "checksum": blob_checksum(blob),
    }
    raw = json.dumps(header, sort_keys=True).encode()
    return MODEL_MAGIC + struct.pack("<Q", len(raw)) + raw + blob


def model_from_bytes(data: bytes) -> LifterModel:
    if data[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ContractViolation("not a lifter model file")
    (n,) = struct.unpack("<Q", data[len(MODEL_MAGIC) : len(MODEL_MAGIC) + 8])
    start = len(MODEL_MAGIC) + 8
    header = json.loads(data[start : start + n])
    if header.get("format_version") != MODEL_FORMAT_VERSION:
        raise FormatVersionError(f"model format version {header.get('format_version')!r} is not supported")
    blob = data[start + n :]
    if blob_checksum(blob) != header["checksum"]:
        raise ContractViolation("model weight checksum mismatch")
    config = LifterConfig(**header["config"])
    params = {}
    for t in header["tensors"]:
        arr = np.frombuffer(blob, dtype="<f4", count=t["nbytes"] // 4, offset=t["offset"])
        params[t["name"]] = arr.reshape(t["shape"]).astype(float)
    if set(params) != set(param_shapes(config)):
        raise ContractViolation("model tensors do not match its config")
    return LifterModel(config, params)


def save_model(model: LifterModel, path) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(model_to_bytes(model))


def load_model(path) -> LifterModel:
    return model_from_bytes(Path(path).read_bytes())
