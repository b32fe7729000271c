"""Residual MLP with policy and value heads, trained by hand-rolled
backprop and Adam.

The flattened 0/1 parity matrix feeds an input projection, then a stack
of hidden layers with a residual add every ``skip_period`` layers.  Both
heads read the trunk output: the policy head emits softmax logits over
the action set, the value head a scalar (optionally squashed by a
sigmoid when returns live in [0, 1]).  A split-trunk variant keeps two
independent trunks instead, one per head.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_MAGIC = b"CMNET\x00"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class NetConfig:
    input_dim: int
    action_dim: int
    hidden_width: int = 256
    depth: int = 9
    skip_period: int = 2
    value_activation: str = "linear"  # or "sigmoid"
    split_trunk: bool = False

    def __post_init__(self) -> None:
        if self.depth < 1 or self.hidden_width < 1 or self.skip_period < 1:
            raise ValueError("depth, hidden_width and skip_period must be >= 1")
        if self.action_dim < 2:
            raise ValueError("action_dim must be >= 2")
        if self.value_activation not in ("linear", "sigmoid"):
            raise ValueError(f"unknown value activation {self.value_activation!r}")

    def to_dict(self) -> dict:
        return {
            "input_dim": self.input_dim,
            "action_dim": self.action_dim,
            "hidden_width": self.hidden_width,
            "depth": self.depth,
            "skip_period": self.skip_period,
            "value_activation": self.value_activation,
            "split_trunk": self.split_trunk,
        }


@dataclass
class TrainBatch:
    states: np.ndarray
    target_policies: np.ndarray
    target_values: np.ndarray

    def __post_init__(self) -> None:
        if self.states.ndim != 2:
            raise ValueError("states must be (batch, input_dim)")
        b = self.states.shape[0]
        if self.target_policies.shape[0] != b or self.target_values.shape[0] != b:
            raise ValueError("batch dimensions disagree")
        sums = self.target_policies.sum(axis=1)
        if not np.allclose(sums, 1.0, atol=1e-6):
            raise ValueError("each target policy must sum to 1")

    def __len__(self) -> int:
        return self.states.shape[0]


def _trunk_names(prefix: str, depth: int) -> list[str]:
    names = [f"{prefix}W_in", f"{prefix}b_in"]
    for l in range(1, depth + 1):
        names += [f"{prefix}W_h{l}", f"{prefix}b_h{l}"]
    return names


def init_params(config: NetConfig, seed: int = 0) -> dict[str, np.ndarray]:
    """Scaled-uniform fan-in init for the trunk; heads start at zero so
    the untrained policy is uniform and the value is the activation of 0."""
    rng = np.random.default_rng(seed)
    params: dict[str, np.ndarray] = {}

    def uniform(fan_in: int, shape: tuple[int, ...]) -> np.ndarray:
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    def add_trunk(prefix: str) -> None:
        d, h = config.input_dim, config.hidden_width
        params[f"{prefix}W_in"] = uniform(d, (d, h))
        params[f"{prefix}b_in"] = np.zeros(h)
        for l in range(1, config.depth + 1):
            params[f"{prefix}W_h{l}"] = uniform(h, (h, h))
            params[f"{prefix}b_h{l}"] = np.zeros(h)

    if config.split_trunk:
        add_trunk("p_")
        add_trunk("v_")
    else:
        add_trunk("")
    h = config.hidden_width
    params["W_pol"] = np.zeros((h, config.action_dim))
    params["b_pol"] = np.zeros(config.action_dim)
    params["W_val"] = np.zeros((h, 1))
    params["b_val"] = np.zeros(1)
    return params


def param_count(params: dict[str, np.ndarray]) -> int:
    return sum(int(p.size) for p in params.values())


def _trunk_forward(params, config: NetConfig, x: np.ndarray, prefix: str):
    """Returns (output, cache); cache holds pre-activations and layer
    inputs for backprop."""
    pre_in = x @ params[f"{prefix}W_in"] + params[f"{prefix}b_in"]
    h = np.maximum(pre_in, 0.0)
    skip = h
    pres = []
    inputs = []
    for l in range(1, config.depth + 1):
        inputs.append(h)
        pre = h @ params[f"{prefix}W_h{l}"] + params[f"{prefix}b_h{l}"]
        a = np.maximum(pre, 0.0)
        pres.append(pre)
        if l % config.skip_period == 0:
            h = a + skip
            skip = h
        else:
            h = a
    return h, (x, pre_in, pres, inputs)


def _trunk_backward(params, config: NetConfig, cache, d_out, grads, prefix: str):
    x, pre_in, pres, inputs = cache
    d_h = d_out
    carry: dict[int, np.ndarray] = {}
    for l in range(config.depth, 0, -1):
        if l % config.skip_period == 0:
            if l in carry:
                d_h = d_h + carry.pop(l)
            prev = l - config.skip_period
            boundary = prev if prev >= config.skip_period else 0
            carry[boundary] = carry.get(boundary, 0.0) + d_h
        d_pre = d_h * (pres[l - 1] > 0.0)
        grads[f"{prefix}W_h{l}"] += inputs[l - 1].T @ d_pre
        grads[f"{prefix}b_h{l}"] += d_pre.sum(axis=0)
        d_h = d_pre @ params[f"{prefix}W_h{l}"].T
    if 0 in carry:
        d_h = d_h + carry.pop(0)
    d_pre_in = d_h * (pre_in > 0.0)
    grads[f"{prefix}W_in"] += x.T @ d_pre_in
    grads[f"{prefix}b_in"] += d_pre_in.sum(axis=0)


def forward_batch(params, config: NetConfig, states: np.ndarray):
    """Batched forward pass: (policies (B, A), values (B,))."""
    states = np.asarray(states, dtype=np.float64)
    if states.ndim != 2 or states.shape[1] != config.input_dim:
        raise ValueError(f"states must be (batch, {config.input_dim})")
    p_prefix, v_prefix = ("p_", "v_") if config.split_trunk else ("", "")
    hp, _ = _trunk_forward(params, config, states, p_prefix)
    hv = hp if not config.split_trunk else _trunk_forward(params, config, states, v_prefix)[0]
    logits = hp @ params["W_pol"] + params["b_pol"]
    logits = logits - logits.max(axis=1, keepdims=True)
    exp = np.exp(logits)
    policies = exp / exp.sum(axis=1, keepdims=True)
    raw = (hv @ params["W_val"] + params["b_val"])[:, 0]
    values = 1.0 / (1.0 + np.exp(-raw)) if config.value_activation == "sigmoid" else raw
    if not (np.isfinite(policies).all() and np.isfinite(values).all()):
        raise FloatingPointError("non-finite network output")
    return policies, values


def forward(params, config: NetConfig, state: np.ndarray):
    """Single-state forward pass: (policy, value)."""
    p, v = forward_batch(params, config, np.asarray(state, dtype=np.float64)[None, :])
    return p[0], float(v[0])


def loss(params, config: NetConfig, batch: TrainBatch, l2: float = 1e-4) -> float:
    return loss_and_grads(params, config, batch, l2)[0]


def loss_and_grads(params, config: NetConfig, batch: TrainBatch, l2: float = 1e-4):
    """Mean value MSE plus policy cross-entropy plus L2 penalty."""
    x = np.asarray(batch.states, dtype=np.float64)
    pi = np.asarray(batch.target_policies, dtype=np.float64)
    z = np.asarray(batch.target_values, dtype=np.float64)
    b = x.shape[0]
    p_prefix, v_prefix = ("p_", "v_") if config.split_trunk else ("", "")

    hp, cache_p = _trunk_forward(params, config, x, p_prefix)
    if config.split_trunk:
        hv, cache_v = _trunk_forward(params, config, x, v_prefix)
    else:
        hv, cache_v = hp, cache_p
    logits = hp @ params["W_pol"] + params["b_pol"]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_p = shifted - log_z
    softmax = np.exp(log_p)
    raw = (hv @ params["W_val"] + params["b_val"])[:, 0]
    if config.value_activation == "sigmoid":
        v = 1.0 / (1.0 + np.exp(-raw))
        dv_draw = v * (1.0 - v)
    else:
        v = raw
        dv_draw = np.ones_like(raw)

    ce = -(pi * log_p).sum(axis=1)
    mse = (z - v) ** 2
    l2_term = l2 * sum(float((p * p).sum()) for p in params.values())
    total = float((mse + ce).mean() + l2_term)
    if not np.isfinite(total):
        raise FloatingPointError("non-finite loss")

    grads = {k: np.zeros_like(p) for k, p in params.items()}
    d_logits = (softmax - pi) / b
    d_raw = (2.0 * (v - z) * dv_draw / b)[:, None]
    grads["W_pol"] += hp.T @ d_logits
    grads["b_pol"] += d_logits.sum(axis=0)
    grads["W_val"] += hv.T @ d_raw
    grads["b_val"] += d_raw.sum(axis=0)
    d_hp = d_logits @ params["W_pol"].T
    d_hv = d_raw @ params["W_val"].T
    if config.split_trunk:
        _trunk_backward(params, config, cache_p, d_hp, grads, p_prefix)
        _trunk_backward(params, config, cache_v, d_hv, grads, v_prefix)
    else:
        _trunk_backward(params, config, cache_p, d_hp + d_hv, grads, "")
    for k, p in params.items():
        grads[k] += 2.0 * l2 * p
    return total, grads


@dataclass
class AdamState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)


def train_step(
    params,
    config: NetConfig,
    batch: TrainBatch,
    opt_state: AdamState | None = None,
    lr: float = 1e-3,
    l2: float = 1e-4,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
):
    """One Adam update; returns (new params, new opt state, loss)."""
    if opt_state is None:
        opt_state = AdamState()
    value, grads = loss_and_grads(params, config, batch, l2)
    t = opt_state.step + 1
    new_m, new_v, new_params = {}, {}, {}
    for k, p in params.items():
        g = grads[k]
        m = beta1 * opt_state.m.get(k, 0.0) + (1 - beta1) * g
        s = beta2 * opt_state.v.get(k, 0.0) + (1 - beta2) * g * g
        new_m[k] = m
        new_v[k] = s
        m_hat = m / (1 - beta1**t)
        s_hat = s / (1 - beta2**t)
        new_params[k] = p - lr * m_hat / (np.sqrt(s_hat) + eps)
    return new_params, AdamState(t, new_m, new_v), value


# ---------------------------------------------------------------------------
# checkpoint container: magic, version, JSON config header, then named
# little-endian float32 tensors


def save_checkpoint(path, params, config: NetConfig) -> None:
    header = json.dumps(config.to_dict()).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<I", CHECKPOINT_VERSION))
        fh.write(struct.pack("<I", len(header)))
        fh.write(header)
        fh.write(struct.pack("<I", len(params)))
        for name in sorted(params):
            tensor = np.ascontiguousarray(params[name], dtype="<f4")
            raw = name.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<B", tensor.ndim))
            fh.write(struct.pack(f"<{tensor.ndim}I", *tensor.shape))
            fh.write(tensor.tobytes())


def load_checkpoint(path):
    """Returns (params, config); tensors come back as float64."""
    with open(path, "rb") as fh:
        if fh.read(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
            raise ValueError(f"{path}: not a checkpoint file")
        (version,) = struct.unpack("<I", fh.read(4))
        if version != CHECKPOINT_VERSION:
            raise ValueError(f"{path}: unsupported checkpoint version {version}")
        (hlen,) = struct.unpack("<I", fh.read(4))
        config = NetConfig(**json.loads(fh.read(hlen).decode("utf-8")))
        (count,) = struct.unpack("<I", fh.read(4))
        params = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<H", fh.read(2))
            name = fh.read(nlen).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            size = int(np.prod(shape)) if ndim else 1
            data = np.frombuffer(fh.read(4 * size), dtype="<f4")
            params[name] = data.reshape(shape).astype(np.float64)
    return params, config
