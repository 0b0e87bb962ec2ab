"""Coordinate MLPs with frequency embeddings, exact gradients, and Adam.

Three embedding families are supported, each controlled by one or two
frequency hyperparameters (larger values mean higher embedding frequencies):

* ``Siren(omega0)``      first layer sin(omega0 * W x + b), W ~ U[-1/d, 1/d]
* ``Fourier(sigma)``     [sin(2 pi W x), cos(2 pi W x)], W ~ N(0, sigma)
* ``Finer(omega, k)``    phi(omega * (W x + b)), phi(t) = sin((|t| + 1) t),
                         W ~ U[-1/d, 1/d], b ~ U(-k, k)

Hidden layers use the published sine-net scheme for Siren/Finer
(sin(scale * (W h + b)) with W ~ U[+-sqrt(6/fan_in)/scale], scale = omega0
resp. omega) and a standard uniform fan-in ReLU stack for Fourier. The
output layer is linear. Gradients of the MSE loss are computed by
hand-written reverse mode; finite differences serve as the test oracle.

Checkpoint layout (``save_checkpoint``): an ``.npz`` archive holding a JSON
``meta`` entry ({"format_version": 1, "family", "config", "hidden_layers",
"width", "channels", "dtype"}) plus the arrays ``embed_w``, ``embed_b`` (absent
for Fourier), ``hidden_w_<i>``, ``hidden_b_<i>``, ``out_w``, ``out_b``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .image_io import CoordGrid

INPUT_DIM = 2


@dataclass(frozen=True)
class Siren:
    omega0: float

    def __post_init__(self):
        if not self.omega0 > 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")


@dataclass(frozen=True)
class Fourier:
    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")


@dataclass(frozen=True)
class Finer:
    omega: float
    k: float

    def __post_init__(self):
        if not self.omega > 0:
            raise ValueError(f"omega must be positive, got {self.omega}")
        if self.k < 0:
            raise ValueError(f"k must be >= 0, got {self.k}")


EmbeddingConfig = Siren | Fourier | Finer


def family_name(config: EmbeddingConfig) -> str:
    return type(config).__name__.lower()


def default_learning_rate(config: EmbeddingConfig) -> float:
    """Per-family Adam learning rate: 1e-4 for sine nets, 1e-3 for Fourier."""
    return 1e-3 if isinstance(config, Fourier) else 1e-4


def _hidden_scale(config: EmbeddingConfig) -> float | None:
    if isinstance(config, Siren):
        return config.omega0
    if isinstance(config, Finer):
        return config.omega
    return None


@dataclass
class InrModel:
    config: EmbeddingConfig
    embed_w: np.ndarray
    embed_b: np.ndarray | None
    hidden_weights: list[np.ndarray]
    hidden_biases: list[np.ndarray]
    out_w: np.ndarray
    out_b: np.ndarray

    @property
    def channels(self) -> int:
        return self.out_w.shape[0]

    @property
    def hidden_layers(self) -> int:
        return len(self.hidden_weights)

    @property
    def width(self) -> int:
        # Feature width of the embedding output (Fourier stacks sin and cos).
        rows = self.embed_w.shape[0]
        return 2 * rows if isinstance(self.config, Fourier) else rows

    @property
    def dtype(self) -> np.dtype:
        return self.embed_w.dtype

    def parameters(self) -> list[np.ndarray]:
        """All trainable arrays in a fixed canonical order."""
        params = [self.embed_w]
        if self.embed_b is not None:
            params.append(self.embed_b)
        for w, b in zip(self.hidden_weights, self.hidden_biases):
            params.extend((w, b))
        params.extend((self.out_w, self.out_b))
        return params


def init_model(
    config: EmbeddingConfig,
    hidden_layers: int,
    width: int,
    channels: int,
    seed: int,
    dtype=np.float32,
) -> InrModel:
    """Deterministically initialize a model; the same seed gives identical bits.

    Draw order is fixed: embedding weight, embedding bias, then (weight, bias)
    per hidden layer, then output weight and bias.
    """
    if hidden_layers < 1:
        raise ValueError(f"hidden_layers must be >= 1, got {hidden_layers}")
    if width < 1:
        raise ValueError(f"width must be >= 1, got {width}")
    if channels not in (1, 3):
        raise ValueError(f"channels must be 1 or 3, got {channels}")
    if isinstance(config, Fourier) and width % 2 != 0:
        raise ValueError("Fourier embeddings need an even width (sin/cos pairs)")

    rng = np.random.default_rng(seed)
    d = INPUT_DIM
    scale = _hidden_scale(config)

    if isinstance(config, Siren):
        embed_w = rng.uniform(-1 / d, 1 / d, size=(width, d))
        embed_b = rng.uniform(-1 / d, 1 / d, size=width)
    elif isinstance(config, Finer):
        embed_w = rng.uniform(-1 / d, 1 / d, size=(width, d))
        embed_b = rng.uniform(-config.k, config.k, size=width) if config.k > 0 else np.zeros(width)
    else:
        embed_w = rng.normal(0.0, config.sigma, size=(width // 2, d))
        embed_b = None

    fan_in = width
    hidden_weights, hidden_biases = [], []
    for _ in range(hidden_layers):
        if scale is not None:
            bound = np.sqrt(6.0 / fan_in) / scale
        else:
            bound = 1.0 / np.sqrt(fan_in)
        hidden_weights.append(rng.uniform(-bound, bound, size=(width, fan_in)))
        hidden_biases.append(rng.uniform(-1 / np.sqrt(fan_in), 1 / np.sqrt(fan_in), size=width))
        fan_in = width

    if scale is not None:
        out_bound = np.sqrt(6.0 / fan_in) / scale
    else:
        out_bound = 1.0 / np.sqrt(fan_in)
    out_w = rng.uniform(-out_bound, out_bound, size=(channels, fan_in))
    out_b = rng.uniform(-1 / np.sqrt(fan_in), 1 / np.sqrt(fan_in), size=channels)

    cast = lambda a: None if a is None else a.astype(dtype)
    return InrModel(
        config=config,
        embed_w=cast(embed_w),
        embed_b=cast(embed_b),
        hidden_weights=[cast(w) for w in hidden_weights],
        hidden_biases=[cast(b) for b in hidden_biases],
        out_w=cast(out_w),
        out_b=cast(out_b),
    )


def _finer_phi(t: np.ndarray) -> np.ndarray:
    return np.sin((np.abs(t) + 1.0) * t)


def _finer_phi_prime(t: np.ndarray) -> np.ndarray:
    # d/dt (|t|+1)t = 2|t|+1; continuous, so sign(0) never enters explicitly.
    return np.cos((np.abs(t) + 1.0) * t) * (2.0 * np.abs(t) + 1.0)


def _as_batch(coords) -> np.ndarray:
    if isinstance(coords, CoordGrid):
        return coords.coords
    return np.asarray(coords)


def embed(model: InrModel, x) -> np.ndarray:
    """Apply the embedding layer to a (B, 2) coordinate batch."""
    x = _as_batch(x).astype(model.dtype, copy=False)
    cfg = model.config
    if isinstance(cfg, Siren):
        return np.sin(cfg.omega0 * (x @ model.embed_w.T) + model.embed_b)
    if isinstance(cfg, Finer):
        t = cfg.omega * (x @ model.embed_w.T + model.embed_b)
        return _finer_phi(t)
    z = np.array(2.0 * np.pi, dtype=model.dtype) * (x @ model.embed_w.T)
    return np.concatenate([np.sin(z), np.cos(z)], axis=1)


def _forward_cached(model: InrModel, x: np.ndarray):
    """Forward pass keeping the pre-activations needed for backprop."""
    cfg = model.config
    cache = {"x": x}
    if isinstance(cfg, Siren):
        z = cfg.omega0 * (x @ model.embed_w.T) + model.embed_b
        h = np.sin(z)
    elif isinstance(cfg, Finer):
        t = cfg.omega * (x @ model.embed_w.T + model.embed_b)
        z = t
        h = _finer_phi(t)
    else:
        z = np.array(2.0 * np.pi, dtype=model.dtype) * (x @ model.embed_w.T)
        h = np.concatenate([np.sin(z), np.cos(z)], axis=1)
    cache["embed_z"] = z
    scale = _hidden_scale(cfg)
    hs = [h]
    zs = []
    for w, b in zip(model.hidden_weights, model.hidden_biases):
        pre = h @ w.T + b
        if scale is not None:
            z = np.array(scale, dtype=model.dtype) * pre
            h = np.sin(z)
        else:
            z = pre
            h = np.maximum(z, 0.0)
        zs.append(z)
        hs.append(h)
    pred = h @ model.out_w.T + model.out_b
    cache["hidden_zs"] = zs
    cache["hs"] = hs
    return pred, cache


def forward(model: InrModel, coords) -> np.ndarray:
    """Evaluate the network on a CoordGrid or (B, 2) batch; returns (B, channels)."""
    x = _as_batch(coords).astype(model.dtype, copy=False)
    pred, _ = _forward_cached(model, x)
    return pred


def loss_and_grads(model: InrModel, coords, targets) -> tuple[float, list[np.ndarray]]:
    """MSE over the batch and its exact gradients, ordered like parameters()."""
    x = _as_batch(coords).astype(model.dtype, copy=False)
    y = np.asarray(targets).astype(model.dtype, copy=False)
    if x.shape[0] != y.shape[0]:
        raise ValueError(f"coords/targets misaligned: {x.shape[0]} vs {y.shape[0]}")
    pred, cache = _forward_cached(model, x)
    resid = pred - y
    loss = float(np.mean(resid.astype(np.float64) ** 2))

    cfg = model.config
    scale = _hidden_scale(cfg)
    dpred = (2.0 / resid.size) * resid.astype(model.dtype)

    g_out_w = dpred.T @ cache["hs"][-1]
    g_out_b = dpred.sum(axis=0)
    dh = dpred @ model.out_w

    g_hidden_w = [None] * model.hidden_layers
    g_hidden_b = [None] * model.hidden_layers
    for i in range(model.hidden_layers - 1, -1, -1):
        z = cache["hidden_zs"][i]
        if scale is not None:
            dpre = (dh * np.cos(z)) * np.array(scale, dtype=model.dtype)
        else:
            dpre = dh * (z > 0)
        g_hidden_w[i] = dpre.T @ cache["hs"][i]
        g_hidden_b[i] = dpre.sum(axis=0)
        dh = dpre @ model.hidden_weights[i]

    z0 = cache["embed_z"]
    if isinstance(cfg, Siren):
        dz = dh * np.cos(z0)
        g_embed_w = np.array(cfg.omega0, dtype=model.dtype) * (dz.T @ x)
        g_embed_b = dz.sum(axis=0)
        grads = [g_embed_w, g_embed_b]
    elif isinstance(cfg, Finer):
        du = (dh * _finer_phi_prime(z0)) * np.array(cfg.omega, dtype=model.dtype)
        g_embed_w = du.T @ x
        g_embed_b = du.sum(axis=0)
        grads = [g_embed_w, g_embed_b]
    else:
        m = z0.shape[1]
        dz = dh[:, :m] * np.cos(z0) - dh[:, m:] * np.sin(z0)
        g_embed_w = np.array(2.0 * np.pi, dtype=model.dtype) * (dz.T @ x)
        grads = [g_embed_w]

    for gw, gb in zip(g_hidden_w, g_hidden_b):
        grads.extend((gw, gb))
    grads.extend((g_out_w, g_out_b))
    return loss, grads


@dataclass
class AdamState:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)


def init_adam(model: InrModel, lr: float | None = None, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    if lr is None:
        lr = default_learning_rate(model.config)
    params = model.parameters()
    return AdamState(
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
    )


def adam_step(model: InrModel, grads: list[np.ndarray], state: AdamState) -> tuple[InrModel, AdamState]:
    """One bias-corrected Adam update, applied to the model arrays in place."""
    params = model.parameters()
    if len(grads) != len(params):
        raise ValueError(f"got {len(grads)} gradients for {len(params)} parameters")
    state.step += 1
    t = state.step
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if g.shape != p.shape:
            raise ValueError(f"gradient shape {g.shape} does not match parameter {p.shape}")
        m *= state.beta1
        m += (1 - state.beta1) * g
        v *= state.beta2
        v += (1 - state.beta2) * (g * g)
        m_hat = m / (1 - state.beta1**t)
        v_hat = v / (1 - state.beta2**t)
        p -= (state.lr * m_hat / (np.sqrt(v_hat) + state.eps)).astype(p.dtype)
    return model, state


def frequency_magnitudes(model: InrModel) -> np.ndarray:
    """Per-row embedding frequency magnitudes: scale * ||w_i||_2.

    The scale is omega0 for Siren, omega for Finer and 2 pi for Fourier.
    """
    norms = np.linalg.norm(model.embed_w.astype(np.float64), axis=1)
    cfg = model.config
    if isinstance(cfg, Siren):
        return cfg.omega0 * norms
    if isinstance(cfg, Finer):
        return cfg.omega * norms
    return 2.0 * np.pi * norms


_FAMILY_TYPES = {"siren": Siren, "fourier": Fourier, "finer": Finer}


def save_checkpoint(model: InrModel, path) -> None:
    meta = {
        "format_version": 1,
        "family": family_name(model.config),
        "config": vars(model.config) | {},
        "hidden_layers": model.hidden_layers,
        "width": model.width,
        "channels": model.channels,
        "dtype": str(np.dtype(model.dtype)),
    }
    arrays = {"meta": np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8)}
    arrays["embed_w"] = model.embed_w
    if model.embed_b is not None:
        arrays["embed_b"] = model.embed_b
    for i, (w, b) in enumerate(zip(model.hidden_weights, model.hidden_biases)):
        arrays[f"hidden_w_{i}"] = w
        arrays[f"hidden_b_{i}"] = b
    arrays["out_w"] = model.out_w
    arrays["out_b"] = model.out_b
    np.savez(Path(path), **arrays)


def load_checkpoint(path) -> InrModel:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such checkpoint: {path}")
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode())
        if meta.get("format_version") != 1:
            raise ValueError(f"unsupported checkpoint version {meta.get('format_version')!r}")
        cfg_type = _FAMILY_TYPES[meta["family"]]
        config = cfg_type(**meta["config"])
        embed_b = data["embed_b"] if "embed_b" in data else None
        hidden_weights = [data[f"hidden_w_{i}"] for i in range(meta["hidden_layers"])]
        hidden_biases = [data[f"hidden_b_{i}"] for i in range(meta["hidden_layers"])]
        return InrModel(
            config=config,
            embed_w=data["embed_w"],
            embed_b=embed_b,
            hidden_weights=hidden_weights,
            hidden_biases=hidden_biases,
            out_w=data["out_w"],
            out_b=data["out_b"],
        )
