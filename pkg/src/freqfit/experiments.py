"""Training runs, quality metrics, grid-search baseline and analysis tools."""

from __future__ import annotations

import csv
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from . import inr
from .errors import DegenerateSignalError, FreqfitError, TrainingDivergedError
from .image_io import Image, make_coord_grid, resample_square
from .selection import CandidateGrid, derive_seed
from .spectrum import spectrum_cropped

FULL_BATCH_LIMIT = 2**18
PSNR_CAP_DB = 99.0  # sentinel for zero MSE; also caps astronomically small errors

_LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])  # ITU-R BT.601


def psnr_from_mse(mse: float) -> float:
    """PSNR in dB for unit-range data, capped at the 99 dB sentinel."""
    if mse <= 0.0:
        return PSNR_CAP_DB
    return min(-10.0 * float(np.log10(mse)), PSNR_CAP_DB)


def psnr(pred: Image, target: Image) -> float:
    if pred.data.shape != target.data.shape:
        raise ValueError(f"shape mismatch: {pred.data.shape} vs {target.data.shape}")
    mse = float(np.mean((pred.data - target.data) ** 2))
    return psnr_from_mse(mse)


def _gaussian_taps(radius: int = 5, sigma: float = 1.5) -> np.ndarray:
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    g = np.exp(-0.5 * (x / sigma) ** 2)
    return g / g.sum()


def _filter_valid(a: np.ndarray, taps: np.ndarray) -> np.ndarray:
    rows = sliding_window_view(a, taps.size, axis=0) @ taps
    return sliding_window_view(rows, taps.size, axis=1) @ taps


def _luma(image: Image) -> np.ndarray:
    if image.channels == 1:
        return image.data[0]
    return np.tensordot(_LUMA_WEIGHTS, image.data, axes=(0, 0))


def ssim(pred: Image, target: Image) -> float:
    """Single-scale SSIM, 11x11 Gaussian window (sigma 1.5), unit range.

    RGB inputs are collapsed to the BT.601 luma channel first. The mean is
    taken over windows that fit entirely inside the image.
    """
    if pred.data.shape != target.data.shape:
        raise ValueError(f"shape mismatch: {pred.data.shape} vs {target.data.shape}")
    taps = _gaussian_taps()
    if min(pred.height, pred.width) < taps.size:
        raise ValueError(f"image smaller than the {taps.size}x{taps.size} SSIM window")
    x = _luma(pred)
    y = _luma(target)
    ux = _filter_valid(x, taps)
    uy = _filter_valid(y, taps)
    vx = _filter_valid(x * x, taps) - ux * ux
    vy = _filter_valid(y * y, taps) - uy * uy
    vxy = _filter_valid(x * y, taps) - ux * uy
    c1 = 0.01**2
    c2 = 0.03**2
    s = ((2 * ux * uy + c1) * (2 * vxy + c2)) / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
    return float(s.mean())


@dataclass
class TrainReport:
    config: inr.EmbeddingConfig
    seed: int
    steps: list[int]
    mse: list[float]
    psnr: list[float]
    final_ssim: float
    wall_seconds: float

    @property
    def final_psnr(self) -> float:
        return self.psnr[-1]

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "mse", "psnr"])
            for s, m, p in zip(self.steps, self.mse, self.psnr):
                w.writerow([s, repr(m), repr(p)])


def predict_image(model: inr.InrModel, height: int, width: int) -> Image:
    """Evaluate a model over a full pixel grid; raw (unclamped) values."""
    out = inr.forward(model, make_coord_grid(height, width))
    return Image(out.T.reshape(model.channels, height, width).astype(np.float64))


def train_image(
    config: inr.EmbeddingConfig,
    image: Image,
    steps: int,
    seed: int,
    log_every: int = 100,
    *,
    hidden_layers: int = 3,
    width: int = 256,
    lr: float | None = None,
    batch_size: int | None = None,
    dtype=np.float32,
) -> tuple[inr.InrModel, TrainReport]:
    """Fit one model to an image with Adam; logs full-image MSE/PSNR.

    Runs full-batch when the pixel count is at most 2**18, otherwise
    uniformly random mini-batches of 2**18 pixels (overridable via
    ``batch_size``). Fully deterministic for a fixed seed.
    """
    if steps < 1:
        raise ValueError(f"steps must be >= 1, got {steps}")
    if log_every < 1:
        raise ValueError(f"log_every must be >= 1, got {log_every}")
    t_start = time.perf_counter()
    model = inr.init_model(config, hidden_layers, width, image.channels, seed, dtype=dtype)
    state = inr.init_adam(model, lr=lr)

    grid = make_coord_grid(image.height, image.width)
    coords = grid.coords.astype(dtype)
    targets = image.pixels().astype(dtype)
    n_px = coords.shape[0]
    if batch_size is None:
        batch_size = n_px if n_px <= FULL_BATCH_LIMIT else FULL_BATCH_LIMIT
    full_batch = batch_size >= n_px
    batch_rng = np.random.default_rng((seed, 0x5B))

    logged_steps: list[int] = []
    logged_mse: list[float] = []
    logged_psnr: list[float] = []
    for step in range(1, steps + 1):
        if full_batch:
            xb, yb = coords, targets
        else:
            idx = batch_rng.integers(0, n_px, size=batch_size)
            xb, yb = coords[idx], targets[idx]
        loss, grads = inr.loss_and_grads(model, xb, yb)
        if not np.isfinite(loss):
            raise TrainingDivergedError(step, config, loss)
        inr.adam_step(model, grads, state)
        if step % log_every == 0 or step == steps:
            eval_mse = _full_mse(model, coords, targets)
            logged_steps.append(step)
            logged_mse.append(eval_mse)
            logged_psnr.append(psnr_from_mse(eval_mse))

    pred = predict_image(model, image.height, image.width)
    clamped = Image(np.clip(pred.data, 0.0, 1.0))
    final_ssim = ssim(clamped, image)
    report = TrainReport(
        config=config,
        seed=seed,
        steps=logged_steps,
        mse=logged_mse,
        psnr=logged_psnr,
        final_ssim=final_ssim,
        wall_seconds=time.perf_counter() - t_start,
    )
    return model, report


def _full_mse(model: inr.InrModel, coords: np.ndarray, targets: np.ndarray) -> float:
    pred = inr.forward(model, coords)
    resid = pred.astype(np.float64) - targets.astype(np.float64)
    return float(np.mean(resid**2))


@dataclass
class SweepEntry:
    param: float
    config: inr.EmbeddingConfig
    report: TrainReport | None
    diverged: bool
    error: str = ""


@dataclass
class SweepReport:
    entries: list[SweepEntry]
    best_index: int

    @property
    def best(self) -> SweepEntry:
        return self.entries[self.best_index]

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param", "final_psnr", "final_ssim", "best"])
            for i, e in enumerate(self.entries):
                if e.diverged:
                    w.writerow([repr(e.param), "", "", 0])
                else:
                    w.writerow([
                        repr(e.param),
                        repr(e.report.final_psnr),
                        repr(e.report.final_ssim),
                        int(i == self.best_index),
                    ])


def grid_search(
    grid: CandidateGrid,
    image: Image,
    steps: int,
    seed: int,
    *,
    log_every: int = 100,
    hidden_layers: int = 3,
    width: int = 256,
    lr: float | None = None,
    batch_size: int | None = None,
    jobs: int = 1,
    dtype=np.float32,
) -> SweepReport:
    """Train every candidate and rank by final PSNR.

    Candidate c trains with seed ``derive_seed(seed, c, 0)``, the repeat-0
    entry of the selection seed schedule. A diverging candidate is flagged in
    its entry instead of aborting the sweep.
    """
    if len(grid) == 0:
        raise ValueError("candidate grid is empty")

    def run(pc):
        param, config = pc
        try:
            _, report = train_image(
                config, image, steps, derive_seed(seed, config, 0), log_every,
                hidden_layers=hidden_layers, width=width, lr=lr,
                batch_size=batch_size, dtype=dtype,
            )
            return SweepEntry(param=param, config=config, report=report, diverged=False)
        except TrainingDivergedError as exc:
            return SweepEntry(param=param, config=config, report=None, diverged=True, error=str(exc))

    pairs = list(zip(grid.values, grid.configs))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            entries = list(pool.map(run, pairs))
    else:
        entries = [run(pc) for pc in pairs]

    ok = [i for i, e in enumerate(entries) if not e.diverged]
    if not ok:
        raise FreqfitError("every candidate in the sweep diverged")
    best_index = max(ok, key=lambda i: entries[i].report.final_psnr)
    return SweepReport(entries=entries, best_index=best_index)


def synth_lowfreq(side: int, max_periods: int = 5, terms: int = 8, seed: int = 0) -> Image:
    """Random sum of low-frequency 2D sinusoids, rescaled to [0, 1].

    Each term is a plane cosine whose integer frequency indices sum to at
    most ``max_periods``, so the image's spectral mass sits in the first few
    diagonals of the DFT.
    """
    if side < 16:
        raise ValueError(f"side must be >= 16, got {side}")
    if max_periods < 1:
        raise ValueError(f"max_periods must be >= 1, got {max_periods}")
    if terms < 1:
        raise ValueError(f"terms must be >= 1, got {terms}")
    rng = np.random.default_rng(seed)
    u = np.arange(side) / side
    uu, vv = np.meshgrid(u, u)
    acc = np.zeros((side, side))
    for _ in range(terms):
        total = int(rng.integers(1, max_periods + 1))
        fx = int(rng.integers(0, total + 1))
        fy = total - fx
        amp = rng.uniform(0.5, 1.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        acc += amp * np.cos(2.0 * np.pi * (fx * uu + fy * vv) + phase)
    lo, hi = acc.min(), acc.max()
    if hi <= lo:
        raise DegenerateSignalError("sinusoid terms cancelled to a constant image")
    return Image(((acc - lo) / (hi - lo))[None])


def residual_spectrum_ratio(
    pred_a: Image,
    pred_b: Image,
    target: Image,
    n: int,
    *,
    resolution: int = 256,
) -> np.ndarray:
    """Per-frequency ratio of residual spectra: (target - pred_a) vs (target - pred_b).

    Entries below 1 mean pred_a has the smaller error at that frequency.
    Frequencies where the denominator spectrum is zero are reported as NaN
    (missing) rather than infinity.
    """
    if not (pred_a.data.shape == pred_b.data.shape == target.data.shape):
        raise ValueError("pred_a, pred_b and target must share one shape")
    res_a = resample_square(Image(target.data - pred_a.data), resolution)
    res_b = resample_square(Image(target.data - pred_b.data), resolution)
    num = spectrum_cropped(res_a, n)
    den = spectrum_cropped(res_b, n)
    out = np.full(n, np.nan)
    nonzero = den != 0.0
    out[nonzero] = num[nonzero] / den[nonzero]
    return out
