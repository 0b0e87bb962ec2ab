"""Embedding-configuration selection by spectrum matching.

For every candidate configuration the untrained model is rendered on a
square working grid, its cropped spectrum is normalized into a distribution
over frequency indices, and the 1D Wasserstein distance to the target
image's spectrum is measured. Model outputs are random under the seed
schedule, so each candidate is measured ``repeats`` times and scored by the
mean distance; the candidate with the smallest mean wins, ties going to the
lowest frequency value.
"""

from __future__ import annotations

import csv
import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import inr, spectrum, transport
from .errors import DegenerateSignalError
from .image_io import Image, make_coord_grid, resample_square

DEFAULT_SPECTRUM_SIZE = 64
DEFAULT_RESOLUTION = 256
DEFAULT_REPEATS = 10

# Default candidate values swept per family alias.
DEFAULT_GRIDS = {
    "siren": [float(v) for v in range(10, 201, 10)],
    "fourier": [float(v) for v in range(1, 21)],
    "finer-k0": [float(v) for v in range(10, 201, 10)],
    "finer": [round(0.1 * i, 1) for i in range(31)],
}
FINER_FIXED_OMEGA = 30.0


@dataclass(frozen=True)
class CandidateGrid:
    """A non-empty sweep over one frequency hyperparameter of one family."""

    family: str
    values: tuple[float, ...]
    configs: tuple[inr.EmbeddingConfig, ...]

    def __len__(self) -> int:
        return len(self.configs)


def make_grid(family: str, values=None) -> CandidateGrid:
    """Build the candidate list for a family alias.

    ``siren`` sweeps omega0, ``fourier`` sweeps sigma, ``finer`` sweeps the
    bias width k at omega = 30, and ``finer-k0`` sweeps omega with the bias
    removed (k = 0).
    """
    if family not in DEFAULT_GRIDS:
        raise ValueError(f"unknown family {family!r}; expected one of {sorted(DEFAULT_GRIDS)}")
    values = [float(v) for v in (DEFAULT_GRIDS[family] if values is None else values)]
    if not values:
        raise ValueError("candidate grid is empty")
    if family == "siren":
        configs = [inr.Siren(v) for v in values]
    elif family == "fourier":
        configs = [inr.Fourier(v) for v in values]
    elif family == "finer":
        configs = [inr.Finer(FINER_FIXED_OMEGA, v) for v in values]
    else:
        configs = [inr.Finer(v, 0.0) for v in values]
    return CandidateGrid(family=family, values=tuple(values), configs=tuple(configs))


def derive_seed(base_seed: int, config: inr.EmbeddingConfig, repeat: int) -> int:
    """Stable sub-seed for one (candidate, repeat) measurement.

    Hash-based so that adding or reordering candidates never changes the
    seeds of existing measurements.
    """
    if isinstance(config, inr.Finer):
        key = f"finer:{config.omega!r}:{config.k!r}:{repeat}"
    elif isinstance(config, inr.Fourier):
        key = f"fourier:{config.sigma!r}:{repeat}"
    else:
        key = f"siren:{config.omega0!r}:{repeat}"
    digest = hashlib.blake2b(key.encode(), digest_size=8).digest()
    return (int(base_seed) ^ int.from_bytes(digest, "big")) & (2**63 - 1)


def render_init_output(
    config: inr.EmbeddingConfig,
    hidden_layers: int,
    width: int,
    channels: int,
    seed: int,
    side: int,
    dtype=np.float32,
) -> Image:
    """Evaluate a freshly initialized model on a side x side grid.

    The raw outputs are kept unclamped: the spectrum is scale-invariant after
    normalization and the affected constant component is dropped anyway.
    """
    if side < 2:
        raise ValueError(f"side must be >= 2, got {side}")
    model = inr.init_model(config, hidden_layers, width, channels, seed, dtype=dtype)
    out = inr.forward(model, make_coord_grid(side, side))
    data = out.T.reshape(channels, side, side).astype(np.float64)
    return Image(data)


def prepare_target_spectrum(image: Image, n: int, resolution: int) -> np.ndarray:
    """Normalized length-n spectrum of an image on the working resolution."""
    if n > resolution - 1:
        raise ValueError(f"n={n} exceeds the working spectrum length {resolution - 1}")
    working = resample_square(image, resolution)
    return spectrum.normalize(spectrum.spectrum_cropped(working, n))


def score_candidate(
    config: inr.EmbeddingConfig,
    target_spectra: list[np.ndarray],
    n: int,
    repeats: int,
    seed: int,
    *,
    hidden_layers: int,
    width: int,
    channels: int,
    side: int,
    dtype=np.float32,
) -> tuple[float, float, list[float]]:
    """Mean and standard error of the Wasserstein distance over repeats.

    A rendered output with an all-zero spectrum raises DegenerateSignalError;
    such a measurement must not be silently skipped.
    """
    if repeats < 1:
        raise ValueError(f"repeats must be >= 1, got {repeats}")
    if len(target_spectra) != repeats:
        raise ValueError(f"need one target spectrum per repeat ({repeats}), got {len(target_spectra)}")
    distances = []
    for r in range(repeats):
        rendered = render_init_output(
            config, hidden_layers, width, channels,
            derive_seed(seed, config, r), side, dtype=dtype,
        )
        model_spec = spectrum.normalize(spectrum.spectrum_cropped(rendered, n))
        distances.append(transport.wasserstein_1d(model_spec, target_spectra[r]))
    mean = float(np.mean(distances))
    se = 0.0 if repeats == 1 else float(np.std(distances, ddof=1) / np.sqrt(repeats))
    return mean, se, distances


@dataclass(frozen=True)
class CandidateScore:
    param: float
    config: inr.EmbeddingConfig
    mean: float
    se: float
    repeats: int


@dataclass(frozen=True)
class SelectionReport:
    family: str
    scores: tuple[CandidateScore, ...]
    chosen_index: int
    n: int
    resolution: int
    repeats: int
    seed: int
    hidden_layers: int
    width: int
    channels: int

    @property
    def chosen(self) -> inr.EmbeddingConfig:
        return self.scores[self.chosen_index].config

    @property
    def chosen_param(self) -> float:
        return self.scores[self.chosen_index].param

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["param", "mean_wasserstein", "se", "chosen"])
            for i, s in enumerate(self.scores):
                w.writerow([repr(s.param), repr(s.mean), repr(s.se), int(i == self.chosen_index)])

    def to_json(self, path) -> None:
        payload = {
            "family": self.family,
            "n": self.n,
            "resolution": self.resolution,
            "repeats": self.repeats,
            "seed": self.seed,
            "hidden_layers": self.hidden_layers,
            "width": self.width,
            "channels": self.channels,
            "chosen_param": self.chosen_param,
            "candidates": [
                {"param": s.param, "mean_wasserstein": s.mean, "se": s.se, "chosen": i == self.chosen_index}
                for i, s in enumerate(self.scores)
            ],
        }
        with open(Path(path), "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
            fh.write("\n")


def select(
    grid: CandidateGrid,
    target: Image,
    n: int = DEFAULT_SPECTRUM_SIZE,
    repeats: int = DEFAULT_REPEATS,
    seed: int = 0,
    *,
    resolution: int = DEFAULT_RESOLUTION,
    hidden_layers: int = 3,
    width: int = 256,
    jobs: int = 1,
    dtype=np.float32,
) -> SelectionReport:
    """Score every candidate against the target spectrum and pick the argmin.

    The image task has a fixed target, so its spectrum is computed once and
    shared by all repeats (the repetition averages over model-output
    randomness only).
    """
    if len(grid) == 0:
        raise ValueError("candidate grid is empty")
    if target.is_constant():
        raise DegenerateSignalError("target image is constant; selection is undefined")
    target_spec = prepare_target_spectrum(target, n, resolution)
    target_spectra = [target_spec] * repeats

    def score(config):
        return score_candidate(
            config, target_spectra, n, repeats, seed,
            hidden_layers=hidden_layers, width=width, channels=target.channels,
            side=resolution, dtype=dtype,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(score, grid.configs))
    else:
        results = [score(c) for c in grid.configs]

    scores = tuple(
        CandidateScore(param=v, config=c, mean=m, se=se, repeats=repeats)
        for v, c, (m, se, _) in zip(grid.values, grid.configs, results)
    )
    chosen_index = min(range(len(scores)), key=lambda i: (scores[i].mean, scores[i].param))
    return SelectionReport(
        family=grid.family,
        scores=scores,
        chosen_index=chosen_index,
        n=n,
        resolution=resolution,
        repeats=repeats,
        seed=seed,
        hidden_layers=hidden_layers,
        width=width,
        channels=target.channels,
    )
