"""Direction-invariant frequency spectra of square images.

The 2D DFT of each channel is reduced to a vector by summing the magnitudes
of coefficients whose indices (i, j) share the same diagonal i + j = d, for
d = 1..N-1. The constant d = 0 component is dropped: an output-layer bias
models it for free, so it carries no information about embedding frequencies.
All spectra are computed in double precision regardless of how the image was
produced.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .errors import DegenerateSignalError
from .image_io import Image


def dft2(channel: np.ndarray) -> np.ndarray:
    """Unnormalized 2D DFT of a square real matrix, via FFT.

    F[j, k] = sum_m sum_n exp(-i 2pi j m / N) exp(-i 2pi k n / N) A[m, n]
    """
    a = np.asarray(channel, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"dft2 requires a square matrix, got {a.shape}")
    if a.shape[0] < 2:
        raise ValueError("dft2 requires N >= 2")
    return np.fft.fft2(a)


def _diagonal_sums(mag: np.ndarray) -> np.ndarray:
    n = mag.shape[0]
    d = np.add.outer(np.arange(n), np.arange(n)).ravel()
    sums = np.bincount(d, weights=mag.ravel(), minlength=2 * n - 1)
    return sums[1:n]


def spectrum_full(image: Image) -> np.ndarray:
    """Spectrum entries d = 1..N-1 of a square image, summed over channels."""
    if image.height != image.width:
        raise ValueError(
            f"spectrum requires a square image, got {image.height}x{image.width}"
        )
    mag = np.zeros((image.height, image.width))
    for c in range(image.channels):
        mag += np.abs(dft2(image.data[c]))
    return _diagonal_sums(mag)


def spectrum_cropped(image: Image, n: int) -> np.ndarray:
    """First n entries of the spectrum."""
    side = image.height
    if not 1 <= n <= side - 1:
        raise ValueError(f"n must be in [1, {side - 1}], got {n}")
    return spectrum_full(image)[:n]


def normalize(spectrum: np.ndarray) -> np.ndarray:
    """Divide a spectrum by its L1 mass so it sums to 1."""
    s = np.asarray(spectrum, dtype=np.float64)
    total = s.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise DegenerateSignalError(
            "spectrum has no positive mass (constant signal?); "
            "frequency matching is undefined for it"
        )
    return s / total


def write_spectrum_csv(entries: np.ndarray, path) -> None:
    """Write spectrum entries as CSV with header d,value; d starts at 1."""
    with open(Path(path), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["d", "value"])
        for d, v in enumerate(np.asarray(entries), start=1):
            w.writerow([d, repr(float(v))])
