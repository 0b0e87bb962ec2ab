"""1D discrete Wasserstein distance between distributions on {1..n}.

Support points are the integer frequency indices with unit spacing, so the
distance is the plain L1 norm of the difference between the two cumulative
distribution functions.
"""

from __future__ import annotations

import numpy as np

_MASS_TOL = 1e-9


def _as_distribution(mass: np.ndarray) -> np.ndarray:
    p = np.asarray(mass, dtype=np.float64)
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"expected a nonempty 1D mass vector, got shape {p.shape}")
    if np.any(p < 0):
        raise ValueError("distribution has negative mass")
    if abs(p.sum() - 1.0) > _MASS_TOL:
        raise ValueError(f"mass sums to {p.sum()!r}, expected 1 within {_MASS_TOL}")
    return p


def cdf(dist: np.ndarray) -> np.ndarray:
    """Prefix sums of a distribution; nondecreasing, ends at 1."""
    return np.cumsum(_as_distribution(dist))


def wasserstein_1d(p: np.ndarray, q: np.ndarray) -> float:
    """Minimum-cost transport between p and q for cost |x - y|."""
    p = _as_distribution(p)
    q = _as_distribution(q)
    if p.shape != q.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {q.shape}")
    return float(np.abs(np.cumsum(p - q)).sum())
