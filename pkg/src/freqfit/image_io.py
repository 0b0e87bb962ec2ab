"""Image loading, saving, resampling and coordinate grids.

Images are stored channel-major as ``(channels, height, width)`` float64
arrays. Files are 8-bit grayscale or RGB PNG; loaded samples are ``v / 255``
so they lie in [0, 1]. Arrays produced elsewhere (e.g. raw network outputs)
may legitimately leave the unit range; only :func:`save_png` clamps.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage


@dataclass(frozen=True)
class Image:
    """A real-valued raster with ``data`` shaped (channels, height, width)."""

    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if data.ndim != 3 or data.shape[0] not in (1, 3):
            raise ValueError(f"expected (channels, H, W) with 1 or 3 channels, got {data.shape}")
        if data.shape[1] < 1 or data.shape[2] < 1:
            raise ValueError(f"empty image {data.shape}")
        if not np.all(np.isfinite(data)):
            raise ValueError("image contains non-finite samples")
        object.__setattr__(self, "data", data)

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def is_constant(self) -> bool:
        return bool(np.all(self.data == self.data.flat[0]))

    def pixels(self) -> np.ndarray:
        """Row-major (H*W, channels) view matching make_coord_grid ordering."""
        return self.data.transpose(1, 2, 0).reshape(-1, self.channels)


@dataclass(frozen=True)
class CoordGrid:
    """Per-pixel input coordinates, each component in [-1, 1].

    ``coords`` has shape (height*width, 2) in row-major pixel order; the
    coordinate of pixel (r, c) is (2c/(W-1) - 1, 2r/(H-1) - 1), with 0 on a
    degenerate (size-1) axis.
    """

    height: int
    width: int
    coords: np.ndarray


def make_coord_grid(height: int, width: int) -> CoordGrid:
    if height < 1 or width < 1:
        raise ValueError(f"grid dimensions must be >= 1, got {height}x{width}")
    xs = np.linspace(-1.0, 1.0, width) if width > 1 else np.zeros(1)
    ys = np.linspace(-1.0, 1.0, height) if height > 1 else np.zeros(1)
    gx, gy = np.meshgrid(xs, ys)
    coords = np.stack([gx.ravel(), gy.ravel()], axis=1)
    return CoordGrid(height=height, width=width, coords=coords)


def load_png(path) -> Image:
    """Load an 8-bit grayscale or RGB PNG as an Image with values v/255."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"no such image file: {path}")
    with PILImage.open(path) as img:
        mode = img.mode
        if mode in ("LA", "RGBA"):
            warnings.warn(f"{path.name}: dropping alpha channel (mode {mode})")
            img = img.convert(mode[:-1])
            mode = img.mode
        if mode not in ("L", "RGB"):
            raise ValueError(
                f"{path.name}: unsupported color type / bit depth (mode {mode}); "
                "only 8-bit grayscale or RGB PNG is accepted"
            )
        arr = np.asarray(img, dtype=np.float64) / 255.0
    if arr.ndim == 2:
        arr = arr[None, :, :]
    else:
        arr = arr.transpose(2, 0, 1)
    return Image(arr)


def save_png(image: Image, path) -> None:
    """Write an Image as 8-bit PNG, clamping to [0, 1] and rounding half up."""
    data = np.clip(image.data, 0.0, 1.0)
    q = np.floor(data * 255.0 + 0.5).astype(np.uint8)
    if image.channels == 1:
        pil = PILImage.fromarray(q[0], mode="L")
    else:
        pil = PILImage.fromarray(q.transpose(1, 2, 0), mode="RGB")
    pil.save(Path(path), format="PNG")


def _axis_positions(n_out: int, n_in: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    # Corner-aligned source positions, split into floor index and fraction.
    pos = np.arange(n_out) * ((n_in - 1) / (n_out - 1)) if n_out > 1 else np.zeros(1)
    lo = np.clip(np.floor(pos).astype(np.int64), 0, n_in - 1)
    hi = np.minimum(lo + 1, n_in - 1)
    frac = pos - lo
    return lo, hi, frac


def resample_square(image: Image, side: int) -> Image:
    """Bilinear resample to side x side (corner-aligned, edge-clamped).

    Exact on inputs that are already square with the requested side.
    """
    if side < 2:
        raise ValueError(f"side must be >= 2, got {side}")
    if image.height == side and image.width == side:
        return image
    ylo, yhi, wy = _axis_positions(side, image.height)
    xlo, xhi, wx = _axis_positions(side, image.width)
    wy = wy[:, None]
    wx = wx[None, :]
    out = np.empty((image.channels, side, side))
    for c in range(image.channels):
        ch = image.data[c]
        top = ch[np.ix_(ylo, xlo)] * (1 - wx) + ch[np.ix_(ylo, xhi)] * wx
        bot = ch[np.ix_(yhi, xlo)] * (1 - wx) + ch[np.ix_(yhi, xhi)] * wx
        out[c] = top * (1 - wy) + bot * wy
    return Image(out)
