import numpy as np
import pytest

from freqfit.image_io import Image


def natural_crop(name: str, y: int, x: int, side: int) -> Image:
    """A [0,1] crop of one of scikit-image's bundled photographs."""
    from skimage import data

    src = getattr(data, name)()
    arr = src.astype(np.float64) / 255.0
    if arr.ndim == 2:
        arr = arr[None]
    else:
        arr = arr.transpose(2, 0, 1)
    return Image(arr[:, y : y + side, x : x + side])


@pytest.fixture
def astronaut_crop() -> Image:
    return natural_crop("astronaut", 100, 100, 64)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)
