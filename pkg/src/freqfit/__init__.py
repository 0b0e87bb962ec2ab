"""Fit coordinate MLPs to images with spectrum-matched embedding selection."""

from .errors import DegenerateSignalError, FreqfitError, TrainingDivergedError
from .image_io import CoordGrid, Image, load_png, make_coord_grid, resample_square, save_png
from .inr import (
    AdamState,
    Finer,
    Fourier,
    InrModel,
    Siren,
    adam_step,
    embed,
    forward,
    frequency_magnitudes,
    init_adam,
    init_model,
    load_checkpoint,
    loss_and_grads,
    save_checkpoint,
)
from .selection import (
    CandidateGrid,
    SelectionReport,
    derive_seed,
    make_grid,
    render_init_output,
    score_candidate,
    select,
)
from .spectrum import dft2, normalize, spectrum_cropped, spectrum_full
from .transport import cdf, wasserstein_1d
from .experiments import (
    SweepReport,
    TrainReport,
    grid_search,
    predict_image,
    psnr,
    residual_spectrum_ratio,
    ssim,
    synth_lowfreq,
    train_image,
)

__all__ = [
    "AdamState",
    "CandidateGrid",
    "CoordGrid",
    "DegenerateSignalError",
    "Finer",
    "Fourier",
    "FreqfitError",
    "Image",
    "InrModel",
    "SelectionReport",
    "Siren",
    "SweepReport",
    "TrainReport",
    "TrainingDivergedError",
    "adam_step",
    "cdf",
    "derive_seed",
    "dft2",
    "embed",
    "forward",
    "frequency_magnitudes",
    "grid_search",
    "init_adam",
    "init_model",
    "load_checkpoint",
    "load_png",
    "loss_and_grads",
    "make_coord_grid",
    "make_grid",
    "normalize",
    "predict_image",
    "psnr",
    "render_init_output",
    "resample_square",
    "residual_spectrum_ratio",
    "save_checkpoint",
    "save_png",
    "score_candidate",
    "select",
    "spectrum_cropped",
    "spectrum_full",
    "ssim",
    "synth_lowfreq",
    "train_image",
    "wasserstein_1d",
]

__version__ = "0.1.0"
