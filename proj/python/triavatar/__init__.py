"""Tri-plane neural-field head-avatar engine."""

from ._core import (
    BoundsError,
    Camera,
    Decoder,
    DegenerateError,
    FormatError,
    InputError,
    MorphableBasis,
    NumericError,
    ParameterError,
    ShapeError,
    TriPlane,
    akd,
    fit_triplane,
    lift,
    png_load,
    png_save,
    psnr,
    rasterize,
    render,
    render_mesh,
    ssim,
    tv_loss,
)

__all__ = [
    "BoundsError",
    "Camera",
    "Decoder",
    "DegenerateError",
    "FormatError",
    "InputError",
    "MorphableBasis",
    "NumericError",
    "ParameterError",
    "ShapeError",
    "TriPlane",
    "akd",
    "fit_triplane",
    "lift",
    "png_load",
    "png_save",
    "psnr",
    "rasterize",
    "render",
    "render_mesh",
    "ssim",
    "tv_loss",
]
