"""Image and mask value handling, PNG I/O, and the PSNR metric.

Images are numpy float arrays of shape (H, W, 3) holding values in [-1, 1]
(the tanh output convention of the generator). Conversion to the 8-bit
[0, 255] scale happens only at file boundaries and inside ``psnr``.

Corruption masks are (H, W) uint8 arrays with 1 = uncorrupted, 0 = corrupted,
broadcast across channels wherever they multiply an image. On disk a mask is
an 8-bit grayscale PNG with 255 = uncorrupted, 0 = corrupted.
"""

from __future__ import annotations

import math
import os

import numpy as np
from PIL import Image

from .errors import DataError

# PSNR of two identical images is infinite; the consistency metric averages
# PSNR over frame pairs, so the value is capped to keep means finite.
PSNR_CAP_DB = 100.0

PEAK = 255.0


def to_unit_range(img: np.ndarray) -> np.ndarray:
    """Map values from [-1, 1] to [0, 1]."""
    return (np.asarray(img, dtype=np.float64) + 1.0) / 2.0


def from_unit_range(unit: np.ndarray) -> np.ndarray:
    """Map values from [0, 1] back to [-1, 1]; inverse of ``to_unit_range``."""
    return np.asarray(unit, dtype=np.float64) * 2.0 - 1.0


def check_image(img: np.ndarray) -> np.ndarray:
    """Validate an (H, W, 3) image in [-1, 1] and return it as float32."""
    arr = np.asarray(img)
    if arr.ndim != 3 or arr.shape[2] != 3:
        raise DataError(f"expected (H, W, 3) image, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataError(f"empty image of shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise DataError("image contains non-finite values")
    if arr.min() < -1.0 or arr.max() > 1.0:
        raise DataError(
            f"image values outside [-1, 1]: min {arr.min():.4f} max {arr.max():.4f}"
        )
    return arr.astype(np.float32, copy=False)


def check_mask(mask: np.ndarray) -> np.ndarray:
    """Validate an (H, W) binary mask and return it as uint8 in {0, 1}."""
    arr = np.asarray(mask)
    if arr.ndim != 2:
        raise DataError(f"expected (H, W) mask, got shape {arr.shape}")
    if not np.isin(arr, (0, 1)).all():
        raise DataError("mask values must be exactly 0 or 1")
    return arr.astype(np.uint8, copy=False)


def load_image(path: str | os.PathLike, target_size: int | None = None) -> np.ndarray:
    """Read an 8-bit RGB PNG into a float32 (H, W, 3) array in [-1, 1].

    Pixel p maps to 2p/255 - 1. If ``target_size`` is given and differs from
    the stored size, the image is resized (bilinear) to target_size square.
    """
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode != "RGB":
                raise DataError(f"{path}: expected RGB image, got mode {im.mode}")
            if target_size is not None and im.size != (target_size, target_size):
                im = im.resize((target_size, target_size), Image.BILINEAR)
            raw = np.asarray(im, dtype=np.float32)
    except FileNotFoundError:
        raise DataError(f"image file not found: {path}") from None
    except DataError:
        raise
    except Exception as exc:
        raise DataError(f"{path}: cannot read image ({exc})") from exc
    return raw * (2.0 / PEAK) - 1.0


def save_image(img: np.ndarray, path: str | os.PathLike) -> None:
    """Write an image in [-1, 1] as an 8-bit RGB PNG (round half up)."""
    arr = check_image(img)
    scaled = (np.asarray(arr, dtype=np.float64) + 1.0) * (PEAK / 2.0)
    quantized = np.floor(scaled + 0.5).clip(0, PEAK).astype(np.uint8)
    Image.fromarray(quantized, mode="RGB").save(path, format="PNG")


def load_mask(path: str | os.PathLike) -> np.ndarray:
    """Read a grayscale mask PNG (0 = corrupted, 255 = uncorrupted)."""
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode != "L":
                im = im.convert("L")
            raw = np.asarray(im)
    except FileNotFoundError:
        raise DataError(f"mask file not found: {path}") from None
    except Exception as exc:
        raise DataError(f"{path}: cannot read mask ({exc})") from exc
    if not np.isin(raw, (0, 255)).all():
        raise DataError(f"{path}: mask pixels must be 0 or 255")
    return (raw == 255).astype(np.uint8)


def save_mask(mask: np.ndarray, path: str | os.PathLike) -> None:
    """Write a binary mask as an 8-bit grayscale PNG."""
    arr = check_mask(mask)
    Image.fromarray(arr * np.uint8(255), mode="L").save(path, format="PNG")


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB between two images in [-1, 1].

    Both images are rescaled to the continuous 8-bit [0, 255] range and the
    MSE is averaged over all pixels and channels: 10*log10(255^2 / MSE).
    Returns ``PSNR_CAP_DB`` when the images are identical; values above the
    cap are clipped to it so the cap is a true upper bound.
    """
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(f"psnr shape mismatch: {x.shape} vs {y.shape}")
    diff = (x - y) * (PEAK / 2.0)
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * math.log10(PEAK * PEAK / mse))
