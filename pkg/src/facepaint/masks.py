"""Corruption mask generation: central, checkerboard, left, freehand.

Masks follow the imaging convention: 1 = uncorrupted, 0 = corrupted.
Central masks are axis-aligned centered squares parameterized by corrupted
area fraction; freehand masks are unions of random-walk brush strokes grown
to a target corrupted fraction. All masks are fully determined by their spec
(including the seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

KINDS = ("central", "checkerboard", "left", "freehand")

CENTRAL_FRACTION_RANGE = (0.5, 0.7)
LEFT_FRACTION = 0.5
FREEHAND_FRACTION = 0.25
FREEHAND_TOLERANCE = 0.02
FREEHAND_STROKES = 3


@dataclass(frozen=True)
class MaskSpec:
    kind: str
    fraction: float | None = None  # central: corrupted area fraction
    cell: int | None = None  # checkerboard: cell size in pixels
    strokes: int = FREEHAND_STROKES
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DataError(f"unknown mask kind {self.kind!r}, expected one of {KINDS}")
        if self.kind == "central":
            lo, hi = CENTRAL_FRACTION_RANGE
            frac = self.fraction if self.fraction is not None else (lo + hi) / 2.0
            if not lo <= frac <= hi:
                raise DataError(f"central fraction {frac} outside [{lo}, {hi}]")
            object.__setattr__(self, "fraction", frac)
        elif self.kind == "freehand":
            if self.fraction is None:
                object.__setattr__(self, "fraction", FREEHAND_FRACTION)
            elif self.fraction != FREEHAND_FRACTION:
                raise DataError(f"freehand fraction is fixed at {FREEHAND_FRACTION}")


def make_mask(spec: MaskSpec, h: int, w: int) -> np.ndarray:
    """Generate an (h, w) uint8 binary mask from its spec."""
    if h < 16 or w < 16:
        raise DataError(f"mask frame too small: {h}x{w}, need >= 16")
    if spec.kind == "central":
        return _central(spec.fraction, h, w)
    if spec.kind == "left":
        return _left(h, w)
    if spec.kind == "checkerboard":
        cell = spec.cell if spec.cell is not None else max(1, w // 8)
        return _checkerboard(cell, h, w)
    return _freehand(spec, h, w)


def _central(fraction: float, h: int, w: int) -> np.ndarray:
    side = round(math.sqrt(fraction * h * w))
    side = min(side, h, w)
    mask = np.ones((h, w), dtype=np.uint8)
    top = (h - side) // 2
    left = (w - side) // 2
    mask[top : top + side, left : left + side] = 0
    return mask


def _left(h: int, w: int) -> np.ndarray:
    mask = np.ones((h, w), dtype=np.uint8)
    mask[:, : w // 2] = 0
    return mask


def _checkerboard(cell: int, h: int, w: int) -> np.ndarray:
    if cell < 1 or cell > min(h, w):
        raise DataError(f"checkerboard cell {cell} outside [1, {min(h, w)}]")
    rows = np.arange(h) // cell
    cols = np.arange(w) // cell
    # zero (corrupted) at the top-left cell
    parity = (rows[:, None] + cols[None, :]) % 2
    return parity.astype(np.uint8)


def _freehand(spec: MaskSpec, h: int, w: int) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    radius = max(1, round(w / 16))
    total = h * w
    corrupted = np.zeros((h, w), dtype=bool)
    # stop each stroke a hair under target so brush overshoot stays in band
    stop_fraction = FREEHAND_FRACTION - FREEHAND_TOLERANCE / 2.0

    ii, jj = np.mgrid[-radius : radius + 1, -radius : radius + 1]
    brush = ii * ii + jj * jj <= radius * radius

    def stamp(cy, cx):
        y0, y1 = max(0, cy - radius), min(h, cy + radius + 1)
        x0, x1 = max(0, cx - radius), min(w, cx + radius + 1)
        by0, bx0 = y0 - (cy - radius), x0 - (cx - radius)
        corrupted[y0:y1, x0:x1] |= brush[by0 : by0 + (y1 - y0), bx0 : bx0 + (x1 - x0)]

    for stroke in range(spec.strokes):
        target = stop_fraction * (stroke + 1) / spec.strokes
        y = float(rng.uniform(radius, h - 1 - radius))
        x = float(rng.uniform(radius, w - 1 - radius))
        heading = float(rng.uniform(0.0, 2.0 * math.pi))
        stamp(int(round(y)), int(round(x)))
        while corrupted.sum() < target * total:
            heading += float(rng.normal(0.0, 0.6))
            y = min(max(y + radius * math.sin(heading), 0.0), h - 1.0)
            x = min(max(x + radius * math.cos(heading), 0.0), w - 1.0)
            stamp(int(round(y)), int(round(x)))
    return (~corrupted).astype(np.uint8)


def make_sequence_masks(kind: str, n: int, seed: int, h: int, w: int) -> list[np.ndarray]:
    """Masks for one pseudo-sequence: n random draws, or n identical left masks."""
    if n < 2:
        raise DataError(f"sequence needs n >= 2 masks, got {n}")
    if kind == "left":
        mask = make_mask(MaskSpec("left"), h, w)
        return [mask.copy() for _ in range(n)]
    if kind == "central":
        rng = np.random.default_rng(seed)
        lo, hi = CENTRAL_FRACTION_RANGE
        return [
            make_mask(MaskSpec("central", fraction=float(rng.uniform(lo, hi))), h, w)
            for _ in range(n)
        ]
    if kind == "freehand":
        rng = np.random.default_rng(seed)
        return [
            make_mask(MaskSpec("freehand", seed=int(rng.integers(2**63))), h, w)
            for _ in range(n)
        ]
    raise DataError(f"sequence masks support central/freehand/left, got {kind!r}")
