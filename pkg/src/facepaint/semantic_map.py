"""Facial landmarks and the dense RGB semantic map built from them.

A landmark set is the standard 68-point fiducial layout. Rendering groups
the points into five facial components, each painted in one fixed palette
color on black background; the resulting map is the conditioning input of
both GAN networks.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass

import numpy as np

from . import raster
from .errors import DataError

N_LANDMARKS = 68

# Point ranges of the 68-point layout, grouped into semantic components.
JAW = slice(0, 17)
BROW_LEFT = slice(17, 22)
BROW_RIGHT = slice(22, 27)
NOSE_BRIDGE = slice(27, 31)
NOSE_BASE = slice(31, 36)
EYE_LEFT = slice(36, 42)
EYE_RIGHT = slice(42, 48)
MOUTH_OUTER = slice(48, 60)
MOUTH_INNER = slice(60, 68)

# One color per component group (not per side); maximally separated RGB.
PALETTE = {
    "jaw": (255, 255, 0),
    "brows": (0, 255, 0),
    "nose": (0, 0, 255),
    "eyes": (255, 0, 0),
    "mouth": (255, 0, 255),
}

BASE_STROKE = 2  # pixels at 64x64, scaled proportionally


@dataclass(frozen=True)
class LandmarkSet:
    """68 (x, y) landmark coordinates in pixel units, origin top-left."""

    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.shape != (N_LANDMARKS, 2):
            raise DataError(f"wrong point count: expected {N_LANDMARKS}, got shape {pts.shape}")
        if not np.isfinite(pts).all():
            raise DataError("landmarks contain non-finite coordinates")
        if (pts < 0).any():
            raise DataError("out of frame: negative landmark coordinate")
        object.__setattr__(self, "points", pts)

    def assert_in_frame(self, h: int, w: int) -> None:
        pts = self.points
        if (pts[:, 0] >= w).any() or (pts[:, 1] >= h).any():
            raise DataError(f"out of frame: landmarks exceed {w}x{h} frame")


def load_landmarks(path: str | os.PathLike) -> LandmarkSet:
    """Read a landmark JSON file: {"points": [[x0, y0], ..., [x67, y67]]}."""
    try:
        with open(path) as f:
            doc = json.load(f)
    except FileNotFoundError:
        raise DataError(f"landmark file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: malformed JSON ({exc})") from exc
    if not isinstance(doc, dict) or "points" not in doc:
        raise DataError(f"{path}: missing 'points' key")
    pts = doc["points"]
    if not isinstance(pts, list) or len(pts) != N_LANDMARKS:
        raise DataError(
            f"{path}: wrong point count: expected {N_LANDMARKS}, got {len(pts) if isinstance(pts, list) else type(pts)}"
        )
    try:
        arr = np.asarray(pts, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise DataError(f"{path}: points are not numeric pairs") from exc
    if arr.shape != (N_LANDMARKS, 2):
        raise DataError(f"{path}: points are not (x, y) pairs")
    return LandmarkSet(arr)


def save_landmarks(lms: LandmarkSet, path: str | os.PathLike) -> None:
    with open(path, "w") as f:
        json.dump({"points": [[float(x), float(y)] for x, y in lms.points]}, f)
        f.write("\n")


def reflect_landmarks(lms: LandmarkSet, w: int) -> LandmarkSet:
    """Mirror a landmark set about the vertical axis of a width-w frame."""
    pts = lms.points.copy()
    pts[:, 0] = (w - 1) - pts[:, 0]
    return LandmarkSet(pts)


def stroke_width(h: int, w: int) -> int:
    return max(1, round(BASE_STROKE * min(h, w) / 64))


def render_map(lms: LandmarkSet, h: int, w: int) -> np.ndarray:
    """Rasterize landmarks into an (h, w, 3) uint8 semantic map.

    Jaw, brows and nose are stroked polylines; eyes and mouth are filled
    polygons plus their outline (so fully closed eyes still leave a stroke
    at the lid line). Later groups overpaint earlier ones on overlap.
    """
    lms.assert_in_frame(h, w)
    pts = lms.points
    width = stroke_width(h, w)
    out = np.zeros((h, w, 3), dtype=np.uint8)

    def stroke(idx: slice, color, closed=False):
        raster.paint(out, raster.polyline_mask(pts[idx], width, h, w, closed=closed), color)

    def fill(idx: slice, color):
        mask = raster.polygon_mask(pts[idx], h, w)
        mask |= raster.polyline_mask(pts[idx], width, h, w, closed=True)
        raster.paint(out, mask, color)

    stroke(JAW, PALETTE["jaw"])
    stroke(BROW_LEFT, PALETTE["brows"])
    stroke(BROW_RIGHT, PALETTE["brows"])
    stroke(NOSE_BRIDGE, PALETTE["nose"])
    stroke(NOSE_BASE, PALETTE["nose"])
    fill(EYE_LEFT, PALETTE["eyes"])
    fill(EYE_RIGHT, PALETTE["eyes"])
    fill(MOUTH_OUTER, PALETTE["mouth"])
    fill(MOUTH_INNER, PALETTE["mouth"])
    return out


def map_to_model_range(smap: np.ndarray) -> np.ndarray:
    """Convert a uint8 semantic map to the [-1, 1] range used by the models."""
    return np.asarray(smap, dtype=np.float32) * np.float32(2.0 / 255.0) - np.float32(1.0)


@dataclass(frozen=True)
class FacePose:
    """Pose parameters of the synthetic 68-point layout."""

    center: tuple[float, float]
    scale: float  # face half-extent in pixels
    tilt: float = 0.0  # head tilt, radians, positive = clockwise
    eye_openness: float = 1.0  # 0 = closed, 1 = wide open
    mouth_curvature: float = 0.0  # -1 = frown, +1 = smile

    def __post_init__(self):
        if not 0.0 <= self.eye_openness <= 1.0:
            raise DataError(f"eye_openness must be in [0, 1], got {self.eye_openness}")
        if not -1.0 <= self.mouth_curvature <= 1.0:
            raise DataError(f"mouth_curvature must be in [-1, 1], got {self.mouth_curvature}")
        if self.scale <= 0:
            raise DataError(f"scale must be positive, got {self.scale}")


# Mouth geometry shared by the landmark layout and the toy face renderer.
MOUTH_Y = 0.55
MOUTH_HALF_WIDTH = 0.30
MOUTH_BEND = 0.10


def mouth_centerline_y(x: float, curvature: float) -> float:
    """Vertical offset of the mouth centerline at horizontal offset x.

    Zero at the corners; positive curvature lowers the center relative to
    the corners (y grows downward), i.e. raises the corners into a smile.
    """
    rel = x / MOUTH_HALF_WIDTH
    return MOUTH_Y + MOUTH_BEND * curvature * (1.0 - rel * rel)


def _canonical_points(eye_openness: float, mouth_curvature: float) -> np.ndarray:
    """68-point layout in unit face coordinates (x right, y down, half-extent 1).

    Left/right halves are exact float mirrors so that a zero-tilt,
    zero-curvature face is bilaterally symmetric by construction.
    """
    pts = np.zeros((N_LANDMARKS, 2))

    for k in range(9):  # jaw: ear (k=0) to chin (k=8), mirrored to k=16
        ang = k * math.pi / 16.0
        x = -math.cos(ang)
        y = -0.20 + 1.20 * math.sin(ang)
        pts[k] = (x, y)
        pts[16 - k] = (-x, y)

    for k in range(5):  # brows, arched
        x = -0.70 + k * (0.55 / 4.0)
        y = -0.55 - 0.10 * math.sin(k * math.pi / 4.0)
        pts[17 + k] = (x, y)
        pts[26 - k] = (-x, y)

    for k in range(4):  # nose bridge
        pts[27 + k] = (0.0, -0.50 + k * 0.20)
    base_x = (-0.18, -0.09, 0.0, 0.09, 0.18)
    base_y = (0.22, 0.26, 0.28, 0.26, 0.22)
    for k in range(5):
        pts[31 + k] = (base_x[k], base_y[k])

    a_eye = 0.16
    b_eye = 0.11 * eye_openness
    eye_cx, eye_cy = -0.42, -0.35
    hexagon = [
        (-a_eye, 0.0),
        (-a_eye / 2.0, -b_eye),
        (a_eye / 2.0, -b_eye),
        (a_eye, 0.0),
        (a_eye / 2.0, b_eye),
        (-a_eye / 2.0, b_eye),
    ]
    for k, (dx, dy) in enumerate(hexagon):
        pts[36 + k] = (eye_cx + dx, eye_cy + dy)
        pts[42 + k] = (-(eye_cx + dx), eye_cy + dy)

    a = MOUTH_HALF_WIDTH

    def bend(x):
        return mouth_centerline_y(x, mouth_curvature)

    def lip(x, half_width, thickness):
        rel = x / half_width
        return thickness * (1.0 - rel * rel)

    xs_up = np.array([-2 * a / 3, -a / 3, 0.0, a / 3, 2 * a / 3])
    pts[48] = (-a, MOUTH_Y)
    pts[54] = (a, MOUTH_Y)
    for j, x in enumerate(xs_up):
        pts[49 + j] = (x, bend(x) - lip(x, a, 0.10))
    for j, x in enumerate(xs_up[::-1]):
        pts[55 + j] = (x, bend(x) + lip(x, a, 0.10))

    ai = 0.18
    xs_in = np.array([-ai / 2, 0.0, ai / 2])
    pts[60] = (-ai, bend(-ai))
    pts[64] = (ai, bend(ai))
    for j, x in enumerate(xs_in):
        pts[61 + j] = (x, bend(x) - lip(x, ai, 0.05))
    for j, x in enumerate(xs_in[::-1]):
        pts[65 + j] = (x, bend(x) + lip(x, ai, 0.05))

    return pts


def synth_landmarks(pose: FacePose, h: int, w: int) -> LandmarkSet:
    """Deterministic parametric 68-point layout placed into an h x w frame."""
    unit = _canonical_points(pose.eye_openness, pose.mouth_curvature)
    c, s = math.cos(pose.tilt), math.sin(pose.tilt)
    x = unit[:, 0] * pose.scale
    y = unit[:, 1] * pose.scale
    pts = np.stack(
        [pose.center[0] + c * x - s * y, pose.center[1] + s * x + c * y], axis=1
    )
    if (pts < 0).any() or (pts[:, 0] >= w).any() or (pts[:, 1] >= h).any():
        raise DataError(
            f"scale too large for frame: face at {pose.center} scale {pose.scale} leaves {w}x{h}"
        )
    return LandmarkSet(pts)
