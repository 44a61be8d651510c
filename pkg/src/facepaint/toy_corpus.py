"""Procedural face-like dataset for desk-scale training and fixtures.

Every sample factorizes into independent appearance (skin/hair colors, drawn
by the sampler) and pose (layout parameters of the 68-point synthetic
landmark set). The semantic map depends on pose alone, so a trained model
can be probed mechanically: the map should control expression while the
latent vector controls appearance.

Faces are flat-shaded: background, head ellipse in skin color, a hair
crescent, two dark eye ellipses whose height follows eye openness, and a
thick mouth polyline bent by the curvature parameter. The nose area is left
unpainted, which gives every face a guaranteed skin-only patch between the
eyes and the mouth for color measurements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

from . import imaging, raster, semantic_map
from .errors import DataError
from .seeding import derive_seed
from .semantic_map import FacePose, synth_landmarks

BACKGROUND = (-0.70, -0.70, -0.65)
EYE_COLOR = (-0.85, -0.85, -0.80)
MOUTH_COLOR = (-0.10, -0.80, -0.80)

# sampler ranges; skin/hair are derived from one base level each
SKIN_BASE_RANGE = (-0.10, 0.75)
HAIR_BASE_RANGE = (-0.90, 0.35)
SKIN_OFFSETS = (0.12, -0.03, -0.18)
HAIR_OFFSETS = (0.0, -0.10, -0.20)

SCALE_RANGE = (0.32, 0.40)  # fraction of min(h, w)
TILT_RANGE = (-0.12, 0.12)
EYE_OPENNESS_RANGE = (0.15, 1.0)
CENTER_JITTER = 0.03  # fraction of frame size


class PairedSample(NamedTuple):
    image: np.ndarray  # float32 (H, W, 3) in [-1, 1]
    smap: np.ndarray  # uint8 (H, W, 3) semantic map


@dataclass(frozen=True)
class FaceSpec:
    skin_color: tuple[float, float, float]
    hair_color: tuple[float, float, float]
    pose: FacePose

    def __post_init__(self):
        for name, color in (("skin", self.skin_color), ("hair", self.hair_color)):
            if any(not -1.0 <= v <= 1.0 for v in color):
                raise DataError(f"{name} color out of [-1, 1]: {color}")


def skin_color_from_base(base: float) -> tuple[float, float, float]:
    return tuple(float(np.clip(base + o, -0.95, 0.95)) for o in SKIN_OFFSETS)


def hair_color_from_base(base: float) -> tuple[float, float, float]:
    return tuple(float(np.clip(base + o, -0.95, 0.95)) for o in HAIR_OFFSETS)


def sample_pose(rng: np.random.Generator, h: int, w: int) -> FacePose:
    size = min(h, w)
    return FacePose(
        center=(
            w / 2.0 + float(rng.uniform(-CENTER_JITTER, CENTER_JITTER)) * w,
            h / 2.0 + float(rng.uniform(-CENTER_JITTER, CENTER_JITTER)) * h,
        ),
        scale=float(rng.uniform(*SCALE_RANGE)) * size,
        tilt=float(rng.uniform(*TILT_RANGE)),
        eye_openness=float(rng.uniform(*EYE_OPENNESS_RANGE)),
        mouth_curvature=float(rng.uniform(-1.0, 1.0)),
    )


def sample_face_spec(rng: np.random.Generator, h: int, w: int) -> FaceSpec:
    return FaceSpec(
        skin_color=skin_color_from_base(float(rng.uniform(*SKIN_BASE_RANGE))),
        hair_color=hair_color_from_base(float(rng.uniform(*HAIR_BASE_RANGE))),
        pose=sample_pose(rng, h, w),
    )


def _rotated_offset(pose: FacePose, dx: float, dy: float) -> tuple[float, float]:
    c, s = math.cos(pose.tilt), math.sin(pose.tilt)
    return (pose.center[0] + c * dx - s * dy, pose.center[1] + s * dx + c * dy)


def render_face(spec: FaceSpec, h: int, w: int) -> PairedSample:
    """Deterministic raster of one face plus its pose-only semantic map."""
    pose = spec.pose
    lms = synth_landmarks(pose, h, w)  # validates that the face fits the frame
    s = pose.scale
    img = np.empty((h, w, 3), dtype=np.float32)
    img[:] = np.asarray(BACKGROUND, dtype=np.float32)

    head = raster.ellipse_mask(
        _rotated_offset(pose, 0.0, 0.05 * s), 1.00 * s, 1.10 * s, h, w, angle=pose.tilt
    )
    raster.paint(img, head, np.asarray(spec.skin_color, dtype=np.float32))

    crown = raster.ellipse_mask(
        _rotated_offset(pose, 0.0, -0.20 * s), 1.05 * s, 1.00 * s, h, w, angle=pose.tilt
    )
    inner = raster.ellipse_mask(
        _rotated_offset(pose, 0.0, 0.12 * s), 1.00 * s, 1.05 * s, h, w, angle=pose.tilt
    )
    raster.paint(img, crown & ~inner, np.asarray(spec.hair_color, dtype=np.float32))

    stroke = semantic_map.stroke_width(h, w)
    pts = lms.points
    for eye in (semantic_map.EYE_LEFT, semantic_map.EYE_RIGHT):
        center = pts[eye].mean(axis=0)
        ry = max(0.11 * pose.eye_openness * s, stroke / 2.0)
        mask = raster.ellipse_mask(
            (float(center[0]), float(center[1])), 0.15 * s, ry, h, w, angle=pose.tilt
        )
        raster.paint(img, mask, np.asarray(EYE_COLOR, dtype=np.float32))

    a = semantic_map.MOUTH_HALF_WIDTH
    xs = np.linspace(-a, a, 9)
    curve = np.stack(
        [xs, [semantic_map.mouth_centerline_y(x, pose.mouth_curvature) for x in xs]], axis=1
    )
    c, sn = math.cos(pose.tilt), math.sin(pose.tilt)
    world = np.stack(
        [
            pose.center[0] + (c * curve[:, 0] - sn * curve[:, 1]) * s,
            pose.center[1] + (sn * curve[:, 0] + c * curve[:, 1]) * s,
        ],
        axis=1,
    )
    mouth_width = max(2, round(3 * min(h, w) / 64))
    mouth = raster.polyline_mask(world, mouth_width, h, w)
    raster.paint(img, mouth, np.asarray(MOUTH_COLOR, dtype=np.float32))

    return PairedSample(image=img, smap=semantic_map.render_map(lms, h, w))


def write_corpus(specs: list[FaceSpec], h: int, w: int, out_root) -> str:
    """Write paired samples in the training dataset layout; returns the root."""
    root = Path(out_root)
    for sub in ("images", "landmarks", "maps"):
        (root / sub).mkdir(parents=True, exist_ok=True)
    for i, spec in enumerate(specs):
        stem = f"{i:04d}"
        sample = render_face(spec, h, w)
        imaging.save_image(sample.image, root / "images" / f"{stem}.png")
        semantic_map.save_landmarks(
            synth_landmarks(spec.pose, h, w), root / "landmarks" / f"{stem}.json"
        )
        save_map(sample.smap, root / "maps" / f"{stem}.png")
    return str(root)


def save_map(smap: np.ndarray, path) -> None:
    imaging.save_image(semantic_map.map_to_model_range(smap), path)


def make_corpus(n: int, seed: int, h: int, w: int, out_root) -> str:
    """Sample and write an n-face corpus; fully determined by the seed."""
    if n < 1:
        raise DataError(f"corpus size must be >= 1, got {n}")
    rng = np.random.default_rng(derive_seed(seed, "toy-corpus"))
    specs = [sample_face_spec(rng, h, w) for _ in range(n)]
    return write_corpus(specs, h, w, out_root)


def _palette_box(smap: np.ndarray, color: tuple[int, int, int], pad: int):
    hit = np.all(smap == np.asarray(color, dtype=np.uint8), axis=2)
    if not hit.any():
        raise DataError("semantic map has no pixels of the requested component")
    ys, xs = np.nonzero(hit)
    h, w = smap.shape[:2]
    return (
        max(0, ys.min() - pad),
        min(h, ys.max() + 1 + pad),
        max(0, xs.min() - pad),
        min(w, xs.max() + 1 + pad),
    )


def mouth_box_from_map(smap: np.ndarray, pad: int | None = None):
    """Bounding box (y0, y1, x0, x1) of the map's mouth component."""
    if pad is None:
        pad = max(2, round(3 * min(smap.shape[:2]) / 64))
    return _palette_box(smap, semantic_map.PALETTE["mouth"], pad)


def mouth_curvature_stat(image: np.ndarray, box) -> float:
    """Smile statistic of the dark mouth pixels inside ``box``.

    Pixels darker than the box's bright (skin) level are weighted by their
    darkness; the statistic is the weighted mean y of the middle third of
    the box minus that of the outer thirds. Positive = the mouth center
    sits below the corners = smile; the sign matches mouth_curvature.
    """
    y0, y1, x0, x1 = box
    patch = np.asarray(image, dtype=np.float64)[y0:y1, x0:x1]
    luma = patch.mean(axis=2)
    ref = np.quantile(luma, 0.75)
    weight = np.clip(ref - luma, 0.0, None)
    if weight.sum() <= 0:
        return 0.0
    ys = np.arange(y0, y1, dtype=np.float64)[:, None]
    xs = np.arange(x0, x1, dtype=np.float64)[None, :]
    third = (x1 - x0) / 3.0
    middle = (xs >= x0 + third) & (xs < x1 - third)
    w_mid = weight * middle
    w_out = weight * ~middle
    if w_mid.sum() <= 0 or w_out.sum() <= 0:
        return 0.0
    return float((w_mid * ys).sum() / w_mid.sum() - (w_out * ys).sum() / w_out.sum())


def map_mouth_curvature_stat(smap: np.ndarray) -> float:
    """Same mouth statistic evaluated on the map's own mouth pixels."""
    y0, y1, x0, x1 = mouth_box_from_map(smap, pad=0)
    hit = np.all(
        smap == np.asarray(semantic_map.PALETTE["mouth"], dtype=np.uint8), axis=2
    ).astype(np.float64)
    ys = np.arange(smap.shape[0], dtype=np.float64)[:, None]
    xs = np.arange(smap.shape[1], dtype=np.float64)[None, :]
    third = (x1 - x0) / 3.0
    middle = (xs >= x0 + third) & (xs < x1 - third)
    w_mid = hit * middle
    w_out = hit * ~middle
    if w_mid.sum() <= 0 or w_out.sum() <= 0:
        return 0.0
    return float((w_mid * ys).sum() / w_mid.sum() - (w_out * ys).sum() / w_out.sum())


def skin_patch_box(smap: np.ndarray):
    """A small box between the eyes and the mouth that is always bare skin."""
    ey0, ey1, ex0, ex1 = _palette_box(smap, semantic_map.PALETTE["eyes"], 0)
    my0, my1, mx0, mx1 = _palette_box(smap, semantic_map.PALETTE["mouth"], 0)
    cy = (ey1 + my0) // 2
    cx = (ex0 + ex1 + mx0 + mx1) // 4
    r = max(1, round(min(smap.shape[:2]) * 0.05))
    h, w = smap.shape[:2]
    return (max(0, cy - r), min(h, cy + r + 1), max(0, cx - r), min(w, cx + r + 1))


def skin_mean_color(image: np.ndarray, smap: np.ndarray) -> np.ndarray:
    """Mean RGB of the bare-skin patch located from the map."""
    y0, y1, x0, x1 = skin_patch_box(smap)
    return np.asarray(image, dtype=np.float64)[y0:y1, x0:x1].reshape(-1, 3).mean(axis=0)


def map_eye_height(smap: np.ndarray) -> float:
    """Mean pixel height of the two eye components (tracks eye openness)."""
    heights = []
    hit = np.all(smap == np.asarray(semantic_map.PALETTE["eyes"], dtype=np.uint8), axis=2)
    if not hit.any():
        raise DataError("semantic map has no eye pixels")
    ys, xs = np.nonzero(hit)
    mid = (xs.min() + xs.max()) / 2.0
    for side in (xs <= mid, xs > mid):
        if side.any():
            heights.append(ys[side].max() - ys[side].min() + 1)
    return float(np.mean(heights))
