"""Deterministic software rasterizer.

Map rendering must be exactly equivariant under integer translation and
horizontal reflection of the input geometry, so polygon fill and stroked
polylines are evaluated in integer arithmetic on a fixed 1/8-pixel subgrid:
coordinates are quantized once with a sign-symmetric rounding rule and every
inside/on-edge test below is exact. Ellipses (used only for toy face appearance,
where exact symmetry is not required) take the plain float path.

Coordinates are (x, y) in pixel units; integer coordinates address pixel
centers, and pixel (row i, col j) has center (x=j, y=i).
"""

from __future__ import annotations

import math

import numpy as np

SUBPIXEL = 8


def _scaled(points: np.ndarray) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    # rint rounds half to even, which commutes with negation; floor(x+0.5)
    # would break reflection equivariance at exact half-subpixel ties.
    return np.rint(pts * SUBPIXEL).astype(np.int64)


def _bbox(scaled_pts: np.ndarray, h: int, w: int, pad: int = 0):
    x0 = max(0, int(np.floor((scaled_pts[:, 0].min() - pad) / SUBPIXEL)))
    x1 = min(w - 1, int(np.ceil((scaled_pts[:, 0].max() + pad) / SUBPIXEL)))
    y0 = max(0, int(np.floor((scaled_pts[:, 1].min() - pad) / SUBPIXEL)))
    y1 = min(h - 1, int(np.ceil((scaled_pts[:, 1].max() + pad) / SUBPIXEL)))
    if x0 > x1 or y0 > y1:
        return None
    return x0, x1, y0, y1


def polygon_mask(points: np.ndarray, h: int, w: int) -> np.ndarray:
    """Boolean (h, w) mask of pixels inside a closed polygon.

    Even-odd rule on pixel centers; centers exactly on an edge count as
    inside, which keeps the test symmetric under reflection.
    """
    out = np.zeros((h, w), dtype=bool)
    P = _scaled(points)
    if len(P) < 3:
        return out
    box = _bbox(P, h, w)
    if box is None:
        return out
    x0, x1, y0, y1 = box
    J, I = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
    X = (J * SUBPIXEL).astype(np.int64)
    Y = (I * SUBPIXEL).astype(np.int64)

    inside = np.zeros(X.shape, dtype=bool)
    on_edge = np.zeros(X.shape, dtype=bool)
    n = len(P)
    for k in range(n):
        ax, ay = P[k]
        bx, by = P[(k + 1) % n]
        dx, dy = bx - ax, by - ay
        # on-segment test: zero cross product and projection within bounds
        cross = dx * (Y - ay) - dy * (X - ax)
        dot = (X - ax) * dx + (Y - ay) * dy
        on_edge |= (cross == 0) & (dot >= 0) & (dot <= dx * dx + dy * dy)
        if dy == 0:
            continue
        spans = (ay > Y) != (by > Y)
        lhs = (X - ax) * dy
        rhs = (Y - ay) * dx
        crossing = spans & ((lhs < rhs) if dy > 0 else (lhs > rhs))
        inside ^= crossing
    out[y0 : y1 + 1, x0 : x1 + 1] = inside | on_edge
    return out


def polyline_mask(
    points: np.ndarray, width: float, h: int, w: int, closed: bool = False
) -> np.ndarray:
    """Boolean mask of pixels within ``width``/2 of the polyline (capsule test)."""
    out = np.zeros((h, w), dtype=bool)
    P = _scaled(points)
    if len(P) == 0:
        return out
    r = max(1, int(round(width * SUBPIXEL / 2.0)))
    r2 = r * r
    n = len(P)
    segs = [(k, (k + 1) % n) for k in range(n)] if closed else [(k, k + 1) for k in range(n - 1)]
    if n == 1:
        segs = [(0, 0)]
    for ka, kb in segs:
        A, B = P[ka], P[kb]
        box = _bbox(np.stack([A, B]), h, w, pad=r)
        if box is None:
            continue
        x0, x1, y0, y1 = box
        J, I = np.meshgrid(np.arange(x0, x1 + 1), np.arange(y0, y1 + 1))
        X = (J * SUBPIXEL).astype(np.int64)
        Y = (I * SUBPIXEL).astype(np.int64)
        abx, aby = B[0] - A[0], B[1] - A[1]
        L2 = abx * abx + aby * aby
        apx, apy = X - A[0], Y - A[1]
        ap2 = apx * apx + apy * apy
        if L2 == 0:
            hit = ap2 <= r2
        else:
            dot = apx * abx + apy * aby
            bpx, bpy = X - B[0], Y - B[1]
            bp2 = bpx * bpx + bpy * bpy
            # interior: dist^2 = |AP|^2 - dot^2/L2, compared scaled by L2
            hit = np.where(
                dot <= 0,
                ap2 <= r2,
                np.where(dot >= L2, bp2 <= r2, ap2 * L2 - dot * dot <= r2 * L2),
            )
        out[y0 : y1 + 1, x0 : x1 + 1] |= hit
    return out


def ellipse_mask(
    center: tuple[float, float],
    rx: float,
    ry: float,
    h: int,
    w: int,
    angle: float = 0.0,
) -> np.ndarray:
    """Boolean mask of pixels inside a (possibly rotated) ellipse.

    Float evaluation; used for toy face appearance layers only.
    """
    cx, cy = center
    rx = max(rx, 1e-6)
    ry = max(ry, 1e-6)
    I, J = np.mgrid[0:h, 0:w]
    dx = J - cx
    dy = I - cy
    c, s = math.cos(angle), math.sin(angle)
    u = c * dx + s * dy
    v = -s * dx + c * dy
    return (u / rx) ** 2 + (v / ry) ** 2 <= 1.0


def paint(img: np.ndarray, mask: np.ndarray, color) -> None:
    """Set masked pixels of an (H, W, C) or (H, W) image to ``color`` in place."""
    img[mask] = color
