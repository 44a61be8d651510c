"""Quantitative evaluation: correctness and cross-frame consistency.

Correctness corrupts each test image, inpaints it, and measures PSNR against
the uncorrupted original. Consistency builds a pseudo-sequence (N corrupted
variants of one source image), inpaints every frame independently, and
averages PSNR over all unordered frame pairs; pseudo-sequences sidestep the
motion-compensation noise a real video would add.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import imaging
from .errors import DataError, FacepaintError
from .inpainting import InpaintConfig, inpaint_sequence, optimize_latent
from .masks import MaskSpec, make_mask, make_sequence_masks
from .models import Discriminator, Generator
from .seeding import derive_seed
from .training import PairedDataset

CORRUPTED_FILL = -1.0  # corrupted pixels are blacked out

CORRECTNESS_KINDS = ("central", "checkerboard", "left", "freehand")
CONSISTENCY_KINDS = ("central", "freehand", "left")


@dataclass(frozen=True)
class PseudoSequence:
    """N corrupted variants of one source image plus the masks that made them."""

    source: np.ndarray
    frames: list[np.ndarray]
    masks: list[np.ndarray]

    def __post_init__(self):
        if len(self.frames) < 2 or len(self.frames) != len(self.masks):
            raise DataError(
                f"pseudo-sequence needs N >= 2 paired frames/masks, got {len(self.frames)}/{len(self.masks)}"
            )

    def __len__(self) -> int:
        return len(self.frames)


def corrupt(source: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Black out the mask-0 pixels of an image."""
    keep = np.asarray(mask, dtype=bool)[:, :, None]
    return np.where(keep, source, np.float32(CORRUPTED_FILL))


def make_pseudo_sequence(source: np.ndarray, kind: str, n: int, seed: int) -> PseudoSequence:
    source = imaging.check_image(source)
    h, w = source.shape[:2]
    masks = make_sequence_masks(kind, n, seed, h, w)
    frames = [corrupt(source, m) for m in masks]
    return PseudoSequence(source=source, frames=frames, masks=masks)


def consistency(frames: list[np.ndarray]) -> float:
    """Mean PSNR over all unordered frame pairs.

    PSNR is symmetric, so summing each pair once with a 1/C(N,2) prefactor
    equals the double sum over ordered pairs with 1/(N(N-1)).
    """
    n = len(frames)
    if n < 2:
        raise DataError(f"consistency needs at least 2 frames, got {n}")
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            total += imaging.psnr(frames[i], frames[j])
    return total / math.comb(n, 2)


@dataclass
class EvalItem:
    kind: str
    item_id: str
    value: float | None
    error: str | None = None


@dataclass
class EvalReport:
    protocol: str  # "correctness" or "consistency"
    items: list[EvalItem]
    metadata: dict = field(default_factory=dict)

    def values(self, kind: str) -> list[float]:
        return [it.value for it in self.items if it.kind == kind and it.error is None]

    def kinds(self) -> list[str]:
        seen: list[str] = []
        for it in self.items:
            if it.kind not in seen:
                seen.append(it.kind)
        return seen

    def aggregates(self) -> dict[str, float]:
        """Per-kind mean over successful items."""
        out = {}
        for kind in self.kinds():
            vals = self.values(kind)
            if vals:
                out[kind] = sum(vals) / len(vals)
        return out

    def failures(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for it in self.items:
            if it.error is not None:
                out[it.kind] = out.get(it.kind, 0) + 1
        return out

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "metadata": self.metadata,
            "items": [
                {"kind": it.kind, "id": it.item_id, "value": it.value, "error": it.error}
                for it in self.items
            ],
            "aggregates": self.aggregates(),
            "failures": self.failures(),
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    def to_csv(self) -> str:
        lines = ["kind,id,value,error"]
        for it in self.items:
            value = "" if it.value is None else f"{it.value:.6f}"
            lines.append(f"{it.kind},{it.item_id},{value},{it.error or ''}")
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        """Human-readable table: one row per model, one column per mask kind."""
        label = self.metadata.get("label", "model")
        title = {
            "correctness": "Mean correctness (PSNR dB)",
            "consistency": "Mean consistency (pairwise PSNR dB)",
        }.get(self.protocol, self.protocol)
        resolution = self.metadata.get("resolution")
        if resolution:
            title += f" @ {resolution}x{resolution}"
        kinds = self.kinds()
        agg = self.aggregates()
        fails = self.failures()
        widths = [max(len(k), 8) for k in kinds]
        head = " " * (len(label) + 2) + "  ".join(k.rjust(w) for k, w in zip(kinds, widths))
        cells = []
        for k, w in zip(kinds, widths):
            cells.append((f"{agg[k]:.2f}" if k in agg else "n/a").rjust(w))
        row = f"{label}  " + "  ".join(cells)
        lines = [title, head, row]
        if fails:
            lines.append(f"failed items: {fails}")
        return "\n".join(lines) + "\n"


def _run_items(worker, args_list, jobs: int):
    if jobs <= 1:
        return [worker(*args) for args in args_list]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda args: worker(*args), args_list))


def correctness_eval(
    gen: Generator,
    disc: Discriminator,
    dataset_root: str,
    mask_kinds: tuple[str, ...] = CORRECTNESS_KINDS,
    cfg: InpaintConfig = InpaintConfig(),
    seed: int = 0,
    jobs: int = 1,
    metadata: dict | None = None,
) -> EvalReport:
    """Corrupt, inpaint and PSNR-score every dataset image per mask kind."""
    resolution = gen.spec.resolution
    dataset = PairedDataset(dataset_root, resolution)

    def worker(kind: str, stem: str, idx: int) -> EvalItem:
        try:
            image = dataset.image(idx)
            smap = dataset.map_uint8(idx)
            mask_seed = derive_seed(seed, f"correctness:{kind}:{stem}")
            spec = MaskSpec(kind, seed=mask_seed)
            mask = make_mask(spec, resolution, resolution)
            damaged = corrupt(image, mask)
            item_cfg = replace(cfg, seed=derive_seed(seed, f"inpaint:{kind}:{stem}"))
            result = optimize_latent(gen, disc, damaged, mask, smap, item_cfg)
            return EvalItem(kind, stem, imaging.psnr(result.inpainted, image))
        except FacepaintError as exc:
            return EvalItem(kind, stem, None, error=str(exc))

    args = [
        (kind, stem, idx)
        for kind in mask_kinds
        for idx, stem in enumerate(dataset.stems)
    ]
    items = _run_items(worker, args, jobs)
    meta = {
        "protocol": "correctness",
        "resolution": resolution,
        "seed": seed,
        "mask_kinds": list(mask_kinds),
        "dataset": str(dataset_root),
        "inpaint_iterations": cfg.iterations,
        **(metadata or {}),
    }
    return EvalReport("correctness", items, meta)


def consistency_eval(
    gen: Generator,
    disc: Discriminator,
    dataset_root: str,
    kinds: tuple[str, ...] = CONSISTENCY_KINDS,
    n: int = 3,
    cfg: InpaintConfig = InpaintConfig(),
    seed: int = 0,
    jobs: int = 1,
    metadata: dict | None = None,
) -> EvalReport:
    """Pseudo-sequence consistency per dataset image and mask kind.

    Each frame is inpainted independently; the reported value is the mean
    pairwise PSNR of the generator reconstructions.
    """
    resolution = gen.spec.resolution
    dataset = PairedDataset(dataset_root, resolution)

    def worker(kind: str, stem: str, idx: int) -> EvalItem:
        try:
            image = dataset.image(idx)
            smap = dataset.map_uint8(idx)
            seq = make_pseudo_sequence(
                image, kind, n, derive_seed(seed, f"sequence:{kind}:{stem}")
            )
            seq_cfg = replace(cfg, seed=derive_seed(seed, f"inpaint-seq:{kind}:{stem}"))
            results = inpaint_sequence(
                gen, disc, seq.frames, seq.masks, [smap] * len(seq), seq_cfg
            )
            return EvalItem(kind, stem, consistency([r.generated for r in results]))
        except FacepaintError as exc:
            return EvalItem(kind, stem, None, error=str(exc))

    args = [
        (kind, stem, idx)
        for kind in kinds
        for idx, stem in enumerate(dataset.stems)
    ]
    items = _run_items(worker, args, jobs)
    meta = {
        "protocol": "consistency",
        "resolution": resolution,
        "seed": seed,
        "mask_kinds": list(kinds),
        "sequence_length": n,
        "dataset": str(dataset_root),
        "inpaint_iterations": cfg.iterations,
        **(metadata or {}),
    }
    return EvalReport("consistency", items, meta)
