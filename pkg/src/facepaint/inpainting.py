"""Latent-vector optimization for inpainting a corrupted image.

Network parameters stay frozen; only the latent vector is optimized, with
Adam, to minimize

    total = contextual + eta * perceptual

where the contextual term is the masked L1 distance to the corrupted image
on its uncorrupted pixels and the perceptual term is log(1 - D(G(z,c), c)),
the discriminator's judgement of the generated (image, map) pair. After every
step the latent vector is clipped back into [-1, 1]. The final output keeps
corrupted-image pixels wherever the mask is 1 and fills holes from the
generated image.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
import torch

from . import imaging, semantic_map
from .errors import DataError, NumericsError
from .models import Discriminator, Generator, SCORE_EPS
from .seeding import derive_seed


@dataclass(frozen=True)
class InpaintConfig:
    eta: float = 0.1  # perceptual weight
    learning_rate: float = 5e-2
    iterations: int = 1500
    beta1: float = 0.9
    beta2: float = 0.99
    seed: int = 0
    restarts: int = 1
    normalize_l1: bool = True  # divide the L1 sum by the uncorrupted entry count

    def __post_init__(self):
        if self.eta < 0:
            raise DataError("eta must be >= 0")
        if self.iterations < 0:
            raise DataError("iterations must be >= 0")
        if self.restarts < 1:
            raise DataError("restarts must be >= 1")


@dataclass
class InpaintResult:
    z_hat: np.ndarray
    generated: np.ndarray  # G(z_hat, c), full frame
    inpainted: np.ndarray  # overlay of corrupted and generated
    # (total, contextual, perceptual) at z after k steps; trace[0] is the
    # seeded initialization, trace[-1] is z_hat
    trace: list[tuple[float, float, float]]
    metadata: dict = field(default_factory=dict)

    @property
    def final_losses(self) -> tuple[float, float, float]:
        return self.trace[-1] if self.trace else (math.nan, math.nan, math.nan)


def contextual_loss(
    gen: torch.Tensor, corrupted: torch.Tensor, mask: torch.Tensor, normalize: bool = True
) -> torch.Tensor:
    """Masked L1 distance on uncorrupted pixels.

    ``mask`` is (H, W) with 1 = uncorrupted, broadcast across channels; an
    all-zero mask yields 0 (no context to preserve). With ``normalize`` the
    sum is divided by the number of uncorrupted entries so the value is
    comparable across mask sizes and resolutions.
    """
    if gen.shape != corrupted.shape:
        raise DataError(f"shape mismatch: {tuple(gen.shape)} vs {tuple(corrupted.shape)}")
    if mask.shape != gen.shape[-3:-1]:
        # images are (..., H, W, C); the mask must match their spatial shape
        raise DataError(f"mask shape {tuple(mask.shape)} does not match image")
    m = mask.unsqueeze(-1).to(gen.dtype)
    total = (m * (gen - corrupted)).abs().sum()
    if not normalize:
        return total
    count = mask.sum() * gen.shape[-1]
    if count == 0:
        return total * 0.0
    return total / count


def perceptual_loss(disc_score: torch.Tensor) -> torch.Tensor:
    """log(1 - D(G(z,c), c)); low when the discriminator is convinced."""
    return torch.log((1.0 - disc_score).clamp_min(SCORE_EPS))


def overlay(corrupted: np.ndarray, gen: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """mask * corrupted + (1 - mask) * gen, bit-exact on mask-1 pixels."""
    if corrupted.shape != gen.shape:
        raise DataError(f"shape mismatch: {corrupted.shape} vs {gen.shape}")
    if mask.shape != corrupted.shape[:2]:
        raise DataError(f"mask shape {mask.shape} does not match image {corrupted.shape}")
    keep = np.asarray(mask, dtype=bool)[:, :, None]
    return np.where(keep, corrupted, gen)


def _image_hwc(t: torch.Tensor) -> np.ndarray:
    return t.detach().squeeze(0).permute(1, 2, 0).numpy().astype(np.float32)


def optimize_latent(
    gen: Generator,
    disc: Discriminator,
    corrupted: np.ndarray,
    mask: np.ndarray,
    smap: np.ndarray,
    cfg: InpaintConfig,
    on_iteration: Callable[[int, np.ndarray, tuple[float, float, float]], None] | None = None,
) -> InpaintResult:
    """Recover the latent vector that best explains a corrupted image.

    ``smap`` is the uint8 semantic map conditioning both networks. Runs
    ``cfg.restarts`` independent seeded optimizations and keeps the one with
    the lowest final total loss. ``on_iteration`` is called after each step
    with (iteration, z, (total, contextual, perceptual)).
    """
    corrupted = imaging.check_image(corrupted)
    mask = imaging.check_mask(mask)
    w = gen.spec.resolution
    if corrupted.shape[:2] != (w, w):
        raise DataError(f"corrupted image is {corrupted.shape[:2]}, model wants {w}x{w}")
    if mask.shape != (w, w):
        raise DataError(f"mask is {mask.shape}, model wants {w}x{w}")
    if smap.shape[:2] != (w, w):
        raise DataError(f"semantic map is {smap.shape[:2]}, model wants {w}x{w}")

    gen.eval()
    disc.eval()
    target = torch.from_numpy(corrupted).unsqueeze(0).permute(0, 3, 1, 2)
    mask_t = torch.from_numpy(mask.astype(np.float32))
    c = (
        torch.from_numpy(semantic_map.map_to_model_range(smap))
        .unsqueeze(0)
        .permute(0, 3, 1, 2)
    )

    best: InpaintResult | None = None
    for restart in range(cfg.restarts):
        seed = cfg.seed if cfg.restarts == 1 else derive_seed(cfg.seed, f"restart:{restart}")
        result = _run_single(gen, disc, target, mask_t, c, mask, corrupted, cfg, seed, on_iteration)
        if best is None or result.final_losses[0] < best.final_losses[0]:
            best = result
    assert best is not None
    return best


def _run_single(
    gen: Generator,
    disc: Discriminator,
    target: torch.Tensor,
    mask_t: torch.Tensor,
    c: torch.Tensor,
    mask: np.ndarray,
    corrupted: np.ndarray,
    cfg: InpaintConfig,
    seed: int,
    on_iteration,
) -> InpaintResult:
    z_rng = torch.Generator().manual_seed(seed % 2**63)
    z = (torch.rand((1, gen.spec.latent_dim), generator=z_rng) * 2.0 - 1.0).requires_grad_(True)
    opt = torch.optim.Adam([z], lr=cfg.learning_rate, betas=(cfg.beta1, cfg.beta2))

    # contextual loss compares HWC views; permute the CHW target once
    target_hwc = target.permute(0, 2, 3, 1)

    def losses_at(z_batch: torch.Tensor) -> tuple[torch.Tensor, ...]:
        fake = gen(z_batch, c)
        score = disc(fake, c)
        l_con = contextual_loss(
            fake.permute(0, 2, 3, 1), target_hwc, mask_t, normalize=cfg.normalize_l1
        )
        l_per = perceptual_loss(score).squeeze()
        return l_con + cfg.eta * l_per, l_con, l_per, fake

    # trace[k] holds the losses at z after k optimizer steps, so trace[0] is
    # the seeded initialization and trace[-1] the returned z_hat
    trace: list[tuple[float, float, float]] = []
    for it in range(cfg.iterations):
        opt.zero_grad(set_to_none=True)
        total, l_con, l_per, _ = losses_at(z)
        if not torch.isfinite(total):
            raise NumericsError(f"non-finite inpainting loss at iteration {it}")
        trace.append((float(total.detach()), float(l_con.detach()), float(l_per.detach())))
        total.backward()
        opt.step()
        with torch.no_grad():
            z.clamp_(-1.0, 1.0)
        if on_iteration is not None:
            on_iteration(it, z.detach().squeeze(0).numpy().copy(), trace[-1])

    with torch.no_grad():
        total, l_con, l_per, final_fake = losses_at(z)
        trace.append((float(total), float(l_con), float(l_per)))

    generated = _image_hwc(final_fake)
    z_hat = z.detach().squeeze(0).numpy().copy()
    return InpaintResult(
        z_hat=z_hat,
        generated=generated,
        inpainted=overlay(corrupted, generated, mask),
        trace=trace,
        metadata={"seed": seed, "iterations": cfg.iterations},
    )


def inpaint_sequence(
    gen: Generator,
    disc: Discriminator,
    frames: list[np.ndarray],
    frame_masks: list[np.ndarray],
    frame_maps: list[np.ndarray],
    cfg: InpaintConfig,
) -> list[InpaintResult]:
    """Inpaint each frame independently with a per-frame derived seed."""
    if not (len(frames) == len(frame_masks) == len(frame_maps)):
        raise DataError(
            f"frames/masks/maps lengths differ: {len(frames)}/{len(frame_masks)}/{len(frame_maps)}"
        )
    results = []
    for i, (frame, mask, smap) in enumerate(zip(frames, frame_masks, frame_maps)):
        frame_cfg = replace(cfg, seed=derive_seed(cfg.seed, f"frame:{i}"))
        try:
            results.append(optimize_latent(gen, disc, frame, mask, smap, frame_cfg))
        except (DataError, NumericsError) as exc:
            raise type(exc)(f"frame {i}: {exc}") from exc
    return results
