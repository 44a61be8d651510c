"""Adversarial training loop for the map-conditioned GAN.

One iteration runs a discriminator Adam step on the conditional objective
with a fresh latent batch, then a generator Adam step on the non-saturating
loss with another fresh latent batch. Sigmoid scores are clamped away from
{0, 1} before any log so both losses stay finite no matter how far either
network saturates.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch

from . import imaging, semantic_map
from .errors import DataError, NumericsError
from .models import (
    Discriminator,
    Generator,
    build_models,
    default_specs,
    save_checkpoint,
    SCORE_EPS,
)
from .seeding import derive_seed

METRICS_HEADER = "iter,d_loss,g_loss,real_score,fake_score"


@dataclass(frozen=True)
class TrainConfig:
    dataset_root: str
    out_dir: str
    resolution: int = 64
    iterations: int = 10000
    batch_size: int = 64
    learning_rate: float = 2e-4
    beta1: float = 0.5
    beta2: float = 0.5
    latent_dim: int = 100
    base_filters: int = 64
    seed: int = 0
    log_every: int = 100
    checkpoint_every: int = 1000

    def __post_init__(self):
        if self.batch_size < 2:
            raise DataError("batch size must be >= 2 (BatchNorm needs batch statistics)")
        if self.learning_rate <= 0:
            raise DataError("learning rate must be positive")
        if self.iterations < 0:
            raise DataError("iteration budget must be >= 0")


def clamp_scores(scores: torch.Tensor) -> torch.Tensor:
    return scores.clamp(SCORE_EPS, 1.0 - SCORE_EPS)


def d_loss(real_scores: torch.Tensor, fake_scores: torch.Tensor) -> torch.Tensor:
    """-mean(log D(x,c)) - mean(log(1 - D(G(z,c),c)))."""
    real = clamp_scores(real_scores)
    fake = clamp_scores(fake_scores)
    return -torch.log(real).mean() - torch.log(1.0 - fake).mean()


def g_loss(fake_scores: torch.Tensor) -> torch.Tensor:
    """Non-saturating generator loss: -mean(log D(G(z,c),c))."""
    return -torch.log(clamp_scores(fake_scores)).mean()


def sample_latent(
    n: int, dim: int, generator: torch.Generator, dtype=torch.float32
) -> torch.Tensor:
    """Latent batch drawn from U[-1, 1]^dim."""
    return torch.rand((n, dim), generator=generator, dtype=dtype) * 2.0 - 1.0


def train_step(
    gen: Generator,
    disc: Discriminator,
    g_opt: torch.optim.Optimizer,
    d_opt: torch.optim.Optimizer,
    images: torch.Tensor,
    maps: torch.Tensor,
    z_rng: torch.Generator,
) -> dict:
    """One discriminator update then one generator update on a paired batch."""
    n = images.shape[0]
    dim = gen.spec.latent_dim

    d_opt.zero_grad(set_to_none=True)
    real_scores = disc(images, maps)
    z = sample_latent(n, dim, z_rng)
    fake = gen(z, maps)
    fake_scores = disc(fake.detach(), maps)
    loss_d = d_loss(real_scores, fake_scores)
    loss_d.backward()
    d_opt.step()

    g_opt.zero_grad(set_to_none=True)
    z = sample_latent(n, dim, z_rng)
    fake = gen(z, maps)
    fake_scores_g = disc(fake, maps)
    loss_g = g_loss(fake_scores_g)
    loss_g.backward()
    g_opt.step()

    metrics = {
        "d_loss": float(loss_d.detach()),
        "g_loss": float(loss_g.detach()),
        "real_score": float(real_scores.detach().mean()),
        "fake_score": float(fake_scores.detach().mean()),
    }
    if not all(math.isfinite(v) for v in metrics.values()):
        raise NumericsError(f"non-finite training metrics: {metrics}")
    return metrics


class PairedDataset:
    """Paired (image, map) samples from the on-disk dataset layout.

    Layout: <root>/images/*.png and <root>/landmarks/*.json paired by stem,
    with optional cached maps under <root>/maps/*.png. Missing maps are
    rendered from the landmarks on the fly.
    """

    def __init__(self, root: str | os.PathLike, resolution: int):
        self.root = Path(root)
        self.resolution = resolution
        image_dir = self.root / "images"
        if not image_dir.is_dir():
            raise DataError(f"dataset has no images directory: {image_dir}")
        self.stems = sorted(p.stem for p in image_dir.glob("*.png"))
        if not self.stems:
            raise DataError(f"empty dataset: no PNG images under {image_dir}")
        self._images = np.stack([self._load_image(s) for s in self.stems])
        self._maps = np.stack([self._load_map(s) for s in self.stems])
        self._maps_model = semantic_map.map_to_model_range(self._maps)

    def _load_image(self, stem: str) -> np.ndarray:
        img = imaging.load_image(self.root / "images" / f"{stem}.png")
        if img.shape[0] != self.resolution or img.shape[1] != self.resolution:
            raise DataError(
                f"{stem}: image is {img.shape[1]}x{img.shape[0]}, config wants {self.resolution}"
            )
        return img

    def _load_map(self, stem: str) -> np.ndarray:
        cached = self.root / "maps" / f"{stem}.png"
        if cached.exists():
            smap = (imaging.load_image(cached) + 1.0) * (255.0 / 2.0)
            return np.rint(smap).astype(np.uint8)
        lms = semantic_map.load_landmarks(self.root / "landmarks" / f"{stem}.json")
        return semantic_map.render_map(lms, self.resolution, self.resolution)

    def __len__(self) -> int:
        return len(self.stems)

    def image(self, idx: int) -> np.ndarray:
        return self._images[idx]

    def map_uint8(self, idx: int) -> np.ndarray:
        return self._maps[idx]

    def batch(self, indices: np.ndarray) -> tuple[torch.Tensor, torch.Tensor]:
        images = torch.from_numpy(self._images[indices]).permute(0, 3, 1, 2).contiguous()
        maps = torch.from_numpy(self._maps_model[indices]).permute(0, 3, 1, 2).contiguous()
        return images, maps


def make_optimizers(
    gen: Generator, disc: Discriminator, cfg: TrainConfig
) -> tuple[torch.optim.Optimizer, torch.optim.Optimizer]:
    betas = (cfg.beta1, cfg.beta2)
    return (
        torch.optim.Adam(gen.parameters(), lr=cfg.learning_rate, betas=betas),
        torch.optim.Adam(disc.parameters(), lr=cfg.learning_rate, betas=betas),
    )


def train(cfg: TrainConfig) -> str:
    """Run the full training loop; returns the final checkpoint path."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    dataset = PairedDataset(cfg.dataset_root, cfg.resolution)

    gen_spec, disc_spec = default_specs(
        cfg.resolution, latent_dim=cfg.latent_dim, base_filters=cfg.base_filters
    )
    gen, disc = build_models(gen_spec, disc_spec, cfg.seed)
    g_opt, d_opt = make_optimizers(gen, disc, cfg)

    batch_rng = np.random.default_rng(derive_seed(cfg.seed, "train:batches"))
    z_rng = torch.Generator().manual_seed(derive_seed(cfg.seed, "train:latent") % 2**63)

    gen.train()
    disc.train()
    lines = [METRICS_HEADER]
    final_path = out_dir / "checkpoint_final.fpck"

    def meta(iteration: int) -> dict:
        return {
            "trained_iterations": iteration,
            "seed": cfg.seed,
            "resolution": cfg.resolution,
            "dataset_size": len(dataset),
            "batch_size": cfg.batch_size,
        }

    for it in range(1, cfg.iterations + 1):
        indices = batch_rng.choice(len(dataset), size=cfg.batch_size, replace=True)
        images, maps = dataset.batch(indices)
        metrics = train_step(gen, disc, g_opt, d_opt, images, maps, z_rng)
        if it % cfg.log_every == 0 or it == cfg.iterations:
            lines.append(
                f"{it},{metrics['d_loss']:.6f},{metrics['g_loss']:.6f},"
                f"{metrics['real_score']:.6f},{metrics['fake_score']:.6f}"
            )
        if cfg.checkpoint_every and it % cfg.checkpoint_every == 0 and it != cfg.iterations:
            save_checkpoint(out_dir / f"checkpoint_{it:07d}.fpck", gen, disc, meta(it))

    save_checkpoint(final_path, gen, disc, meta(cfg.iterations))
    (out_dir / "metrics.csv").write_text("\n".join(lines) + "\n")
    return str(final_path)
