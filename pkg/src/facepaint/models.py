"""Map-conditioned generator and discriminator, plus checkpoint persistence.

Both networks condition on the semantic map by channel concatenation: the
generator receives the latent vector tiled to every spatial location and
stacked with the map, the discriminator receives the (image, map) stack.
Layer counts are resolution-parametric: depth = log2(W) - 2, which bottoms
out both paths at 4x4.

Checkpoints use a flat binary container (magic, version, JSON header, raw
little-endian tensor payloads) so that identical parameters always produce
identical bytes.
"""

from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass

import numpy as np
import torch
import torch.nn as nn
import torch.nn.functional as F

from .errors import DataError, NumericsError
from .seeding import derive_seed

CHECKPOINT_MAGIC = b"FPCK"
CHECKPOINT_VERSION = 1

LEAKY_SLOPE = 0.2
INIT_STD = 0.02
BN_MOMENTUM = 0.1  # running = 0.9 * running + 0.1 * batch
SCORE_EPS = 1e-7
MIN_RESOLUTION = 32

# Generator input stacking order, recorded in every checkpoint so a loader
# can never transpose it: tiled latent channels first, then map channels.
CONCAT_ORDER = "latent_then_map"


def _check_resolution(resolution: int) -> int:
    depth = int(math.log2(resolution)) - 2 if resolution >= 4 else 0
    if resolution < MIN_RESOLUTION or 2 ** (depth + 2) != resolution:
        raise DataError(
            f"resolution must be a power of two >= {MIN_RESOLUTION}, got {resolution}"
        )
    return depth


@dataclass(frozen=True)
class GeneratorSpec:
    resolution: int
    latent_dim: int = 100
    base_filters: int = 64
    max_filters: int = 512
    map_channels: int = 3
    kernel: int = 5

    @property
    def depth(self) -> int:
        return _check_resolution(self.resolution)

    def down_filters(self) -> list[int]:
        return [min(self.base_filters * 2**k, self.max_filters) for k in range(self.depth)]

    def up_filters(self) -> list[int]:
        # mirror of the down path, ending in the 3-channel image projection
        down = self.down_filters()
        return [down[k] for k in range(self.depth - 2, -1, -1)] + [3]


@dataclass(frozen=True)
class DiscriminatorSpec:
    resolution: int
    base_filters: int = 64
    max_filters: int = 512
    image_channels: int = 3
    map_channels: int = 3
    kernel: int = 5

    @property
    def depth(self) -> int:
        return _check_resolution(self.resolution)

    def filters(self) -> list[int]:
        return [min(self.base_filters * 2**k, self.max_filters) for k in range(self.depth)]


def tile_latent(z: np.ndarray, h: int, w: int) -> np.ndarray:
    """Replicate a latent vector to every spatial site: out[i, j, :] = z."""
    vec = np.asarray(z)
    if vec.ndim != 1:
        raise DataError(f"tile_latent expects a 1-d vector, got shape {vec.shape}")
    return np.broadcast_to(vec, (h, w, vec.shape[0])).copy()


def _pad(kernel: int) -> int:
    return (kernel - 1) // 2


class Generator(nn.Module):
    def __init__(self, spec: GeneratorSpec):
        super().__init__()
        self.spec = spec
        k, p = spec.kernel, _pad(spec.kernel)
        downs, down_bns = [], []
        in_ch = spec.latent_dim + spec.map_channels
        for out_ch in spec.down_filters():
            downs.append(nn.Conv2d(in_ch, out_ch, k, stride=2, padding=p))
            down_bns.append(nn.BatchNorm2d(out_ch, momentum=BN_MOMENTUM))
            in_ch = out_ch
        self.downs = nn.ModuleList(downs)
        self.down_bns = nn.ModuleList(down_bns)

        ups, up_bns = [], []
        up = spec.up_filters()
        for i, out_ch in enumerate(up):
            ups.append(
                nn.ConvTranspose2d(in_ch, out_ch, k, stride=2, padding=p, output_padding=1)
            )
            if i < len(up) - 1:  # final layer: tanh, no normalization
                up_bns.append(nn.BatchNorm2d(out_ch, momentum=BN_MOMENTUM))
            in_ch = out_ch
        self.ups = nn.ModuleList(ups)
        self.up_bns = nn.ModuleList(up_bns)

    def layer_plan(self) -> list[tuple[str, int, int]]:
        """Declared (name, out_channels, out_size) of every layer."""
        w = self.spec.resolution
        plan = []
        size = w
        for i, f in enumerate(self.spec.down_filters()):
            size //= 2
            plan.append((f"down{i}", f, size))
        for i, f in enumerate(self.spec.up_filters()):
            size *= 2
            plan.append((f"up{i}", f, size))
        return plan

    def forward(self, z: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        if z.dim() != 2 or z.shape[1] != self.spec.latent_dim:
            raise DataError(
                f"latent batch must be (B, {self.spec.latent_dim}), got {tuple(z.shape)}"
            )
        w = self.spec.resolution
        if c.dim() != 4 or c.shape[1:] != (self.spec.map_channels, w, w):
            raise DataError(
                f"map batch must be (B, {self.spec.map_channels}, {w}, {w}), got {tuple(c.shape)}"
            )
        tiled = z[:, :, None, None].expand(-1, -1, w, w)
        x = torch.cat([tiled, c], dim=1)
        for conv, bn in zip(self.downs, self.down_bns):
            x = F.relu(bn(conv(x)))
        last = len(self.ups) - 1
        for i, tconv in enumerate(self.ups):
            x = tconv(x)
            x = torch.tanh(x) if i == last else F.relu(self.up_bns[i](x))
        if not torch.isfinite(x).all():
            raise NumericsError("generator produced non-finite activations")
        return x


class Discriminator(nn.Module):
    def __init__(self, spec: DiscriminatorSpec):
        super().__init__()
        self.spec = spec
        k, p = spec.kernel, _pad(spec.kernel)
        convs, bns = [], []
        filters = spec.filters()
        in_ch = spec.image_channels + spec.map_channels
        for i, out_ch in enumerate(filters):
            convs.append(nn.Conv2d(in_ch, out_ch, k, stride=2, padding=p))
            # no normalization on the first and last conv layer
            bns.append(
                nn.BatchNorm2d(out_ch, momentum=BN_MOMENTUM)
                if 0 < i < len(filters) - 1
                else nn.Identity()
            )
            in_ch = out_ch
        self.convs = nn.ModuleList(convs)
        self.bns = nn.ModuleList(bns)
        self.fc = nn.Linear(filters[-1] * 4 * 4, 1)

    def layer_plan(self) -> list[tuple[str, int, int]]:
        size = self.spec.resolution
        plan = []
        for i, f in enumerate(self.spec.filters()):
            size //= 2
            plan.append((f"conv{i}", f, size))
        return plan

    def forward(self, img: torch.Tensor, c: torch.Tensor) -> torch.Tensor:
        w = self.spec.resolution
        if img.dim() != 4 or img.shape[1:] != (self.spec.image_channels, w, w):
            raise DataError(
                f"image batch must be (B, {self.spec.image_channels}, {w}, {w}), got {tuple(img.shape)}"
            )
        if c.shape != (img.shape[0], self.spec.map_channels, w, w):
            raise DataError(
                f"map batch must be (B, {self.spec.map_channels}, {w}, {w}), got {tuple(c.shape)}"
            )
        x = torch.cat([img, c], dim=1)
        for conv, bn in zip(self.convs, self.bns):
            x = F.leaky_relu(bn(conv(x)), LEAKY_SLOPE)
        score = torch.sigmoid(self.fc(x.flatten(1))).squeeze(1)
        # keep scores strictly inside (0, 1) so downstream logs stay finite
        return score.clamp(SCORE_EPS, 1.0 - SCORE_EPS)


def init_weights(module: nn.Module, seed: int) -> None:
    """Gaussian(0, 0.02) init of conv/linear weights, zero biases, seeded."""
    gen = torch.Generator().manual_seed(seed)
    with torch.no_grad():
        for m in module.modules():
            if isinstance(m, (nn.Conv2d, nn.ConvTranspose2d, nn.Linear)):
                m.weight.normal_(0.0, INIT_STD, generator=gen)
                if m.bias is not None:
                    m.bias.zero_()


def build_models(
    gen_spec: GeneratorSpec, disc_spec: DiscriminatorSpec, seed: int
) -> tuple[Generator, Discriminator]:
    gen = Generator(gen_spec)
    disc = Discriminator(disc_spec)
    init_weights(gen, derive_seed(seed, "init:generator"))
    init_weights(disc, derive_seed(seed, "init:discriminator"))
    return gen, disc


def default_specs(
    resolution: int, latent_dim: int = 100, base_filters: int = 64
) -> tuple[GeneratorSpec, DiscriminatorSpec]:
    return (
        GeneratorSpec(resolution, latent_dim=latent_dim, base_filters=base_filters),
        DiscriminatorSpec(resolution, base_filters=base_filters),
    )


_DTYPES = {"float32": "<f4", "float64": "<f8", "int64": "<i8"}


def _state_arrays(gen: Generator, disc: Discriminator) -> dict[str, np.ndarray]:
    arrays = {}
    for prefix, module in (("gen", gen), ("disc", disc)):
        for name, tensor in module.state_dict().items():
            arrays[f"{prefix}.{name}"] = tensor.detach().cpu().numpy()
    return arrays


def save_checkpoint(path, gen: Generator, disc: Discriminator, meta: dict | None = None) -> None:
    """Write both networks (weights + BatchNorm running stats) to ``path``."""
    arrays = _state_arrays(gen, disc)
    directory = []
    payloads = []
    for name in sorted(arrays):
        arr = np.ascontiguousarray(arrays[name])
        if str(arr.dtype) not in _DTYPES:
            raise DataError(f"unsupported tensor dtype {arr.dtype} for {name}")
        data = arr.astype(_DTYPES[str(arr.dtype)]).tobytes()
        directory.append(
            {"name": name, "dtype": str(arr.dtype), "shape": list(arr.shape), "nbytes": len(data)}
        )
        payloads.append(data)
    header = {
        "format_version": CHECKPOINT_VERSION,
        "generator_spec": asdict(gen.spec),
        "discriminator_spec": asdict(disc.spec),
        "concat_order": CONCAT_ORDER,
        "bn_momentum": BN_MOMENTUM,
        "meta": meta or {},
        "tensors": directory,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", CHECKPOINT_VERSION))
        f.write(struct.pack("<Q", len(blob)))
        f.write(blob)
        for data in payloads:
            f.write(data)


def load_checkpoint(path) -> tuple[Generator, Discriminator, dict]:
    """Rebuild both networks from a checkpoint; returns (gen, disc, meta)."""
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except FileNotFoundError:
        raise DataError(f"checkpoint not found: {path}") from None
    if len(raw) < 16 or raw[:4] != CHECKPOINT_MAGIC:
        raise DataError(f"{path}: not a checkpoint file")
    (version,) = struct.unpack("<I", raw[4:8])
    if version != CHECKPOINT_VERSION:
        raise DataError(
            f"{path}: checkpoint version {version} unsupported (expected {CHECKPOINT_VERSION})"
        )
    (header_len,) = struct.unpack("<Q", raw[8:16])
    if len(raw) < 16 + header_len:
        raise DataError(f"{path}: truncated checkpoint header")
    try:
        header = json.loads(raw[16 : 16 + header_len])
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: corrupt checkpoint header") from exc

    gen = Generator(GeneratorSpec(**header["generator_spec"]))
    disc = Discriminator(DiscriminatorSpec(**header["discriminator_spec"]))
    expected = _state_arrays(gen, disc)

    offset = 16 + header_len
    loaded = {}
    for entry in header["tensors"]:
        nbytes = entry["nbytes"]
        if offset + nbytes > len(raw):
            raise DataError(f"{path}: truncated checkpoint payload at {entry['name']}")
        arr = np.frombuffer(raw[offset : offset + nbytes], dtype=_DTYPES[entry["dtype"]])
        loaded[entry["name"]] = arr.reshape(entry["shape"]).astype(entry["dtype"])
        offset += nbytes
    if offset != len(raw):
        raise DataError(f"{path}: trailing bytes after checkpoint payload")

    for name, ref in expected.items():
        if name not in loaded:
            raise DataError(f"{path}: missing tensor {name}")
        if tuple(loaded[name].shape) != tuple(ref.shape):
            raise DataError(
                f"{path}: shape mismatch for {name}: {loaded[name].shape} vs spec {ref.shape}"
            )
    for prefix, module in (("gen", gen), ("disc", disc)):
        state = {
            name[len(prefix) + 1 :]: torch.from_numpy(arr.copy())
            for name, arr in loaded.items()
            if name.startswith(prefix + ".")
        }
        module.load_state_dict(state, strict=True)
    return gen, disc, header.get("meta", {})
