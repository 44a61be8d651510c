"""Seed derivation.

One top-level seed drives every random choice in the pipeline. Components
derive their own streams with ``derive_seed(seed, purpose)`` so that adding
or reordering consumers never shifts another component's randomness.
"""

import hashlib


def derive_seed(seed: int, purpose: str) -> int:
    """Derive a child seed from a parent seed and a purpose label.

    The rule is ``sha256(f"{seed}:{purpose}")`` truncated to 63 bits, so
    results are identical across platforms and Python versions.
    """
    digest = hashlib.sha256(f"{seed}:{purpose}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little") & 0x7FFF_FFFF_FFFF_FFFF
