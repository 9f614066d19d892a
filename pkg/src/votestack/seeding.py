"""Deterministic sub-seed derivation.

Every component that needs randomness derives its own 64-bit seed from a
master seed plus context labels. Derivation is hash-based, so the result
is independent of call order, process layout, and PYTHONHASHSEED.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(master: int, *context: object) -> int:
    """Stable 64-bit seed from a master seed and any context labels."""
    h = hashlib.sha256(str(int(master)).encode("ascii"))
    for part in context:
        h.update(b"/")
        h.update(str(part).encode("utf-8"))
    return int.from_bytes(h.digest()[:8], "little")


def child_rng(master: int, *context: object) -> np.random.Generator:
    """Generator seeded by derive_seed(master, *context)."""
    return np.random.default_rng(derive_seed(master, *context))
