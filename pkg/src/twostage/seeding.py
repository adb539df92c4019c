"""Seed derivation.

Every random draw in the package comes from a numpy ``Generator`` backed by
PCG64.  Sub-seeds are derived from a root seed by hashing the text
``"<seed>:<purpose>:<index>"`` with BLAKE2b (8-byte digest, big-endian,
top bit cleared), so that independent tasks (splits, repetitions, candidate
fits) never share a stream and do not depend on execution order.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_seed(seed: int, purpose: str, index: int = 0) -> int:
    digest = hashlib.blake2b(f"{int(seed)}:{purpose}:{int(index)}".encode(), digest_size=8).digest()
    return int.from_bytes(digest, "big") & ((1 << 63) - 1)


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))
