"""Deterministic seed derivation shared by every randomized routine."""

from __future__ import annotations

import hashlib
import random


def derive_seed(master: int, *keys: object) -> int:
    """Hash a master seed and a path of keys into a 63-bit seed."""
    h = hashlib.blake2b(digest_size=8)
    h.update(repr(int(master)).encode())
    for k in keys:
        h.update(b"/")
        h.update(repr(k).encode())
    return int.from_bytes(h.digest(), "big") >> 1


def rng(master: int, *keys: object) -> random.Random:
    return random.Random(derive_seed(master, *keys))
