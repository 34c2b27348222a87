"""Deterministic random streams derived from one top-level seed."""

import hashlib

import numpy as np


def substream(seed: int, *tags: str) -> np.random.Generator:
    """Return a generator for the named substream of ``seed``.

    Same (seed, tags) always yields the same stream, independent of any
    other substream, so components stay individually reproducible.
    """
    material = hashlib.sha256("/".join(tags).encode("utf-8")).digest()
    words = [int.from_bytes(material[i : i + 4], "little") for i in range(0, 16, 4)]
    return np.random.default_rng([int(seed) % 2**63, *words])
