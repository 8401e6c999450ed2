"""Labeled random streams derived from one experiment seed."""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, label: str) -> np.random.Generator:
    """Independent generator for ``label`` under ``seed``.

    Streams depend only on ``(seed, label)``, so adding a consumer never
    shifts the draws of another one.
    """
    if seed < 0:
        raise ValueError("seed must be a nonnegative integer")
    key = zlib.crc32(label.encode("utf-8"))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(key,))))
