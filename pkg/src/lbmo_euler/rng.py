"""Named, counter-based random streams.

All randomness in the package is drawn from ``stream(seed, name)``: a Philox
generator keyed by the integer seed and a stable hash of ``name``.  Two
calls with the same arguments return generators producing identical
sequences on any platform.
"""

from __future__ import annotations

import zlib

import numpy as np


def stream(seed: int, name: str) -> np.random.Generator:
    ss = np.random.SeedSequence([int(seed) & 0xFFFFFFFF, zlib.crc32(name.encode("utf-8"))])
    return np.random.Generator(np.random.Philox(ss))
