"""Named random substreams derived from one root seed."""
from __future__ import annotations

import zlib

import numpy as np


def subseed(seed: int, name: str) -> int:
    """Deterministic 31-bit seed for phase ``name`` under root ``seed``."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1)[0] % (2**31))


def substream(seed: int, name: str) -> np.random.Generator:
    return np.random.default_rng(subseed(seed, name))
