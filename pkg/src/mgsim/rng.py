"""Seeded random streams.

Every stream is numpy's PCG64 bit generator wrapped in a ``Generator``.  The
simulator only ever asks it for doubles (``Generator.random``), which map the
top 53 bits of each 64-bit output onto [0, 1); integer choices are derived
from those doubles so results do not depend on numpy's integer samplers.

Sub-seeds come from :func:`derive_seed`, the SplitMix64 finaliser applied to
``base + (index + 1) * 0x9E3779B97F4A7C15 (mod 2**64)``.  For a fixed base
this is a bijection of the index, so replicate seeds never collide.
"""

from __future__ import annotations

import numpy as np

__all__ = ["derive_seed", "make_stream", "TOPOLOGY_STREAM", "DYNAMICS_STREAM"]

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15

# stream indices used by engine.run
TOPOLOGY_STREAM = 0
DYNAMICS_STREAM = 1


def derive_seed(base_seed: int, index: int) -> int:
    z = (base_seed + (index + 1) * _GAMMA) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def make_stream(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))
