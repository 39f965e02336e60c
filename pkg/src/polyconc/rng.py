#!/usr/bin/env python3
"""
Counter-based random streams.

Every random quantity in polyconc is drawn from a Philox stream keyed by
``(seed, family, index, ...)``. Two tasks with different keys never share
state, so work can be split across threads in any order.
"""

import numpy as np

# stream families
SEARCH = 1
GAUSS = 2
PILOT = 3
CHAIN = 4
EXPONENTIAL = 5


def stream(seed: int, *keys: int) -> np.random.Generator:
    """
    Build an independent generator for the given key path.

    Args:
        seed: User-facing seed (non-negative).
        *keys: Stream family and task indices.

    Returns:
        A numpy ``Generator`` backed by a Philox bit generator.
    """
    entropy = [int(seed)] + [int(k) for k in keys]
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(entropy)))


def box_muller(gen: np.random.Generator, count: int) -> np.ndarray:
    """
    Draw ``count`` standard normals from uniform pairs.

    Uniforms are drawn interleaved, so a shorter request returns a prefix of a
    longer one from the same stream.
    """
    pairs = (count + 1) // 2
    u = gen.random(2 * pairs)
    u1 = 1.0 - u[0::2]  # (0, 1]
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(2.0 * np.pi * u2)
    z[1::2] = radius * np.sin(2.0 * np.pi * u2)
    return z[:count]
