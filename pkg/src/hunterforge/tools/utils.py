from __future__ import annotations
from typing import Tuple, Union

import numpy as np

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence, None]


def as_generator(seed: SeedLike) -> np.random.Generator:
    """Returns a numpy generator for an int seed, a seed sequence or an
    existing generator (which is returned unchanged)"""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def child_generator(master: int, key: Tuple[int, ...]) -> np.random.Generator:
    """Derive an independent generator from a master seed and a key.

    The stream for a key does not depend on which other keys were derived,
    so work items (patches, frames) can be processed in any order or in
    parallel with identical results.

    :param master: the master seed
    :type master: int
    :param key: non-negative integers identifying the work item
    :type key: Tuple[int, ...]
    :return: generator seeded from (master, key)
    :rtype: np.random.Generator
    """
    seq = np.random.SeedSequence(entropy=int(master), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(seq)


def draw_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit seed from a generator"""
    return int(rng.integers(0, 2**63 - 1))


def wrap_angle(theta):
    """Wrap angles to [-pi, pi)"""
    return (np.asarray(theta) + np.pi) % (2.0 * np.pi) - np.pi
