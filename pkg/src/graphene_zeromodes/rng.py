"""Seeded random bump sets.

Streams come from numpy's counter-based Philox generator keyed by
``seed + (stream << 64)``, so stream i of a seed is reproducible on its own
and independent of how many other streams were drawn.
"""

from __future__ import annotations

import math

import numpy as np

from .field import Bump


def generator(seed: int, stream: int = 0) -> np.random.Generator:
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be non-negative")
    return np.random.Generator(np.random.Philox(key=int(seed) + (int(stream) << 64)))


def random_bumps(seed: int, count: int, radius: float, amplitude_range, width_range, stream: int = 0) -> tuple:
    """``count`` Gaussian bumps with centers uniform in the disk of ``radius``."""
    lo_a, hi_a = amplitude_range
    lo_w, hi_w = width_range
    if not 0 < lo_w <= hi_w:
        raise ValueError("width range must be positive and ordered")
    if lo_a > hi_a:
        raise ValueError("amplitude range must be ordered")
    g = generator(seed, stream)
    bumps = []
    for _ in range(count):
        rho = radius * math.sqrt(g.random())
        phi = 2 * math.pi * g.random()
        a = g.uniform(lo_a, hi_a)
        w = g.uniform(lo_w, hi_w)
        bumps.append(Bump(rho * math.cos(phi), rho * math.sin(phi), a, w))
    return tuple(bumps)


def dipole_pairs(seed: int, pairs: int, radius: float, amplitude_range, width_range, separation, stream: int = 0) -> tuple:
    """Zero-net-flux perturbation: bumps of opposite sign and equal width.

    Each pair is (+a, -a) at distance ``separation`` apart along a random
    direction, with its midpoint uniform in the disk of ``radius``.
    """
    g = generator(seed, stream)
    bumps = []
    for _ in range(pairs):
        rho = radius * math.sqrt(g.random())
        phi = 2 * math.pi * g.random()
        theta = 2 * math.pi * g.random()
        a = g.uniform(*amplitude_range)
        w = g.uniform(*width_range)
        cx, cy = rho * math.cos(phi), rho * math.sin(phi)
        dx, dy = 0.5 * separation * math.cos(theta), 0.5 * separation * math.sin(theta)
        bumps.append(Bump(cx + dx, cy + dy, a, w))
        bumps.append(Bump(cx - dx, cy - dy, -a, w))
    return tuple(bumps)


def perturbation_sets(seed: int, n_sets: int, **kwargs) -> list:
    """``n_sets`` independent dipole-pair sets, set i drawn from stream i."""
    return [dipole_pairs(seed, stream=i, **kwargs) for i in range(n_sets)]
