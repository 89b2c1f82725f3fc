"""Small shared numerics: geometric sequences and one-sided limit estimation.

The theory guarantees that the one-sided limits used throughout exist but
gives no rates, so limits are estimated on geometric sequences with a
linear-in-gap Richardson step and an honest residual: the disagreement of the
two finest extrapolants.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["LimitEstimate", "geometric_gaps", "one_sided_limit"]


def geometric_gaps(delta: float = 0.1, n: int = 11, ratio: float = 0.5) -> np.ndarray:
    """delta * ratio^k for k = 0..n-1 (decreasing)."""
    return delta * ratio ** np.arange(n, dtype=float)


@dataclass(frozen=True)
class LimitEstimate:
    value: float
    error: float
    reliable: bool


def one_sided_limit(gaps, values) -> LimitEstimate:
    """Extrapolate values(gap) to gap -> 0+.

    gaps must be strictly decreasing and positive.  The estimate is the
    Richardson extrapolant through the two finest points (exact when values
    are affine in the gap); the error is the spread of the last extrapolants.
    A sequence whose tail oscillates more than it converges is flagged
    unreliable.
    """
    g = np.asarray(gaps, dtype=float)
    v = np.asarray(values, dtype=float)
    if g.ndim != 1 or g.shape != v.shape or len(g) < 2:
        raise ValueError("need matching 1-d gaps/values with at least 2 entries")
    if np.any(g <= 0.0) or np.any(np.diff(g) >= 0.0):
        raise ValueError("gaps must be positive and strictly decreasing")

    def rich(i: int, j: int) -> float:
        return float((g[i] * v[j] - g[j] * v[i]) / (g[i] - g[j]))

    l_fine = rich(-2, -1)
    floor = 1e-15 * (1.0 + abs(l_fine))
    if len(g) == 2:
        return LimitEstimate(l_fine, abs(v[-1] - v[-2]) + floor, True)
    l_prev = rich(-3, -2)
    err = abs(l_fine - l_prev) + floor
    # reliability: the extrapolant drift should shrink along the tail
    reliable = True
    if len(g) >= 4:
        l_pp = rich(-4, -3)
        d1, d0 = abs(l_prev - l_pp), abs(l_fine - l_prev)
        scale = max(abs(l_fine), abs(v[-1]), 1e-12)
        reliable = d0 <= max(2.0 * d1, 1e-9 * scale)
    return LimitEstimate(l_fine, err, reliable)
