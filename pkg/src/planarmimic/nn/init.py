"""Weight initializers."""

from __future__ import annotations

import math

import numpy as np


def init_orthogonal(shape: tuple[int, int], gain: float, rng: np.random.Generator) -> np.ndarray:
    """Orthogonal matrix (semi-orthogonal for non-square shapes), scaled by gain."""
    rows, cols = shape
    a = rng.normal(0.0, 1.0, (max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q *= np.sign(np.diag(r))  # fix the sign ambiguity so results are reproducible
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(gain * q[:rows, :cols])


def _truncation_scale() -> float:
    """Nominal-sigma multiplier k so that N(0, k) truncated to [-2, 2] has unit std.

    Truncating at +-a of a standard normal leaves variance 1 - 2 a phi(a) / (2 Phi(a) - 1);
    solve k * std_trunc(2 / k) = 1 by bisection.
    """
    def truncated_std(a: float) -> float:
        phi = math.exp(-0.5 * a * a) / math.sqrt(2.0 * math.pi)
        mass = math.erf(a / math.sqrt(2.0))
        return math.sqrt(1.0 - 2.0 * a * phi / mass)

    lo, hi = 1.0, 2.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if mid * truncated_std(2.0 / mid) < 1.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


_TRUNC_K = _truncation_scale()


def init_truncated_normal(shape, std: float, rng: np.random.Generator) -> np.ndarray:
    """Samples bounded by +-2 std whose post-truncation standard deviation is std.

    Rejection-resamples N(0, k std) outside the bound; k compensates for the
    variance the truncation removes.
    """
    out = rng.normal(0.0, _TRUNC_K * std, shape)
    if std == 0.0:
        return out
    bound = 2.0 * std
    bad = np.abs(out) > bound
    while np.any(bad):
        out[bad] = rng.normal(0.0, _TRUNC_K * std, int(bad.sum()))
        bad = np.abs(out) > bound
    return out
