"""Upper control limit from a Gaussian KDE of historical criterion scores.

The limit ``ucl`` solves ``P(J >= ucl) = alpha`` under the kernel density
estimate, so that roughly a fraction ``alpha`` of in-distribution points
clear it.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from .criteria import CriterionKind

DEFAULT_ALPHA = 0.05
BISECTION_TOL = 1e-9


@dataclass(frozen=True)
class ControlLimit:
    kind: Optional[CriterionKind]
    scores: np.ndarray
    bandwidth: float
    alpha: float
    ucl: float

    def exceeds(self, j: float) -> bool:
        return exceeds(self, j)


def scott_bandwidth(scores) -> float:
    """One-dimensional Scott rule, ``std(ddof=1) * m**(-1/5)``.

    A zero-variance sample gets ``max(|mean|, 1) * 1e-3`` so that the limit
    collapses onto the common value instead of failing.
    """
    s = np.asarray(scores, dtype=float).reshape(-1)
    m = s.shape[0]
    if m < 2:
        raise ValueError(f"Scott's rule needs at least 2 scores, got {m}")
    sigma = float(s.std(ddof=1))
    if not np.isfinite(sigma):
        raise ValueError("non-finite scores")
    if sigma == 0.0:
        return max(abs(float(s.mean())), 1.0) * 1e-3
    return sigma * m ** -0.2


def kde_cdf(scores, h: float, u):
    """``mean(Phi((u - scores) / h))``; ``u`` may be a scalar or an array."""
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    s = np.asarray(scores, dtype=float).reshape(-1)
    u_arr = np.asarray(u, dtype=float)
    out = ndtr((u_arr[..., None] - s) / h).mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def solve_ucl(scores, h: Optional[float] = None, alpha: float = DEFAULT_ALPHA,
              kind: Optional[CriterionKind] = None, tol: float = BISECTION_TOL) -> ControlLimit:
    """Bisect ``kde_cdf(u) = 1 - alpha`` on ``[min - 10h, max + 10h]``.

    ``h`` defaults to :func:`scott_bandwidth`. A single score is accepted when
    ``h`` is given explicitly.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    s = np.asarray(scores, dtype=float).reshape(-1)
    if s.shape[0] < 1:
        raise ValueError("no calibration scores")
    if not np.all(np.isfinite(s)):
        raise ValueError("non-finite calibration scores")
    if h is None:
        h = scott_bandwidth(s)
    if h <= 0:
        raise ValueError("bandwidth must be positive")
    target = 1.0 - alpha
    lo = float(s.min()) - 10.0 * h
    hi = float(s.max()) + 10.0 * h
    # kde_cdf(lo) <= Phi(-10) and kde_cdf(hi) >= Phi(10); both bracket any alpha of interest.
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if kde_cdf(s, h, mid) < target:
            lo = mid
        else:
            hi = mid
    s.setflags(write=False)
    return ControlLimit(kind, s, float(h), float(alpha), 0.5 * (lo + hi))


def exceeds(cl: ControlLimit, j: float) -> bool:
    """Boundary counts as exceeding."""
    return j >= cl.ucl
