"""Robust linear correlation (Kendall's tau and its sine transform) and
semi-moments for the asymmetric TailCoR variants."""

from __future__ import annotations

import math
from enum import Enum

import numba
import numpy as np

from .errors import DegenerateRanksError, DegenerateSideError, InvalidInputError
from .quantiles import as_series

__all__ = [
    "SemiSide",
    "paired",
    "kendall_tau",
    "rho_from_kendall",
    "robust_rho",
    "semi_variance",
    "semi_covariance",
    "semi_correlation",
    "semi_variance_of_sum",
]


class SemiSide(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"


def paired(x, y, *, min_length: int = 2) -> tuple[np.ndarray, np.ndarray]:
    """Validate a time-aligned pair of series."""
    x = as_series(x, name="x", min_length=min_length)
    y = as_series(y, name="y", min_length=min_length)
    if x.shape != y.shape:
        raise InvalidInputError(f"paired series differ in length: {x.size} vs {y.size}")
    return x, y


@numba.njit(cache=True)
def _tie_pairs(v):
    # v sorted; number of tied pairs sum t (t - 1) / 2 over runs
    total = 0
    run = 1
    for i in range(1, v.shape[0]):
        if v[i] == v[i - 1]:
            run += 1
        else:
            total += run * (run - 1) // 2
            run = 1
    total += run * (run - 1) // 2
    return total


@numba.njit(cache=True)
def _kendall_counts(xs, ys):
    """xs, ys: pair sorted lexicographically by (x, y).

    Returns (n_x_tie_pairs, n_y_tie_pairs, n_joint_tie_pairs, discordant_swaps).
    """
    n = xs.shape[0]
    n1 = _tie_pairs(xs)

    n3 = 0
    run = 1
    for i in range(1, n):
        if xs[i] == xs[i - 1] and ys[i] == ys[i - 1]:
            run += 1
        else:
            n3 += run * (run - 1) // 2
            run = 1
    n3 += run * (run - 1) // 2

    # bottom-up merge sort of ys, counting strict inversions
    a = ys.copy()
    buf = np.empty_like(a)
    swaps = 0
    width = 1
    while width < n:
        lo = 0
        while lo < n:
            mid = min(lo + width, n)
            hi = min(lo + 2 * width, n)
            i = lo
            j = mid
            k = lo
            while i < mid and j < hi:
                if a[j] < a[i]:
                    buf[k] = a[j]
                    swaps += mid - i
                    j += 1
                else:
                    buf[k] = a[i]
                    i += 1
                k += 1
            while i < mid:
                buf[k] = a[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = a[j]
                j += 1
                k += 1
            lo = hi
        a, buf = buf, a
        width *= 2

    n2 = _tie_pairs(a)
    return n1, n2, n3, swaps


def kendall_tau(x, y) -> float:
    """Kendall's tau-b in O(n log n) (merge-sort inversion counting).

    >>> kendall_tau([1, 2, 3, 4], [1, 3, 2, 4])  # doctest: +ELLIPSIS
    0.666...
    """
    x, y = paired(x, y)
    order = np.lexsort((y, x))
    n1, n2, n3, swaps = _kendall_counts(x[order], y[order])
    n = x.size
    n0 = n * (n - 1) // 2
    ax = n0 - n1
    ay = n0 - n2
    if ax == 0 or ay == 0:
        raise DegenerateRanksError("a margin is entirely tied; Kendall's tau is undefined")
    # concordant - discordant
    s = n0 - n1 - n2 + n3 - 2 * swaps
    denom = float(ax) if ax == ay else math.sqrt(float(ax)) * math.sqrt(float(ay))
    return max(-1.0, min(1.0, s / denom))


def rho_from_kendall(kappa: float) -> float:
    """Shape correlation of an elliptical law from Kendall's tau: sin(pi kappa / 2)."""
    kappa = float(kappa)
    if not (-1.0 <= kappa <= 1.0):
        raise InvalidInputError(f"Kendall's tau must lie in [-1, 1], got {kappa}")
    return math.sin(0.5 * math.pi * kappa)


def robust_rho(x, y) -> float:
    return rho_from_kendall(kendall_tau(x, y))


def _center(x: np.ndarray, center: str) -> float:
    if center == "median":
        return float(np.median(x))
    if center == "mean":
        return float(np.mean(x))
    raise InvalidInputError(f"unknown center {center!r}; expected 'median' or 'mean'")


def _side_part(x: np.ndarray, side: SemiSide | str, center: str) -> np.ndarray:
    side = SemiSide(side)
    d = x - _center(x, center)
    if side is SemiSide.POSITIVE:
        mask = d > 0.0
    else:
        mask = d < 0.0
    if not np.any(mask):
        raise DegenerateSideError(f"no observations on the {side.value} side of the center")
    return np.where(mask, d, 0.0)


def semi_variance(x, side: SemiSide | str, *, center: str = "median") -> float:
    """Sample semi-variance ``mean(((x - c) 1{x on side})**2)``.

    The center ``c`` defaults to the sample median; ``center="mean"`` gives
    the textbook mean-centered version.
    """
    x = as_series(x, min_length=2)
    d = _side_part(x, side, center)
    return float(np.mean(d * d))


def semi_covariance(x, y, side: SemiSide | str, *, center: str = "median") -> float:
    x, y = paired(x, y)
    return float(np.mean(_side_part(x, side, center) * _side_part(y, side, center)))


def semi_correlation(x, y, side: SemiSide | str, *, center: str = "median") -> float:
    """Semi-covariance normalized by the same-side semi standard deviations."""
    x, y = paired(x, y)
    dx = _side_part(x, side, center)
    dy = _side_part(y, side, center)
    num = float(np.mean(dx * dy))
    den = math.sqrt(float(np.mean(dx * dx))) * math.sqrt(float(np.mean(dy * dy)))
    return max(-1.0, min(1.0, num / den))


def semi_variance_of_sum(x, y, side: SemiSide | str, *, center: str = "median") -> float:
    """Semi-variance of ``x + y`` with the side indicators applied to each summand.

    Equals ``semi_variance(x) + semi_variance(y) + 2 semi_covariance(x, y)``.
    """
    x, y = paired(x, y)
    s = _side_part(x, side, center) + _side_part(y, side, center)
    return float(np.mean(s * s))
