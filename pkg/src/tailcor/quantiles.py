"""Order-statistics primitives: sample quantiles, interquantile ranges,
semi-IQRs, the Gaussian inverse CDF and the Gaussian normalization s_g.

Quantiles use linear interpolation between order statistics at the 1-based
rank ``h = (n - 1) p + 1`` (numpy's default "linear" method).  Two details
keep reflections bit-exact, which the pair estimator relies on:

* the rank of a lower level ``p < 0.5`` is computed as the mirror image of
  the rank of ``1 - p``, so ``Q(-x, p) == -Q(x, 1 - p)`` holds exactly;
* the interpolation weight is applied from whichever neighbour is closer,
  and the midpoint is taken symmetrically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateScaleError,
    InvalidInputError,
    InvalidLevelError,
)

__all__ = [
    "NormalizationPair",
    "Descriptives",
    "as_series",
    "sample_quantile",
    "quantiles",
    "quantiles_sorted",
    "quantiles_select",
    "iqr",
    "semi_iqr_upper",
    "semi_iqr_lower",
    "norm_cdf",
    "inv_norm_cdf",
    "s_g",
    "quantile_descriptives",
]

_SQRT2 = math.sqrt(2.0)
_SQRT2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class NormalizationPair:
    """Body level ``tau`` (standardization) and tail level ``xi`` (projection IQR)."""

    tau: float = 0.75
    xi: float = 0.95

    def __post_init__(self):
        _check_pair(self.tau, self.xi)

    @property
    def sg(self) -> float:
        return s_g(self.tau, self.xi)


def _check_level(p: float) -> float:
    p = float(p)
    if not (0.0 < p < 1.0):
        raise InvalidLevelError(f"probability level must lie in (0, 1), got {p!r}")
    return p


def _check_pair(tau: float, xi: float) -> None:
    _check_level(tau)
    _check_level(xi)
    if not (0.5 < tau < xi):
        raise InvalidLevelError(f"levels must satisfy 0.5 < tau < xi < 1, got tau={tau}, xi={xi}")


def as_series(x, *, name: str = "x", min_length: int = 1) -> np.ndarray:
    """Coerce ``x`` to a 1-D float64 array of finite values."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if arr.size < min_length:
        raise InvalidInputError(f"{name} needs at least {min_length} observations, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def _rank_positions(n: int, p: np.ndarray) -> np.ndarray:
    # 0-based fractional rank; lower levels are mirrored from the upper ones
    m = float(n - 1)
    return np.where(p >= 0.5, m * p, m - m * (1.0 - p))


def quantiles_sorted(xs: np.ndarray, ps) -> np.ndarray:
    """Quantiles of an already-sorted float array at levels ``ps`` (no validation).

    ``xs`` may be 2-D with rows sorted; quantiles are then taken row-wise and
    the result has shape ``xs.shape[:-1] + ps.shape``.
    """
    ps = np.asarray(ps, dtype=np.float64)
    n = xs.shape[-1]
    if n == 1:
        return np.broadcast_to(xs[..., :1], xs.shape[:-1] + ps.shape).copy()
    h = _rank_positions(n, ps)
    lo = np.minimum(np.floor(h).astype(np.intp), n - 2)
    f = h - lo
    a = xs[..., lo]
    b = xs[..., lo + 1]
    d = b - a
    out = np.where(f < 0.5, a + d * f, b - d * (1.0 - f))
    mid = f == 0.5
    if np.any(mid):
        out = np.where(mid, (a + b) * 0.5, out)
    return out


def quantiles_select(xs: np.ndarray, ps) -> np.ndarray:
    """Same values as ``quantiles_sorted(np.sort(xs), ps)`` via O(n) selection.

    Works row-wise on 2-D input; ``xs`` is not modified.
    """
    ps = np.asarray(ps, dtype=np.float64)
    n = xs.shape[-1]
    if n == 1:
        return quantiles_sorted(xs, ps)
    lo = np.minimum(np.floor(_rank_positions(n, ps)).astype(np.intp), n - 2)
    kth = np.unique(np.concatenate([lo.ravel(), lo.ravel() + 1]))
    return quantiles_sorted(np.partition(xs, kth, axis=-1), ps)


def quantiles(x, ps) -> np.ndarray:
    """Sample quantiles of ``x`` at each level in ``ps``."""
    xs = np.sort(as_series(x))
    ps = np.asarray(ps, dtype=np.float64)
    if np.any(~((ps > 0.0) & (ps < 1.0))):
        raise InvalidLevelError("probability levels must lie in (0, 1)")
    return quantiles_sorted(xs, ps)


def sample_quantile(x, p: float) -> float:
    """Linearly interpolated sample quantile at rank ``(n - 1) p + 1``.

    >>> sample_quantile([1, 2, 3, 4, 5], 0.75)
    4.0
    """
    p = _check_level(p)
    return float(quantiles_sorted(np.sort(as_series(x)), np.array([p]))[0])


def _upper_level(p: float) -> float:
    p = _check_level(p)
    if p <= 0.5:
        raise InvalidLevelError(f"interquantile level must exceed 0.5, got {p}")
    return p


def iqr(x, p: float) -> float:
    """Interquantile range ``Q(p) - Q(1 - p)`` for ``p > 0.5``."""
    p = _upper_level(p)
    hi, lo = quantiles_sorted(np.sort(as_series(x, min_length=2)), np.array([p, 1.0 - p]))
    return float(hi - lo)


def semi_iqr_upper(x, p: float) -> float:
    """Upper semi-IQR ``Q(p) - Q(0.5)``."""
    p = _upper_level(p)
    hi, med = quantiles_sorted(np.sort(as_series(x, min_length=2)), np.array([p, 0.5]))
    return float(hi - med)


def semi_iqr_lower(x, p: float) -> float:
    """Lower semi-IQR ``Q(0.5) - Q(1 - p)``."""
    p = _upper_level(p)
    med, lo = quantiles_sorted(np.sort(as_series(x, min_length=2)), np.array([0.5, 1.0 - p]))
    return float(med - lo)


def norm_cdf(x: float) -> float:
    """Standard Gaussian CDF via ``erfc`` (accurate in both tails)."""
    return 0.5 * math.erfc(-x / _SQRT2)


# Acklam's rational approximation, |relative error| < 1.15e-9 before refinement
_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
      1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
      6.680131188771972e01, -1.328068155288572e01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
      -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
      3.754408661907416e00)
_P_LOW = 0.02425


def _inv_norm_lower(p: float) -> float:
    # p in (0, 0.5]
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        x = ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q + _C[5])
             / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    else:
        q = p - 0.5
        r = q * q
        x = ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]) * q
             / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + 1.0))
    # one Halley step against the erfc-based CDF
    e = norm_cdf(x) - p
    u = e * _SQRT2PI * math.exp(0.5 * x * x)
    return x - u / (1.0 + 0.5 * x * u)


def inv_norm_cdf(p: float) -> float:
    """Standard Gaussian quantile function.

    Odd symmetry ``inv_norm_cdf(1 - p) == -inv_norm_cdf(p)`` is exact for
    ``p >= 0.5`` (where ``1 - p`` is computed without rounding).
    """
    p = _check_level(p)
    if p == 0.5:
        return 0.0
    if p > 0.5:
        return -_inv_norm_lower(1.0 - p)
    return _inv_norm_lower(p)


def s_g(tau: float = 0.75, xi: float = 0.95) -> float:
    """Gaussian normalization ``Phi^-1(tau) / Phi^-1(xi)``.

    Makes TailCoR equal one for independent Gaussian pairs.
    """
    _check_pair(tau, xi)
    return inv_norm_cdf(tau) / inv_norm_cdf(xi)


@dataclass(frozen=True)
class Descriptives:
    median: float
    iqr75: float
    qkurtosis: float
    qskewness: float

    def to_dict(self) -> dict:
        return {
            "median": self.median,
            "iqr75": self.iqr75,
            "qkurtosis": self.qkurtosis,
            "qskewness": self.qskewness,
        }


# excess-kurtosis offset used in the quantile kurtosis; close to the Gaussian 2.906
_KURTOSIS_OFFSET = 2.91
DESCRIPTIVES_MIN_LENGTH = 40


def quantile_descriptives(x: Sequence[float]) -> Descriptives:
    """Quantile-based median, interquartile range, excess kurtosis and skewness.

    kurtosis = IQR(0.975) / IQR(0.75) - 2.91
    skewness = (Q(0.975) - Q(0.5)) - (Q(0.5) - Q(0.025))
    """
    xs = np.sort(as_series(x, min_length=DESCRIPTIVES_MIN_LENGTH))
    q975, q75, q50, q25, q025 = quantiles_sorted(xs, np.array([0.975, 0.75, 0.5, 0.25, 0.025]))
    iqr75 = float(q75 - q25)
    if iqr75 == 0.0:
        raise DegenerateScaleError("interquartile range is zero; quantile kurtosis undefined")
    return Descriptives(
        median=float(q50),
        iqr75=iqr75,
        qkurtosis=float((q975 - q025) / iqr75 - _KURTOSIS_OFFSET),
        qskewness=float((q975 - q50) - (q50 - q025)),
    )
