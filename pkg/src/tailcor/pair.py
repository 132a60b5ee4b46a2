"""Pairwise TailCoR: standardize, project, take the tail IQR, normalize.

Under ellipticity the estimate splits as

    tailcor = s_g(xi, tau) * s_hat * sqrt(1 + |rho|)

with ``rho = sin(pi kappa / 2)`` from Kendall's tau and ``s_hat`` the
nonlinear (tail-thickness) component.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .errors import (
    DegenerateScaleError,
    InvalidInputError,
    PathologicalRegionError,
    TooShortError,
)
from .quantiles import NormalizationPair, quantiles_select, s_g
from .rank import SemiSide, kendall_tau, paired, rho_from_kendall, semi_correlation

__all__ = [
    "AutoSign",
    "GridSearch",
    "Fixed",
    "AnglePolicy",
    "TailConfig",
    "StandardizedPair",
    "PairEstimate",
    "AsymmetricEstimate",
    "min_length",
    "standardize",
    "project",
    "choose_angle",
    "tailcor",
    "tailcor_standardized",
    "nonlinear_component",
    "alternative_tailcor",
    "tailcor_asymmetric",
]

QUARTER_PI = math.pi / 4.0
THREE_QUARTER_PI = 3.0 * math.pi / 4.0
_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class AutoSign:
    """45-degree line when rho >= 0, 135-degree line otherwise."""

    def describe(self) -> str:
        return "auto"


@dataclass(frozen=True)
class GridSearch:
    """Maximize the tail IQR over ``resolution`` equally spaced angles in [0, pi)."""

    resolution: int = 180

    def __post_init__(self):
        if int(self.resolution) != self.resolution or self.resolution < 8:
            raise InvalidInputError(f"grid resolution must be an integer >= 8, got {self.resolution}")

    def describe(self) -> str:
        return f"grid:{self.resolution}"


@dataclass(frozen=True)
class Fixed:
    phi: float

    def __post_init__(self):
        if not math.isfinite(self.phi):
            raise InvalidInputError("fixed projection angle must be finite")

    def describe(self) -> str:
        return f"fixed:{math.degrees(self.phi):.12g}"


AnglePolicy = Union[AutoSign, GridSearch, Fixed]


@dataclass(frozen=True)
class TailConfig:
    tau: float = 0.75
    xi: float = 0.95
    angle: AnglePolicy = field(default_factory=AutoSign)

    def __post_init__(self):
        NormalizationPair(self.tau, self.xi)

    @property
    def levels(self) -> NormalizationPair:
        return NormalizationPair(self.tau, self.xi)

    @property
    def sg(self) -> float:
        return s_g(self.tau, self.xi)

    def with_xi(self, xi: float) -> "TailConfig":
        return replace(self, xi=xi)

    def to_dict(self) -> dict:
        return {"tau": self.tau, "xi": self.xi, "angle": self.angle.describe()}


def min_length(xi: float) -> int:
    """Smallest sample leaving two observations beyond each tail quantile."""
    # 2 / (1 - 0.95) evaluates to 40.000000000000036
    return max(2, math.ceil(2.0 / (1.0 - xi) - 1e-9))


@dataclass(frozen=True)
class StandardizedPair:
    yj: np.ndarray
    yk: np.ndarray
    centers: tuple[float, float]
    scales: tuple[float, float]


@dataclass(frozen=True)
class PairEstimate:
    tailcor: float
    linear: float
    nonlinear: float
    rho: float
    kendall: float
    angle: float
    iqr_tail: float
    alt: Optional[float]
    downside: float
    upside: float
    n: int

    def to_dict(self) -> dict:
        return {
            "tailcor": self.tailcor,
            "linear": self.linear,
            "nonlinear": self.nonlinear,
            "rho": self.rho,
            "kendall": self.kendall,
            "angle": self.angle,
            "iqr_tail": self.iqr_tail,
            "alt": self.alt,
            "downside": self.downside,
            "upside": self.upside,
            "n": self.n,
        }


def _standardize_one(x: np.ndarray, tau: float, center=None, scale=None) -> tuple[np.ndarray, float, float]:
    if center is None or scale is None:
        med, hi, lo = quantiles_select(x, np.array([0.5, tau, 1.0 - tau]))
        center = float(med) if center is None else float(center)
        scale = float(hi - lo) if scale is None else float(scale)
    if not scale > 0.0:
        raise DegenerateScaleError(f"interquantile range at tau={tau} is zero")
    return (x - center) / scale, float(center), float(scale)


def standardize(x, y, levels: NormalizationPair | TailConfig | None = None, *,
                centers: tuple[float, float] | None = None,
                scales: tuple[float, float] | None = None) -> StandardizedPair:
    """Center each series at its median and divide by its tau-IQR.

    ``centers``/``scales`` override the sample values, e.g. with population
    quantiles.
    """
    tau = 0.75 if levels is None else levels.tau
    x, y = paired(x, y)
    cx, cy = centers if centers is not None else (None, None)
    sx, sy = scales if scales is not None else (None, None)
    yj, cj, sj = _standardize_one(x, tau, cx, sx)
    yk, ck, sk = _standardize_one(y, tau, cy, sy)
    return StandardizedPair(yj, yk, (cj, ck), (sj, sk))


def project(sp: StandardizedPair, phi: float) -> np.ndarray:
    """``yj cos(phi) + yk sin(phi)``.

    The 45- and 135-degree lines use the closed forms ``(yj + yk)/sqrt(2)``
    and ``(yk - yj)/sqrt(2)``, which keeps the estimate symmetric in its
    arguments to the last bit.
    """
    if phi == QUARTER_PI:
        return (sp.yj + sp.yk) / _SQRT2
    if phi == THREE_QUARTER_PI:
        return (sp.yk - sp.yj) / _SQRT2
    if phi == 0.0:
        return sp.yj.copy()
    return sp.yj * math.cos(phi) + sp.yk * math.sin(phi)


def _tail_iqr(z: np.ndarray, xi: float) -> np.ndarray:
    hi, lo = np.moveaxis(quantiles_select(z, np.array([xi, 1.0 - xi])), -1, 0)
    return hi - lo


def _grid_angle(sp: StandardizedPair, xi: float, resolution: int) -> float:
    phis = np.arange(resolution) * (math.pi / resolution)
    c, s = np.cos(phis), np.sin(phis)
    best = np.empty(resolution)
    chunk = max(1, 2_000_000 // max(1, sp.yj.size))
    for start in range(0, resolution, chunk):
        stop = min(resolution, start + chunk)
        z = c[start:stop, None] * sp.yj[None, :] + s[start:stop, None] * sp.yk[None, :]
        best[start:stop] = _tail_iqr(z, xi)
    # argmax returns the first maximum, i.e. the smallest angle on ties
    return float(phis[int(np.argmax(best))])


def choose_angle(sp: StandardizedPair, cfg: TailConfig, rho: float | None = None) -> float:
    policy = cfg.angle
    if isinstance(policy, AutoSign):
        if rho is None:
            raise InvalidInputError("AutoSign angle policy needs the correlation estimate")
        return QUARTER_PI if rho >= 0.0 else THREE_QUARTER_PI
    if isinstance(policy, GridSearch):
        return _grid_angle(sp, cfg.xi, policy.resolution)
    if isinstance(policy, Fixed):
        return float(policy.phi)
    raise InvalidInputError(f"unknown angle policy {policy!r}")


def alternative_tailcor(est: PairEstimate, s_product: float) -> float:
    """TailCoR rescaled to [-1, 1] and centered at zero.

    ``sign(rho) (tailcor - 1) / (s_product sqrt(2) - 1)`` with
    ``s_product = s_g * s_hat`` and ``sign(0) = +1``.
    """
    sign = 1.0 if est.rho >= 0.0 else -1.0
    if abs(est.rho) == 1.0:
        return sign
    denom = s_product * _SQRT2 - 1.0
    if not denom > 0.0:
        raise InvalidInputError(f"s_product must exceed 1/sqrt(2), got {s_product}")
    if est.tailcor < 1.0:
        raise PathologicalRegionError(
            f"TailCoR {est.tailcor:.6g} < 1 with |rho| < 1; alternative TailCoR is undefined"
        )
    # tailcor <= s_product sqrt(2) by construction; clip rounding at |rho| near 1
    return sign * min(1.0, (est.tailcor - 1.0) / denom)


def tailcor_standardized(sp: StandardizedPair, cfg: TailConfig, rho: float, kendall: float) -> PairEstimate:
    """Steps 2-3 on an already standardized pair with a known correlation."""
    phi = choose_angle(sp, cfg, rho)
    z = project(sp, phi)
    xi = cfg.xi
    hi, med, lo = quantiles_select(z, np.array([xi, 0.5, 1.0 - xi]))
    iqr_tail = float(hi - lo)
    sg = cfg.sg
    linear = math.sqrt(1.0 + abs(rho))
    nonlinear = iqr_tail / linear
    est = PairEstimate(
        tailcor=sg * iqr_tail,
        linear=linear,
        nonlinear=nonlinear,
        rho=rho,
        kendall=kendall,
        angle=phi,
        iqr_tail=iqr_tail,
        alt=None,
        downside=2.0 * sg * float(med - lo),
        upside=2.0 * sg * float(hi - med),
        n=int(z.size),
    )
    try:
        alt = alternative_tailcor(est, sg * nonlinear)
    except (PathologicalRegionError, InvalidInputError):
        return est
    return replace(est, alt=alt)


def _check_length(n: int, xi: float) -> None:
    need = min_length(xi)
    if n < need:
        raise TooShortError(f"need at least {need} observations at xi={xi}, got {n}")


def tailcor(x, y, cfg: TailConfig | None = None, *,
            centers: tuple[float, float] | None = None,
            scales: tuple[float, float] | None = None) -> PairEstimate:
    """TailCoR of a pair of series together with its decomposition.

    >>> rng = np.random.default_rng(0)
    >>> x = rng.standard_normal(5000)
    >>> round(tailcor(x, x).linear ** 2, 12)
    2.0
    """
    cfg = cfg or TailConfig()
    x, y = paired(x, y)
    _check_length(x.size, cfg.xi)
    sp = standardize(x, y, cfg.levels, centers=centers, scales=scales)
    kappa = kendall_tau(x, y)
    return tailcor_standardized(sp, cfg, rho_from_kendall(kappa), kappa)


def nonlinear_component(est: PairEstimate) -> float:
    """Raw ``s_hat = IQR_xi(Z) / sqrt(1 + |rho|)``; equals 1/s_g for Gaussian tails."""
    return est.iqr_tail / math.sqrt(1.0 + abs(est.rho))


@dataclass(frozen=True)
class AsymmetricEstimate:
    downside: float
    upside: float
    semi_rho_pos: float
    semi_rho_neg: float
    linear_pos: float
    linear_neg: float
    angle: float

    def to_dict(self) -> dict:
        return {
            "downside": self.downside,
            "upside": self.upside,
            "semi_rho_pos": self.semi_rho_pos,
            "semi_rho_neg": self.semi_rho_neg,
            "linear_pos": self.linear_pos,
            "linear_neg": self.linear_neg,
            "angle": self.angle,
        }


def tailcor_asymmetric(x, y, cfg: TailConfig | None = None, *, center: str = "median") -> AsymmetricEstimate:
    """Downside and upside TailCoR with their semi-correlation linear factors.

    downside = 2 s_g (Q_0.5(Z) - Q_{1-xi}(Z)), upside = 2 s_g (Q_xi(Z) - Q_0.5(Z));
    the linear factors are ``sqrt(1 + 2 |rho_side| |sin(phi) cos(phi)|)`` at the
    angle chosen for the symmetric estimate.
    """
    cfg = cfg or TailConfig()
    est = tailcor(x, y, cfg)
    x, y = paired(x, y)
    rp = semi_correlation(x, y, SemiSide.POSITIVE, center=center)
    rn = semi_correlation(x, y, SemiSide.NEGATIVE, center=center)
    sc = abs(math.sin(est.angle) * math.cos(est.angle))
    return AsymmetricEstimate(
        downside=est.downside,
        upside=est.upside,
        semi_rho_pos=rp,
        semi_rho_neg=rn,
        linear_pos=math.sqrt(1.0 + 2.0 * abs(rp) * sc),
        linear_neg=math.sqrt(1.0 + 2.0 * abs(rn) * sc),
        angle=est.angle,
    )
