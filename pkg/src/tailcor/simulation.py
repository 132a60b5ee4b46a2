"""Elliptical and normal mean-variance mixture samplers, and the Monte Carlo
harness for the finite-sample validation study.

Families (all driven by a Gaussian core ``g`` and a Cholesky factor ``L`` of sigma):

* ``gaussian``:       mu + L g
* ``student-t``:      mu + L g / sqrt(w / alpha),   w ~ chi-square(alpha)
* ``stable``:         mu + sqrt(A) L g,             A positive (alpha/2)-stable
* ``nmvm-t``:         mu + W gamma + sqrt(W) L g,   W = alpha / chi-square(alpha)

Replicate ``r`` of a design draws from ``SeedSequence(seed, spawn_key=(r,))``,
so results do not depend on the order replicates are evaluated in.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInputError, NotPositiveDefiniteError, TailCorError, UnsupportedError
from .pair import TailConfig, min_length, tailcor
from .panel import Panel
from .quantiles import inv_norm_cdf, quantiles_sorted

__all__ = [
    "FAMILIES",
    "EllipticalModel",
    "equicorrelated",
    "sample",
    "positive_stable",
    "population_quantile",
    "population_quantiles",
    "Step1",
    "McDesign",
    "FieldSummary",
    "ModeReport",
    "McReport",
    "run_mc",
    "kde_grid",
]

FAMILIES = ("gaussian", "student-t", "stable", "nmvm-t")


@dataclass(frozen=True)
class EllipticalModel:
    family: str
    mu: np.ndarray
    sigma: np.ndarray
    alpha: Optional[float] = None
    gamma: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidInputError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        mu = np.atleast_1d(np.asarray(self.mu, dtype=np.float64))
        sigma = np.atleast_2d(np.asarray(self.sigma, dtype=np.float64))
        if mu.ndim != 1 or sigma.shape != (mu.size, mu.size):
            raise InvalidInputError(f"mu has {mu.size} entries but sigma has shape {sigma.shape}")
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(sigma))):
            raise InvalidInputError("model parameters must be finite")
        if not np.allclose(sigma, sigma.T, rtol=0.0, atol=1e-12):
            raise NotPositiveDefiniteError("dispersion matrix is not symmetric")
        mu.setflags(write=False)
        sigma.setflags(write=False)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "sigma", sigma)
        a = self.alpha
        if self.family == "gaussian":
            if a is not None:
                raise InvalidInputError("the gaussian family takes no alpha")
        elif a is None or not math.isfinite(a):
            raise InvalidInputError(f"the {self.family} family needs a finite alpha")
        elif self.family == "stable" and not (0.0 < a < 2.0):
            raise InvalidInputError(f"stability index must lie in (0, 2), got {a}")
        elif a <= 0.0:
            raise InvalidInputError(f"degrees of freedom must be positive, got {a}")
        if self.family != "nmvm-t" and self.gamma != 0.0:
            raise InvalidInputError("a skew gamma is only defined for the nmvm-t family")
        self.cholesky()

    @property
    def n(self) -> int:
        return self.mu.size

    def cholesky(self) -> np.ndarray:
        try:
            return np.linalg.cholesky(self.sigma)
        except np.linalg.LinAlgError:
            raise NotPositiveDefiniteError("dispersion matrix is not positive definite") from None

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "alpha": self.alpha,
            "gamma": self.gamma,
            "mu": self.mu.tolist(),
            "sigma": self.sigma.tolist(),
        }


def equicorrelated(family: str, n: int = 2, rho: float = 0.5, alpha: Optional[float] = None,
                   gamma: float = 0.0) -> EllipticalModel:
    """Zero location, unit diagonal and constant off-diagonal ``rho``."""
    sigma = np.full((n, n), float(rho))
    np.fill_diagonal(sigma, 1.0)
    return EllipticalModel(family, np.zeros(n), sigma, alpha, gamma)


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def positive_stable(a: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Totally skewed positive a-stable draws (0 < a < 1) with Laplace transform exp(-s**a).

    Chambers-Mallows-Stuck: V uniform on (-pi/2, pi/2), W standard exponential.
    """
    if not (0.0 < a < 1.0):
        raise InvalidInputError(f"positive stable index must lie in (0, 1), got {a}")
    v = rng.uniform(-0.5 * math.pi, 0.5 * math.pi, size)
    w = rng.standard_exponential(size)
    t = a * (v + 0.5 * math.pi)
    return (np.sin(t) / np.cos(v) ** (1.0 / a)) * (np.cos(v - t) / w) ** ((1.0 - a) / a)


def sample(model: EllipticalModel, T: int, seed=None, labels: Sequence[str] | None = None) -> Panel:
    """Draw ``T`` i.i.d. observations of the model as a Panel."""
    if int(T) != T or T < 1:
        raise InvalidInputError(f"sample size must be a positive integer, got {T!r}")
    rng = _rng(seed)
    chol = model.cholesky()
    g = rng.standard_normal((T, model.n)) @ chol.T
    a = model.alpha
    if model.family == "gaussian":
        x = g
    elif model.family == "student-t":
        w = rng.gamma(0.5 * a, 2.0, size=T)
        x = g / np.sqrt(w / a)[:, None]
    elif model.family == "stable":
        x = g * np.sqrt(positive_stable(0.5 * a, T, rng))[:, None]
    else:
        w = a / rng.gamma(0.5 * a, 2.0, size=T)
        x = w[:, None] * model.gamma + g * np.sqrt(w)[:, None]
    x = x + model.mu
    labels = tuple(labels) if labels is not None else tuple(f"X{i + 1}" for i in range(model.n))
    return Panel(labels, x)


def _standard_quantile(model: EllipticalModel, p: float) -> float:
    if model.family == "gaussian":
        return inv_norm_cdf(p)
    if model.family == "student-t":
        from scipy.stats import t as student_t

        return float(student_t.ppf(p, model.alpha))
    raise UnsupportedError(f"no closed-form marginal quantiles for the {model.family} family")


def population_quantile(model: EllipticalModel, j: int, p: float) -> float:
    """Marginal quantile ``mu_j + sqrt(sigma_jj) q(p)`` of series ``j``."""
    if not (0.0 < p < 1.0):
        raise InvalidInputError(f"probability level must lie in (0, 1), got {p}")
    if p == 0.5 and model.family in ("gaussian", "student-t"):
        return float(model.mu[j])
    return float(model.mu[j] + math.sqrt(model.sigma[j, j]) * _standard_quantile(model, p))


def population_quantiles(model: EllipticalModel, j: int, ps) -> np.ndarray:
    return np.array([population_quantile(model, j, p) for p in np.atleast_1d(ps)])


class Step1:
    """How the marginals are standardized before projecting."""

    SAMPLE = "sample"
    POPULATION = "population"
    ALL = (SAMPLE, POPULATION)


MC_FIELDS = ("tailcor", "nonlinear", "linear")


@dataclass(frozen=True)
class McDesign:
    model: EllipticalModel
    T: int
    H: int
    cfg: TailConfig = field(default_factory=TailConfig)
    step1: tuple[str, ...] = (Step1.SAMPLE,)
    seed: int = 0
    pair: tuple[int, int] = (0, 1)

    def __post_init__(self):
        object.__setattr__(self, "step1", tuple(self.step1))
        for mode in self.step1:
            if mode not in Step1.ALL:
                raise InvalidInputError(f"unknown step-1 mode {mode!r}; expected one of {Step1.ALL}")
        if not self.step1 or len(set(self.step1)) != len(self.step1):
            raise InvalidInputError("step-1 modes must be a non-empty list without repeats")
        need = min_length(self.cfg.xi)
        if int(self.T) != self.T or self.T < need:
            raise InvalidInputError(f"T must be an integer of at least {need} at xi={self.cfg.xi}, got {self.T!r}")
        if int(self.H) != self.H or self.H < 1:
            raise InvalidInputError(f"H must be a positive integer, got {self.H!r}")
        j, k = self.pair
        if not (0 <= j < self.model.n and 0 <= k < self.model.n and j != k):
            raise InvalidInputError(f"pair {self.pair} does not name two distinct series of the model")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise InvalidInputError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if Step1.POPULATION in self.step1:
            population_quantile(self.model, j, self.cfg.tau)

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "T": int(self.T),
            "H": int(self.H),
            "config": self.cfg.to_dict(),
            "step1": list(self.step1),
            "seed": int(self.seed),
            "pair": list(self.pair),
        }


def kde_grid(values: np.ndarray, points: int = 128) -> dict:
    """Gaussian-kernel density (Silverman bandwidth) on an even grid, for plotting."""
    from scipy.stats import gaussian_kde

    v = np.asarray(values, dtype=np.float64)
    if v.size < 2 or np.ptp(v) == 0.0:
        return {"x": [], "density": []}
    kde = gaussian_kde(v, bw_method="silverman")
    h = float(np.sqrt(kde.covariance[0, 0]))
    x = np.linspace(v.min() - 3.0 * h, v.max() + 3.0 * h, points)
    return {"x": x.tolist(), "density": kde(x).tolist()}


@dataclass(frozen=True)
class FieldSummary:
    mean: float
    sd: float
    median: float
    mc_se: float

    def to_dict(self) -> dict:
        return {"mean": self.mean, "sd": self.sd, "median": self.median, "mc_se": self.mc_se}


def _summary(v: np.ndarray) -> FieldSummary:
    if v.size == 0:
        nan = float("nan")
        return FieldSummary(nan, nan, nan, nan)
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    med = float(quantiles_sorted(np.sort(v), np.array([0.5]))[0])
    return FieldSummary(float(np.mean(v)), sd, med, sd / math.sqrt(v.size))


@dataclass(frozen=True)
class ModeReport:
    mode: str
    values: dict          # field -> per-replicate array (NaN where the replicate failed)
    failed: int

    def kept(self, name: str) -> np.ndarray:
        v = self.values[name]
        return v[np.isfinite(v)]

    def summary(self, name: str) -> FieldSummary:
        return _summary(self.kept(name))

    def to_dict(self, kde_points: int = 0, include_values: bool = False) -> dict:
        out = {"mode": self.mode, "failed": self.failed, "kept": int(self.kept("tailcor").size)}
        for name in MC_FIELDS:
            entry = self.summary(name).to_dict()
            if kde_points:
                entry["kde"] = kde_grid(self.kept(name), kde_points)
            if include_values:
                entry["values"] = [None if not math.isfinite(x) else float(x) for x in self.values[name]]
            out[name] = entry
        return out


@dataclass(frozen=True)
class McReport:
    design: McDesign
    modes: dict           # step-1 mode -> ModeReport

    def __getitem__(self, mode: str) -> ModeReport:
        return self.modes[mode]

    def to_dict(self, kde_points: int = 0, include_values: bool = False) -> dict:
        return {
            "design": self.design.to_dict(),
            "modes": [self.modes[m].to_dict(kde_points, include_values) for m in self.design.step1],
        }


def _population_standardization(design: McDesign):
    tau = design.cfg.tau
    centers, scales = [], []
    for j in design.pair:
        lo, med, hi = population_quantiles(design.model, j, [1.0 - tau, 0.5, tau])
        centers.append(med)
        scales.append(hi - lo)
    return tuple(centers), tuple(scales)


def _replicate_block(design: McDesign, start: int, stop: int) -> np.ndarray:
    """Estimates for replicates ``start..stop-1``: array (reps, modes, fields)."""
    j, k = design.pair
    pop = _population_standardization(design) if Step1.POPULATION in design.step1 else None
    out = np.full((stop - start, len(design.step1), len(MC_FIELDS)), np.nan)
    for i, r in enumerate(range(start, stop)):
        rng = np.random.default_rng(np.random.SeedSequence(int(design.seed), spawn_key=(r,)))
        x = sample(design.model, design.T, rng).data
        for m, mode in enumerate(design.step1):
            try:
                if mode == Step1.SAMPLE:
                    est = tailcor(x[:, j], x[:, k], design.cfg)
                else:
                    est = tailcor(x[:, j], x[:, k], design.cfg, centers=pop[0], scales=pop[1])
            except TailCorError:
                continue
            out[i, m] = (est.tailcor, est.nonlinear, est.linear)
    return out


def run_mc(design: McDesign, *, jobs: int = 1, chunk: int = 50) -> McReport:
    """Run every replicate of the design and collect estimates per step-1 mode.

    Each replicate draws one sample shared by all requested step-1 modes.
    Replicates whose estimator raises are recorded as NaN and counted.
    """
    bounds = [(s, min(s + chunk, design.H)) for s in range(0, design.H, chunk)]
    if jobs > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            parts = list(pool.map(_replicate_block, [design] * len(bounds), *zip(*bounds)))
    else:
        parts = [_replicate_block(design, s, e) for s, e in bounds]
    est = np.concatenate(parts, axis=0)
    modes = {}
    for m, mode in enumerate(design.step1):
        values = {name: est[:, m, f].copy() for f, name in enumerate(MC_FIELDS)}
        failed = int(np.sum(~np.isfinite(values["tailcor"])))
        modes[mode] = ModeReport(mode, values, failed)
    return McReport(design, modes)
