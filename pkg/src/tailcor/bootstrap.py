"""Moving-block bootstrap standard errors for pair and matrix estimates.

Each replicate draws its own generator from ``SeedSequence(seed, spawn_key=(r,))``,
so replicate ``r`` is the same whatever order (or thread) it runs in.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    DegenerateRanksError,
    DegenerateScaleError,
    DegenerateSideError,
    InvalidInputError,
    UnstableBootstrapError,
)
from .matrix import MatrixEstimate, _as_panel_array, tailcor_matrix
from .pair import PairEstimate, TailConfig, tailcor
from .quantiles import quantiles_sorted
from .rank import paired

__all__ = [
    "BootstrapSpec",
    "BootstrapEstimate",
    "PairBootstrap",
    "MatrixBootstrap",
    "replicate_rng",
    "block_indices",
    "bootstrap_pair",
    "bootstrap_matrix",
    "MAX_FAILURE_SHARE",
]

# share of failed replicates above which the bootstrap is declared unstable
MAX_FAILURE_SHARE = 0.20

# resampled data can lose a side, a scale or all rank variation; those replicates are dropped
_DROPPABLE = (DegenerateScaleError, DegenerateSideError, DegenerateRanksError)

PAIR_FIELDS = ("tailcor", "linear", "nonlinear", "rho", "alt", "downside", "upside")


@dataclass(frozen=True)
class BootstrapSpec:
    block_length: int = 50
    replications: int = 500
    seed: int = 0

    def __post_init__(self):
        if int(self.block_length) != self.block_length or self.block_length < 1:
            raise InvalidInputError(f"block length must be a positive integer, got {self.block_length!r}")
        if int(self.replications) != self.replications or self.replications < 2:
            raise InvalidInputError(f"need at least 2 replications, got {self.replications!r}")
        if int(self.seed) != self.seed or not (0 <= self.seed < 2**64):
            raise InvalidInputError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")

    def to_dict(self) -> dict:
        return {"block_length": int(self.block_length), "replications": int(self.replications),
                "seed": int(self.seed)}


@dataclass(frozen=True)
class BootstrapEstimate:
    point: float
    std_error: float
    quantiles: tuple[float, float]
    replicates_kept: int
    failed: int = 0

    def to_dict(self) -> dict:
        return {
            "point": self.point,
            "std_error": self.std_error,
            "quantiles": list(self.quantiles),
            "replicates_kept": self.replicates_kept,
            "failed": self.failed,
        }


def replicate_rng(seed: int, r: int) -> np.random.Generator:
    """Independent generator for replicate ``r``; depends only on (seed, r)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(r),)))


def block_indices(n: int, spec: BootstrapSpec, r: int) -> np.ndarray:
    """Time indices of one moving-block resample of a length-``n`` series.

    ``ceil(n / L)`` blocks of length ``L`` with starts uniform on ``[0, n - L]``,
    concatenated and cut to ``n``.
    """
    L = int(spec.block_length)
    if n < L:
        raise InvalidInputError(f"series length {n} is shorter than the block length {L}")
    k = -(-n // L)
    starts = replicate_rng(spec.seed, r).integers(0, n - L + 1, size=k)
    return (starts[:, None] + np.arange(L)[None, :]).ravel()[:n]


def _summarize(point: Optional[float], values: np.ndarray, failed: int) -> Optional[BootstrapEstimate]:
    if point is None or values.size < 2:
        return None
    lo, hi = quantiles_sorted(np.sort(values), np.array([0.025, 0.975]))
    return BootstrapEstimate(
        point=float(point),
        std_error=float(np.std(values, ddof=1)),
        quantiles=(float(lo), float(hi)),
        replicates_kept=int(values.size),
        failed=int(failed),
    )


def _run(one: Callable[[int], object], reps: int, jobs: int) -> tuple[list, int]:
    def guarded(r: int):
        try:
            return one(r)
        except _DROPPABLE:
            return None

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            out = list(pool.map(guarded, range(reps)))
    else:
        out = [guarded(r) for r in range(reps)]
    kept = [o for o in out if o is not None]
    failed = reps - len(kept)
    if failed > MAX_FAILURE_SHARE * reps:
        raise UnstableBootstrapError(f"{failed} of {reps} bootstrap replicates failed")
    return kept, failed


@dataclass(frozen=True)
class PairBootstrap:
    point: PairEstimate
    fields: dict
    spec: BootstrapSpec
    failed: int
    replicates: np.ndarray  # tailcor per kept replicate, in replicate order

    def __getitem__(self, name: str) -> Optional[BootstrapEstimate]:
        return self.fields[name]

    @property
    def std_error(self) -> float:
        return self.fields["tailcor"].std_error

    def to_dict(self) -> dict:
        return {name: (None if est is None else est.to_dict()) for name, est in self.fields.items()}


def bootstrap_pair(x, y, cfg: TailConfig | None = None, spec: BootstrapSpec | None = None, *,
                   jobs: int = 1) -> PairBootstrap:
    """Block-bootstrap distribution of every field of the pair estimate.

    Both series are resampled with the same time indices, and each replicate
    re-runs the full pipeline (standardization included).
    """
    cfg = cfg or TailConfig()
    spec = spec or BootstrapSpec()
    x, y = paired(x, y)
    point = tailcor(x, y, cfg)
    n = x.size
    if n < spec.block_length:
        raise InvalidInputError(f"series length {n} is shorter than the block length {spec.block_length}")

    def one(r: int) -> PairEstimate:
        idx = block_indices(n, spec, r)
        return tailcor(x[idx], y[idx], cfg)

    kept, failed = _run(one, spec.replications, jobs)
    fields = {}
    for name in PAIR_FIELDS:
        vals = np.array([getattr(e, name) for e in kept if getattr(e, name) is not None], dtype=np.float64)
        fields[name] = _summarize(getattr(point, name), vals, failed)
    return PairBootstrap(point=point, fields=fields, spec=spec, failed=failed,
                         replicates=np.array([e.tailcor for e in kept]))


@dataclass(frozen=True)
class MatrixBootstrap:
    point: MatrixEstimate
    tailcor_se: np.ndarray
    linear_se: np.ndarray
    nonlinear_se: np.ndarray
    pooled_nonlinear: BootstrapEstimate
    spec: BootstrapSpec
    replicates_kept: int
    failed: int

    def to_dict(self) -> dict:
        return {
            "tailcor_se": self.tailcor_se.tolist(),
            "linear_se": self.linear_se.tolist(),
            "nonlinear_se": self.nonlinear_se.tolist(),
            "pooled_nonlinear": self.pooled_nonlinear.to_dict(),
            "replicates_kept": self.replicates_kept,
            "failed": self.failed,
        }


def bootstrap_matrix(panel, cfg: TailConfig | None = None, spec: BootstrapSpec | None = None, *,
                     labels=None, jobs: int = 1) -> MatrixBootstrap:
    """Standard errors of every matrix entry from a joint block bootstrap of the panel rows."""
    cfg = cfg or TailConfig()
    spec = spec or BootstrapSpec()
    if hasattr(panel, "data") and hasattr(panel, "labels"):
        labels = labels or panel.labels
        panel = panel.data
    data = _as_panel_array(panel)
    point = tailcor_matrix(data, cfg, labels=labels)
    t = data.shape[0]
    if t < spec.block_length:
        raise InvalidInputError(f"panel length {t} is shorter than the block length {spec.block_length}")

    def one(r: int) -> MatrixEstimate:
        return tailcor_matrix(data[block_indices(t, spec, r)], cfg, labels=point.labels, warn=False)

    kept, failed = _run(one, spec.replications, jobs)
    if len(kept) < 2:
        raise UnstableBootstrapError("fewer than two bootstrap replicates succeeded")
    tc = np.stack([m.tailcor for m in kept])
    lin = np.stack([m.linear for m in kept])
    nl = np.stack([m.nonlinear for m in kept])
    pooled = np.array([m.pooled_nonlinear for m in kept])
    return MatrixBootstrap(
        point=point,
        tailcor_se=np.std(tc, axis=0, ddof=1),
        linear_se=np.std(lin, axis=0, ddof=1),
        nonlinear_se=np.std(nl, axis=0, ddof=1),
        pooled_nonlinear=_summarize(point.pooled_nonlinear, pooled, failed),
        spec=spec,
        replicates_kept=len(kept),
        failed=failed,
    )
