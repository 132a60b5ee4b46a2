"""Multivariate TailCoR: the N x N matrix, its linear-component matrix Psi
and the pooled nonlinear component."""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InvalidInputError, PanelShapeError, TailCorError
from .pair import (
    PairEstimate,
    StandardizedPair,
    TailConfig,
    min_length,
    standardize,
    tailcor_standardized,
)
from .rank import kendall_tau, rho_from_kendall

__all__ = [
    "MatrixEstimate",
    "PsiWarning",
    "pair_indices",
    "tailcor_matrix",
    "pooled_nonlinear",
    "vech",
    "unvech",
    "psi_min_eigenvalue",
]

_SQRT2 = math.sqrt(2.0)


class PsiWarning(UserWarning):
    """The estimated Psi matrix is not positive definite."""


def pair_indices(n: int) -> list[tuple[int, int]]:
    """Lower-triangle index pairs (j >= k) in column-major order, matching ``vech``."""
    return [(j, k) for k in range(n) for j in range(k, n)]


def vech(m) -> np.ndarray:
    """Column-stacked lower triangle including the diagonal.

    >>> vech(np.array([[1.0, 2.0], [2.0, 3.0]])).tolist()
    [1.0, 2.0, 3.0]
    """
    m = np.asarray(getattr(m, "tailcor", m), dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"vech needs a square matrix, got shape {m.shape}")
    return np.array([m[j, k] for j, k in pair_indices(m.shape[0])])


def unvech(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    n = int(round((math.sqrt(8 * v.size + 1) - 1) / 2))
    if n * (n + 1) // 2 != v.size:
        raise InvalidInputError(f"length {v.size} is not triangular")
    m = np.empty((n, n))
    for value, (j, k) in zip(v, pair_indices(n)):
        m[j, k] = m[k, j] = value
    return m


def pooled_nonlinear(per_pair) -> float:
    """Arithmetic mean of the pairwise nonlinear components."""
    v = np.asarray(per_pair, dtype=np.float64).ravel()
    if v.size == 0:
        raise InvalidInputError("pooled nonlinear component of an empty set")
    if not np.all(np.isfinite(v) & (v > 0.0)):
        raise InvalidInputError("nonlinear components must be finite and positive")
    return float(np.mean(v))


def psi_min_eigenvalue(psi: np.ndarray) -> float:
    return float(np.linalg.eigvalsh(psi)[0])


@dataclass(frozen=True)
class MatrixEstimate:
    labels: tuple[str, ...]
    tailcor: np.ndarray
    linear: np.ndarray
    nonlinear: np.ndarray
    rho: np.ndarray
    per_pair_nonlinear: np.ndarray
    pooled_nonlinear: float
    psi_min_eigenvalue: float
    config: TailConfig = field(default_factory=TailConfig)

    @property
    def n(self) -> int:
        return len(self.labels)

    @property
    def psi(self) -> np.ndarray:
        return self.linear / _SQRT2

    @property
    def psi_positive_definite(self) -> bool:
        return self.psi_min_eigenvalue > 0.0

    def reconstructed(self) -> np.ndarray:
        """TailCoR implied by the pooled nonlinear component: sqrt(2) s_g s_hat Psi."""
        return _SQRT2 * self.config.sg * self.pooled_nonlinear * self.psi

    def to_dict(self) -> dict:
        return {
            "labels": list(self.labels),
            "tailcor": self.tailcor.tolist(),
            "linear": self.linear.tolist(),
            "nonlinear": self.nonlinear.tolist(),
            "rho": self.rho.tolist(),
            "pooled_nonlinear": self.pooled_nonlinear,
            "psi_min_eigenvalue": self.psi_min_eigenvalue,
        }


def _as_panel_array(data) -> np.ndarray:
    if isinstance(data, (list, tuple)):
        lengths = {len(np.atleast_1d(np.asarray(s))) for s in data}
        if len(lengths) > 1:
            raise PanelShapeError(f"series have different lengths: {sorted(lengths)}")
        arr = np.column_stack([np.asarray(s, dtype=np.float64) for s in data])
    else:
        arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise PanelShapeError(f"panel must be a T x N array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("panel contains non-finite values")
    return arr


def tailcor_matrix(panel, cfg: TailConfig | None = None, *, labels: Sequence[str] | None = None,
                   jobs: int = 1, warn: bool = True) -> MatrixEstimate:
    """Pairwise TailCoR for every pair of columns, diagonal included.

    ``panel`` is a ``Panel`` or a T x N array (or a list of equal-length series).
    Diagonal entries are self-pairs run through the same pipeline.
    """
    cfg = cfg or TailConfig()
    if hasattr(panel, "data") and hasattr(panel, "labels"):
        labels = labels or panel.labels
        panel = panel.data
    data = _as_panel_array(panel)
    t, n = data.shape
    if n < 2:
        raise PanelShapeError(f"need at least two series, got {n}")
    labels = tuple(labels) if labels is not None else tuple(f"X{i + 1}" for i in range(n))
    if len(labels) != n:
        raise PanelShapeError(f"{len(labels)} labels for {n} series")
    need = min_length(cfg.xi)
    if t < need:
        raise PanelShapeError(f"panel has {t} observations, need at least {need} at xi={cfg.xi}")

    # standardize each column once; every pair reuses it
    unit = []
    for i in range(n):
        try:
            sp = standardize(data[:, i], data[:, i], cfg.levels)
        except TailCorError as exc:
            raise type(exc)(f"series {labels[i]!r}: {exc}") from exc
        unit.append(sp.yj)

    def one(jk: tuple[int, int]) -> PairEstimate:
        j, k = jk
        try:
            kappa = kendall_tau(data[:, j], data[:, k])
            sp = StandardizedPair(unit[j], unit[k], (0.0, 0.0), (1.0, 1.0))
            return tailcor_standardized(sp, cfg, rho_from_kendall(kappa), kappa)
        except TailCorError as exc:
            raise type(exc)(f"pair ({labels[j]!r}, {labels[k]!r}): {exc}") from exc

    idx = pair_indices(n)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, idx))
    else:
        results = [one(jk) for jk in idx]

    tc = np.empty((n, n))
    lin = np.empty((n, n))
    nl = np.empty((n, n))
    rho = np.empty((n, n))
    for (j, k), est in zip(idx, results):
        tc[j, k] = tc[k, j] = est.tailcor
        lin[j, k] = lin[k, j] = est.linear
        nl[j, k] = nl[k, j] = est.nonlinear
        rho[j, k] = rho[k, j] = est.rho
    per_pair = np.array([est.nonlinear for est in results])
    min_eig = psi_min_eigenvalue(lin / _SQRT2)
    if warn and not min_eig > 0.0:
        warnings.warn(f"estimated Psi is not positive definite (smallest eigenvalue {min_eig:.3g})",
                      PsiWarning, stacklevel=2)
    return MatrixEstimate(
        labels=labels,
        tailcor=tc,
        linear=lin,
        nonlinear=nl,
        rho=rho,
        per_pair_nonlinear=per_pair,
        pooled_nonlinear=pooled_nonlinear(per_pair),
        psi_min_eigenvalue=min_eig,
        config=cfg,
    )
