"""Dense linear maps C: R^cols -> R^rows and the Gram operator E = C C^T.

Besides application and adjoint application this module estimates the two
extremal eigenvalues of E by power iteration and evaluates the condition
``gamma in [0, 2/||C||^2]`` that makes ``I - gamma E`` nonexpansive.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DegenerateOperatorError, DimensionError

__all__ = [
    "LinearMap",
    "GramSpectrum",
    "apply",
    "adjoint_apply",
    "gram_apply",
    "estimate_spectrum",
    "nonexpansive_bound_holds",
    "read_matrix_csv",
    "read_vector_csv",
    "write_matrix_csv",
    "write_vector_csv",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000


@dataclass(frozen=True, eq=False)
class LinearMap:
    """Dense real matrix viewed as a map from R^cols to R^rows."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.array(self.entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionError(f"LinearMap needs a nonempty 2-d array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("LinearMap entries must be finite")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @classmethod
    def identity(cls, n: int) -> "LinearMap":
        return cls(np.eye(n))

    @property
    def rows(self) -> int:
        return self.entries.shape[0]

    @property
    def cols(self) -> int:
        return self.entries.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape

    def adjoint(self) -> "LinearMap":
        return LinearMap(self.entries.T)

    @property
    def T(self) -> "LinearMap":
        return self.adjoint()

    def gram_matrix(self) -> np.ndarray:
        return self.entries @ self.entries.T

    def is_zero(self) -> bool:
        return not np.any(self.entries)

    def __eq__(self, other):
        if not isinstance(other, LinearMap):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.entries, other.entries))

    __hash__ = None

    def __repr__(self):
        return f"LinearMap(rows={self.rows}, cols={self.cols})"


@dataclass(frozen=True)
class GramSpectrum:
    """Extremal eigenvalue estimates of E = C C^T.

    ``tolerance_achieved`` is the larger of the two eigen-residuals
    ``||E x - theta x||`` divided by ``op_norm``; it bounds the relative
    distance of each estimate to an eigenvalue of E.
    """

    op_norm: float
    min_eigen: float
    norm_C: float
    iterations_used: int
    tolerance_achieved: float
    converged: bool = True


def _vector(x, n: int, what: str) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionError(f"{what}: expected a vector of length {n}, got shape {v.shape}")
    return v


def apply(C: LinearMap, x) -> np.ndarray:
    """Return ``C x``."""
    return C.entries @ _vector(x, C.cols, "apply")


def adjoint_apply(C: LinearMap, u) -> np.ndarray:
    """Return ``C^T u``."""
    return C.entries.T @ _vector(u, C.rows, "adjoint_apply")


def gram_apply(C: LinearMap, v) -> np.ndarray:
    """Return ``C (C^T v)`` without forming C C^T."""
    v = _vector(v, C.rows, "gram_apply")
    return C.entries @ (C.entries.T @ v)


def _power_iteration(matvec, start, tol, scale, max_iter):
    # Returns (rayleigh quotient, vector, residual norm, iterations, converged).
    # The residual test is relative to `scale`, or to |theta| when scale is None.
    x = start / np.linalg.norm(start)
    theta, res = 0.0, math.inf
    for k in range(1, max_iter + 1):
        y = matvec(x)
        theta = float(x @ y)
        res = float(np.linalg.norm(y - theta * x))
        if res <= tol * (abs(theta) if scale is None else scale):
            return theta, x, res, k, True
        ny = np.linalg.norm(y)
        if ny == 0.0:
            # x lies in the null space: theta = 0 exactly.
            return 0.0, x, 0.0, k, True
        x = y / ny
    return theta, x, res, max_iter, False


def _dominant(matvec, n, tol, scale, max_iter):
    start = np.ones(n)
    theta, x, res, it, ok = _power_iteration(matvec, start, tol, scale, max_iter)
    # A start vector orthogonal to the dominant eigenspace converges to a
    # smaller eigenvalue; rerun from a perturbed start and keep the larger.
    perturbed = start.copy()
    perturbed[0] += 1.0
    theta2, x2, res2, it2, ok2 = _power_iteration(matvec, perturbed, tol, scale, max_iter)
    if theta2 > theta + tol * (abs(theta) if scale is None else scale):
        return theta2, res2, it + it2, ok2
    return theta, res, it + it2, ok


def estimate_spectrum(
    C: LinearMap, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> GramSpectrum:
    """Estimate ``||E||`` and the smallest eigenvalue of ``E = C C^T``.

    Power iteration on E gives the norm; power iteration on
    ``op_norm * I - E`` gives ``op_norm - min_eigen``. Hitting ``max_iter``
    is not an error: the report carries ``converged=False`` and the
    residual actually reached.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be positive")
    if C.is_zero():
        raise DegenerateOperatorError("spectrum of the zero map is degenerate")
    A = C.entries
    n = C.rows

    def gram(v):
        return A @ (A.T @ v)

    top, res_top, it_top, ok_top = _dominant(gram, n, tol, None, max_iter)
    top = max(top, 0.0)

    def shifted(v):
        return top * v - gram(v)

    gap, res_low, it_low, ok_low = _dominant(shifted, n, tol, top, max_iter)
    low = min(max(top - gap, 0.0), top)
    achieved = max(res_top, res_low) / top if top > 0 else math.inf
    return GramSpectrum(
        op_norm=top,
        min_eigen=low,
        norm_C=math.sqrt(top),
        iterations_used=it_top + it_low,
        tolerance_achieved=achieved,
        converged=ok_top and ok_low and achieved <= tol,
    )


def nonexpansive_bound_holds(
    C: LinearMap, gamma: float, spectrum: GramSpectrum
) -> tuple[bool, float]:
    """Check ``gamma in [0, 2/||C||^2]`` and return ``||I - gamma E||`` alongside.

    The norm is ``max(|1 - gamma*op_norm|, |1 - gamma*min_eigen|)``, exact for
    the symmetric positive semidefinite E.
    """
    if gamma < 0:
        raise ValueError(f"gamma must be nonnegative, got {gamma}")
    holds = gamma * spectrum.op_norm <= 2.0
    low = max(spectrum.min_eigen, 0.0)
    certificate = max(abs(1.0 - gamma * spectrum.op_norm), abs(1.0 - gamma * low))
    return bool(holds), float(certificate)


# -- CSV matrix/vector files -------------------------------------------------


def _parse_rows(path: Path) -> list[list[float]]:
    rows, width = [], None
    with open(path, newline="") as fh:
        for lineno, record in enumerate(csv.reader(fh), start=1):
            if not record or all(not f.strip() for f in record):
                continue
            try:
                row = [float(f) for f in record]
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: not a decimal literal ({exc})") from None
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ValueError(f"{path}:{lineno}: expected {width} columns, got {len(row)}")
            rows.append(row)
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    return rows


def read_matrix_csv(path) -> np.ndarray:
    return np.array(_parse_rows(Path(path)), dtype=float)


def read_vector_csv(path) -> np.ndarray:
    rows = _parse_rows(Path(path))
    if len(rows[0]) != 1:
        raise ValueError(f"{path}: a vector file must have a single column")
    return np.array([r[0] for r in rows], dtype=float)


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def write_matrix_csv(path, matrix) -> None:
    m = np.atleast_2d(np.asarray(matrix, dtype=float))
    with open(path, "w", newline="") as fh:
        for row in m:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_vector_csv(path, vector) -> None:
    with open(path, "w", newline="") as fh:
        for v in np.asarray(vector, dtype=float).ravel():
            fh.write(_fmt(v) + "\n")
