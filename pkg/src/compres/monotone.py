"""Maximal monotone operators with closed-form resolvents.

Every operator exposes its resolvent ``J_{lam M} = (I + lam M)^{-1}`` and the
exact geometry of its image sets ``M(p)``: the distance of a candidate to
``M(p)`` and the Euclidean projection onto it. The latter two are what the
verification routines in :mod:`compres.oracle` build on.
"""
from __future__ import annotations

import abc
import math

import numpy as np

from .exceptions import DimensionError, UnsupportedOperatorError

__all__ = [
    "MonotoneOp",
    "L1Subdifferential",
    "BoxIndicatorSubdifferential",
    "LinearMonotoneOp",
    "ZeroOp",
    "ScaledOp",
    "resolvent",
    "yosida",
    "diag_scaled_resolvent",
    "membership_residual",
    "soft_threshold",
]

# |p_i| at or below this is treated as sitting on a kink.
ZERO_BAND = 1e-9


def soft_threshold(x, t):
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


def _check_vec(x, n, what):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionError(f"{what}: expected a vector of length {n}, got shape {v.shape}")
    return v


class MonotoneOp(abc.ABC):
    """A maximal monotone operator on R^dim.

    Subclasses are immutable. ``is_subdifferential`` marks operators of the
    form ``M = df`` whose resolvent is a proximal map (usable by the ADMM
    reference solver); ``separable`` marks coordinatewise operators.
    """

    dim: int
    is_subdifferential = False
    separable = False

    @abc.abstractmethod
    def resolvent(self, lam: float, x: np.ndarray) -> np.ndarray:
        ...

    def project_image(self, point: np.ndarray, s: np.ndarray) -> np.ndarray | None:
        """Project ``s`` onto ``M(point)``; None when ``point`` is outside ``dom M``."""
        raise UnsupportedOperatorError(f"{type(self).__name__} has no image-set geometry")

    def membership_residual(self, point, candidate) -> float:
        p = _check_vec(point, self.dim, "membership_residual point")
        c = _check_vec(candidate, self.dim, "membership_residual candidate")
        proj = self.project_image(p, c)
        if proj is None:
            return math.inf
        return float(np.linalg.norm(c - proj))

    def coordinate_resolvent(self, t: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Resolvent of ``t_i M_i`` applied to ``x_i``, coordinate by coordinate."""
        raise UnsupportedOperatorError(f"{type(self).__name__} is not separable")

    def with_band(self, band: float) -> "MonotoneOp":
        """Copy with a different kink-detection band (no-op for smooth operators)."""
        return self


class L1Subdifferential(MonotoneOp):
    """Subdifferential of the l1 norm; its resolvent is soft thresholding."""

    is_subdifferential = True
    separable = True

    def __init__(self, dim: int, band: float = ZERO_BAND):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        self.band = band

    def resolvent(self, lam, x):
        return soft_threshold(x, lam)

    def coordinate_resolvent(self, t, x):
        return soft_threshold(x, t)

    def project_image(self, point, s):
        pinned = np.abs(point) > self.band
        return np.where(pinned, np.sign(point), np.clip(s, -1.0, 1.0))

    def with_band(self, band):
        return L1Subdifferential(self.dim, band)

    def __repr__(self):
        return f"L1Subdifferential(dim={self.dim})"


class BoxIndicatorSubdifferential(MonotoneOp):
    """Normal cone of the box ``[lower, upper]``; its resolvent is clamping."""

    is_subdifferential = True
    separable = True

    def __init__(self, dim: int, lower=None, upper=None, band: float = ZERO_BAND):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)
        lo = np.full(dim, -np.inf) if lower is None else np.broadcast_to(np.asarray(lower, float), (dim,)).copy()
        hi = np.full(dim, np.inf) if upper is None else np.broadcast_to(np.asarray(upper, float), (dim,)).copy()
        if np.any(np.isnan(lo)) or np.any(np.isnan(hi)) or np.any(lo > hi):
            raise ValueError("box bounds need lower <= upper componentwise")
        lo.setflags(write=False)
        hi.setflags(write=False)
        self.lower, self.upper = lo, hi
        self.band = band

    def resolvent(self, lam, x):
        return np.clip(x, self.lower, self.upper)

    def coordinate_resolvent(self, t, x):
        return np.clip(x, self.lower, self.upper)

    def project_image(self, point, s):
        lo_gap = point - self.lower
        hi_gap = self.upper - point
        if np.any(lo_gap < -self.band) or np.any(hi_gap < -self.band):
            return None
        at_lo = lo_gap <= self.band
        at_hi = hi_gap <= self.band
        out = np.zeros_like(s)
        out = np.where(at_lo & ~at_hi, np.minimum(s, 0.0), out)
        out = np.where(at_hi & ~at_lo, np.maximum(s, 0.0), out)
        out = np.where(at_lo & at_hi, s, out)
        return out

    def with_band(self, band):
        return BoxIndicatorSubdifferential(self.dim, self.lower, self.upper, band)

    def __repr__(self):
        return f"BoxIndicatorSubdifferential(dim={self.dim})"


class LinearMonotoneOp(MonotoneOp):
    """Affine operator ``x -> A x + b`` with ``A + A^T`` positive semidefinite."""

    def __init__(self, A, b=None):
        A = np.array(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got shape {A.shape}")
        self.dim = A.shape[0]
        b = np.zeros(self.dim) if b is None else _check_vec(b, self.dim, "LinearMonotoneOp b").copy()
        self.monotonicity_certificate = float(np.linalg.eigvalsh((A + A.T) / 2.0)[0])
        if self.monotonicity_certificate < -1e-10:
            raise ValueError(
                f"A is not monotone: smallest eigenvalue of its symmetric part is "
                f"{self.monotonicity_certificate:.3g}"
            )
        A.setflags(write=False)
        b.setflags(write=False)
        self.A, self.b = A, b

    def __call__(self, x):
        return self.A @ x + self.b

    def resolvent(self, lam, x):
        return np.linalg.solve(np.eye(self.dim) + lam * self.A, x - lam * self.b)

    def project_image(self, point, s):
        return self.A @ point + self.b

    def __repr__(self):
        return f"LinearMonotoneOp(dim={self.dim})"


class ZeroOp(MonotoneOp):
    """``M(x) = {0}``; the resolvent is the identity."""

    separable = True

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dim must be positive")
        self.dim = int(dim)

    def resolvent(self, lam, x):
        return np.array(x, dtype=float, copy=True)

    def coordinate_resolvent(self, t, x):
        return np.array(x, dtype=float, copy=True)

    def project_image(self, point, s):
        return np.zeros_like(s)

    def __repr__(self):
        return f"ZeroOp(dim={self.dim})"


class ScaledOp(MonotoneOp):
    """``factor * M`` for a positive factor, e.g. ``lam * d||.||_1 = d(lam ||.||_1)``."""

    def __init__(self, base: MonotoneOp, factor: float):
        if not factor > 0:
            raise ValueError("scale factor must be positive")
        self.base = base
        self.factor = float(factor)
        self.dim = base.dim
        self.is_subdifferential = base.is_subdifferential
        self.separable = base.separable

    def resolvent(self, lam, x):
        return self.base.resolvent(self.factor * lam, x)

    def coordinate_resolvent(self, t, x):
        return self.base.coordinate_resolvent(self.factor * np.asarray(t, float), x)

    def project_image(self, point, s):
        proj = self.base.project_image(point, s / self.factor)
        return None if proj is None else self.factor * proj

    def with_band(self, band):
        return ScaledOp(self.base.with_band(band), self.factor)

    def __repr__(self):
        return f"ScaledOp({self.base!r}, {self.factor})"


def resolvent(M: MonotoneOp, lam: float, x) -> np.ndarray:
    """Evaluate ``(I + lam M)^{-1} x``."""
    if not lam > 0:
        raise ValueError(f"resolvent parameter must be positive, got {lam}")
    return M.resolvent(lam, _check_vec(x, M.dim, "resolvent"))


def yosida(M: MonotoneOp, index: float, x) -> np.ndarray:
    """Yosida approximation ``(x - J_{index M} x) / index``.

    The value lies in ``M(J_{index M} x)`` and the map is ``1/index``-Lipschitz.
    """
    if not index > 0:
        raise ValueError(f"Yosida index must be positive, got {index}")
    x = _check_vec(x, M.dim, "yosida")
    return (x - M.resolvent(index, x)) / index


def diag_scaled_resolvent(M: MonotoneOp, lam: float, e, x) -> np.ndarray:
    """Resolvent of ``lam * diag(e) M`` for a separable M and positive weights e.

    Returns z with ``x in z + lam diag(e) M(z)``.
    """
    if not M.separable:
        raise UnsupportedOperatorError(f"{M!r} is not coordinatewise separable")
    if not lam > 0:
        raise ValueError(f"resolvent parameter must be positive, got {lam}")
    e = _check_vec(e, M.dim, "diag_scaled_resolvent weights")
    if np.any(e <= 0):
        raise ValueError("diagonal weights must be positive")
    return M.coordinate_resolvent(lam * e, _check_vec(x, M.dim, "diag_scaled_resolvent"))


def membership_residual(M: MonotoneOp, point, candidate) -> float:
    """Distance from ``candidate`` to the set ``M(point)`` (inf outside the domain)."""
    return M.membership_residual(point, candidate)
