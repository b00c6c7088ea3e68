"""Equilibria of set-valued Lur'e systems.

The system ``x' = -f(x) + B lam(t)``, ``lam(t) in -M(C x(t))`` with affine
``f(x) = A x + b`` and ``P B = C^T`` for a symmetric positive definite P has
its equilibria at the zeros of ``P f(x) + C^T M(C x)``. These are the fixed
points of the forward-backward map

    x -> J_{step C^T M C}(x - step P f(x)),

whose backward step is a composite resolvent computed by Algorithm 2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from . import linop
from .composite import ResolventProblem, SolveOptions, solve_algorithm2
from .exceptions import ConvergenceError, DimensionError
from .linop import LinearMap
from .monotone import MonotoneOp
from .oracle import CERT_BAND, banded, feasibility_residual

__all__ = ["LureSystem", "EquilibriumReport", "find_equilibrium", "equilibrium_residual"]


@dataclass(frozen=True, eq=False)
class LureSystem:
    A: np.ndarray
    b: np.ndarray
    B: LinearMap
    C: LinearMap
    P: np.ndarray
    M: MonotoneOp

    def __post_init__(self):
        A = np.array(self.A, dtype=float)
        n = A.shape[0]
        if A.shape != (n, n):
            raise DimensionError(f"A must be square, got {A.shape}")
        b = np.array(self.b, dtype=float)
        if b.shape != (n,):
            raise DimensionError(f"b must have length {n}")
        B = self.B if isinstance(self.B, LinearMap) else LinearMap(self.B)
        C = self.C if isinstance(self.C, LinearMap) else LinearMap(self.C)
        m = C.rows
        if C.cols != n or B.shape != (n, m):
            raise DimensionError(f"need C of shape ({m}, {n}) and B of shape ({n}, {m})")
        if self.M.dim != m:
            raise DimensionError(f"operator dim {self.M.dim} != rows of C ({m})")
        P = np.array(self.P, dtype=float)
        if P.shape != (n, n):
            raise DimensionError(f"P must be {n}x{n}")
        if not np.allclose(P, P.T, rtol=0.0, atol=1e-12):
            raise ValueError("P must be symmetric")
        if np.linalg.eigvalsh(P)[0] <= 0:
            raise ValueError("P must be positive definite")
        mismatch = float(np.linalg.norm(P @ B.entries - C.entries.T))
        if mismatch > 1e-10 * max(1.0, float(np.linalg.norm(C.entries))):
            raise ValueError(f"structural condition P B = C^T violated (||PB - C^T|| = {mismatch:.3g})")
        for arr in (A, b, P):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "P", P)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def f(self, x) -> np.ndarray:
        return self.A @ x + self.b

    @property
    def strong_monotonicity(self) -> float:
        """Smallest eigenvalue of the symmetric part of ``P A``; positive means unique equilibrium."""
        PA = self.P @ self.A
        return float(np.linalg.eigvalsh((PA + PA.T) / 2.0)[0])


@dataclass
class EquilibriumReport:
    x_star: np.ndarray
    outer_iterations: int
    equilibrium_residual: float
    converged: bool
    inner_iterations: int = 0
    strong_monotonicity: float = math.nan


def equilibrium_residual(sys: LureSystem, x, band: float | None = CERT_BAND) -> float:
    """``min_{s in M(Cx)} ||P f(x) + C^T s||``; zero exactly at equilibria."""
    x = np.asarray(x, dtype=float)
    if x.shape != (sys.n,):
        raise DimensionError(f"x must have length {sys.n}")
    Cx = linop.apply(sys.C, x)
    M = banded(sys.M, band, Cx)
    target = -(sys.P @ sys.f(x))
    return feasibility_residual([(sys.C.entries.T, lambda s: M.project_image(Cx, s))], target)


def find_equilibrium(
    sys: LureSystem,
    step: float,
    tol: float = 1e-10,
    max_outer: int = 10_000,
    inner_opts: SolveOptions | None = None,
    x0=None,
    warm_start: bool = True,
) -> EquilibriumReport:
    """Forward-backward iteration until the step is at most ``tol`` and the
    equilibrium residual is at most ``tol``.

    Convergence is guaranteed for strongly monotone ``P f`` and small enough
    ``step``; neither is enforced.
    """
    if not step > 0:
        raise ValueError("step must be positive")
    if inner_opts is None:
        inner_opts = SolveOptions(tol=1e-13)
    inner_opts = replace(inner_opts, certify=False)
    spectrum = None if sys.C.is_zero() else linop.estimate_spectrum(sys.C)
    x = np.zeros(sys.n) if x0 is None else np.array(x0, dtype=float)
    u = None
    inner_total = 0
    residual = math.inf
    converged = False
    k = 0
    for k in range(1, max_outer + 1):
        z = x - step * (sys.P @ sys.f(x))
        inner = solve_algorithm2(
            ResolventProblem(sys.C, sys.M, step, z), inner_opts,
            initial=u if warm_start else None, spectrum=spectrum,
        )
        inner_total += inner.iterations
        if not inner.converged:
            raise ConvergenceError(
                f"inner resolvent solve did not converge at outer iteration {k} "
                f"({inner.iterations} iterations)"
            )
        u = inner.fixed_point
        moved = float(np.linalg.norm(inner.x - x))
        x = inner.x
        if moved <= tol:
            residual = equilibrium_residual(sys, x)
            if residual <= tol:
                converged = True
                break
    else:
        residual = equilibrium_residual(sys, x)
    return EquilibriumReport(
        x_star=x, outer_iterations=k, equilibrium_residual=residual,
        converged=converged, inner_iterations=inner_total,
        strong_monotonicity=sys.strong_monotonicity,
    )
