"""Independent checks for resolvent computations.

Nothing here uses the fixed-point maps of :mod:`compres.composite`:

* :func:`admm_reference` solves the equivalent strongly convex problem
  ``min 1/2 ||x - y||^2 + lam f(C x)`` (plus ``lam f1(x)`` for sums) by ADMM
  with the split ``z = C x``;
* :func:`inclusion_residual` measures how far a candidate ``x`` is from
  satisfying ``(y - x)/lam in C^T M(C x)``, by a projected-gradient
  feasibility solve over the image set ``M(C x)``;
* :func:`scalar_resolvent_bisection` solves ``x in z + lam e M(z)`` on the
  real line by bisection on the graph of M.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .composite import ResolventProblem, SumResolventProblem
from .exceptions import ConvergenceError, DimensionError, UnsupportedOperatorError
from .monotone import MonotoneOp

__all__ = [
    "OracleReport",
    "admm_reference",
    "admm_quadratic",
    "inclusion_residual",
    "feasibility_residual",
    "scalar_resolvent_bisection",
]

ADMM_MAX_ITER = 1_000_000
PG_ITERATIONS = 10_000
# Relative kink band for certificates: iterative outputs sit within solver
# accuracy of a kink, not within the 1e-9 band membership_residual uses.
CERT_BAND = 1e-7


@dataclass
class OracleReport:
    x_ref: np.ndarray
    primal_residual: float
    dual_residual: float
    iterations: int
    converged: bool


def _require_subdifferential(*ops: MonotoneOp):
    for M in ops:
        if not M.is_subdifferential:
            raise UnsupportedOperatorError(
                f"{M!r} is not a subdifferential catalog operator; "
                "certify with inclusion_residual instead"
            )


def _admm(H, h, blocks, rho, tol, max_iter):
    """Minimize ``1/2 x'Hx - h'x + sum_j w_j f_j(K_j x)``.

    ``blocks`` holds ``(K_j, w_j, M_j)`` with ``M_j = d f_j``; the prox of
    ``w_j f_j / rho`` is the resolvent ``J_{(w_j/rho) M_j}``.
    """
    n = H.shape[0]
    lhs = H + rho * sum(K.T @ K for K, _, _ in blocks)
    factor = sla.cho_factor(lhs)
    z = [np.zeros(K.shape[0]) for K, _, _ in blocks]
    w = [np.zeros(K.shape[0]) for K, _, _ in blocks]
    x = np.zeros(n)
    r = s = math.inf
    for it in range(1, max_iter + 1):
        rhs = h + rho * sum(K.T @ (zj - wj) for (K, _, _), zj, wj in zip(blocks, z, w))
        x = sla.cho_solve(factor, rhs)
        r2 = 0.0
        dual = np.zeros(n)
        for j, (K, wt, M) in enumerate(blocks):
            Kx = K @ x
            z_new = M.resolvent(wt / rho, Kx + w[j])
            w[j] = w[j] + Kx - z_new
            r2 += float(np.sum((Kx - z_new) ** 2))
            dual += K.T @ (z_new - z[j])
            z[j] = z_new
        r = math.sqrt(r2)
        s = rho * float(np.linalg.norm(dual))
        if r <= tol and s <= tol:
            return OracleReport(x, r, s, it, True)
    return OracleReport(x, r, s, max_iter, False)


def admm_reference(
    p: ResolventProblem | SumResolventProblem,
    tol: float = 1e-10,
    rho: float = 1.0,
    max_iter: int = ADMM_MAX_ITER,
) -> OracleReport:
    """Reference resolvent by ADMM on ``min 1/2||x - y||^2 + lam f(Cx) [+ lam f1(x)]``.

    Only operators flagged ``is_subdifferential`` are accepted.
    """
    C = p.C.entries
    n = p.C.cols
    if isinstance(p, SumResolventProblem):
        _require_subdifferential(p.M1, p.M2)
        blocks = [(np.eye(n), p.lam, p.M1), (C, p.lam, p.M2)]
    else:
        _require_subdifferential(p.M)
        blocks = [(C, p.lam, p.M)]
    return _admm(np.eye(n), np.asarray(p.y, float), blocks, rho, tol, max_iter)


def admm_quadratic(
    A, b, C, M: MonotoneOp, tol: float = 1e-10, rho: float = 1.0, max_iter: int = ADMM_MAX_ITER
) -> OracleReport:
    """Minimize ``1/2 x'Ax + b'x + f(Cx)`` for symmetric positive definite A and ``M = df``."""
    _require_subdifferential(M)
    A = np.asarray(A, float)
    if not np.allclose(A, A.T):
        raise ValueError("admm_quadratic needs a symmetric A")
    C = C.entries if hasattr(C, "entries") else np.asarray(C, float)
    return _admm(A, -np.asarray(b, float), [(C, 1.0, M)], rho, tol, max_iter)


# -- inclusion certificates -----------------------------------------------------


def _box_seed(G, t, proj):
    # Least-squares seed, re-solved over the coordinates the projection leaves free.
    s = proj(np.linalg.lstsq(G, t, rcond=None)[0])
    big = 1e6 * (1.0 + np.abs(s))
    free = proj(s + big) != proj(s - big)
    if np.any(free) and not np.all(free):
        rhs = t - G[:, ~free] @ s[~free]
        s = s.copy()
        s[free] = np.linalg.lstsq(G[:, free], rhs, rcond=None)[0]
        s = proj(s)
    return s


def feasibility_residual(blocks, target, iterations: int = PG_ITERATIONS) -> float:
    """``min ||sum_i G_i s_i - target||`` over ``s_i in S_i``.

    ``blocks`` is a list of ``(G_i, project_i)`` where ``project_i(s)`` is the
    Euclidean projection onto ``S_i`` (None if ``S_i`` is empty). Solved by
    projected gradient with step ``1/||G||^2`` from a clamped least-squares seed.
    """
    target = np.asarray(target, float)
    G = np.hstack([g for g, _ in blocks])
    sizes = [g.shape[1] for g, _ in blocks]
    cuts = np.cumsum(sizes)[:-1]

    def proj(s):
        parts = []
        for (_, pr), piece in zip(blocks, np.split(s, cuts)):
            out = pr(piece)
            if out is None:
                return None
            parts.append(out)
        return np.concatenate(parts)

    if proj(np.zeros(G.shape[1])) is None:
        return math.inf
    L = float(np.linalg.norm(G, 2)) ** 2
    s = _box_seed(G, target, proj)
    best = float(np.linalg.norm(G @ s - target))
    if L == 0.0 or best == 0.0:
        return best
    step = 1.0 / L
    for _ in range(iterations):
        grad = G.T @ (G @ s - target)
        s_new = proj(s - step * grad)
        moved = float(np.linalg.norm(s_new - s))
        s = s_new
        best = min(best, float(np.linalg.norm(G @ s - target)))
        if moved <= 1e-16 * (1.0 + float(np.linalg.norm(s))):
            break
    return best


def banded(M: MonotoneOp, band: float | None, point) -> MonotoneOp:
    if band is None:
        return M
    return M.with_band(band * max(1.0, float(np.max(np.abs(point)))))


def inclusion_residual(
    p: ResolventProblem | SumResolventProblem, x, band: float | None = CERT_BAND
) -> float:
    """Distance certificate for ``x = J(y)``; zero iff the defining inclusion holds.

    Non-finite candidates get ``inf``.

    For ``C^T M C`` this is ``min_{s in M(Cx)} ||C^T s - (y - x)/lam||``; for
    sums an extra block ``s1 in M1(x)`` enters with identity weight.

    ``band`` is the kink-detection band relative to ``max(1, |point|_inf)``;
    None keeps each operator's own band.
    """
    x = np.asarray(x, float)
    if x.ndim != 1 or x.shape[0] != p.C.cols:
        raise DimensionError(f"candidate must have length {p.C.cols}")
    if not np.all(np.isfinite(x)):
        return math.inf
    Ct = p.C.entries.T
    Cx = p.C.entries @ x
    target = (p.y - x) / p.lam
    if isinstance(p, SumResolventProblem):
        M1, M2 = banded(p.M1, band, x), banded(p.M2, band, Cx)
        blocks = [
            (np.eye(p.C.cols), lambda s: M1.project_image(x, s)),
            (Ct, lambda s: M2.project_image(Cx, s)),
        ]
    else:
        M = banded(p.M, band, Cx)
        blocks = [(Ct, lambda s: M.project_image(Cx, s))]
    return feasibility_residual(blocks, target)


# -- scalar bisection -------------------------------------------------------------


def scalar_resolvent_bisection(M: MonotoneOp, lam: float, e: float, x: float) -> float:
    """Solve ``x in z + lam e M(z)`` for a one-dimensional M by bisection.

    Uses only the graph of M (through its image-set projection), never its
    resolvent.
    """
    if M.dim != 1:
        raise DimensionError("scalar bisection needs a one-dimensional operator")
    if not (lam > 0 and e > 0):
        raise ValueError("lam and e must be positive")
    exact = M.with_band(0.0)
    t = lam * e
    big = 1e300

    def side(z):
        # -1: z below the solution, +1: above, 0: z solves the inclusion.
        pt = np.array([z])
        lo = exact.project_image(pt, np.array([-big]))
        hi = exact.project_image(pt, np.array([big]))
        if lo is None:
            raise UnsupportedOperatorError("bisection needs a full-domain operator")
        if x < z + t * lo[0]:
            return 1
        if x > z + t * hi[0]:
            return -1
        return 0

    lo, hi = x - 1.0, x + 1.0
    while side(lo) > 0:
        lo = x - 2.0 * (x - lo)
        if abs(lo) > 1e8:
            raise ConvergenceError("bisection could not bracket the solution")
    while side(hi) < 0:
        hi = x + 2.0 * (hi - x)
        if abs(hi) > 1e8:
            raise ConvergenceError("bisection could not bracket the solution")
    if side(lo) == 0:
        return lo
    if side(hi) == 0:
        return hi
    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            return mid
        sgn = side(mid)
        if sgn == 0:
            return mid
        if sgn > 0:
            hi = mid
        else:
            lo = mid
