"""Seeded random problem instances for benchmarking."""
from __future__ import annotations

import numpy as np

from .composite import ResolventProblem, SumResolventProblem
from .linop import LinearMap
from .monotone import BoxIndicatorSubdifferential, L1Subdifferential, MonotoneOp


def _orthonormal(rng, k):
    q, r = np.linalg.qr(rng.standard_normal((k, k)))
    return q * np.sign(np.diag(r))


def controlled_matrix(
    rng, m: int, n: int, sv=(1.0, 3.0), rank: int | None = None, pin: bool = False
) -> np.ndarray:
    """``U diag(s) V^T`` with singular values drawn uniformly from ``sv``.

    ``pin`` places the two ends of ``sv`` among the singular values, fixing
    the condition number; ``rank`` below ``min(m, n)`` zeroes the trailing ones.
    """
    k = min(m, n)
    s = rng.uniform(*sv, size=k)
    if pin and k > 1:
        s[0], s[-1] = sv[1], sv[0]
    if rank is not None:
        s[rank:] = 0.0
    U, V = _orthonormal(rng, m)[:, :k], _orthonormal(rng, n)[:, :k]
    return (U * s) @ V.T


def random_operator(rng, dim: int, kind: str) -> MonotoneOp:
    if kind == "l1":
        return L1Subdifferential(dim)
    if kind == "box":
        return BoxIndicatorSubdifferential(
            dim, -rng.uniform(0.1, 2.0, size=dim), rng.uniform(0.1, 2.0, size=dim)
        )
    raise ValueError(f"unknown random operator kind {kind!r}")


def random_problem(
    rng, m: int, n: int, kind: str = "l1", sv=(1.0, 3.0), rank: int | None = None,
    lam=None, pin: bool = False,
) -> ResolventProblem:
    C = controlled_matrix(rng, m, n, sv, rank, pin)
    lam = 10.0 ** rng.uniform(-2, 1) if lam is None else lam
    return ResolventProblem(LinearMap(C), random_operator(rng, m, kind), lam, 3.0 * rng.standard_normal(n))


def random_sum_problem(rng, m: int, n: int, kinds=("l1", "box"), sv=(1.0, 3.0)) -> SumResolventProblem:
    C = controlled_matrix(rng, m, n, sv)
    lam = 10.0 ** rng.uniform(-2, 1)
    return SumResolventProblem(
        LinearMap(C),
        random_operator(rng, n, kinds[0]),
        random_operator(rng, m, kinds[1]),
        lam,
        3.0 * rng.standard_normal(n),
    )
