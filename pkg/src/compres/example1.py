"""The 5x5 l1 example: four parameter tables for two values of lambda."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import linop
from .composite import KMSchedule, ResolventProblem, SolveOptions, solve_algorithm2
from .linop import LinearMap
from .monotone import L1Subdifferential

C = np.array(
    [
        [1, 3, 7, 0, 8],
        [2, 4, 5, 8, 7],
        [7, 9, 6, 0, 1],
        [2, 0, 1, 4, 7],
        [2, 5, 8, 3, 8],
    ],
    dtype=float,
)
Y = np.array([2.0, 4.0, -5.0, 3.0, 9.0])
ALPHA = 0.3
TOL = 1e-3
MAX_ITER = 500
GRID = (
    (1.0, (1e-2, 1e-3, 1e-4, 1e-5)),
    (0.01, (1.0, 1e-1, 1e-2, 1e-3)),
)
# Published output of the stable (lambda = 0.01) runs.
STABLE_X = np.array([1.86, 3.79, -5.27, 2.85, 8.69])


@dataclass
class Row:
    lam: float
    mu: float
    certificate: float
    iterations: int
    converged: bool
    x: np.ndarray


def options() -> SolveOptions:
    return SolveOptions(schedule=KMSchedule.constant(ALPHA), tol=TOL, max_iter=MAX_ITER)


def run() -> list[Row]:
    Cmap = LinearMap(C)
    spec = linop.estimate_spectrum(Cmap)
    rows = []
    for lam, mus in GRID:
        for mu in mus:
            opts = replace(options(), mu=mu)
            r = solve_algorithm2(ResolventProblem(Cmap, L1Subdifferential(5), lam, Y), opts, spectrum=spec)
            rows.append(Row(lam, mu, r.condition_certificate, r.iterations, r.converged, r.x))
    return rows


def stable_rows_ok(rows: list[Row]) -> bool:
    """True iff the lambda = 0.01 outputs agree to 2 decimals with each other and the published vector."""
    shown = [np.round(r.x, 2) for r in rows if r.lam == 0.01]
    return all(np.allclose(s, STABLE_X, rtol=0.0, atol=1e-9) for s in shown)


def report(rows: list[Row]) -> str:
    lines = ["lambda,mu,certificate,iterations,converged,x1,x2,x3,x4,x5"]
    for r in rows:
        xs = ",".join(f"{v:.2f}" for v in r.x)
        lines.append(
            f"{r.lam:g},{r.mu:g},{r.certificate:.2f},{r.iterations},{str(r.converged).lower()},{xs}"
        )
    return "\n".join(lines) + "\n"
