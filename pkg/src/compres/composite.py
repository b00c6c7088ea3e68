"""Resolvents of ``C^T M C`` and ``M1 + C^T M2 C`` by Krasnoselskii-Mann iteration.

Given ``lam > 0`` and ``y``, the resolvent ``x = J_{lam C^T M C}(y)`` solves
``y in x + lam C^T M(C x)``. Writing ``x = y - lam C^T v`` with ``v in M(Cx)``
turns this into a fixed-point problem in the output space of C:

* ``map_N``: ``v -> M_{1/mu}(C y + (I/mu - lam C C^T) v)``, with
  ``x = y - lam C^T v``;
* ``map_Q``: the same map in the variable ``u = v / mu``,
  ``u -> (I - J_{M/mu})(C y + (I - lam mu C C^T) u)``, with
  ``x = y - lam mu C^T u``.

Both are nonexpansive when ``lam * mu <= 2 / ||C||^2``. With ``lam = 1`` the
second one is the single-parameter scheme of Micchelli, Chen and Xu, exposed
here as :func:`mcx_resolvent`.

For the sum ``M1 + C^T M2 C`` the map is
``u -> (M2)_kappa(C J_{lam M1}(y - lam C^T u) + kappa u)`` with
``x = J_{lam M1}(y - lam C^T u)``, nonexpansive when
``lam / kappa <= 2 / ||C||^2``.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence, Union

import numpy as np

from . import linop
from .exceptions import DegenerateOperatorError, DimensionError
from .linop import GramSpectrum, LinearMap
from .monotone import MonotoneOp, yosida

__all__ = [
    "ResolventProblem",
    "SumResolventProblem",
    "KMSchedule",
    "SolveOptions",
    "SolveReport",
    "map_N",
    "map_Q",
    "map_P",
    "solve_algorithm1",
    "solve_algorithm2",
    "solve_algorithm3",
    "mcx_resolvent",
    "auto_parameters",
    "contraction_estimate",
]

log = logging.getLogger(__name__)

AUTO = "auto"
Param = Union[float, str]


def _as_vector(x, n, what):
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.shape[0] != n:
        raise DimensionError(f"{what}: expected a vector of length {n}, got shape {v.shape}")
    return v


@dataclass(frozen=True, eq=False)
class ResolventProblem:
    """Find ``x`` with ``y in x + lam C^T M(C x)``."""

    C: LinearMap
    M: MonotoneOp
    lam: float
    y: np.ndarray

    def __post_init__(self):
        if not isinstance(self.C, LinearMap):
            object.__setattr__(self, "C", LinearMap(self.C))
        if self.M.dim != self.C.rows:
            raise DimensionError(f"operator dim {self.M.dim} != rows of C ({self.C.rows})")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        y = _as_vector(self.y, self.C.cols, "y").copy()
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True, eq=False)
class SumResolventProblem:
    """Find ``x`` with ``y in x + lam M1(x) + lam C^T M2(C x)``."""

    C: LinearMap
    M1: MonotoneOp
    M2: MonotoneOp
    lam: float
    y: np.ndarray

    def __post_init__(self):
        if not isinstance(self.C, LinearMap):
            object.__setattr__(self, "C", LinearMap(self.C))
        if self.M1.dim != self.C.cols:
            raise DimensionError(f"M1 dim {self.M1.dim} != cols of C ({self.C.cols})")
        if self.M2.dim != self.C.rows:
            raise DimensionError(f"M2 dim {self.M2.dim} != rows of C ({self.C.rows})")
        if not self.lam > 0:
            raise ValueError(f"lambda must be positive, got {self.lam}")
        y = _as_vector(self.y, self.C.cols, "y").copy()
        y.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "lam", float(self.lam))


@dataclass(frozen=True)
class KMSchedule:
    """Relaxation parameters ``alpha_k``; the last value repeats forever."""

    values: tuple = (0.5,)

    def __post_init__(self):
        vals = tuple(float(a) for a in self.values)
        if not vals:
            raise ValueError("a schedule needs at least one value")
        for a in vals:
            if not 0.0 < a < 1.0:
                raise ValueError(f"relaxation parameters must lie in (0, 1), got {a}")
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, alpha: float) -> "KMSchedule":
        return cls((alpha,))

    @classmethod
    def sequence(cls, values: Sequence[float]) -> "KMSchedule":
        return cls(tuple(values))

    @property
    def kind(self) -> str:
        return "constant" if len(self.values) == 1 else "sequence"

    def alpha(self, k: int) -> float:
        return self.values[min(k, len(self.values) - 1)]

    @property
    def inf_alpha(self) -> float:
        return min(self.values)


@dataclass(frozen=True)
class SolveOptions:
    mu: Param = AUTO
    kappa: Param = AUTO
    schedule: KMSchedule = field(default_factory=KMSchedule)
    tol: float = 1e-8
    max_iter: int = 100_000
    record_history: bool = False
    certify: bool = False

    def __post_init__(self):
        for name in ("mu", "kappa"):
            v = getattr(self, name)
            if v != AUTO and not (isinstance(v, (int, float)) and v > 0):
                raise ValueError(f"{name} must be positive or 'auto', got {v!r}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be positive")


@dataclass
class SolveReport:
    x: np.ndarray
    fixed_point: np.ndarray
    iterations: int
    converged: bool
    condition_certificate: float
    condition_holds: bool
    gamma: float
    parameter: float
    step_history: list = field(default_factory=list)
    inclusion_residual: float = math.nan
    contraction_estimate: float = math.nan
    predicted_q: float = math.nan


# -- fixed-point maps --------------------------------------------------------


def _q_step(Cy, C, M, lam, mu, u):
    w = Cy + u - (lam * mu) * linop.gram_apply(C, u)
    return w - M.resolvent(1.0 / mu, w)


def _n_step(Cy, C, M, lam, mu, v):
    w = Cy + v / mu - lam * linop.gram_apply(C, v)
    return yosida(M, 1.0 / mu, w)


def _p_step(C, M1, M2, lam, kappa, y, u):
    inner = M1.resolvent(lam, y - lam * linop.adjoint_apply(C, u))
    return yosida(M2, kappa, linop.apply(C, inner) + kappa * u)


def _positive(name, value):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")


def map_N(p: ResolventProblem, mu: float, v) -> np.ndarray:
    """``M_{1/mu}(C y + (I/mu - lam C C^T) v)``."""
    _positive("mu", mu)
    v = _as_vector(v, p.C.rows, "map_N")
    return _n_step(linop.apply(p.C, p.y), p.C, p.M, p.lam, mu, v)


def map_Q(p: ResolventProblem, mu: float, u) -> np.ndarray:
    """``(I - J_{M/mu})(C y + (I - lam mu C C^T) u)``; ``map_N(mu u) = mu map_Q(u)``."""
    _positive("mu", mu)
    u = _as_vector(u, p.C.rows, "map_Q")
    return _q_step(linop.apply(p.C, p.y), p.C, p.M, p.lam, mu, u)


def map_P(p: SumResolventProblem, kappa: float, u) -> np.ndarray:
    """``(M2)_kappa(C J_{lam M1}(y - lam C^T u) + kappa u)``."""
    _positive("kappa", kappa)
    u = _as_vector(u, p.C.rows, "map_P")
    return _p_step(p.C, p.M1, p.M2, p.lam, kappa, p.y, u)


# -- parameters --------------------------------------------------------------


def auto_parameters(C: LinearMap, lam: float, spectrum: GramSpectrum) -> tuple[float, float]:
    """Pick ``mu`` from the extremal eigenvalues of ``E = C C^T``.

    With ``c = min_eigen > 0`` the choice ``lam mu = c / ||E||^2`` gives
    ``||I - lam mu E|| <= sqrt(1 - c^2/||E||^2) < 1`` and hence a linear rate.
    Otherwise ``lam mu = 1/||E||``, the middle of the admissible interval,
    and no rate is predicted (NaN).
    """
    _positive("lambda", lam)
    if C.is_zero() or spectrum.op_norm <= 0:
        raise DegenerateOperatorError("no parameters for the zero map")
    c, top = spectrum.min_eigen, spectrum.op_norm
    if c > 1e-10:
        mu = c / (lam * top * top)
        q = math.sqrt(max(1.0 - (c / top) ** 2, 0.0))
        return mu, q
    return 1.0 / (lam * top), math.nan


def contraction_estimate(steps: Sequence[float], window: int = 20) -> float:
    """Median ratio of consecutive step norms over the last ``window`` ratios.

    NaN with fewer than ``window + 1`` steps or when the median is not below 1.
    """
    if len(steps) < window + 1:
        return math.nan
    tail = np.asarray(steps[-(window + 1):], dtype=float)
    prev, nxt = tail[:-1], tail[1:]
    ok = prev > 0
    if not np.any(ok):
        return math.nan
    est = float(np.median(nxt[ok] / prev[ok]))
    return est if est < 1.0 else math.nan


def _spectrum(C, spectrum):
    return spectrum if spectrum is not None else linop.estimate_spectrum(C)


# -- Krasnoselskii-Mann driver ------------------------------------------------


def _km(T: Callable, z0: np.ndarray, opts: SolveOptions):
    z = z0
    steps = []
    converged = False
    k = 0
    for k in range(1, opts.max_iter + 1):
        a = opts.schedule.alpha(k - 1)
        z_new = (1.0 - a) * z + a * T(z)
        step = float(np.linalg.norm(z_new - z))
        steps.append(step)
        z = z_new
        if step <= opts.tol:
            converged = True
            break
    return z, k, converged, steps


def _finish(report: SolveReport, steps, opts, problem):
    report.contraction_estimate = contraction_estimate(steps)
    if opts.record_history:
        report.step_history = steps
    if opts.certify:
        from . import oracle

        report.inclusion_residual = oracle.inclusion_residual(problem, report.x)
    return report


def _check_condition(C, gamma, spec, label):
    holds, cert = linop.nonexpansive_bound_holds(C, gamma, spec)
    if not holds:
        log.warning(
            "%s = %.6g lies outside [0, 2/||C||^2] = [0, %.6g]; ||I - %s E|| = %.6g",
            label, gamma, 2.0 / spec.op_norm, label, cert,
        )
    return holds, cert


def _degenerate(x, z, opts, problem):
    report = SolveReport(
        x=x, fixed_point=z, iterations=0, converged=True,
        condition_certificate=math.nan, condition_holds=True,
        gamma=math.nan, parameter=math.nan,
    )
    return _finish(report, [], opts, problem)


def _resolve_mu(p, opts, spectrum):
    spec = _spectrum(p.C, spectrum)
    predicted = math.nan
    if opts.mu == AUTO:
        mu, predicted = auto_parameters(p.C, p.lam, spec)
    else:
        mu = float(opts.mu)
    return spec, mu, predicted


def solve_algorithm1(
    p: ResolventProblem,
    opts: SolveOptions = SolveOptions(),
    initial=None,
    spectrum: GramSpectrum | None = None,
) -> SolveReport:
    """KM iteration ``v <- (1 - a_k) v + a_k N(v)`` from ``v_0 = 0``.

    Returns ``x = y - lam C^T v``. A violated step condition is logged and
    reported in ``condition_certificate``; the run still proceeds.
    """
    if p.C.is_zero():
        return _degenerate(p.y.copy(), np.zeros(p.C.rows), opts, p)
    spec, mu, predicted = _resolve_mu(p, opts, spectrum)
    holds, cert = _check_condition(p.C, p.lam * mu, spec, "lam*mu")
    Cy = linop.apply(p.C, p.y)
    v0 = np.zeros(p.C.rows) if initial is None else _as_vector(initial, p.C.rows, "initial").copy()
    v, k, conv, steps = _km(lambda v: _n_step(Cy, p.C, p.M, p.lam, mu, v), v0, opts)
    x = p.y - p.lam * linop.adjoint_apply(p.C, v)
    report = SolveReport(
        x=x, fixed_point=v, iterations=k, converged=conv,
        condition_certificate=cert, condition_holds=holds,
        gamma=p.lam * mu, parameter=mu, predicted_q=predicted,
    )
    return _finish(report, steps, opts, p)


def solve_algorithm2(
    p: ResolventProblem,
    opts: SolveOptions = SolveOptions(),
    initial=None,
    spectrum: GramSpectrum | None = None,
) -> SolveReport:
    """KM iteration ``u <- (1 - a_k) u + a_k Q(u)`` from ``u_0 = 0`` (or ``initial``).

    Returns ``x = y - lam mu C^T u``.
    """
    if p.C.is_zero():
        return _degenerate(p.y.copy(), np.zeros(p.C.rows), opts, p)
    spec, mu, predicted = _resolve_mu(p, opts, spectrum)
    holds, cert = _check_condition(p.C, p.lam * mu, spec, "lam*mu")
    Cy = linop.apply(p.C, p.y)
    u0 = np.zeros(p.C.rows) if initial is None else _as_vector(initial, p.C.rows, "initial").copy()
    u, k, conv, steps = _km(lambda u: _q_step(Cy, p.C, p.M, p.lam, mu, u), u0, opts)
    x = p.y - (p.lam * mu) * linop.adjoint_apply(p.C, u)
    report = SolveReport(
        x=x, fixed_point=u, iterations=k, converged=conv,
        condition_certificate=cert, condition_holds=holds,
        gamma=p.lam * mu, parameter=mu, predicted_q=predicted,
    )
    return _finish(report, steps, opts, p)


def mcx_resolvent(
    C, M: MonotoneOp, mu: float, y, opts: SolveOptions = SolveOptions(), **kwargs
) -> SolveReport:
    """Single-parameter scheme: Algorithm 2 with ``lam = 1``, computing ``J_{C^T M C} y``."""
    return solve_algorithm2(ResolventProblem(C, M, 1.0, y), replace(opts, mu=mu), **kwargs)


def solve_algorithm3(
    p: SumResolventProblem,
    opts: SolveOptions = SolveOptions(),
    initial=None,
    spectrum: GramSpectrum | None = None,
) -> SolveReport:
    """KM iteration on ``map_P`` from ``u_0 = 0``; ``x = J_{lam M1}(y - lam C^T u)``.

    With ``kappa='auto'`` the ratio ``lam/kappa`` takes the value that
    :func:`auto_parameters` assigns to ``lam*mu``.
    """
    if p.C.is_zero():
        return _degenerate(p.M1.resolvent(p.lam, p.y), np.zeros(p.C.rows), opts, p)
    spec = _spectrum(p.C, spectrum)
    predicted = math.nan
    if opts.kappa == AUTO:
        mu, predicted = auto_parameters(p.C, p.lam, spec)
        kappa = 1.0 / mu
    else:
        kappa = float(opts.kappa)
    holds, cert = _check_condition(p.C, p.lam / kappa, spec, "lam/kappa")
    u0 = np.zeros(p.C.rows) if initial is None else _as_vector(initial, p.C.rows, "initial").copy()
    u, k, conv, steps = _km(
        lambda u: _p_step(p.C, p.M1, p.M2, p.lam, kappa, p.y, u), u0, opts
    )
    x = p.M1.resolvent(p.lam, p.y - p.lam * linop.adjoint_apply(p.C, u))
    report = SolveReport(
        x=x, fixed_point=u, iterations=k, converged=conv,
        condition_certificate=cert, condition_holds=holds,
        gamma=p.lam / kappa, parameter=kappa, predicted_q=predicted,
    )
    return _finish(report, steps, opts, p)
