"""JSON descriptors for operators, problems, options and Lur'e systems.

Matrices and vectors are given inline as (nested) arrays or as a reference
``{"csv": "relative/or/absolute/path.csv"}`` resolved against the directory
of the config file.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .composite import KMSchedule, ResolventProblem, SolveOptions, SumResolventProblem
from .linop import LinearMap, read_matrix_csv, read_vector_csv
from .lure import LureSystem
from .monotone import (
    BoxIndicatorSubdifferential,
    L1Subdifferential,
    LinearMonotoneOp,
    MonotoneOp,
    ScaledOp,
    ZeroOp,
)


class ConfigError(ValueError):
    pass


def load_json(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read ({exc.strerror})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return data


def _resolve(base: Path | None, ref: str) -> Path:
    p = Path(ref)
    return p if p.is_absolute() or base is None else base / p


def matrix(value, base: Path | None = None) -> np.ndarray:
    if isinstance(value, dict) and "csv" in value:
        return read_matrix_csv(_resolve(base, value["csv"]))
    try:
        m = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"not a numeric matrix: {exc}") from None
    if m.ndim == 1:
        m = m[None, :]
    if m.ndim != 2:
        raise ConfigError(f"expected a 2-d matrix, got {m.ndim} dimensions")
    return m


def vector(value, base: Path | None = None) -> np.ndarray:
    if isinstance(value, dict) and "csv" in value:
        return read_vector_csv(_resolve(base, value["csv"]))
    try:
        v = np.array(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"not a numeric vector: {exc}") from None
    if v.ndim == 0:
        v = v[None]
    if v.ndim != 1:
        raise ConfigError("expected a flat vector")
    return v


def _bound(value, base):
    if value is None:
        return None
    if isinstance(value, (int, float, str)):
        return float(value)
    return vector(value, base)


def operator(desc: dict, base: Path | None = None) -> MonotoneOp:
    """Build an operator from ``{"type": "l1"|"box"|"linear"|"zero", "dim": n, ...}``.

    An optional ``"scale": c > 0`` wraps the result as ``c * M``.
    """
    if not isinstance(desc, dict) or "type" not in desc:
        raise ConfigError("operator descriptor needs a 'type'")
    kind = desc["type"]
    try:
        if kind == "linear":
            A = matrix(desc["A"], base)
            b = vector(desc["b"], base) if "b" in desc else None
            op = LinearMonotoneOp(A, b)
            if "dim" in desc and int(desc["dim"]) != op.dim:
                raise ConfigError(f"linear operator: dim {desc['dim']} != size of A ({op.dim})")
        else:
            dim = int(desc["dim"])
            if kind == "l1":
                op = L1Subdifferential(dim)
            elif kind == "zero":
                op = ZeroOp(dim)
            elif kind == "box":
                op = BoxIndicatorSubdifferential(
                    dim, _bound(desc.get("lower"), base), _bound(desc.get("upper"), base)
                )
            else:
                raise ConfigError(f"unknown operator type {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"{kind} operator descriptor is missing {exc}") from None
    if "scale" in desc:
        op = ScaledOp(op, float(desc["scale"]))
    return op


def problem(desc: dict, base: Path | None = None):
    """ResolventProblem, or SumResolventProblem when ``M1``/``M2`` are given."""
    try:
        C = LinearMap(matrix(desc["C"], base))
        lam = float(desc["lambda"])
        y = vector(desc["y"], base)
        if "M1" in desc or "M2" in desc:
            return SumResolventProblem(
                C, operator(desc["M1"], base), operator(desc["M2"], base), lam, y
            )
        return ResolventProblem(C, operator(desc["M"], base), lam, y)
    except KeyError as exc:
        raise ConfigError(f"problem descriptor is missing {exc}") from None


def options(desc: dict | None, **overrides) -> SolveOptions:
    desc = dict(desc or {})
    kw = {}
    for name in ("mu", "kappa"):
        if name in desc:
            v = desc[name]
            kw[name] = v if v == "auto" else float(v)
    if "alpha" in desc:
        a = desc["alpha"]
        kw["schedule"] = KMSchedule.sequence(a) if isinstance(a, list) else KMSchedule.constant(a)
    if "tol" in desc:
        kw["tol"] = float(desc["tol"])
    if "max_iter" in desc:
        kw["max_iter"] = int(desc["max_iter"])
    if "record_history" in desc:
        kw["record_history"] = bool(desc["record_history"])
    if "certify" in desc:
        kw["certify"] = bool(desc["certify"])
    kw.update({k: v for k, v in overrides.items() if v is not None})
    return SolveOptions(**kw)


def lure_system(desc: dict, base: Path | None = None) -> LureSystem:
    try:
        A = matrix(desc["A"], base)
        C = matrix(desc["C"], base)
        P = desc.get("P", "auto-identity")
        P = np.eye(A.shape[0]) if P == "auto-identity" else matrix(P, base)
        B = matrix(desc["B"], base) if "B" in desc else np.linalg.solve(P, C.T)
        return LureSystem(A, vector(desc["b"], base), B, C, P, operator(desc["M"], base))
    except KeyError as exc:
        raise ConfigError(f"Lur'e descriptor is missing {exc}") from None
