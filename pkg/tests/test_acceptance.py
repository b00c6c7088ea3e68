"""Exit criteria 1-10. Each test prints one verdict line and asserts it."""
import itertools
import time
from dataclasses import replace

import numpy as np
import pytest

from compres.composite import (
    KMSchedule,
    ResolventProblem,
    SolveOptions,
    SumResolventProblem,
    map_Q,
    mcx_resolvent,
    solve_algorithm1,
    solve_algorithm2,
    solve_algorithm3,
)
from compres.instances import random_operator, random_problem, random_sum_problem
from compres.linop import LinearMap, estimate_spectrum, nonexpansive_bound_holds
from compres.lure import LureSystem, find_equilibrium
from compres.monotone import (
    BoxIndicatorSubdifferential,
    L1Subdifferential,
    LinearMonotoneOp,
    ZeroOp,
    diag_scaled_resolvent,
    membership_residual,
    resolvent,
    soft_threshold,
    yosida,
)
from compres.oracle import admm_quadratic, admm_reference, inclusion_residual, scalar_resolvent_bisection

from conftest import EX_C, EX_STABLE, EX_Y, exact_gamma_norm, random_lure_data

pytestmark = pytest.mark.acceptance

EX_OPTS = SolveOptions(schedule=KMSchedule.constant(0.3), tol=1e-3, max_iter=500)
# Published lambda = 1 outputs (single-parameter scheme).
MCX_TABLE = {
    1e-3: np.array([-0.85, 3.66, -5.01, -1.26, 3.23]),
    1e-4: np.array([0.25, 3.69, -5.76, -1.53, 3.34]),
    1e-5: np.array([0.99, 2.61, -7.20, 0.82, 5.45]),
}


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail, label=None):
        tag = label or ("PASS" if ok else "FAIL")
        with capsys.disabled():
            print(f"\n[criterion {n}] {tag}: {detail}")
        return ok

    return emit


def ex_problem(lam):
    return ResolventProblem(LinearMap(EX_C), L1Subdifferential(5), lam, EX_Y)


def test_criterion_1_spectral_norm(verdict):
    t0 = time.perf_counter()
    spec = estimate_spectrum(LinearMap(EX_C))
    dt = time.perf_counter() - t0
    ok = abs(spec.op_norm - 532.64) <= 0.01 and dt < 0.1
    assert verdict(1, ok, f"||CC^T|| = {spec.op_norm:.6f} (target 532.64 +- 0.01), {dt:.4f} s (< 0.1 s)")


def test_criterion_2_stable_table(verdict):
    t0 = time.perf_counter()
    p = ex_problem(0.01)
    outs = {mu: solve_algorithm2(p, replace(EX_OPTS, mu=mu)).x for mu in (1.0, 0.1, 0.01, 0.001)}
    dt = time.perf_counter() - t0
    ok = all(np.array_equal(np.round(x, 2), EX_STABLE) for x in outs.values()) and dt < 1.0
    shown = "; ".join(f"mu={mu:g}: {np.round(x, 2).tolist()}" for mu, x in outs.items())
    assert verdict(2, ok, f"{shown}; {dt:.3f} s (< 1 s)")


def test_criterion_3_certificates(verdict):
    C = LinearMap(EX_C)
    spec = estimate_spectrum(C)
    certs = [nonexpansive_bound_holds(C, lam * mu, spec)[1] for lam, mu in ((1.0, 1e-2), (0.01, 1.0))]
    ok = all(abs(c - 4.33) <= 0.01 for c in certs)
    assert verdict(3, ok, f"||I - lam mu CC^T|| = {certs[0]:.4f} (lam=1, mu=1e-2), "
                          f"{certs[1]:.4f} (lam=0.01, mu=1); target 4.33 +- 0.01")


def _mcx_outputs():
    C = LinearMap(EX_C)
    return {mu: mcx_resolvent(C, L1Subdifferential(5), mu, EX_Y, EX_OPTS).x for mu in MCX_TABLE}


def test_criterion_4_tier1_instability(verdict):
    outs = _mcx_outputs()
    gaps = {(a, b): float(np.max(np.abs(outs[a] - outs[b]))) for a, b in itertools.combinations(outs, 2)}
    ok = all(g >= 0.5 for g in gaps.values())
    shown = ", ".join(f"|x({a:g}) - x({b:g})|_inf = {g:.3f}" for (a, b), g in gaps.items())
    assert verdict("4 tier 1", ok, f"{shown} (each >= 0.5)")


@pytest.mark.xfail(strict=True, reason="best-effort table match; see the decisions ledger")
def test_criterion_4_tier2_table_entries(verdict):
    outs = _mcx_outputs()
    errs = {mu: float(np.max(np.abs(outs[mu] - MCX_TABLE[mu]))) for mu in MCX_TABLE}
    ok = all(e <= 0.05 for e in errs.values())
    shown = ", ".join(f"mu={mu:g}: got {np.round(outs[mu], 2).tolist()} max err {e:.3f}" for mu, e in errs.items())
    verdict("4 tier 2", ok, f"{shown} (each <= 0.05)", label="PASS" if ok else "MISS (best effort)")
    assert ok


def test_criterion_5_oracle_equivalence(verdict):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2024)
    worst_x = worst_res = 0.0
    failures = 0
    for i in range(50):
        m, n = (int(v) for v in rng.integers(2, 11, size=2))
        p = random_problem(rng, m, n, ("l1", "box")[i % 2])
        r = solve_algorithm2(p, SolveOptions(tol=1e-10))
        ref = admm_reference(p)
        d, res = float(np.linalg.norm(r.x - ref.x_ref)), inclusion_residual(p, r.x)
        worst_x, worst_res = max(worst_x, d), max(worst_res, res)
        failures += not (r.converged and ref.converged and d <= 1e-6 and res <= 1e-6)
    for i in range(50):
        m, n = (int(v) for v in rng.integers(2, 11, size=2))
        kinds = (("l1", "box"), ("box", "l1"), ("l1", "l1"), ("box", "box"))[i % 4]
        p = random_sum_problem(rng, m, n, kinds)
        r = solve_algorithm3(p, SolveOptions(tol=1e-10))
        ref = admm_reference(p)
        d, res = float(np.linalg.norm(r.x - ref.x_ref)), inclusion_residual(p, r.x)
        worst_x, worst_res = max(worst_x, d), max(worst_res, res)
        failures += not (r.converged and ref.converged and d <= 1e-6 and res <= 1e-6)
    dt = time.perf_counter() - t0
    ok = failures == 0 and dt < 30
    assert verdict(5, ok, f"100 instances, {failures} failures, worst ||x - x_ref|| = {worst_x:.2e}, "
                          f"worst inclusion residual = {worst_res:.2e}, {dt:.1f} s (< 30 s)")


def test_criterion_6_nonexpansive_condition(verdict):
    rng = np.random.default_rng(6)
    fwd_worst, rev_min, agree = 0.0, np.inf, True
    for _ in range(100):
        m, n = (int(v) for v in rng.integers(1, 9, size=2))
        A = rng.standard_normal((m, n))
        C = LinearMap(A)
        top = np.linalg.eigvalsh(A @ A.T)[-1]
        spec = estimate_spectrum(C)
        for g in rng.uniform(0.0, 2.0 / top, size=10):
            fwd_worst = max(fwd_worst, exact_gamma_norm(A, g))
            agree &= nonexpansive_bound_holds(C, g * (1 - 1e-9), spec)[0]
        for d in (0.01, 0.1, 1.0):
            g = (2.0 / top) * (1 + d)
            rev_min = min(rev_min, exact_gamma_norm(A, g))
            agree &= not nonexpansive_bound_holds(C, g, spec)[0]
    ok = fwd_worst <= 1 + 1e-10 and rev_min > 1 and agree
    assert verdict(6, ok, f"forward max ||I - gE|| = {fwd_worst:.12f} (<= 1 + 1e-10); reverse min = "
                          f"{rev_min:.6f} (> 1); condition check agrees: {agree}")


def test_criterion_7_linear_rate(verdict):
    rng = np.random.default_rng(7007)
    alpha = 0.5
    worst_excess = -np.inf
    est_margin = np.inf
    for i in range(20):
        m = int(rng.integers(2, 8))
        n = int(rng.integers(m, 11))
        p = random_problem(rng, m, n, ("l1", "box")[i % 2], pin=True)
        opts = SolveOptions(schedule=KMSchedule.constant(alpha), tol=1e-10, record_history=True)
        r = solve_algorithm2(p, opts)
        ustar = solve_algorithm2(p, replace(opts, tol=1e-15, max_iter=200_000, record_history=False)).fixed_point
        q = exact_gamma_norm(p.C.entries, r.gamma)
        assert q < 1
        u = np.zeros(p.C.rows)
        for _ in range(r.iterations):
            before = np.linalg.norm(u - ustar)
            u = (1 - alpha) * u + alpha * map_Q(p, r.parameter, u)
            worst_excess = max(worst_excess, np.linalg.norm(u - ustar) - ((1 - alpha) + alpha * q) * before)
        est_margin = min(est_margin, r.predicted_q + 0.05 - r.contraction_estimate)
    ok = worst_excess <= 1e-10 and est_margin >= 0
    assert verdict(7, ok, f"max per-step excess over ((1-a) + a q) = {worst_excess:.2e} (<= 1e-10); "
                          f"min margin predicted_q + 0.05 - contraction_estimate = {est_margin:.4f} (>= 0)")


def test_criterion_8_reductions(verdict):
    rng = np.random.default_rng(8)
    worst_id = worst_red = 0.0
    one_step = True
    for _ in range(10):
        n = int(rng.integers(2, 8))
        y = 3 * rng.standard_normal(n)
        lam = 10.0 ** rng.uniform(-1, 1)
        I = LinearMap.identity(n)
        plain = soft_threshold(y, lam)
        opts = SolveOptions(tol=1e-13)
        xs = [
            solve_algorithm1(ResolventProblem(I, L1Subdifferential(n), lam, y), opts).x,
            solve_algorithm2(ResolventProblem(I, L1Subdifferential(n), lam, y), opts).x,
            solve_algorithm3(SumResolventProblem(I, ZeroOp(n), L1Subdifferential(n), lam, y), opts).x,
        ]
        worst_id = max(worst_id, max(float(np.max(np.abs(x - plain))) for x in xs))

        p = random_problem(rng, int(rng.integers(2, 6)), n, "box")
        kappa = 1.5 * p.lam * estimate_spectrum(p.C).op_norm
        o = SolveOptions(mu=1.0 / kappa, kappa=kappa, tol=1e-13)
        a3 = solve_algorithm3(SumResolventProblem(p.C, ZeroOp(n), p.M, p.lam, p.y), o).x
        worst_red = max(worst_red, float(np.max(np.abs(a3 - solve_algorithm1(p, o).x))))

        z = ResolventProblem(p.C, ZeroOp(p.C.rows), p.lam, p.y)
        for solve in (solve_algorithm1, solve_algorithm2):
            r = solve(z, SolveOptions())
            one_step &= r.iterations == 1 and np.array_equal(r.x, p.y)
    ok = worst_id <= 1e-10 and worst_red <= 1e-10 and one_step
    assert verdict(8, ok, f"C = I max error {worst_id:.1e}; M1 = 0 vs Algorithm 1 {worst_red:.1e} "
                          f"(both <= 1e-10); M = 0 gives x = y in one iteration: {one_step}")


def test_criterion_9_yosida_and_diagonal_identity(verdict):
    rng = np.random.default_rng(9)
    dim = 4
    A = rng.standard_normal((dim, dim))
    ops = [
        L1Subdifferential(dim),
        BoxIndicatorSubdifferential(dim, -1.0, 1.5),
        LinearMonotoneOp(A @ A.T, rng.standard_normal(dim)),
        ZeroOp(dim),
    ]
    worst_mem = worst_lip = -np.inf
    for M in ops:
        for _ in range(500):
            lam = 10.0 ** rng.uniform(-2, 2)
            x, y = 3 * rng.standard_normal((2, dim))
            mx, my = yosida(M, lam, x), yosida(M, lam, y)
            worst_mem = max(worst_mem, membership_residual(M, resolvent(M, lam, x), mx))
            worst_lip = max(worst_lip, np.linalg.norm(mx - my) - np.linalg.norm(x - y) / lam)
    worst_diag = 0.0
    scalar = L1Subdifferential(1)
    for _ in range(500):
        d = int(rng.integers(1, 6))
        lam = 10.0 ** rng.uniform(-1, 1)
        e = rng.uniform(0.1, 5.0, d)
        x = 3 * rng.standard_normal(d)
        lhs = (x - diag_scaled_resolvent(L1Subdifferential(d), lam, e, x)) / (lam * e)
        z = np.array([scalar_resolvent_bisection(scalar, lam, e[i], x[i]) for i in range(d)])
        worst_diag = max(worst_diag, float(np.max(np.abs(lhs - (x - z) / (lam * e)))))
    ok = worst_mem <= 1e-10 and worst_lip <= 1e-10 and worst_diag <= 1e-8
    assert verdict(9, ok, f"membership {worst_mem:.1e}, Lipschitz excess {worst_lip:.1e} (<= 1e-10, 500 "
                          f"samples per operator); diagonal identity vs bisection {worst_diag:.1e} (<= 1e-8)")


def test_criterion_10_lure(verdict):
    scalar = LureSystem([[1.0]], [-2.0], [[1.0]], [[1.0]], [[1.0]], L1Subdifferential(1))
    x1 = find_equilibrium(scalar, 1.0).x_star[0]
    rng = np.random.default_rng(10)
    worst_res = worst_admm = 0.0
    n_admm = 0
    all_conv = True
    for i in range(10):
        A, b, B, C, P, m, step = random_lure_data(rng, i)
        M = random_operator(rng, m, ("l1", "box")[i % 2])
        rep = find_equilibrium(LureSystem(A, b, B, C, P, M), step)
        all_conv &= rep.converged
        worst_res = max(worst_res, rep.equilibrium_residual)
        if np.allclose(A, A.T) and np.array_equal(P, np.eye(4)):
            n_admm += 1
            worst_admm = max(worst_admm, float(np.linalg.norm(admm_quadratic(A, b, C, M).x_ref - rep.x_star)))
    ok = abs(x1 - 1.0) <= 1e-8 and all_conv and worst_res <= 1e-8 and n_admm > 0 and worst_admm <= 1e-6
    assert verdict(10, ok, f"scalar x* = {x1:.12f}; 10 systems worst residual {worst_res:.1e} (<= 1e-8); "
                           f"ADMM agreement on {n_admm} symmetric systems {worst_admm:.1e} (<= 1e-6)")
