"""Acceptance criteria 1 to 11.

Each test records one ``PASS``/``FAIL`` line with the worst observed value
and its tolerance; the lines are printed in the terminal summary.
"""

import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from fracnehari.checks import run_checks
from fracnehari.experiments import (verify_n_system, verify_theorem_ground_state_beta_large,
                                    verify_theorem_lambda2_large)
from fracnehari.model import CoupledState, SystemParams, energy_phi, gradient_phi, nehari_psi
from fracnehari.nehari import project_to_nehari, semi_trivial_state
from fracnehari.scalar_gs import (bo_soliton, cubic_soliton, kdv_soliton, moment_identity_check,
                                  solve_scalar_u, solve_scalar_v)
from fracnehari.spectral import Field, GridSpec, integral_power
from fracnehari.spectrum import (IndeterminateClassificationError, Verdict, classify_semitrivial,
                                 dense_threshold, lambda_threshold)
from fracnehari.scalar_gs import quadratic_ground_state

STD = GridSpec(1, 8192, 200.0)
# int V^r for V = 2/(1+x^2)
V_MOMENTS = {2: 2 * math.pi, 3: 3 * math.pi, 4: 5 * math.pi}


def record(num, name, value, tol, passed):
    line = f"criterion {num}: {'PASS' if passed else 'FAIL'} {name} value={value:.3e} tol={tol:.1e}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def rel_linf(a, b):
    return float(np.abs(a - b).max() / np.abs(b).max())


def random_smooth(params, grid, rng):
    x = grid.axis()
    comps = []
    for _ in range(params.num_components):
        f = np.zeros(grid.shape)
        for _ in range(3):
            f += rng.uniform(-1, 2) * np.exp(-(x - rng.uniform(-3, 3)) ** 2 / rng.uniform(0.8, 3) ** 2)
        comps.append(Field(grid, f))
    return CoupledState(tuple(comps))


def test_criterion_1_scalar_half():
    t0 = time.perf_counter()
    V = solve_scalar_v(0.5, 1.0, STD)
    wall = time.perf_counter() - t0
    err = rel_linf(V.values, bo_soliton(STD.axis()))
    ok = record(1, "bo_profile_linf_rel", err, 1e-3, err <= 1e-3)
    ok &= record(1, "runtime_s", wall, 30.0, wall <= 30.0)
    assert ok


def test_criterion_2_scalar_local():
    g = GridSpec(1, 1024, 60.0)
    x = g.axis()
    ev = rel_linf(solve_scalar_v(1.0, 1.0, g).values, kdv_soliton(x))
    eu = rel_linf(solve_scalar_u(1.0, 1.0, g).values, cubic_soliton(x))
    ok = record(2, "sech2_quadratic_linf_rel", ev, 1e-4, ev <= 1e-4)
    ok &= record(2, "sech_cubic_linf_rel", eu, 1e-4, eu <= 1e-4)
    assert ok


def test_criterion_3_semi_trivial_energy():
    p = SystemParams.two_eq(0.5, 1.0, 1.0, 0.0)
    semi = semi_trivial_state(p, STD)
    phi = energy_phi(p, semi).phi
    e1 = abs(phi - 2 * math.pi) / (2 * math.pi)
    cubic = integral_power(semi[1], 3) / 12
    e2 = abs(phi - cubic) / abs(phi)
    ok = record(3, "phi_v2_vs_2pi", e1, 1e-3, e1 <= 1e-3)
    ok &= record(3, "phi_v2_vs_cubic_moment", e2, 1e-10, e2 <= 1e-10)
    assert ok


def test_criterion_4_moment_identity(V):
    worst_closed = worst_interp = 0.0
    for lam2 in (0.5, 1.0, 2.0, 4.0):
        target = GridSpec(1, 6144, STD.box_length / lam2)
        for r in (2, 3, 4):
            lhs, _ = moment_identity_check(V, lam2, 0.5, r)
            closed = 2.0**r * lam2 ** (r - 1) * V_MOMENTS[r]
            worst_closed = max(worst_closed, abs(lhs - closed) / closed)
            li, ri = moment_identity_check(V, lam2, 0.5, r, target=target)
            worst_interp = max(worst_interp, abs(li - ri) / ri)
    ok = record(4, "moments_vs_closed_form", worst_closed, 1e-3, worst_closed <= 1e-3)
    ok &= record(4, "moments_trig_interpolation_same_V", worst_interp, 1e-6, worst_interp <= 1e-6)
    assert ok


def test_criterion_5_projection(v2):
    g = GridSpec(1, 256, 40.0)
    rng = np.random.default_rng(5)
    variants = [SystemParams.two_eq(0.5, 1.0, 1.5, 2.0),
                SystemParams.star(0.6, 1.0, (1.2, 0.8), (3.0, 0.5)),
                SystemParams.two_nlfs_fkdv(0.7, 1.0, 1.3, 0.9, 0.4, 2.0, 1.1)]
    worst = 0.0
    for i in range(1000):
        p = variants[i % 3]
        # positive data keeps the cubic part of the ray polynomial signed
        st = random_smooth(p, g, rng)
        st = CoupledState(tuple(Field(g, np.abs(f.values)) for f in st))
        _, u = project_to_nehari(p, st)
        worst = max(worst, abs(nehari_psi(p, u)) / energy_phi(p, u).norm_sq)
    ok = record(5, "psi_over_norm_1000_states", worst, 1e-10, worst <= 1e-10)
    p = SystemParams.two_eq(0.5, 1.0, 1.0, 1.0)
    t, _ = project_to_nehari(p, CoupledState.of(v2, v2))
    dt = abs(t - (-6 + math.sqrt(156)) / 20)
    ok &= record(5, "t_for_v2_v2", dt, 1e-3, dt <= 1e-3)
    assert ok


def test_criterion_6_gradient():
    g = GridSpec(1, 128, 30.0)
    rng = np.random.default_rng(6)
    variants = [SystemParams.two_eq(0.5, 1.0, 1.5, 2.0),
                SystemParams.star(0.6, 1.0, (1.2, 0.8, 1.0), (3.0, 0.5, 1.5)),
                SystemParams.two_nlfs_fkdv(0.7, 1.0, 1.3, 0.9, 0.4, 2.0, 1.1)]
    eps = 1e-5
    worst = 0.0
    for i in range(100):
        p = variants[i % 3]
        u, h = random_smooth(p, g, rng), random_smooth(p, g, rng)
        fd = (energy_phi(p, u + eps * h).phi - energy_phi(p, u - eps * h).phi) / (2 * eps)
        dd = gradient_phi(p, u).dot(h)
        worst = max(worst, abs(fd - dd) / max(abs(dd), 1e-12))
    assert record(6, "directional_derivative_vs_fd", worst, 1e-6, worst <= 1e-6)


def test_criterion_7_threshold():
    g = GridSpec(1, 256, 60.0)
    v2c = quadratic_ground_state(0.5, 1.0, g)
    ok = True
    worst = 0.0
    for lam1 in (0.5, 1.0, 2.0):
        it = lambda_threshold(0.5, lam1, v2c).Lambda
        mu, _ = dense_threshold(0.5, lam1, v2c)
        worst = max(worst, abs(it - mu) / mu)
    ok &= record(7, "inverse_iteration_vs_dense", worst, 1e-6, worst <= 1e-6)
    thr = lambda_threshold(0.5, 1.0, v2c)
    p = SystemParams.two_eq(0.5, 1.0, 1.0, 0.0)
    betas = np.linspace(0.5, 1.5, 41) * thr.Lambda
    verdicts = []
    for b in betas:
        try:
            verdicts.append(classify_semitrivial(p, b, grid=g, v2=v2c, threshold=thr).verdict)
        except IndeterminateClassificationError:
            verdicts.append(None)
    flips = [0.5 * (betas[i] + betas[i + 1]) for i in range(len(betas) - 1)
             if verdicts[i] is Verdict.STRICT_MIN and verdicts[i + 1] is not Verdict.STRICT_MIN]
    off = abs(flips[0] - thr.Lambda) / thr.Lambda if len(flips) == 1 else math.inf
    ok &= record(7, "sign_flip_offset_rel", off, 2e-2, off <= 2e-2)
    assert ok


def test_criterion_8_beta_large():
    t0 = time.perf_counter()
    rep = verify_theorem_ground_state_beta_large(SystemParams.two_eq(0.5, 1.0, 1.0, 10.0))
    wall = time.perf_counter() - t0
    checks = {c["name"]: c["passed"] for c in rep.checks}
    shape_ok = all(checks.get(k) for k in ("converged", "components_positive", "even",
                                           "not_semi_trivial"))
    ok = record(8, "converged_positive_even", float(not shape_ok), 0.0, shape_ok)
    el = rep.values["el_residual"]
    ok &= record(8, "el_residual", el, 1e-6, el <= 1e-6)
    phi = rep.values["phi_ground"]
    ok &= record(8, "phi_minus_2pi", phi - 2 * math.pi, 0.0, phi < 2 * math.pi)
    ok &= record(8, "runtime_s", wall, 300.0, wall <= 300.0)
    assert ok


def test_criterion_9_lambda2(v2):
    p = SystemParams.two_eq(0.5, 1.0, 1.0, 1.0)
    _, u0 = project_to_nehari(p, CoupledState.of(v2, v2))
    t = (-6 + math.sqrt(156)) / 20
    derived = 4 * math.pi * t**2 + 20 * math.pi / 3 * t**4
    phi = energy_phi(p, u0).phi
    e = abs(phi - derived) / derived
    ok = record(9, "phi_u0_vs_derived_1.5553", e, 1e-3, e <= 1e-3 and phi < 2 * math.pi)
    rep = verify_theorem_lambda2_large(p)
    worst = max(abs(r["difference_direct"] - r["difference_rescaled"])
                / abs(r["difference_rescaled"]) for r in rep.values["sweep"])
    ok &= record(9, "direct_vs_rescaled_sweep", worst, 1e-6, worst <= 1e-6)
    assert ok


def test_criterion_10_n_system():
    p = SystemParams.star(0.5, 1.0, (1.0, 1.0), (10.0, 10.0))
    rep = verify_n_system(p)
    single = rep.values["phi_semi_single"]
    total = rep.values["phi_semi_all"]
    e = abs(total - sum(single)) / abs(total)
    ok = record(10, "semi_trivial_energy_sum", e, 1e-10, e <= 1e-10)
    checks = {c["name"]: c["passed"] for c in rep.checks}
    pos = bool(checks.get("converged") and checks.get("components_positive"))
    ok &= record(10, "three_component_positive", float(not pos), 0.0, pos)
    margin = min(single) - rep.values["phi_ground"]
    ok &= record(10, "margin_below_semi_trivial", margin, 0.0, margin > 0)
    assert ok


def test_criterion_11_invariants():
    results = run_checks(0)
    failed = [r.name for r in results if not r.passed]
    assert record(11, "invariant_suite_failures", float(len(failed)), 0.0, not failed), failed
