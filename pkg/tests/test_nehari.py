import csv
import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracnehari.model import CoupledState, Functional, SystemParams, energy_phi, nehari_psi
from fracnehari.nehari import (NonConvergenceError, ProjectionError, SolveOptions,
                               initial_guesses, minimize_on_nehari, project_array,
                               project_to_nehari, ray_root, run_descent, semi_trivial_state,
                               state_flags)
from fracnehari.spectral import Field, GridSpec, SymbolKind

SMALL = GridSpec(1, 512, 80.0)
P10 = SystemParams.two_eq(0.5, 1.0, 1.0, 10.0)


class TestRayRoot:
    @settings(max_examples=200, deadline=None)
    @given(Q=st.floats(1e-6, 1e6), A=st.floats(1e-6, 1e6), B=st.floats(-1e3, 1e3))
    def test_positive_quartic(self, Q, A, B):
        t = ray_root(Q, A, B)
        roots = np.roots([A, B, -Q])
        expected = max(r.real for r in roots if abs(r.imag) < 1e-12)
        assert t > 0
        assert t == pytest.approx(expected, rel=1e-9)

    def test_cubic_only(self):
        assert ray_root(6.0, 0.0, 3.0) == 2.0
        with pytest.raises(ProjectionError):
            ray_root(1.0, 0.0, -1.0)

    def test_negative_quartic_takes_smaller_root(self):
        # Q = A t^2 + B t with A = -1, B = 3, Q = 2: roots 1 and 2
        assert ray_root(2.0, -1.0, 3.0) == pytest.approx(1.0)
        with pytest.raises(ProjectionError):
            ray_root(5.0, -1.0, 3.0)

    def test_zero_state(self):
        with pytest.raises(ProjectionError):
            ray_root(0.0, 1.0, 1.0)


class TestProjection:
    def test_v2_v2_closed_form(self, v2):
        # t solves 20 t^2 + 12 t - 6 = 0 / 2 after the closed-form integrals
        p = SystemParams.two_eq(0.5, 1.0, 1.0, 1.0)
        t, u0 = project_to_nehari(p, CoupledState.of(v2, v2))
        t_exact = (-6 + math.sqrt(156)) / 20
        assert t == pytest.approx(t_exact, abs=1e-3)
        phi_exact = 4 * math.pi * t_exact**2 + 20 * math.pi / 3 * t_exact**4
        assert energy_phi(p, u0).phi == pytest.approx(phi_exact, rel=1e-3)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_lands_on_manifold(self, seed):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(2,) + SMALL.shape) * np.exp(-SMALL.axis() ** 2 / 40)
        _, u = project_to_nehari(P10, CoupledState.from_array(SMALL, X))
        q = energy_phi(P10, u).norm_sq
        assert abs(nehari_psi(P10, u)) <= 1e-10 * q

    def test_zero_state_rejected(self):
        with pytest.raises(ProjectionError):
            project_to_nehari(P10, CoupledState.zeros(SMALL, 2))


class TestOptions:
    def test_round_trip(self):
        o = SolveOptions(tol=1e-9, restarts=3, seed=5)
        assert SolveOptions.from_dict(json.loads(json.dumps(o.to_dict()))) == o

    @pytest.mark.parametrize("kw", [{"tol": 0.0}, {"restarts": 0}, {"backtrack": 1.0}])
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            SolveOptions(**kw)


@pytest.fixture(scope="module")
def solved_small():
    return minimize_on_nehari(P10, initial_guesses(P10, SMALL, 0, 4),
                              SolveOptions(tol=1e-9, restarts=4))


class TestMinimize:
    def test_converges_positive_even(self, solved_small):
        r = solved_small
        assert r.converged and r.residual <= 1e-9
        assert r.positive and r.symmetric and not r.semi_trivial
        assert all(m > 0 for m in r.min_values)

    def test_energy_below_semi_trivial(self, solved_small):
        semi = semi_trivial_state(P10, SMALL)
        assert solved_small.phi < energy_phi(P10, semi).phi

    def test_on_manifold_and_reduced(self, solved_small):
        e = solved_small.energy
        assert abs(e.nehari_psi) <= 1e-10 * e.norm_sq
        assert e.phi == pytest.approx(e.reduced_f, rel=1e-10)

    def test_trace_monotone(self, solved_small):
        phis = np.array([row[0] for row in solved_small.trace])
        assert np.all(np.diff(phis) <= 1e-12 * np.abs(phis[:-1]))

    def test_el_residual_consistent(self, solved_small):
        # small projected residual implies small Psi and small EL residual
        assert solved_small.el_residual <= 1e-6

    def test_trace_csv(self, solved_small):
        rows = list(csv.reader(io.StringIO(solved_small.trace_csv())))
        assert rows[0] == ["iter", "phi", "residual", "t"]
        assert len(rows) == len(solved_small.trace) + 1
        assert float(rows[-1][1]) == solved_small.trace[-1][0]

    def test_json(self, solved_small):
        d = json.loads(solved_small.to_json())
        assert d["converged"] is True and len(d["trace"]) == len(solved_small.trace)

    def test_deterministic(self, solved_small):
        again = minimize_on_nehari(P10, initial_guesses(P10, SMALL, 0, 4),
                                   SolveOptions(tol=1e-9, restarts=4))
        assert again.phi == solved_small.phi
        assert again.restart_index == solved_small.restart_index
        assert np.array_equal(again.state.as_array(), solved_small.state.as_array())

    def test_parallel_matches_serial(self, solved_small):
        par = minimize_on_nehari(P10, initial_guesses(P10, SMALL, 0, 4),
                                 SolveOptions(tol=1e-9, restarts=4, jobs=2))
        assert par.phi == solved_small.phi
        assert par.restart_index == solved_small.restart_index

    def test_semi_trivial_fixed_point(self):
        p = SystemParams.two_eq(0.5, 1.0, 1.0, 0.2)
        semi = semi_trivial_state(p, SMALL)
        r = minimize_on_nehari(p, semi, SolveOptions(tol=1e-9))
        assert r.semi_trivial
        assert r.phi == pytest.approx(energy_phi(p, semi).phi, rel=1e-9)

    def test_non_convergence_carries_best(self):
        with pytest.raises(NonConvergenceError) as exc:
            minimize_on_nehari(P10, initial_guesses(P10, SMALL, 0, 1),
                               SolveOptions(tol=1e-14, max_iters=2))
        assert exc.value.best is not None and not exc.value.best.converged

    def test_collapse_floor(self):
        F = Functional.from_params(P10, SMALL)
        X0 = np.stack([np.exp(-SMALL.axis() ** 2)] * 2)
        with pytest.raises(NonConvergenceError):
            run_descent(F, X0, SolveOptions(max_iters=5), rho_floor=1e12)

    @pytest.mark.parametrize("symbol", list(SymbolKind))
    def test_unpreconditioned_fallback_descends(self, symbol):
        g = SMALL.with_symbol(symbol)
        F = Functional.from_params(P10, g)
        X0 = np.stack([np.exp(-g.axis() ** 2 / 4)] * 2)
        run = run_descent(F, X0, SolveOptions(preconditioned=False, max_iters=50))
        phis = [r[0] for r in run["trace"]]
        assert phis[-1] < phis[0]
        assert all(b <= a * (1 + 1e-12) for a, b in zip(phis, phis[1:]))

    def test_rearrangement_option(self):
        g = SMALL.with_symbol(SymbolKind.SUBORDINATED)
        F = Functional.from_params(P10, g)
        x = g.axis()
        X0 = np.stack([np.exp(-(x - 3) ** 2), np.exp(-(x + 2) ** 2 / 3)])
        run = run_descent(F, X0, SolveOptions(symmetrize_each=5, tol=1e-9))
        assert run["converged"]
        flags = state_flags(F, run["X"])
        assert flags["symmetric"] and flags["positive"]


class TestGuesses:
    def test_family_order_and_determinism(self):
        a = initial_guesses(P10, SMALL, 3, 6)
        b = initial_guesses(P10, SMALL, 3, 6)
        assert len(a) == 6
        for x, y in zip(a, b):
            assert np.array_equal(x.as_array(), y.as_array())
        semi = semi_trivial_state(P10, SMALL).as_array()
        # first guess: eps = 0.1 perturbation of the semi-trivial state
        assert np.array_equal(a[0].as_array()[1], semi[1])
        assert a[0].as_array()[0].max() == pytest.approx(0.1 * np.abs(semi).max())
        # second guess sits on the manifold
        assert abs(nehari_psi(P10, a[1])) <= 1e-10 * energy_phi(P10, a[1]).norm_sq

    def test_count_validated(self):
        with pytest.raises(ValueError):
            initial_guesses(P10, SMALL, 0, 0)
