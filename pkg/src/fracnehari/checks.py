"""Operator and solver invariant suite run by ``fracnehari check``."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .model import Functional, SystemParams
from .nehari import SolveOptions, project_array, run_descent
from .spectral import (Field, GridSpec, SymbolKind, _spectral_quadratic, frac_laplacian,
                       h_s_seminorm_sq, inner, integral_power, multiplier,
                       symmetric_decreasing_rearrangement)

__all__ = ["CheckResult", "run_checks", "CHECKS"]


@dataclass
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return f"{tag} {self.name}: worst={self.worst:.3e} tol={self.tolerance:.1e}"


def _grids():
    return [GridSpec(1, 128, 40.0), GridSpec(2, 32, 20.0),
            GridSpec(1, 128, 40.0, SymbolKind.SUBORDINATED)]


def _smooth(grid: GridSpec, rng, signed=True) -> np.ndarray:
    r = grid.radius()
    f = np.zeros(grid.shape)
    for _ in range(4):
        c = rng.uniform(-grid.box_length / 8, grid.box_length / 8, size=grid.n)
        d2 = sum((x - ci) ** 2 for x, ci in zip(grid.coords(), c))
        w = rng.uniform(1.0, 4.0)
        f += (rng.normal() if signed else rng.uniform(0.2, 1.0)) * np.exp(-d2 / (2 * w * w))
    return f + 0 * r


def check_plane_waves(rng) -> float:
    worst = 0.0
    for g in _grids():
        for s in (0.3, 0.5, 1.0):
            m = multiplier(g, s)
            for _ in range(5):
                k = tuple(int(v) for v in rng.integers(-g.points_per_dim // 2 + 1,
                                                      g.points_per_dim // 2, size=g.n))
                phase = sum(2 * math.pi * ki * x / g.box_length for ki, x in zip(k, g.coords()))
                u = np.cos(phase)
                mk = m[tuple(ki % g.points_per_dim for ki in k)]
                out = frac_laplacian(Field(g, u), s).values
                worst = max(worst, float(np.abs(out - mk * u).max()) / max(mk, 1e-300)
                            if mk > 0 else float(np.abs(out).max()))
    return worst


def check_self_adjoint(rng) -> float:
    worst = 0.0
    for g in _grids():
        for s in (0.3, 0.75):
            u, v = Field(g, rng.normal(size=g.shape)), Field(g, rng.normal(size=g.shape))
            a = inner(frac_laplacian(u, s), v)
            b = inner(u, frac_laplacian(v, s))
            worst = max(worst, abs(a - b) / max(abs(a), abs(b), 1e-300))
    return worst


def check_semigroup(rng) -> float:
    worst = 0.0
    for g in _grids():
        for a, b in ((0.2, 0.3), (0.25, 0.75)):
            u = Field(g, _smooth(g, rng))
            lhs = frac_laplacian(frac_laplacian(u, a), b).values
            rhs = frac_laplacian(u, a + b).values
            worst = max(worst, float(np.abs(lhs - rhs).max() / np.abs(rhs).max()))
    return worst


def check_stroock_varopoulos(rng) -> float:
    """Largest violation of h_s(|u|) <= h_s(u), absolute, subordinated symbol."""
    worst = 0.0
    for n, N, L in ((1, 128, 40.0), (2, 32, 20.0)):
        g = GridSpec(n, N, L, SymbolKind.SUBORDINATED)
        for s in (0.3, 0.5, 0.9):
            for _ in range(5):
                u = Field(g, rng.normal(size=g.shape))
                worst = max(worst, h_s_seminorm_sq(abs(u), s) - h_s_seminorm_sq(u, s))
    return max(worst, 0.0)


def check_parseval(rng) -> float:
    worst = 0.0
    for g in _grids():
        w = np.ones(g.shape)
        w.flat[0] = 0.0
        u = rng.normal(size=g.shape)
        lhs = _spectral_quadratic(u, w, g)
        mean = u.mean()
        rhs = integral_power(Field(g, u), 2) - mean**2 * g.box_length**g.n
        worst = max(worst, abs(lhs - rhs) / abs(rhs))
    return worst


def check_rearrangement(rng) -> float:
    """L^p norms preserved exactly; seminorm not increased (relative slack)."""
    worst = 0.0
    g = GridSpec(1, 256, 40.0, SymbolKind.SUBORDINATED)
    for _ in range(5):
        u = Field(g, _smooth(g, rng, signed=False))
        r = symmetric_decreasing_rearrangement(u)
        for p in (2, 3, 4):
            a, b = integral_power(abs(u), p), integral_power(r, p)
            worst = max(worst, abs(a - b) / abs(a))
        for s in (0.3, 0.5):
            inc = h_s_seminorm_sq(r, s) - h_s_seminorm_sq(u, s)
            worst = max(worst, inc / h_s_seminorm_sq(u, s))
    return max(worst, 0.0)


def _small_system(symbol=SymbolKind.CONTINUUM):
    g = GridSpec(1, 256, 60.0, symbol)
    p = SystemParams.two_eq(0.5, 1.0, 1.0, 10.0)
    return g, Functional.from_params(p, g), p


def check_monotone_descent(rng) -> float:
    """Largest relative rise of Phi along accepted iterates."""
    worst = 0.0
    g, F, _ = _small_system()
    r2 = g.radius() ** 2
    for _ in range(3):
        X0 = np.stack([rng.uniform(0.5, 2) * np.exp(-r2 / rng.uniform(1, 8)) for _ in range(2)])
        run = run_descent(F, X0, SolveOptions(tol=1e-8, max_iters=400))
        phis = np.array([t[0] for t in run["trace"]])
        rise = np.diff(phis) / np.abs(phis[:-1])
        worst = max(worst, float(rise.max(initial=0.0)))
    return max(worst, 0.0)


def check_abs_and_rearrangement_steps(rng) -> float:
    """Rise of Phi caused by the |.| and rearrangement steps (subordinated symbol)."""
    from .nehari import _rearrange_component
    worst = 0.0
    g, F, _ = _small_system(SymbolKind.SUBORDINATED)
    r2 = g.radius() ** 2
    for _ in range(5):
        X = np.stack([rng.normal() * np.exp(-(g.axis() - 3) ** 2 / 4)
                      + 0.3 * rng.normal() * np.exp(-r2 / 20),
                      np.exp(-(g.axis() + 2) ** 2 / rng.uniform(2, 8))])
        _, X = project_array(F, X)
        J = F.phi(X)
        Ja = F.phi(project_array(F, np.abs(X))[1])
        Y = np.stack([_rearrange_component(x) for x in np.abs(X)])
        Jr = F.phi(project_array(F, Y)[1])
        worst = max(worst, (Ja - J) / abs(J), (Jr - Ja) / abs(Ja))
    return max(worst, 0.0)


def check_projection(rng) -> float:
    worst = 0.0
    g, F, _ = _small_system()
    for _ in range(50):
        X = rng.normal(size=(2,) + g.shape) * np.exp(-g.radius() ** 2 / 50)
        _, Xp = project_array(F, X)
        worst = max(worst, abs(F.psi(Xp)) / float(F.norms_sq(Xp).sum()))
    return worst


def check_determinism(rng) -> float:
    g, F, _ = _small_system()
    r2 = g.radius() ** 2
    X0 = np.stack([np.exp(-r2 / 3), np.exp(-r2 / 5)])
    a = run_descent(F, X0, SolveOptions(tol=1e-8, max_iters=300))
    b = run_descent(F, X0, SolveOptions(tol=1e-8, max_iters=300))
    same = a["phi"] == b["phi"] and np.array_equal(a["X"], b["X"]) and a["trace"] == b["trace"]
    return 0.0 if same else 1.0


CHECKS: dict[str, tuple[Callable, float]] = {
    "plane_wave_eigenfunctions": (check_plane_waves, 1e-12),
    "self_adjointness": (check_self_adjoint, 1e-11),
    "semigroup": (check_semigroup, 1e-11),
    "stroock_varopoulos_subordinated": (check_stroock_varopoulos, 1e-10),
    "parseval": (check_parseval, 1e-12),
    "rearrangement": (check_rearrangement, 1e-12),
    "nehari_projection": (check_projection, 1e-10),
    "monotone_descent": (check_monotone_descent, 1e-12),
    "abs_step_descent": (check_abs_and_rearrangement_steps, 1e-10),
    "determinism": (check_determinism, 0.0),
}


def run_checks(seed: int = 0, names=None) -> list[CheckResult]:
    out = []
    for name, (fn, tol) in CHECKS.items():
        if names and name not in names:
            continue
        worst = float(fn(np.random.default_rng(seed)))
        out.append(CheckResult(name, worst <= tol, worst, tol))
    return out
