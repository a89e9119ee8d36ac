"""Scalar ground states, their rescalings and closed-form oracles.

Two scalar problems appear as building blocks of the systems:

    (-Delta)^s v + lam v = c v^2      (quadratic, c = 1 or 1/2)
    (-Delta)^s u + lam u = c u^3      (cubic)

Both are solved by the Nehari descent engine of :mod:`fracnehari.nehari`
specialised to one component.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import os
import warnings
from dataclasses import replace
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .model import Functional, SystemParams, Variant
from .nehari import NonConvergenceError, SolveOptions, run_descent
from .spectral import (Field, GridSpec, ParameterDomainError, SymbolKind, even_part,
                       integral_power)

log = logging.getLogger(__name__)

__all__ = [
    "solve_scalar",
    "solve_scalar_v",
    "solve_scalar_u",
    "quadratic_ground_state",
    "rescale_v2",
    "moment_identity_check",
    "scalar_residual",
    "bo_soliton",
    "bo_soliton_frac_laplacian",
    "kdv_soliton",
    "cubic_soliton",
    "reference_norm_sq",
    "cache_dir",
    "TruncationWarning",
]

SCALAR_OPTIONS = SolveOptions(tol=1e-10, max_iters=20000, enforce_positivity=False)


class TruncationWarning(UserWarning):
    """A dilation needs values of the profile outside the sampled box."""


# ---- closed forms ----------------------------------------------------------

def bo_soliton(x):
    """2 / (1 + x^2): solves |D| v + v = v^2 on the line."""
    return 2.0 / (1.0 + x * x)


def bo_soliton_frac_laplacian(x):
    """|D| applied to 2/(1+x^2), via the Hilbert transform 2x/(1+x^2)."""
    return 2.0 * (1.0 - x * x) / (1.0 + x * x) ** 2


def kdv_soliton(x):
    """(3/2) sech^2(x/2): solves -v'' + v = v^2."""
    return 1.5 / np.cosh(0.5 * x) ** 2


def cubic_soliton(x):
    """sqrt(2) sech(x): solves -u'' + u = u^3."""
    return math.sqrt(2.0) / np.cosh(x)


# ---- solver ----------------------------------------------------------------

def _check(s, n):
    if not (n / 4 < s <= 1):
        raise ParameterDomainError(f"s must lie in (n/4, 1] = ({n / 4}, 1], got {s}")


def _initial_profile(grid: GridSpec, s: float, lam: float, rng=None) -> np.ndarray:
    r2 = grid.radius() ** 2
    w = lam ** (-1.0 / (2 * s))
    if rng is None:
        return 1.0 / (1.0 + r2 / (w * w))
    # positive, radial, randomly shaped
    out = np.zeros(grid.shape)
    for _ in range(rng.integers(1, 4)):
        width = w * rng.uniform(0.3, 3.0)
        out += rng.uniform(0.2, 2.0) * np.exp(-r2 / (2 * width * width))
    return out


def scalar_residual(v: Field, s: float, lam: float, power: int = 2, coeff: float = 1.0) -> float:
    """L^2 norm of (-Delta)^s v + lam v - coeff v^power."""
    F = Functional.scalar(s, lam, v.grid, power, coeff)
    G = F.grad_phi(v.values[None])
    return math.sqrt(F.l2_dot(G, G))


def solve_scalar(s: float, lam: float, grid: GridSpec, opts: SolveOptions | None = None,
                 power: int = 2, coeff: float = 1.0, init: Field | None = None) -> Field:
    """Positive radial solution of (-Delta)^s w + lam w = coeff w^power.

    Minimizes the scalar energy on its Nehari manifold.  With
    ``opts.restarts > 1`` further random positive radial starts are tried
    and the lowest-energy converged profile is returned.
    """
    _check(s, grid.n)
    if not lam > 0:
        raise ParameterDomainError("lambda must be positive")
    opts = opts or SCALAR_OPTIONS
    F = Functional.scalar(s, lam, grid, power, coeff)
    rng = np.random.default_rng(opts.seed)
    starts = [init.values if init is not None else _initial_profile(grid, s, lam)]
    for _ in range(opts.restarts - 1):
        starts.append(_initial_profile(grid, s, lam, rng))
    best = None
    for X0 in starts:
        run = run_descent(F, X0[None], opts)
        run["X"] = np.abs(run["X"]) if power == 3 else run["X"]
        if best is None or (run["converged"] and (not best["converged"]
                                                  or run["phi"] < best["phi"] - 1e-12)):
            best = run
    if not best["converged"]:
        raise NonConvergenceError(
            f"scalar solve did not converge (best residual {best['residual']:.3e})", best=best)
    return even_part(Field(grid, best["X"][0]))


def solve_scalar_v(s: float, lam: float, grid: GridSpec, opts: SolveOptions | None = None,
                   coeff: float = 1.0, init: Field | None = None) -> Field:
    """Ground state of (-Delta)^s v + lam v = coeff v^2 (coeff 1 gives V, 1/2 gives V_2)."""
    return solve_scalar(s, lam, grid, opts, power=2, coeff=coeff, init=init)


def solve_scalar_u(s: float, lam: float, grid: GridSpec, opts: SolveOptions | None = None,
                   coeff: float = 1.0, init: Field | None = None) -> Field:
    """Ground state of (-Delta)^s u + lam u = coeff u^3."""
    return solve_scalar(s, lam, grid, opts, power=3, coeff=coeff, init=init)


# ---- cache -----------------------------------------------------------------

def cache_dir() -> Path:
    env = os.environ.get("NEHARI_CACHE_DIR")
    if env:
        return Path(env)
    return Path(os.environ.get("XDG_CACHE_HOME", Path.home() / ".cache")) / "fracnehari"


def _cache_key(s, n, lam, coeff, power, grid: GridSpec) -> str:
    key = {"s": float(s), "n": int(n), "lambda": float(lam), "c": float(coeff),
           "power": int(power), "L": grid.box_length, "N": grid.points_per_dim,
           "symbol": grid.symbol_kind.value}
    return hashlib.sha256(json.dumps(key, sort_keys=True).encode()).hexdigest()[:32]


def quadratic_ground_state(s: float, lam: float, grid: GridSpec, coeff: float = 0.5,
                           opts: SolveOptions | None = None, cache: bool | str | Path | None = None,
                           allow_local: bool = True) -> Field:
    """V_lam solving (-Delta)^s v + lam v = coeff v^2, optionally cached on disk.

    ``cache`` may be True (use :func:`cache_dir`) or a directory.  Cache hits
    are accepted only if their residual is still below the solver tolerance.
    """
    from .storage import FieldFormatError, load_field, save_field

    opts = opts or SCALAR_OPTIONS
    path = None
    if cache:
        root = cache_dir() if cache is True else Path(cache)
        root.mkdir(parents=True, exist_ok=True)
        path = root / f"{_cache_key(s, grid.n, lam, coeff, 2, grid)}.fld"
        if path.exists():
            try:
                f, _ = load_field(path)
                # residual relative to ||v||, as in the solver
                res = scalar_residual(f, s, lam, 2, coeff) / math.sqrt(
                    integral_power(f, 2))
                if f.grid == grid and res <= 10 * opts.tol:
                    return f
                log.info("discarding stale cache entry %s (res=%.2e)", path, res)
            except (FieldFormatError, OSError, ValueError) as exc:
                log.info("unreadable cache entry %s: %s", path, exc)
    v = solve_scalar(s, lam, grid, opts, power=2, coeff=coeff)
    if path is not None:
        save_field(path, v, s=s, extra={"lambda": lam, "coeff": coeff, "power": 2})
    return v


# ---- rescaling -------------------------------------------------------------

def _periodic_sinc(theta: np.ndarray, N: int) -> np.ndarray:
    """Cardinal function of trigonometric interpolation on N (even) points."""
    half = 0.5 * theta
    sn = np.sin(half)
    small = np.abs(sn) < 1e-14
    out = np.empty_like(theta)
    with np.errstate(divide="ignore", invalid="ignore"):
        out[~small] = np.sin(N * half[~small]) * np.cos(half[~small]) / (N * sn[~small])
    # limit at every multiple of 2 pi is 1 for even N
    out[small] = 1.0
    return out


def _interp_matrix(x_src: np.ndarray, L: float, y: np.ndarray, chunk: int = 512):
    N = x_src.size
    for start in range(0, y.size, chunk):
        yy = y[start:start + chunk]
        theta = 2 * np.pi * (yy[:, None] - x_src[None, :]) / L
        yield start, _periodic_sinc(theta, N)


def _interp_axis(values: np.ndarray, axis: int, x_src: np.ndarray, L: float, y: np.ndarray):
    moved = np.moveaxis(values, axis, 0)
    out = np.empty((y.size,) + moved.shape[1:])
    flat = moved.reshape(moved.shape[0], -1)
    for start, M in _interp_matrix(x_src, L, y):
        out[start:start + M.shape[0]] = (M @ flat).reshape((M.shape[0],) + moved.shape[1:])
    return np.moveaxis(out, 0, axis)


def rescale_v2(V: Field, lambda2: float, s: float, target: GridSpec | None = None,
               mass_tol: float = 1e-6) -> Field:
    """V_2(x) = 2 lambda2 V(lambda2^{1/(2s)} x) sampled on ``target``.

    The default target is the source grid with its box shrunk by the
    dilation factor, on which the samples are exact.  For any other target
    the dilated profile is evaluated by trigonometric interpolation; points
    whose dilated argument leaves the source box use the algebraic tail
    V ~ |x|^{-(n+2s)} continued from the box edge, and a
    :class:`TruncationWarning` is raised when those points carry more than
    ``mass_tol`` of the L^2 mass.
    """
    a = lambda2 ** (1.0 / (2 * s))
    src = V.grid
    if target is None:
        target = src.with_box(src.box_length / a)
    if target.n != src.n:
        raise ValueError("source and target grids differ in dimension")
    scale = 2.0 * lambda2
    if (target.points_per_dim == src.points_per_dim
            and math.isclose(target.box_length * a, src.box_length, rel_tol=1e-13)):
        return Field(target, scale * V.values)
    x_src = src.axis()
    L = src.box_length
    y = a * target.axis()
    vals = V.values
    for ax in range(src.n):
        vals = _interp_axis(vals, ax, x_src, L, y)
    # points outside the source box
    coords = [a * c for c in target.coords()]
    outside = np.zeros(target.shape, dtype=bool)
    for c in coords:
        outside |= (c < -0.5 * L) | (c >= 0.5 * L)
    if np.any(outside):
        rho = np.sqrt(sum(c * c for c in coords))
        edge_idx = [src.points_per_dim // 2] * src.n
        edge_idx[0] = 0
        v_edge = float(V.values[tuple(edge_idx)])
        tail = v_edge * (0.5 * L / rho[outside]) ** (src.n + 2 * s)
        vals = np.array(vals)
        vals[outside] = tail
        frac = float(np.sum(tail**2) / max(np.sum(vals**2), 1e-300))
        if frac > mass_tol:
            warnings.warn(
                f"dilation by {a:.4g} places {frac:.2e} of the mass outside the source box",
                TruncationWarning, stacklevel=2)
    return Field(target, scale * vals)


def moment_identity_check(V: Field, lambda2: float, s: float, r: int,
                          target: GridSpec | None = None) -> tuple[float, float]:
    """Both sides of int V_2^r = 2^r lambda2^{r - n/(2s)} int V^r."""
    n = V.grid.n
    lhs = integral_power(rescale_v2(V, lambda2, s, target), r)
    rhs = 2.0**r * lambda2 ** (r - n / (2 * s)) * integral_power(V, r)
    return lhs, rhs


def reference_norm_sq(params: SystemParams) -> float:
    """Rough size of ||V_2||^2 = 1/2 int V_2^3 used for collapse detection."""
    F_even = {0} if params.variant is not Variant.TWO_NLFS_FKDV else {0, 1}
    lams = [lam for j, lam in enumerate(params.lambdas) if j not in F_even]
    q = params.n / (2 * params.s)
    # int V^3 is 3 pi at s = 1/2, n = 1; the constant only sets a floor
    return min(0.5 * 8 * lam ** (3 - q) * 3 * math.pi for lam in lams)
