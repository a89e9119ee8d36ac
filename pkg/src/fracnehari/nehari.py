"""Projection onto the Nehari manifold and constrained minimization of Phi.

The engine minimizes the ray-maximal energy J(u) = Phi(t(u) u), where t(u)
places u on the manifold.  At a point of the manifold the gradient of J is
the gradient of Phi, so a preconditioned gradient step followed by
re-projection is a descent method for Phi restricted to the manifold.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .model import CoupledState, EnergyBreakdown, Functional, SystemParams, Variant
from .spectral import GridSpec, _distance_order, reflect

log = logging.getLogger(__name__)

__all__ = [
    "SolveOptions",
    "SolveResult",
    "ProjectionError",
    "NonConvergenceError",
    "project_to_nehari",
    "project_array",
    "ray_root",
    "minimize_on_nehari",
    "run_descent",
    "initial_guesses",
    "semi_trivial_state",
    "state_flags",
]


# accepted energy increase, relative, once steps are below double precision
ROUNDOFF = 1e-14


class ProjectionError(ArithmeticError):
    """The ray through the state never meets the Nehari manifold."""


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


@dataclass(frozen=True)
class SolveOptions:
    tol: float = 1e-8
    max_iters: int = 5000
    restarts: int = 1
    initial_step: float = 1.0
    backtrack: float = 0.5
    armijo: float = 1e-4
    max_step: float = 8.0
    enforce_positivity: bool = True
    symmetrize_each: int = 0
    seed: int = 0
    preconditioned: bool = True
    jobs: int = 1

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "SolveOptions":
        return cls(**d)


@dataclass
class SolveResult:
    state: CoupledState
    energy: EnergyBreakdown
    residual: float
    el_residual: float
    converged: bool
    iterations: int
    trace: list[tuple[float, float, float]] = field(default_factory=list)
    positive: bool = False
    symmetric: bool = False
    semi_trivial: bool = False
    restart_index: int = 0
    min_values: tuple[float, ...] = ()
    tail_mass: float = 0.0

    @property
    def phi(self) -> float:
        return self.energy.phi

    def summary(self) -> dict:
        return {
            "phi": self.energy.phi,
            "residual": self.residual,
            "el_residual": self.el_residual,
            "converged": self.converged,
            "iterations": self.iterations,
            "positive": self.positive,
            "symmetric": self.symmetric,
            "semi_trivial": self.semi_trivial,
            "restart_index": self.restart_index,
            "min_values": list(self.min_values),
            "tail_mass": self.tail_mass,
            "energy": self.energy.to_dict(),
        }

    def to_json(self) -> str:
        d = self.summary()
        d["trace"] = [list(r) for r in self.trace]
        return json.dumps(d, sort_keys=True)

    def trace_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["iter", "phi", "residual", "t"])
        for i, (phi, res, t) in enumerate(self.trace):
            w.writerow([i, repr(phi), repr(res), repr(t)])
        return buf.getvalue()


def ray_root(Q: float, A: float, B: float) -> float:
    """Positive root t of Q = A t^2 + B t.

    A > 0 has exactly one positive root.  A < 0 (possible only for the
    mixed-quartic variant) takes the smaller positive root, where Phi is
    maximal along the ray.
    """
    if not Q > 0:
        raise ProjectionError("zero state cannot be projected")
    if A > 0:
        disc = B * B + 4 * A * Q
        # stable form of (-B + sqrt(disc)) / (2A)
        if B >= 0:
            return 2 * Q / (B + math.sqrt(disc))
        return (-B + math.sqrt(disc)) / (2 * A)
    if A == 0:
        if B > 0:
            return Q / B
        raise ProjectionError("ray misses the Nehari manifold (A = 0, B <= 0)")
    disc = B * B + 4 * A * Q
    if B <= 0 or disc < 0:
        raise ProjectionError("ray misses the Nehari manifold (A < 0)")
    return 2 * Q / (B + math.sqrt(disc))


def project_array(F: Functional, X: np.ndarray) -> tuple[float, np.ndarray]:
    Q, A, B = F.ray_coefficients(X)
    t = ray_root(Q, A, B)
    return t, t * X


def project_to_nehari(params: SystemParams, state: CoupledState) -> tuple[float, CoupledState]:
    F = Functional.from_params(params, state.grid)
    t, X = project_array(F, F.check(state.as_array()))
    return t, CoupledState.from_array(state.grid, X)


def _rearrange_component(x: np.ndarray) -> np.ndarray:
    vals = np.sort(np.abs(x))[::-1]
    out = np.empty_like(vals)
    out[_distance_order(x.shape[0])] = vals
    return out


def state_flags(F: Functional, X: np.ndarray, tol_sym: float = 1e-8) -> dict:
    """Positivity, evenness, semi-triviality and far-field mass of a state."""
    mins = tuple(float(x.min()) for x in X)
    maxs = [float(np.abs(x).max()) for x in X]
    peak = max(maxs) if maxs else 0.0
    # roundoff floor for components whose true tails underflow
    positive = all(mn > -1e-12 * peak for mn in mins) and all(m > 0 for m in maxs)
    symmetric = all(
        float(np.abs(x - reflect(x)).max()) <= tol_sym * max(peak, 1e-300) for x in X)
    l2 = np.sqrt(F._dv * np.sum(X.reshape(F.m, -1) ** 2, axis=1))
    semi = bool(np.any(l2 <= 1e-6 * l2.max())) if F.m > 1 else False
    half = 0.45 * F.grid.box_length
    outside = np.zeros(F.grid.shape, dtype=bool)
    for c in F.grid.coords():
        outside |= np.abs(c) > half
    tot = float(np.sum(X**2))
    tail = float(np.sum(X[:, outside] ** 2) / tot) if tot > 0 else 0.0
    return {"positive": positive, "symmetric": symmetric, "semi_trivial": semi,
            "min_values": mins, "tail_mass": tail}


def _residuals(F: Functional, X: np.ndarray):
    G = F.grad_phi(X)
    Gp = F.grad_psi(X)
    gg = F.l2_dot(Gp, Gp)
    eta = F.l2_dot(G, Gp) / gg if gg > 0 else 0.0
    R = G - eta * Gp
    xnorm = math.sqrt(F.l2_dot(X, X))
    res = math.sqrt(F.l2_dot(R, R)) / xnorm
    el = math.sqrt(F.l2_dot(G, G))
    return G, res, el


def run_descent(F: Functional, X0: np.ndarray, opts: SolveOptions,
                rho_floor: float = 0.0) -> dict:
    """Projected preconditioned gradient descent from a single start.

    Returns a dict with the final array, residuals, trace and iteration count.
    Raises :class:`ProjectionError` when the start cannot be projected and
    :class:`NonConvergenceError` when the iterate collapses below the floor.
    """
    t0, X = project_array(F, F.check(X0))
    J = F.phi(X)
    trace = [(J, float("nan"), t0)]
    step = opts.initial_step
    G, res, el = _residuals(F, X)
    trace[0] = (float(J), float(res), float(t0))
    it = 0
    converged = res <= opts.tol
    while not converged and it < opts.max_iters:
        it += 1
        D = F.precondition(G) if opts.preconditioned else G
        slope = F.l2_dot(G, D)
        if not slope > 0:
            break
        found = _line_search(F, X, J, D, slope, step, res, opts)
        if found is None:
            # no admissible step: the iterate sits at roundoff level
            log.debug("line search stalled at iteration %d (res=%.3e)", it, res)
            break
        a, t, X, J = found
        step = min(a, opts.max_step)
        if opts.enforce_positivity and F.even_components:
            X, J = _try_abs_step(F, X, J)
        if opts.symmetrize_each and it % opts.symmetrize_each == 0 and F.grid.n == 1:
            X, J = _try_rearrangement(F, X, J)
        Q = float(F.norms_sq(X).sum())
        if Q < rho_floor:
            raise NonConvergenceError(f"iterate collapsed toward zero (||u||^2 = {Q:.3e})")
        G, res, el = _residuals(F, X)
        trace.append((float(J), float(res), float(t)))
        converged = res <= opts.tol
    return {"X": X, "phi": J, "residual": res, "el_residual": el, "converged": converged,
            "iterations": it, "trace": trace}


def _line_search(F: Functional, X, J, D, slope, step, res, opts: SolveOptions):
    """Step along -D minimizing a quadratic model of the ray-reduced energy.

    Returns (a, t, X_new, J_new) or None.  Once the predicted decrease is
    below double precision the energy cannot rank steps; a step is then
    accepted if it does not raise the energy beyond roundoff and lowers the
    projected residual.
    """

    def trial(a):
        try:
            t, Xn = project_array(F, X - a * D)
        except ProjectionError:
            return None
        return t, Xn, F.phi(Xn)

    flat = step * slope <= 1e-12 * abs(J)
    a = step
    if flat:
        for _ in range(30):
            r = trial(a)
            if r is not None and r[2] <= J + ROUNDOFF * abs(J) and _residuals(F, r[1])[1] < res:
                return (a,) + r
            a *= opts.backtrack
        return None
    best = None
    for _ in range(60):
        r = trial(a)
        if r is None:
            a *= opts.backtrack
            continue
        if best is None or r[2] < best[1][2]:
            best = (a, r)
        # curvature of the model J(0) - slope a + c a^2 / 2 through this point
        curv = 2.0 * (r[2] - J + a * slope) / (a * a)
        if curv > 0:
            a_opt = min(slope / curv, opts.max_step)
            if abs(a_opt - a) > 0.1 * a:
                r2 = trial(a_opt)
                if r2 is not None and r2[2] < best[1][2]:
                    best = (a_opt, r2)
        a_b, r_b = best
        if r_b[2] <= J - opts.armijo * a_b * slope:
            return (a_b,) + r_b
        a = min(a, a_b) * opts.backtrack
    return None


def _try_abs_step(F: Functional, X: np.ndarray, J: float, slack: float = 1e-12):
    Y = X.copy()
    changed = False
    for j in F.even_components:
        if np.any(Y[j] < 0):
            Y[j] = np.abs(Y[j])
            changed = True
    if not changed:
        return X, J
    try:
        _, Yp = project_array(F, Y)
    except ProjectionError:
        return X, J
    Jy = F.phi(Yp)
    if Jy <= J + slack * abs(J):
        return Yp, Jy
    return X, J


def _try_rearrangement(F: Functional, X: np.ndarray, J: float):
    # averaging each (+x, -x) pair removes the half-cell shift of the discrete ranking
    Y = np.stack([_rearrange_component(x) for x in X])
    Y = 0.5 * (Y + np.stack([reflect(y) for y in Y]))
    # rearranging |v| is only valid where v >= 0
    for j in range(F.m):
        if j not in F.even_components and np.any(X[j] < 0):
            return X, J
    try:
        _, Yp = project_array(F, Y)
    except ProjectionError:
        return X, J
    Jy = F.phi(Yp)
    if Jy <= J:
        return Yp, Jy
    return X, J


def _result_from_run(F: Functional, run: dict, restart: int) -> SolveResult:
    X = run["X"]
    flags = state_flags(F, X)
    return SolveResult(
        state=CoupledState.from_array(F.grid, X), energy=F.breakdown(X),
        residual=run["residual"], el_residual=run["el_residual"],
        converged=run["converged"], iterations=run["iterations"], trace=run["trace"],
        restart_index=restart, **flags)


def _solve_one(args):
    F, X0, opts, rho_floor, idx = args
    try:
        run = run_descent(F, X0, opts, rho_floor)
    except (ProjectionError, NonConvergenceError) as exc:
        log.info("restart %d failed: %s", idx, exc)
        return idx, None
    return idx, _result_from_run(F, run, idx)


def minimize_on_nehari(params: SystemParams, init: CoupledState | Sequence[CoupledState],
                       opts: SolveOptions = SolveOptions(), *, rho_floor: float | None = None,
                       functional: Functional | None = None) -> SolveResult:
    """Minimize Phi on the Nehari manifold.

    ``init`` is one starting state or a list of them; with a single state
    and ``opts.restarts > 1`` the remaining starts come from
    :func:`initial_guesses`.  The lowest-energy converged run wins, ties
    within 1e-9 going to the lowest restart index.
    """
    inits = [init] if isinstance(init, CoupledState) else list(init)
    grid = inits[0].grid
    F = functional or Functional.from_params(params, grid)
    if len(inits) < opts.restarts:
        extra = initial_guesses(params, grid, opts.seed, opts.restarts)
        inits += extra[len(inits):opts.restarts]
    if rho_floor is None:
        rho_floor = _default_rho_floor(F, params)
    jobs = [(F, s.as_array(), opts, rho_floor, i) for i, s in enumerate(inits)]
    if opts.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=opts.jobs) as ex:
            results = list(ex.map(_solve_one, jobs))
    else:
        results = [_solve_one(j) for j in jobs]
    results = [r for _, r in sorted(results, key=lambda p: p[0]) if r is not None]
    if not results:
        raise NonConvergenceError("every start failed to project or collapsed")
    conv = [r for r in results if r.converged]
    pool = conv or results
    best = pool[0]
    for r in pool[1:]:
        if r.phi < best.phi - 1e-9 * max(1.0, abs(best.phi)):
            best = r
    if not conv:
        raise NonConvergenceError(
            f"no start converged; best residual {min(r.residual for r in results):.3e}",
            best=best)
    return best


def _default_rho_floor(F: Functional, params: SystemParams) -> float:
    # 1e-6 * ||V_2||^2; the scalar energy scales like lambda^{2 - n/(2s)}
    from .scalar_gs import reference_norm_sq
    return 1e-6 * reference_norm_sq(params)


# ---- starting points ------------------------------------------------------

def semi_trivial_state(params: SystemParams, grid: GridSpec, cache=None) -> CoupledState:
    """Zero in the quartic components, scalar ground states in the cubic ones."""
    from .scalar_gs import quadratic_ground_state
    F = Functional.from_params(params, grid)
    comps = []
    for j in range(params.num_components):
        if j in F.even_components:
            comps.append(np.zeros(grid.shape))
        else:
            comps.append(quadratic_ground_state(params.s, params.lambdas[j], grid,
                                                allow_local=params.allow_local,
                                                cache=cache).values)
    return CoupledState.from_array(grid, np.stack(comps))


_EPS_LADDER = (0.1, 0.5, 0.02, 1.0)


def initial_guesses(params: SystemParams, grid: GridSpec, seed: int, count: int,
                    semi_trivial: CoupledState | None = None) -> list[CoupledState]:
    """Deterministic family of starting states.

    Order: (a) eps=0.1 perturbation of the semi-trivial state, (c) the
    projected coupled state t(V, ..., V), then alternating further (a)
    perturbations along the eps ladder and (b) random co-centred Gaussians.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    semi = semi_trivial if semi_trivial is not None else semi_trivial_state(params, grid)
    S = semi.as_array()
    F = Functional.from_params(params, grid)
    r2 = grid.radius() ** 2
    # perturbation profile: normalized shape of the first nonzero semi-trivial component
    ref = next((S[j] for j in range(F.m) if np.any(S[j])), np.exp(-r2))
    bump = ref / np.abs(ref).max()
    amp = float(np.abs(S).max()) or 1.0

    def fam_a(eps):
        X = S.copy()
        for j in F.even_components:
            X[j] = eps * amp * bump
        return X

    def fam_b():
        X = np.empty_like(S)
        for j in range(F.m):
            w = rng.uniform(0.5, 3.0)
            a = rng.uniform(0.5, 2.0) * amp
            X[j] = a * np.exp(-r2 / (2 * w * w))
        return X

    def fam_c():
        X = np.stack([ref] * F.m)
        return project_array(F, X)[1]

    out = []
    k_a = 1
    i = 0
    while len(out) < count:
        if i == 0:
            out.append(fam_a(_EPS_LADDER[0]))
        elif i == 1:
            out.append(fam_c())
        elif i % 2 == 0 and k_a < len(_EPS_LADDER):
            out.append(fam_a(_EPS_LADDER[k_a]))
            k_a += 1
        else:
            out.append(fam_b())
        i += 1
    return [CoupledState.from_array(grid, X) for X in out]
