"""Coupling thresholds and classification of semi-trivial solutions.

The threshold is the bottom of the generalized eigenproblem

    ((-Delta)^s + lam) phi = mu * w * phi,     w > 0,

i.e. the infimum of ||phi||^2_lam / int w phi^2.  The constrained Hessian of
Phi at a semi-trivial point splits into blocks; the block of a vanishing
quartic component is ||h||^2 - beta int w h^2, whose sign is that of
(threshold - beta).
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
import scipy.linalg as sla

from .model import CoupledState, Functional, SystemParams, UnsupportedVariantError, Variant
from .nehari import NonConvergenceError
from .spectral import Field, GridSpec, ParameterDomainError, multiplier, reflect

__all__ = [
    "Verdict",
    "ThresholdResult",
    "Classification",
    "IndeterminateClassificationError",
    "lambda_threshold",
    "dense_threshold",
    "dense_operator",
    "classify_semitrivial",
    "h1_block_min",
    "h2_block_samples",
    "random_even_fields",
]


class Verdict(str, enum.Enum):
    STRICT_MIN = "StrictMin"
    SADDLE = "Saddle"


class IndeterminateClassificationError(ArithmeticError):
    def __init__(self, msg, h1_value=None, h2_value=None):
        super().__init__(msg)
        self.h1_value = h1_value
        self.h2_value = h2_value


@dataclass
class ThresholdResult:
    Lambda: float
    minimizer: Field
    iterations: int
    residual: float
    s: float
    lambda1: float
    lambda2: float | None = None

    def __iter__(self):
        # unpacks as (Lambda, minimizer)
        return iter((self.Lambda, self.minimizer))

    def report(self) -> dict:
        return {"s": self.s, "n": self.minimizer.grid.n, "lambda1": self.lambda1,
                "lambda2": self.lambda2, "Lambda": self.Lambda,
                "iterations": self.iterations, "residual": self.residual}

    def to_json(self) -> str:
        return json.dumps(self.report(), sort_keys=True)


def lambda_threshold(s: float, lambda1: float, weight: Field, grid: GridSpec | None = None,
                     tol: float = 1e-13, max_iters: int = 10000,
                     lambda2: float | None = None) -> ThresholdResult:
    """Smallest mu with ((-Delta)^s + lambda1) phi = mu * weight * phi.

    Inverse power iteration phi <- ((-Delta)^s + lambda1)^{-1} (weight phi),
    stopped when the eigen-residual, measured in the dual norm, falls below
    ``tol`` relative to mu.  The returned minimizer is positive and L^2
    normalised.
    """
    grid = grid or weight.grid
    if weight.grid != grid:
        raise ValueError("weight must live on the given grid")
    w = weight.values
    if not np.all(w > 0):
        raise ParameterDomainError("weight must be strictly positive")
    if not lambda1 > 0:
        raise ParameterDomainError("lambda1 must be positive")
    sym = multiplier(grid, s) + lambda1
    axes = tuple(range(grid.n))

    def A(x):
        return sfft.ifftn(sym * sfft.fftn(x, axes=axes), axes=axes).real

    def Ainv(x):
        return sfft.ifftn(sfft.fftn(x, axes=axes) / sym, axes=axes).real

    dv = grid.cell_volume
    phi = np.sqrt(w)
    mu_old = math.inf
    resid = math.inf
    for it in range(1, max_iters + 1):
        phi = Ainv(w * phi)
        phi /= math.sqrt(dv * np.sum(w * phi * phi))
        Aphi = A(phi)
        mu = dv * float(np.sum(phi * Aphi))  # with int w phi^2 = 1
        r = Aphi - mu * w * phi
        # dual norm <r, A^{-1} r>^{1/2} relative to mu
        resid = math.sqrt(max(dv * float(np.sum(r * Ainv(r))), 0.0)) / mu
        if resid <= tol or (abs(mu - mu_old) <= 1e-15 * mu and resid <= 1e3 * tol):
            break
        mu_old = mu
    else:
        raise NonConvergenceError(f"inverse iteration stagnated (residual {resid:.2e})")
    if phi[grid.center_index] < 0:
        phi = -phi
    phi = phi / math.sqrt(dv * np.sum(phi * phi))
    return ThresholdResult(float(mu), Field(grid, phi), it, float(resid), s, lambda1, lambda2)


def dense_operator(grid: GridSpec, s: float, lam: float) -> np.ndarray:
    """Dense matrix of (-Delta)^s + lam on a 1-D grid."""
    if grid.n != 1:
        raise ValueError("dense operator only for n = 1")
    N = grid.points_per_dim
    sym = multiplier(grid, s) + lam
    I = np.eye(N)
    M = sfft.ifft(sym[:, None] * sfft.fft(I, axis=0), axis=0).real
    return 0.5 * (M + M.T)


def dense_threshold(s: float, lambda1: float, weight: Field, shift: float = 0.0):
    """Bottom of the pencil (A - shift W, W) by a dense symmetric eigensolve."""
    grid = weight.grid
    if grid.points_per_dim > 512:
        raise ValueError("dense oracle is capped at 512 points")
    A = dense_operator(grid, s, lambda1)
    W = np.diag(weight.values)
    vals, vecs = sla.eigh(A - shift * W, W, subset_by_index=[0, 0])
    return float(vals[0]), vecs[:, 0]


def random_even_fields(grid: GridSpec, count: int, seed: int = 0,
                       scale: float = 1.0) -> list[np.ndarray]:
    """Smooth even random fields: sums of centred Gaussians and cosine packets."""
    rng = np.random.default_rng(seed)
    r = grid.radius()
    out = []
    for _ in range(count):
        f = np.zeros(grid.shape)
        for _ in range(rng.integers(2, 6)):
            w = scale * rng.uniform(0.3, 6.0)
            f += rng.normal() * np.exp(-(r / w) ** 2) * np.cos(rng.uniform(0, 3) * r / scale)
        out.append(0.5 * (f + reflect(f)))
    return out


def h1_block_min(threshold: float, beta: float) -> float:
    """min over h of (||h||^2 - beta int w h^2) / int w h^2."""
    return threshold - beta


def h2_block_samples(v2: Field, s: float, lambda2: float, count: int = 50,
                     seed: int = 0) -> np.ndarray:
    """Ratios I_2''(V_2)[h]^2 / ||h||_2^2 on random even tangent directions.

    Tangency to the scalar manifold at V_2 reduces to int V_2^2 h = 0.
    """
    grid = v2.grid
    F = Functional(s, (lambda2,), [], grid)
    V = v2.values
    V2sq = V * V
    dv = grid.cell_volume
    ratios = []
    for g in random_even_fields(grid, count, seed):
        h = g - (np.sum(V2sq * g) / np.sum(V2sq * V2sq)) * V2sq
        nrm = float(F.norms_sq(h[None])[0])
        q = nrm - dv * float(np.sum(V * h * h))
        ratios.append(q / nrm)
    return np.asarray(ratios)


@dataclass
class Classification:
    verdict: Verdict
    min_eig: float
    witness: CoupledState
    Lambda: float
    h2_min_ratio: float | None = None
    blocks: dict = field(default_factory=dict)

    def __iter__(self):
        return iter((self.verdict, self.min_eig, self.witness))

    def report(self) -> dict:
        return {"verdict": self.verdict.value, "min_eig": self.min_eig, "Lambda": self.Lambda,
                "h2_min_ratio": self.h2_min_ratio, "blocks": self.blocks}


def classify_semitrivial(params: SystemParams, beta: float | None = None, *,
                         grid: GridSpec, v2: Field | None = None,
                         threshold: ThresholdResult | None = None, probes: int = 50,
                         seed: int = 0, indeterminate_tol: float = 1e-6) -> Classification:
    """Classify (0, V_2) as a strict local minimum or a saddle of Phi on the manifold.

    ``beta`` overrides ``params.beta``.  The h1-block value is
    Lambda - beta; the h2-block is sampled on ``probes`` random even
    tangent directions when the h1-block is positive.
    """
    if params.variant is not Variant.TWO_EQ:
        raise UnsupportedVariantError("classify_semitrivial handles TwoEq; see experiments for others")
    from .scalar_gs import quadratic_ground_state

    beta = params.beta if beta is None else float(beta)
    lam1, lam2 = params.lambdas
    if v2 is None:
        v2 = quadratic_ground_state(params.s, lam2, grid)
    if threshold is None:
        threshold = lambda_threshold(params.s, lam1, v2, lambda2=lam2)
    Lam = threshold.Lambda
    h1 = h1_block_min(Lam, beta)
    if abs(h1) <= indeterminate_tol * max(1.0, Lam):
        raise IndeterminateClassificationError(
            f"beta = {beta} is within {indeterminate_tol} of Lambda = {Lam}", h1_value=h1)
    zero = Field.zeros(v2.grid)
    if h1 < 0:
        witness = CoupledState.of(threshold.minimizer, zero)
        return Classification(Verdict.SADDLE, h1, witness, Lam, None,
                              {"h1": h1})
    ratios = h2_block_samples(v2, params.s, lam2, probes, seed)
    c = float(ratios.min())
    if c <= 0:
        raise IndeterminateClassificationError(
            f"h2-block not positive on sampled tangent directions (min ratio {c:.3e})",
            h1_value=h1, h2_value=c)
    witness = CoupledState.of(threshold.minimizer, zero)
    return Classification(Verdict.STRICT_MIN, h1, witness, Lam, c, {"h1": h1, "h2": c})
