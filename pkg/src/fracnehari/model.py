"""Energy, Nehari functional and gradients of the coupled stationary systems.

Every system handled here has the form

    Phi(u) = 1/2 sum_j ||u_j||_j^2 - G(u),   G(u) = sum_t c_t int prod_j u_j^{e_tj}

with ||w||_j^2 = int |(-Delta)^{s/2} w|^2 + lambda_j w^2 and every monomial of
degree 3 or 4.  The three named variants only differ in the list of
monomials, so all of the algebra lives in :class:`Functional`.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.fft as sfft

from .spectral import Field, GridMismatchError, GridSpec, ParameterDomainError, multiplier

__all__ = [
    "Variant",
    "SystemParams",
    "CoupledState",
    "EnergyBreakdown",
    "Monomial",
    "Functional",
    "VariantMismatchError",
    "UnsupportedVariantError",
    "energy_phi",
    "nehari_psi",
    "gradient_phi",
    "reduced_f",
    "psi_along_ray",
]


class VariantMismatchError(ValueError):
    """State does not match the component layout of the system variant."""


class UnsupportedVariantError(ValueError):
    pass


class Variant(str, enum.Enum):
    TWO_EQ = "TwoEq"
    STAR_N_EQ = "StarNEq"
    TWO_NLFS_FKDV = "TwoNlfsFkdv"


@dataclass(frozen=True)
class Monomial:
    """c * int prod_j u_j^{exponents[j]}."""

    coef: float
    exponents: tuple[int, ...]

    @property
    def degree(self) -> int:
        return sum(self.exponents)


@dataclass(frozen=True)
class SystemParams:
    """Model constants.

    ``lambdas`` and ``betas`` are ordered as follows.

    * TwoEq: (lambda1, lambda2), (beta,)
    * StarNEq: (lambda0, lambda1, ..., lambda_{N-1}), (beta1, ..., beta_{N-1})
    * TwoNlfsFkdv: (lambda1, lambda2, lambda), (beta12, beta13, beta23)

    ``s = 1`` is only accepted with ``allow_local=True``.
    """

    s: float
    n: int
    variant: Variant
    lambdas: tuple[float, ...]
    betas: tuple[float, ...]
    allow_local: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        object.__setattr__(self, "lambdas", tuple(float(x) for x in self.lambdas))
        object.__setattr__(self, "betas", tuple(float(x) for x in self.betas))
        if self.n not in (1, 2, 3):
            raise ParameterDomainError(f"n must be 1, 2 or 3, got {self.n}")
        if not self.s > self.n / 4:
            raise ParameterDomainError(f"s must exceed n/4 = {self.n / 4}, got {self.s}")
        if self.s > 1 or (self.s == 1 and not self.allow_local):
            raise ParameterDomainError(
                f"s must be < 1 (s = 1 needs allow_local=True), got {self.s}")
        if any(not lam > 0 for lam in self.lambdas):
            raise ParameterDomainError(f"all lambdas must be positive, got {self.lambdas}")
        m = len(self.lambdas)
        if self.variant is Variant.TWO_EQ:
            ok = m == 2 and len(self.betas) == 1
        elif self.variant is Variant.STAR_N_EQ:
            ok = m >= 2 and len(self.betas) == m - 1
        else:
            ok = m == 3 and len(self.betas) == 3
        if not ok:
            raise ParameterDomainError(
                f"{self.variant.value}: got {m} lambdas and {len(self.betas)} betas")

    @classmethod
    def two_eq(cls, s, lambda1=1.0, lambda2=1.0, beta=0.0, n=1, allow_local=False):
        return cls(s, n, Variant.TWO_EQ, (lambda1, lambda2), (beta,), allow_local)

    @classmethod
    def star(cls, s, lambda0, lambdas, betas, n=1, allow_local=False):
        return cls(s, n, Variant.STAR_N_EQ, (lambda0, *lambdas), tuple(betas), allow_local)

    @classmethod
    def two_nlfs_fkdv(cls, s, lambda1, lambda2, lam, beta12, beta13, beta23, n=1,
                      allow_local=False):
        return cls(s, n, Variant.TWO_NLFS_FKDV, (lambda1, lambda2, lam),
                   (beta12, beta13, beta23), allow_local)

    @property
    def num_components(self) -> int:
        return len(self.lambdas)

    @property
    def beta(self) -> float:
        if self.variant is not Variant.TWO_EQ:
            raise UnsupportedVariantError("beta is only defined for TwoEq")
        return self.betas[0]

    def replace(self, **kw) -> "SystemParams":
        d = dict(s=self.s, n=self.n, variant=self.variant, lambdas=self.lambdas,
                 betas=self.betas, allow_local=self.allow_local)
        d.update(kw)
        return SystemParams(**d)

    def monomials(self) -> list[Monomial]:
        m = self.num_components
        if self.variant is Variant.TWO_EQ:
            (b,) = self.betas
            return [Monomial(0.25, (4, 0)), Monomial(1 / 6, (0, 3)), Monomial(0.5 * b, (2, 1))]
        if self.variant is Variant.STAR_N_EQ:
            terms = [Monomial(0.25, (4,) + (0,) * (m - 1))]
            for j in range(1, m):
                e = [0] * m
                e[j] = 3
                terms.append(Monomial(1 / 6, tuple(e)))
            for j, b in enumerate(self.betas, start=1):
                e = [0] * m
                e[0], e[j] = 2, 1
                terms.append(Monomial(0.5 * b, tuple(e)))
            return terms
        b12, b13, b23 = self.betas
        return [
            Monomial(0.25, (4, 0, 0)),
            Monomial(0.25, (0, 4, 0)),
            Monomial(1 / 6, (0, 0, 3)),
            Monomial(0.25 * b12, (2, 2, 0)),
            Monomial(0.5 * b13, (2, 0, 1)),
            Monomial(0.5 * b23, (0, 2, 1)),
        ]

    def to_dict(self) -> dict:
        return {"s": self.s, "n": self.n, "variant": self.variant.value,
                "lambdas": list(self.lambdas), "betas": list(self.betas),
                "allow_local": self.allow_local}

    @classmethod
    def from_dict(cls, d: dict) -> "SystemParams":
        return cls(float(d["s"]), int(d["n"]), Variant(d["variant"]), tuple(d["lambdas"]),
                   tuple(d["betas"]), bool(d.get("allow_local", False)))


@dataclass(frozen=True, eq=False)
class CoupledState:
    """Ordered tuple of fields on a shared grid."""

    components: tuple[Field, ...]

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("a state needs at least one component")
        g = comps[0].grid
        for c in comps[1:]:
            if c.grid != g:
                raise GridMismatchError("all components must share a grid")
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *fields: Field) -> "CoupledState":
        return cls(tuple(fields))

    @classmethod
    def from_array(cls, grid: GridSpec, arr: np.ndarray) -> "CoupledState":
        return cls(tuple(Field(grid, a) for a in arr))

    @classmethod
    def zeros(cls, grid: GridSpec, m: int) -> "CoupledState":
        return cls(tuple(Field.zeros(grid) for _ in range(m)))

    @property
    def grid(self) -> GridSpec:
        return self.components[0].grid

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i) -> Field:
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def as_array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])

    def scale(self, t: float) -> "CoupledState":
        return CoupledState(tuple(t * c for c in self.components))

    def __add__(self, other: "CoupledState") -> "CoupledState":
        return CoupledState(tuple(a + b for a, b in zip(self.components, other.components,
                                                         strict=True)))

    def __sub__(self, other: "CoupledState") -> "CoupledState":
        return CoupledState(tuple(a - b for a, b in zip(self.components, other.components,
                                                         strict=True)))

    def __rmul__(self, t: float) -> "CoupledState":
        return self.scale(t)

    def dot(self, other: "CoupledState") -> float:
        """Sum of the componentwise L^2 products."""
        return float(self.grid.cell_volume * np.vdot(self.as_array(), other.as_array()))


@dataclass(frozen=True)
class EnergyBreakdown:
    phi: float
    quadratic_part: float
    g_beta: float
    nehari_psi: float
    reduced_f: float
    norms_sq: tuple[float, ...]
    powers: dict[str, float] = field(default_factory=dict)

    @property
    def norm_sq(self) -> float:
        return float(sum(self.norms_sq))

    def to_dict(self) -> dict:
        d = {"phi": self.phi, "quadratic_part": self.quadratic_part, "g_beta": self.g_beta,
             "nehari_psi": self.nehari_psi, "reduced_f": self.reduced_f,
             "norm_sq": self.norm_sq}
        for j, v in enumerate(self.norms_sq):
            d[f"norm_sq_{j}"] = v
        d.update(self.powers)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


class Functional:
    """Energy algebra of a polynomial system on a fixed grid.

    Works on stacked arrays of shape ``(m, *grid.shape)``.
    """

    def __init__(self, s: float, lambdas: Sequence[float], terms: Sequence[Monomial],
                 grid: GridSpec):
        self.s = float(s)
        self.lambdas = np.asarray(lambdas, dtype=float)
        self.terms = list(terms)
        self.grid = grid
        self.m = len(self.lambdas)
        for t in self.terms:
            if len(t.exponents) != self.m:
                raise ValueError("monomial arity does not match the component count")
            if t.degree not in (3, 4):
                raise ValueError("only cubic and quartic monomials are supported")
        mult = multiplier(grid, s)
        # ((-Delta)^s + lambda_j) symbol per component
        self.symbols = np.stack([mult + lam for lam in self.lambdas])
        self._dv = grid.cell_volume
        self._parseval = grid.cell_volume / grid.size
        # sign-symmetric components: only even powers appear
        self.even_components = tuple(
            j for j in range(self.m) if all(t.exponents[j] % 2 == 0 for t in self.terms))

    @classmethod
    def from_params(cls, params: SystemParams, grid: GridSpec) -> "Functional":
        if params.n != grid.n:
            raise GridMismatchError(f"params.n = {params.n} but grid.n = {grid.n}")
        return cls(params.s, params.lambdas, params.monomials(), grid)

    @classmethod
    def scalar(cls, s: float, lam: float, grid: GridSpec, power: int = 2,
               coeff: float = 1.0) -> "Functional":
        """Energy of (-Delta)^s w + lam w = coeff * w^power (power 2 or 3)."""
        if power not in (2, 3):
            raise ValueError("power must be 2 or 3")
        p = power + 1
        return cls(s, (lam,), [Monomial(coeff / p, (p,))], grid)

    # ---- basic pieces -------------------------------------------------
    def check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape != (self.m, *self.grid.shape):
            raise VariantMismatchError(
                f"expected state of shape {(self.m, *self.grid.shape)}, got {X.shape}")
        return X

    def fft(self, X):
        axes = tuple(range(1, X.ndim))
        return sfft.fftn(X, axes=axes)

    def apply_linear(self, X: np.ndarray) -> np.ndarray:
        """((-Delta)^s + lambda_j) u_j for each component."""
        return sfft.ifftn(self.symbols * self.fft(X), axes=tuple(range(1, X.ndim))).real

    def precondition(self, G: np.ndarray) -> np.ndarray:
        """((-Delta)^s + lambda_j)^{-1} g_j for each component."""
        return sfft.ifftn(self.fft(G) / self.symbols, axes=tuple(range(1, G.ndim))).real

    def norms_sq(self, X: np.ndarray) -> np.ndarray:
        Xh = self.fft(X)
        w = self.symbols * (Xh.real**2 + Xh.imag**2)
        return self._parseval * w.reshape(self.m, -1).sum(axis=1)

    def monomial_values(self, X: np.ndarray) -> np.ndarray:
        out = np.empty(len(self.terms))
        for i, t in enumerate(self.terms):
            prod = 1.0
            for j, e in enumerate(t.exponents):
                if e:
                    prod = prod * X[j] ** e
            out[i] = self._dv * np.sum(prod)
        return out

    def l2_dot(self, X: np.ndarray, Y: np.ndarray) -> float:
        return float(self._dv * np.vdot(X, Y))

    # ---- functionals --------------------------------------------------
    def ray_coefficients(self, X: np.ndarray) -> tuple[float, float, float]:
        """(Q, A, B) with Psi(tX) = t^2 (Q - A t^2 - B t)."""
        Q = float(self.norms_sq(X).sum())
        mv = self.monomial_values(X)
        A = sum(4 * t.coef * v for t, v in zip(self.terms, mv) if t.degree == 4)
        B = sum(3 * t.coef * v for t, v in zip(self.terms, mv) if t.degree == 3)
        return Q, float(A), float(B)

    def phi(self, X: np.ndarray) -> float:
        Q = float(self.norms_sq(X).sum())
        g = sum(t.coef * v for t, v in zip(self.terms, self.monomial_values(X)))
        return 0.5 * Q - g

    def psi(self, X: np.ndarray) -> float:
        Q, A, B = self.ray_coefficients(X)
        return Q - A - B

    def reduced(self, X: np.ndarray) -> float:
        """1/6 ||u||^2 + 1/3 * (quartic part of G); equals Phi on the manifold."""
        Q = float(self.norms_sq(X).sum())
        q4 = sum(t.coef * v for t, v in zip(self.terms, self.monomial_values(X))
                 if t.degree == 4)
        return Q / 6.0 + q4 / 3.0

    def grad_g(self, X: np.ndarray, weight_by_degree: bool = False) -> np.ndarray:
        """L^2 gradient of G (or of sum_t deg_t * G_t)."""
        out = np.zeros_like(X)
        for t in self.terms:
            c = t.coef * (t.degree if weight_by_degree else 1)
            if c == 0:
                continue
            for j, e in enumerate(t.exponents):
                if not e:
                    continue
                prod = c * e * X[j] ** (e - 1)
                for k, ek in enumerate(t.exponents):
                    if k != j and ek:
                        prod = prod * X[k] ** ek
                out[j] += prod
        return out

    def grad_phi(self, X: np.ndarray) -> np.ndarray:
        return self.apply_linear(X) - self.grad_g(X)

    def grad_psi(self, X: np.ndarray) -> np.ndarray:
        return 2.0 * self.apply_linear(X) - self.grad_g(X, weight_by_degree=True)

    def psi_radial_derivative(self, X: np.ndarray) -> float:
        """<grad Psi(u), u> = 2||u||^2 - sum_t deg_t^2 c_t M_t."""
        Q = float(self.norms_sq(X).sum())
        mv = self.monomial_values(X)
        return 2 * Q - sum(t.degree**2 * t.coef * v for t, v in zip(self.terms, mv))

    def breakdown(self, X: np.ndarray) -> EnergyBreakdown:
        norms = self.norms_sq(X)
        Q = float(norms.sum())
        mv = self.monomial_values(X)
        g = float(sum(t.coef * v for t, v in zip(self.terms, mv)))
        A = sum(4 * t.coef * v for t, v in zip(self.terms, mv) if t.degree == 4)
        B = sum(3 * t.coef * v for t, v in zip(self.terms, mv) if t.degree == 3)
        q4 = sum(t.coef * v for t, v in zip(self.terms, mv) if t.degree == 4)
        powers = {}
        for j in range(self.m):
            for p in (2, 3, 4):
                powers[f"int_pow{p}_{j}"] = float(self._dv * np.sum(X[j] ** p))
        return EnergyBreakdown(
            phi=0.5 * Q - g, quadratic_part=0.5 * Q, g_beta=g, nehari_psi=Q - A - B,
            reduced_f=Q / 6.0 + q4 / 3.0, norms_sq=tuple(float(v) for v in norms),
            powers=powers)


def _functional(params: SystemParams, state: CoupledState) -> tuple[Functional, np.ndarray]:
    if len(state) != params.num_components:
        raise VariantMismatchError(
            f"{params.variant.value} expects {params.num_components} components, "
            f"got {len(state)}")
    F = Functional.from_params(params, state.grid)
    return F, state.as_array()


def energy_phi(params: SystemParams, state: CoupledState) -> EnergyBreakdown:
    F, X = _functional(params, state)
    return F.breakdown(X)


def nehari_psi(params: SystemParams, state: CoupledState) -> float:
    F, X = _functional(params, state)
    return F.psi(X)


def gradient_phi(params: SystemParams, state: CoupledState) -> CoupledState:
    """L^2 gradient of Phi, i.e. the Euler-Lagrange residual of each equation."""
    F, X = _functional(params, state)
    return CoupledState.from_array(state.grid, F.grad_phi(X))


def reduced_f(params: SystemParams, state: CoupledState, exploratory: bool = False) -> float:
    """Phi restricted to the Nehari manifold, 1/6 ||u||^2 + 1/12 int u^4.

    For TwoNlfsFkdv the mixed quartic term enters too; that form is only
    returned with ``exploratory=True``.
    """
    if params.variant is Variant.TWO_NLFS_FKDV and not exploratory:
        raise UnsupportedVariantError(
            "reduced functional of TwoNlfsFkdv is exploratory; pass exploratory=True")
    F, X = _functional(params, state)
    return F.reduced(X)


def psi_along_ray(params: SystemParams, state: CoupledState, t: float) -> float:
    """Psi(t u) from the ray polynomial t^2 Q - t^4 A - t^3 B."""
    F, X = _functional(params, state)
    Q, A, B = F.ray_coefficients(X)
    return t * t * Q - t**4 * A - t**3 * B
