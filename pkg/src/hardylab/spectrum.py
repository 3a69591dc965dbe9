"""Dirichlet eigenpairs of the Hardy operator on the unit ball and spectral calculus.

For k = N the operator -Delta - alpha/|x|^2 separates in polar coordinates.
The radial factor of degree ell is r^{-(N-2)/2} J_nu(j r) with
nu = sqrt(((N-2)/2)^2 + ell(ell+N-2) - alpha), and the Dirichlet condition
at r = 1 puts j at a zero of J_nu.  With the closed form
int_0^1 r J_nu(j r)^2 dr = J_{nu+1}(j)^2 / 2 the L^2(B_1) normalization of
an x-radial mode (ell = 0) is c = [|S^{N-1}| J_{nu+1}(j)^2 / 2]^{-1/2}.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConvergenceError, DomainError, NotPositiveDefiniteError
from .io import write_csv
from .numerics.linalg import sym_eig
from .numerics.quadrature import QuadRule, composite_rule, gauss_rule
from .numerics.special import bessel_j_pair, bessel_j_zeros
from .params import ProblemParams


def angular_order(params: ProblemParams, ell: int) -> float:
    """Bessel order nu_ell of the degree-ell sector (k = N only)."""
    if params.k != params.N:
        raise DomainError("a ball catalog is only available for k = N")
    if ell < 0:
        raise DomainError("angular degree must be >= 0")
    rad = params.p ** 2 + ell * (ell + params.N - 2) - params.alpha
    if not rad > 0.0:
        raise DomainError(f"radicand {rad} is not positive")
    return math.sqrt(rad)


@dataclass(frozen=True)
class RadialMode:
    """One Dirichlet eigenpair: radial factor c r^{-p} J_nu(j r), eigenvalue j^2."""

    ell: int
    m: int
    nu: float
    zero: float
    mu: float
    c_norm: float
    p: float

    def radial(self, r):
        j0, _ = bessel_j_pair(self.nu, self.zero * np.asarray(r, dtype=float))
        return self.c_norm * np.asarray(r, dtype=float) ** (-self.p) * j0

    def radial_deriv(self, r):
        r = np.asarray(r, dtype=float)
        j0, j1 = bessel_j_pair(self.nu, self.zero * r)
        delta = self.nu - self.p
        return self.c_norm * r ** (-self.p) * (delta / r * j0 - self.zero * j1)


@dataclass(frozen=True)
class ModeCatalog:
    """Modes sorted by eigenvalue; immutable after construction."""

    params: ProblemParams
    modes: tuple

    def __len__(self) -> int:
        return len(self.modes)

    def __getitem__(self, i):
        return self.modes[i]

    @property
    def mu(self) -> np.ndarray:
        return np.array([m.mu for m in self.modes])

    @property
    def zeros(self) -> np.ndarray:
        return np.array([m.zero for m in self.modes])

    @property
    def c_norm(self) -> np.ndarray:
        return np.array([m.c_norm for m in self.modes])

    @property
    def ells(self) -> tuple:
        return tuple(sorted({m.ell for m in self.modes}))

    def sector(self, ell: int = 0) -> "ModeCatalog":
        """Sub-catalog of one angular degree (radial modes for ell = 0)."""
        return ModeCatalog(self.params, tuple(m for m in self.modes if m.ell == ell))

    def truncate(self, M: int) -> "ModeCatalog":
        return ModeCatalog(self.params, self.modes[:M])

    @property
    def nu(self) -> float:
        """Common Bessel order of a single-sector catalog."""
        if len(self.ells) != 1:
            raise DomainError("catalog mixes angular degrees")
        return self.modes[0].nu

    def rows(self):
        return [(m.ell, m.m, m.nu, m.zero, m.mu, m.c_norm) for m in self.modes]

    def to_csv(self, path):
        return write_csv(path, ["ell", "m", "nu", "zero", "mu", "c_norm"], self.rows())


def build_catalog(params: ProblemParams, ell_max: int = 0, m_max: int | None = None) -> ModeCatalog:
    """All modes with ell <= ell_max and m <= m_max, sorted by eigenvalue."""
    m_max = params.modes if m_max is None else m_max
    if m_max < 1 or ell_max < 0:
        raise DomainError("empty mode request")
    area = params.area
    modes = []
    for ell in range(ell_max + 1):
        nu = angular_order(params, ell)
        zeros = bessel_j_zeros(nu, m_max)
        _, jnext = bessel_j_pair(nu, np.array(zeros))
        for m, (j, j1) in enumerate(zip(zeros, jnext), start=1):
            c = 1.0 / math.sqrt(0.5 * area * j1 * j1)
            modes.append(RadialMode(ell, m, nu, j, j * j, c, params.p))
    modes.sort(key=lambda md: (md.mu, md.ell, md.m))
    return ModeCatalog(params, tuple(modes))


def radial_catalog(params: ProblemParams, M: int | None = None) -> ModeCatalog:
    """The x-radial (ell = 0) sector with M modes."""
    return build_catalog(params, 0, params.modes if M is None else M)


def radial_rule(catalog: ModeCatalog, power: float = 0.0, n: int = 12,
                levels: int = 24) -> QuadRule:
    """Rule on (0, 1) for products of two radial modes against r^{N-1+power} dr.

    The end cell at r = 0 absorbs r^{N-1+power+2 delta} where
    delta = nu - (N-2)/2 is the leading exponent of a radial mode; the
    middle is split finely enough to resolve the highest oscillation.
    """
    nu = catalog.nu
    delta = nu - catalog.params.p
    pl = catalog.params.N - 1.0 + power + 2.0 * delta
    if pl <= -1.0:
        raise DomainError(f"integrand r^{pl} is not integrable at 0")
    jmax = float(catalog.zeros.max())
    cells = max(8, int(math.ceil(jmax / 3.0)))
    return composite_rule(0.0, 1.0, n, p_lo=pl, levels_lo=levels, mid_cells=cells, zone=0.1)


@dataclass(frozen=True)
class SpectralField:
    """Coefficients of a function in an orthonormal catalog."""

    catalog: ModeCatalog
    coefficients: np.ndarray
    provenance: str = "manufactured"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.coefficients, dtype=float)
        if c.shape != (len(self.catalog),):
            raise DomainError("one coefficient per catalog mode is required")
        if not np.all(np.isfinite(c)):
            raise DomainError("coefficients must be finite")
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)

    @property
    def params(self) -> ProblemParams:
        return self.catalog.params

    def with_coefficients(self, c, provenance: str | None = None) -> "SpectralField":
        return SpectralField(self.catalog, c, provenance or self.provenance, dict(self.meta))

    def _check_radial(self):
        if self.catalog.ells != (0,):
            raise DomainError("pointwise evaluation needs an x-radial (ell = 0) catalog")

    def evaluate(self, r):
        """u(r) for an x-radial field, summing modes in catalog order."""
        self._check_radial()
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for c, md in zip(self.coefficients, self.catalog.modes):
            if c != 0.0:
                out += c * md.radial(r)
        return out

    def derivative(self, r):
        self._check_radial()
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        for c, md in zip(self.coefficients, self.catalog.modes):
            if c != 0.0:
                out += c * md.radial_deriv(r)
        return out

    def l2_norm(self) -> float:
        return float(np.sqrt(np.dot(self.coefficients, self.coefficients)))

    def leading_coefficient(self) -> float:
        """Limit of r^{-delta} u(r) as r -> 0 for an x-radial field."""
        self._check_radial()
        nu = self.catalog.nu
        z = self.catalog.zeros
        return float(np.sum(self.coefficients * self.catalog.c_norm * (0.5 * z) ** nu)
                     / math.gamma(nu + 1.0))


def fractional_apply(field: SpectralField, s: float) -> SpectralField:
    """Coefficients mu_n^s u_n, i.e. the spectral power L^s applied to u."""
    return field.with_coefficients(field.catalog.mu ** s * field.coefficients)


def hs_norm(field: SpectralField, s: float) -> float:
    """sqrt(sum mu_n^s u_n^2)."""
    return float(np.sqrt(np.sum(field.catalog.mu ** s * field.coefficients ** 2)))


def gram_matrix(catalog: ModeCatalog, power: float = 0.0) -> np.ndarray:
    """|S^{N-1}| int_0^1 r^{N-1+power} Y_a Y_b dr by quadrature (x-radial catalog)."""
    rule = radial_rule(catalog, power)
    r = np.asarray(rule.nodes)
    w = np.asarray(rule.weights) * r ** (catalog.params.N - 1 + power)
    Y = np.array([md.radial(r) for md in catalog.modes])
    return catalog.params.area * (Y * w) @ Y.T


def assemble_g_matrix(catalog: ModeCatalog, g_amp: float, g_eps: float,
                      method: str = "jacobi", n_points: int | None = None) -> np.ndarray:
    """G_mn = int_{B_1} g Y_m Y_n dx with g = g_amp |x|^{-2s+g_eps}.

    ``method='jacobi'`` uses one Gauss-Jacobi rule whose weight
    r^{1-2s+eps+2nu} absorbs the singular power exactly, so the remaining
    factor J_nu(j_m r) J_nu(j_n r) / r^{2nu} is entire.  ``method='graded'``
    uses a geometrically graded composite rule and serves as a cross-check.
    """
    if len(catalog.ells) != 1 or catalog.ells[0] != 0:
        raise DomainError("assemble_g_matrix needs an x-radial catalog")
    if not 0.0 < g_eps < 1.0:
        raise DomainError("g_eps must lie in (0, 1)")
    n = len(catalog)
    if g_amp == 0.0:
        return np.zeros((n, n))
    s = catalog.params.s
    nu = catalog.nu
    power = 1.0 - 2.0 * s + g_eps + 2.0 * nu
    if power <= -1.0:
        raise DomainError("non-integrable potential weight")
    z = catalog.zeros
    c = catalog.c_norm
    if method == "jacobi":
        npts = n_points or int(math.ceil(z.max())) + 60
        rule = gauss_rule("jacobi", npts, 0.0, power).mapped(0.0, 1.0)
        r = np.asarray(rule.nodes)
        w = np.asarray(rule.weights)
        F = np.array([bessel_j_pair(nu, zz * r)[0] / r ** nu for zz in z])
    elif method == "graded":
        rule = composite_rule(0.0, 1.0, n_points or 16, p_lo=power, levels_lo=30,
                              mid_cells=max(16, int(math.ceil(z.max() / 2.0))), zone=0.1)
        r = np.asarray(rule.nodes)
        w = np.asarray(rule.weights) * r ** power
        F = np.array([bessel_j_pair(nu, zz * r)[0] / r ** nu for zz in z])
    else:
        raise DomainError(f"unknown method {method!r}")
    G = g_amp * catalog.params.area * np.outer(c, c) * ((F * w) @ F.T)
    return 0.5 * (G + G.T)


@dataclass(frozen=True)
class GalerkinSolution:
    """Smallest eigenpair of diag(mu^s) c = lam G c and the resulting field."""

    lam: float
    field: SpectralField
    g_amp_base: float
    g_eps: float
    residual: float

    @property
    def c_g(self) -> float:
        """Effective potential amplitude lam * g_amp_base."""
        return self.lam * self.g_amp_base


def galerkin_hardy_solve(catalog: ModeCatalog, g_amp_base: float, g_eps: float,
                         M: int | None = None, method: str = "jacobi") -> GalerkinSolution:
    """Manufacture an exact Galerkin solution of L^s u = lam g u.

    The coefficient vector is G-normalized and signed so that u > 0 near
    the origin; the returned field lives on the first M radial modes.
    """
    sub = catalog.sector(0)
    M = len(sub) if M is None else M
    if not 1 <= M <= len(sub):
        raise DomainError(f"M={M} must lie in 1..{len(sub)}")
    sub = sub.truncate(M)
    s = catalog.params.s
    G = assemble_g_matrix(sub, g_amp_base, g_eps, method=method)
    A = np.diag(sub.mu ** s)
    try:
        res = sym_eig(A, G)
    except NotPositiveDefiniteError as exc:
        raise ConvergenceError(
            f"potential matrix is singular to working precision ({exc}); "
            "increase g_amp or the number of modes"
        ) from exc
    lam, c = res.pair(0)
    field = SpectralField(sub, c, "galerkin-solution",
                          {"lam": float(lam), "g_amp": float(lam * g_amp_base), "g_eps": g_eps})
    if field.leading_coefficient() < 0:
        field = field.with_coefficients(-c)
        c = -c
    resid = float(np.linalg.norm(A @ c - lam * (G @ c)))
    return GalerkinSolution(float(lam), field, g_amp_base, g_eps, resid)


# ------------------------------------------------------------- Hardy audits

@dataclass(frozen=True)
class HardyReport:
    """Rayleigh ratios int phi^2/|x|^2 / int |grad phi|^2 against (2/(N-2))^2."""

    constant: float
    ratios: np.ndarray
    violations: int
    min_gap: float
    family_deltas: tuple = ()
    family_ratios: tuple = ()

    def to_dict(self):
        return {
            "constant": self.constant,
            "max_ratio": float(np.max(self.ratios)) if len(self.ratios) else None,
            "violations": self.violations,
            "min_gap": self.min_gap,
            "family_deltas": list(self.family_deltas),
            "family_ratios": list(self.family_ratios),
        }


def rayleigh_ratio(field: SpectralField) -> float:
    """int phi^2/|x|^2 dx / int |grad phi|^2 dx for an x-radial field."""
    cat = field.catalog
    rule = radial_rule(cat, -2.0)
    r = np.asarray(rule.nodes)
    w = np.asarray(rule.weights) * r ** (cat.params.N - 3)
    u = field.evaluate(r)
    du = field.derivative(r)
    return float(np.dot(w, u * u) / np.dot(w * r * r, du * du))


def near_optimizer_ratio(N: int, delta: float) -> float:
    """Rayleigh ratio of r^{-(N-2)/2+delta}(1-r) on the unit ball."""
    p = 0.5 * (N - 2)
    rule = composite_rule(0.0, 1.0, 16, p_lo=2.0 * delta - 1.0, levels_lo=40, mid_cells=2)
    r = np.asarray(rule.nodes)
    w = np.asarray(rule.weights) * r ** (2.0 * delta - 1.0)
    num = np.dot(w, (1.0 - r) ** 2)
    den = np.dot(w, ((delta - p) * (1.0 - r) - r) ** 2)
    return float(num / den)


def hardy_rayleigh_audit(params: ProblemParams, n_trials: int = 100, seed: int = 0,
                         M: int = 16, deltas=(0.05, 0.02, 0.01, 0.005)) -> HardyReport:
    """Check the whole-space Hardy inequality on seeded radial trial fields."""
    if params.N < 3:
        raise DomainError("Hardy audit needs N >= 3")
    cat = radial_catalog(params, M)
    rng = np.random.default_rng(seed)
    const = (2.0 / (params.N - 2)) ** 2
    ratios = []
    for _ in range(n_trials):
        c = rng.standard_normal(M) / (1.0 + np.arange(M))
        ratios.append(rayleigh_ratio(SpectralField(cat, c)))
    ratios = np.array(ratios)
    gaps = const - ratios
    fam = tuple(near_optimizer_ratio(params.N, d) for d in deltas)
    return HardyReport(const, ratios, int(np.sum(gaps < 0)), float(gaps.min()),
                       tuple(float(d) for d in deltas), fam)
