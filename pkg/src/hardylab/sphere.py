"""Angular eigenproblems reduced to one-dimensional Sturm-Liouville problems.

Both the problem on S^{N-1} (for an O(k) x O(N-k)-invariant class) and the
weighted problem on the upper hemisphere S^N_+ (for an x-radial class) take
the form

    -(w f')' / w + eta f / sin^2(x) = lam f,   w = sin^A(x) cos^B(x),

on (0, pi/2) with natural (no-flux) conditions at both degenerate ends.
The hemisphere uses A = N-1, B = 1-2s with x the angle from the y-axis.
The problem on S^{N-1} uses A = k-1, B = N-k-1, eta = -alpha after
reflecting the polar angle.

Solver: the solution is written f = phi g with phi = x^d exp(-2 d x^2/pi^2),
where d is the indicial root at x = 0 (phi'(pi/2) = 0).  The conjugated
problem for g has the weight W = w phi^2 and a bounded potential, and is
discretized by a cell-centred finite-volume scheme.  Cell masses and
potential integrals use Gauss rules, with Jacobi rules in the two end
cells; face conductances are 1 / int(1/W) between neighbouring centres.
The scheme is second order.

Closed forms.  The indicial root is d = -(A-1)/2 + sqrt(((A-1)/2)^2 + eta)
and the class eigenvalues are lam_m = (d+2m)(d+2m+A+B), m = 0, 1, ...
with eigenfunctions sin^d(x) P_m^{(nu, (B-1)/2)}(cos 2x), nu = d+(A-1)/2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .errors import ConvergenceError, DomainError
from .io import write_csv
from .numerics.quadrature import composite_rule, gauss_rule
from .numerics.special import gamma_fn, jacobi_p, jacobi_p_deriv
from .params import ProblemParams, sphere_area

HALF_PI = 0.5 * math.pi


def cos_polar(theta):
    """cos(theta) computed as sin(HALF_PI - theta).

    HALF_PI - theta is exact near the equator, so this matches the distance
    used by quadrature end cells at HALF_PI; np.cos would add the rounding
    offset of HALF_PI, which a negative power 1 - 2s amplifies.
    """
    return np.sin(HALF_PI - np.asarray(theta, dtype=float))
_NQ = 10  # Gauss points per cell


def _s1(x):
    """1/sin^2 x - 1/x^2 (series near 0)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    sm = x < 0.1
    q = x[sm] ** 2
    out[sm] = 1 / 3 + q / 15 + 2 * q ** 2 / 189 + q ** 3 / 675 + 2 * q ** 4 / 10395
    u = x[~sm]
    out[~sm] = 1.0 / np.sin(u) ** 2 - 1.0 / u ** 2
    return out


def _s2(x):
    """cot(x)/x - 1/x^2 (series near 0)."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    sm = x < 0.1
    q = x[sm] ** 2
    out[sm] = -1 / 3 - q / 45 - 2 * q ** 2 / 945 - q ** 3 / 4725 - 2 * q ** 4 / 93555
    u = x[~sm]
    out[~sm] = 1.0 / (np.tan(u) * u) - 1.0 / u ** 2
    return out


def indicial_root(A: float, eta: float) -> float:
    """Larger root d of d(d + A - 1) = eta."""
    h = 0.5 * (A - 1.0)
    rad = h * h + eta
    if rad < 0.0:
        raise DomainError(f"eta={eta} lies below the admissible range {-h * h}")
    return -h + math.sqrt(rad)


def class_eigenvalue(A: float, B: float, eta: float, m: int) -> float:
    """Closed-form m-th eigenvalue (m = 0, 1, ...) of the reduced problem."""
    d = indicial_root(A, eta)
    return (d + 2 * m) * (d + 2 * m + A + B)


class _Conjugated:
    """Weight and bounded potential of the problem for g = f / phi."""

    def __init__(self, A: float, B: float, eta: float):
        self.A, self.B, self.eta = A, B, eta
        self.d = indicial_root(A, eta)

    def phi(self, x):
        d = self.d
        return x ** d * np.exp(-2.0 * d * x * x / math.pi ** 2)

    def weight(self, x):
        return np.sin(x) ** self.A * np.cos(x) ** self.B * self.phi(x) ** 2

    def potential(self, x):
        A, B, eta, d = self.A, self.B, self.eta, self.d
        pi2 = math.pi ** 2
        c = HALF_PI - x
        safe = np.where(c > 0, c, 1.0)
        ccot = np.where(c > 0, c * np.cos(safe) / np.sin(safe), 1.0)
        return (
            eta * _s1(x)
            - A * d * _s2(x)
            + 4.0 * d / pi2
            + 8.0 * d * d / pi2
            - 16.0 * d * d * x * x / pi2 ** 2
            + 4.0 * A * d * x / np.tan(x) / pi2
            + B * d * ccot * 2.0 * (math.pi + 2.0 * x) / (pi2 * x)
        )


def _cell_integrals(faces, f, a0, b1):
    """Integrals of f over cells; Jacobi end cells for x^a0 and (pi/2-x)^b1."""
    leg = gauss_rule("legendre", _NQ)
    xg = np.asarray(leg.nodes)
    wg = np.asarray(leg.weights)
    a = faces[:-1, None]
    b = faces[1:, None]
    pts = 0.5 * (a + b) + 0.5 * (b - a) * xg
    out = (f(pts) * wg).sum(axis=1) * 0.5 * (b - a)[:, 0]
    r = gauss_rule("jacobi", _NQ, 0.0, a0).mapped(0.0, faces[1])
    x = np.asarray(r.nodes)
    out[0] = float(np.dot(np.asarray(r.weights), f(x) / x ** a0))
    r = gauss_rule("jacobi", _NQ, b1, 0.0).mapped(faces[-2], HALF_PI)
    x = np.asarray(r.nodes)
    out[-1] = float(np.dot(np.asarray(r.weights), f(x) / (HALF_PI - x) ** b1))
    return out


@dataclass(frozen=True)
class SLSolution:
    eigenvalues: np.ndarray
    centers: np.ndarray
    vectors: np.ndarray  # f at the cell centres, rows = eigenfunctions
    masses: np.ndarray  # int of w f^2 per cell is masses * g^2
    grid_size: int


@lru_cache(maxsize=128)
def _solve_cached(A: float, B: float, eta: float, n: int, n_eigs: int) -> SLSolution:
    if n < 8:
        raise DomainError("grid_size must be at least 8")
    prob = _Conjugated(A, B, eta)
    faces = np.linspace(0.0, HALF_PI, n + 1)
    cen = 0.5 * (faces[:-1] + faces[1:])
    a0 = A + 2.0 * prob.d
    M = _cell_integrals(faces, prob.weight, a0, B)
    P = _cell_integrals(faces, lambda x: prob.weight(x) * prob.potential(x), a0, B)
    leg = gauss_rule("legendre", _NQ)
    xg = np.asarray(leg.nodes)
    wg = np.asarray(leg.weights)
    xa = cen[:-1, None]
    xb = cen[1:, None]
    pts = 0.5 * (xa + xb) + 0.5 * (xb - xa) * xg
    cond = 1.0 / ((wg / prob.weight(pts)).sum(axis=1) * 0.5 * (xb - xa)[:, 0])
    diag = P.copy()
    diag[:-1] += cond
    diag[1:] += cond
    sc = 1.0 / np.sqrt(M)
    k = min(n_eigs, n)
    w, v = eigh_tridiagonal(diag * sc * sc, -cond * sc[:-1] * sc[1:], select="i",
                            select_range=(0, k - 1), lapack_driver="stebz", tol=1e-14)
    g = v * sc[:, None]
    f = (g * prob.phi(cen)[:, None]).T
    for i in range(k):
        if f[i, -1] < 0:
            f[i] = -f[i]
    w.setflags(write=False)
    f.setflags(write=False)
    return SLSolution(w, cen, f, M, n)


def solve_sturm_liouville(A: float, B: float, eta: float, grid_size: int = 1000,
                          n_eigs: int = 3) -> SLSolution:
    """Lowest eigenpairs of the reduced problem on a uniform grid.

    Eigenfunctions are normalized with int_0^{pi/2} w f^2 dx = 1 and signed
    positive at the right end (x = pi/2).
    """
    if n_eigs < 1:
        raise DomainError("n_eigs must be >= 1")
    return _solve_cached(float(A), float(B), float(eta), int(grid_size), int(n_eigs))


def _converged_pair(A, B, eta, grid_size, n_eigs):
    coarse = solve_sturm_liouville(A, B, eta, grid_size, n_eigs)
    fine = solve_sturm_liouville(A, B, eta, 2 * grid_size, n_eigs)
    lc = np.asarray(coarse.eigenvalues)
    lf = np.asarray(fine.eigenvalues)
    diff = np.abs(lf - lc)
    bad = diff > 1e-5 * np.maximum(1.0, np.abs(lf))
    if np.any(bad):
        i = int(np.argmax(bad))
        raise ConvergenceError(
            f"eigenvalue {i + 1} not converged: {float(lc[i])!r} (n={grid_size}) vs "
            f"{float(lf[i])!r} (n={2 * grid_size})"
        )
    # second-order scheme: Richardson extrapolation of the two grids
    return coarse, fine, (4.0 * lf - lc) / 3.0


# ---------------------------------------------------------------- S^{N-1}

@dataclass(frozen=True)
class AngularSpectrum:
    """Eigenvalues eta of -Delta_{S^{N-1}} - alpha/|theta'|_k^2 in one class."""

    N: int
    k: int
    alpha: float
    eta: np.ndarray
    phi: np.ndarray | None = None  # angle from the first-k subspace
    samples: np.ndarray | None = None
    raw: np.ndarray | None = None  # fine-grid values before extrapolation

    @property
    def eta1(self) -> float:
        return float(self.eta[0])


def sprime_eigen(params: ProblemParams, n_eigs: int = 3, grid_size: int = 1000) -> AngularSpectrum:
    """Lowest eigenvalues on S^{N-1} for the O(k) x O(N-k)-invariant class.

    For k = N the spectrum is ell(ell+N-2) - alpha (spherical harmonics) and
    is returned analytically.
    """
    N, k, alpha = params.N, params.k, params.alpha
    if k == N:
        eta = np.array([ell * (ell + N - 2) - alpha for ell in range(n_eigs)], dtype=float)
        return AngularSpectrum(N, k, alpha, eta)
    A, B = k - 1.0, N - k - 1.0
    _, fine, ext = _converged_pair(A, B, -alpha, grid_size, n_eigs)
    # f is a function of the angle x from the complementary subspace
    phi = HALF_PI - fine.centers[::-1]
    # the invariant measure on S^{N-1} is |S^{k-1}| |S^{N-k-1}| w(x) dx
    area = sphere_area(k) * sphere_area(N - k)
    samples = np.asarray(fine.vectors)[:, ::-1] / math.sqrt(area)
    return AngularSpectrum(N, k, alpha, ext, phi, samples, np.asarray(fine.eigenvalues))


def eta_first_closed_form(params: ProblemParams) -> float:
    """eta_1 = d_k(d_k + N - 2) with d_k = -(k-2)/2 + sqrt(((k-2)/2)^2 - alpha)."""
    dk = indicial_root(params.k - 1.0, -params.alpha)
    return dk * (dk + params.N - 2.0)


# -------------------------------------------------------------- hemisphere

@dataclass(frozen=True)
class HemisphereSpectrum:
    """Class-local eigenvalues of the weighted hemisphere problem.

    ``theta`` is the polar angle from the y-axis (pi/2 is the equator).
    Samples are normalized in L^2(S^N_+, theta_{N+1}^{1-2s}).
    """

    N: int
    s: float
    eta: float
    gammas: np.ndarray
    theta: np.ndarray
    samples: np.ndarray
    equator_values: np.ndarray
    multiplicity: tuple
    raw: np.ndarray = field(default=None)

    @property
    def gamma1(self) -> float:
        return float(self.gammas[0])

    @property
    def exponents(self) -> np.ndarray:
        return np.array([exponent_from_eigenvalue(self.N, self.s, g) for g in self.gammas])

    def rows(self):
        return [(i + 1, g, e) for i, (g, e) in enumerate(zip(self.gammas, self.exponents))]

    def to_csv(self, path):
        return write_csv(path, ["index", "gamma", "exponent"], self.rows())

    def samples_to_csv(self, path):
        header = ["theta"] + [f"Z{i + 1}" for i in range(len(self.gammas))]
        rows = [(t, *self.samples[:, j]) for j, t in enumerate(self.theta)]
        return write_csv(path, header, rows)


def _multiplicities(vals) -> tuple:
    marks = []
    for i, g in enumerate(vals):
        marks.append(int(sum(abs(g - h) < 1e-6 * (1.0 + abs(g)) for h in vals)))
    return tuple(marks)


def hemisphere_eigen(params: ProblemParams, eta: float | None = None, n_eigs: int = 3,
                     grid_size: int = 1000) -> HemisphereSpectrum:
    """Lowest class-local eigenpairs on the upper hemisphere S^N_+.

    ``eta`` is the angular eigenvalue on S^{N-1}; it defaults to eta_1,
    which is -alpha for k = N.
    """
    N, s = params.N, params.s
    if eta is None:
        eta = -params.alpha if params.k == N else sprime_eigen(params, 1, grid_size).eta1
    A, B = N - 1.0, 1.0 - 2.0 * s
    if 0.25 * (A - 1.0) ** 2 + eta < 0.0:
        raise DomainError(f"eta={eta} makes the quadratic form unbounded below")
    _, fine, ext = _converged_pair(A, B, float(eta), grid_size, n_eigs)
    area = sphere_area(N)
    samples = np.asarray(fine.vectors) / math.sqrt(area)
    th = np.asarray(fine.centers)
    # quadratic extrapolation of the last three centres to the equator
    eq = np.array([np.polyval(np.polyfit(th[-3:], row[-3:], 2), HALF_PI) for row in samples])
    return HemisphereSpectrum(N, s, float(eta), ext, th, samples, eq, _multiplicities(ext),
                              np.asarray(fine.eigenvalues))


@dataclass(frozen=True)
class ClassEigenfunction:
    """Closed-form hemisphere eigenfunction of an x-radial class.

    Z(theta) = sign * sin^d(theta) P_m^{(nu,-s)}(cos 2 theta) / norm, with
    the sign chosen so that Z is positive at the equator.
    """

    N: int
    s: float
    eta: float
    m: int

    @property
    def d(self) -> float:
        return indicial_root(self.N - 1.0, self.eta)

    @property
    def nu(self) -> float:
        return self.d + 0.5 * (self.N - 2)

    @property
    def eigenvalue(self) -> float:
        return class_eigenvalue(self.N - 1.0, 1.0 - 2.0 * self.s, self.eta, self.m)

    @property
    def exponent(self) -> float:
        """Homogeneity degree d + 2m of the associated solid solution."""
        return self.d + 2 * self.m

    @property
    def norm(self) -> float:
        m, nu, s = self.m, self.nu, self.s
        # |S^{N-1}| int sin^{N-1+2d} cos^{1-2s} P_m(cos 2t)^2 dt, via the
        # Jacobi norm with x = cos 2t
        val = (0.5 * gamma_fn(m + nu + 1.0) * gamma_fn(m + 1.0 - s)
               / ((2 * m + nu - s + 1.0) * math.factorial(m) * gamma_fn(m + nu - s + 1.0)))
        return math.sqrt(sphere_area(self.N) * val)

    @property
    def _scale(self) -> float:
        return (-1.0) ** self.m / self.norm

    def __call__(self, theta):
        t = np.asarray(theta, dtype=float)
        return self._scale * np.sin(t) ** self.d * jacobi_p(self.m, self.nu, -self.s, np.cos(2 * t))

    def deriv(self, theta):
        t = np.asarray(theta, dtype=float)
        x = np.cos(2 * t)
        P = jacobi_p(self.m, self.nu, -self.s, x)
        dP = jacobi_p_deriv(self.m, self.nu, -self.s, x)
        sd = np.sin(t) ** self.d
        return self._scale * (self.d * np.cos(t) / np.sin(t) * sd * P - 2.0 * np.sin(2 * t) * sd * dP)

    @property
    def equator_value(self) -> float:
        return float(self(HALF_PI))


def gamma_first_closed_form(params: ProblemParams, eta1: float | None = None) -> float:
    """gamma_1 = 2(1-s)[sqrt(p^2 + eta1) - p] + eta1, p = (N-2)/2.

    The k = N case uses eta1 = -alpha.
    """
    if eta1 is None:
        eta1 = -params.alpha if params.k == params.N else eta_first_closed_form(params)
    p = params.p
    rad = p * p + eta1
    if rad < 0.0:
        raise DomainError(f"radicand {rad} is negative")
    return 2.0 * (1.0 - params.s) * (math.sqrt(rad) - p) + eta1


def exponent_from_eigenvalue(N: int, s: float, gamma_eig: float) -> float:
    """gamma = -(N-2s)/2 + sqrt(((N-2s)/2)^2 + gamma_eig)."""
    h = 0.5 * (N - 2.0 * s)
    rad = h * h + gamma_eig
    if not rad > 0.0:
        raise DomainError(f"eigenvalue {gamma_eig} is not above -((N-2s)/2)^2")
    # the rationalized form avoids cancellation for small gamma_eig
    return gamma_eig / (h + math.sqrt(rad))


def eigenvalue_from_exponent(N: int, s: float, gamma: float) -> float:
    """gamma (N - 2s + gamma)."""
    if not gamma > -0.5 * (N - 2.0 * s):
        raise DomainError("exponent must exceed -(N-2s)/2")
    return gamma * (N - 2.0 * s + gamma)


# --------------------------------------------------------------- Hardy audit

@dataclass(frozen=True)
class SphereHardyReport:
    ratios: np.ndarray  # LHS / RHS per trial
    violations: int
    eigen_bound_ok: bool
    gamma1: float
    lower_bound: float

    def to_dict(self):
        return {
            "max_ratio": float(self.ratios.max()),
            "violations": self.violations,
            "gamma1": self.gamma1,
            "lower_bound": self.lower_bound,
            "eigen_bound_ok": self.eigen_bound_ok,
        }


def _hemisphere_rule(N: int, s: float, power_lo: float = 0.0):
    return composite_rule(0.0, HALF_PI, 12, p_lo=N - 1.0 + power_lo, p_hi=1.0 - 2.0 * s,
                          levels_lo=24, levels_hi=24, mid_cells=8)


def hemisphere_inner(N: int, s: float, f, g, rule=None) -> float:
    """|S^{N-1}| int_0^{pi/2} sin^{N-1} cos^{1-2s} f g dtheta for callables f, g."""
    rule = rule or _hemisphere_rule(N, s)
    t = np.asarray(rule.nodes)
    w = np.asarray(rule.weights) * np.sin(t) ** (N - 1) * cos_polar(t) ** (1.0 - 2.0 * s)
    return sphere_area(N) * float(np.dot(w, f(t) * g(t)))


def spherical_hardy_audit(params: ProblemParams, n_trials: int = 100, seed: int = 0,
                          n_terms: int = 6) -> SphereHardyReport:
    """Spherical Hardy inequality on seeded trials depending on theta only.

    For such trials the average of 1/|theta|_k^2 over S^{N-1} equals
    (N-2)/(k-2) / sin^2(theta), which reduces the k < N case to one angle.
    """
    N, k, s = params.N, params.k, params.s
    rng = np.random.default_rng(seed)
    rule = _hemisphere_rule(N, s, -2.0)
    t = np.asarray(rule.nodes)
    w = np.asarray(rule.weights) * np.sin(t) ** (N - 1) * cos_polar(t) ** (1.0 - 2.0 * s)
    jj = np.arange(n_terms)
    C = np.cos(np.outer(2 * jj, t))
    S = -2 * jj[:, None] * np.sin(np.outer(2 * jj, t))
    kfac = ((k - 2) / 2.0) ** 2 * (N - 2.0) / (k - 2.0)
    h2 = (0.5 * (N - 2.0 * s)) ** 2
    ratios = []
    for _ in range(n_trials):
        a = rng.standard_normal(n_terms)
        psi = a @ C
        dpsi = a @ S
        lhs = kfac * np.dot(w, psi * psi / np.sin(t) ** 2)
        rhs = h2 * np.dot(w, psi * psi) + np.dot(w, dpsi * dpsi)
        ratios.append(lhs / rhs)
    ratios = np.array(ratios)
    spec = hemisphere_eigen(params, n_eigs=1)
    lower = -h2
    return SphereHardyReport(ratios, int(np.sum(ratios > 1.0)), spec.gamma1 > lower,
                             spec.gamma1, lower)
