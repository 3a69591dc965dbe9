"""Height, energy and frequency of extended fields, with their identities.

For an x-radial field U(t, y) on the half ball B_r^+ write t = rho sin(theta),
y = rho cos(theta), theta being the angle from the y-axis.  The surface
measure of S_rho^+ is |S^{N-1}| rho^N sin^{N-1}(theta) dtheta, so every
sphere integral is one angular quadrature, and bulk integrals are radial
integrals of sphere integrals.

Quantities per radius r (weights y^{1-2s} understood, c_s the Neumann
constant, g the potential of the trace source):

    H(r) = r^{-(N+1-2s)} int_{S_r^+} U^2
    D(r) = r^{-(N-2s)} (int_{B_r^+} |grad U|^2 - alpha U^2/t^2 - c_s int_{B_r'} g u^2)
    N(r) = D / H,  N' = v1 + v2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import ConvergenceError, DomainError
from .extension import NoSource
from .io import write_csv, write_json
from .numerics.quadrature import composite_rule, gauss_rule
from .params import neumann_constant, sphere_area
from .sphere import HALF_PI, cos_polar

__all__ = [
    "default_radii",
    "SphereMoments",
    "sphere_moments",
    "FrequencyProfile",
    "frequency_profile",
    "height",
    "energy",
    "frequency",
    "check_hprime",
    "pohozaev_residual",
    "V2Audit",
    "v2_bound_audit",
    "frequency_upper_bound",
    "HeightBounds",
    "height_bounds",
    "BoundaryHardyReport",
    "hardy_boundary_audit",
    "DoublingReport",
    "doubling_audit",
]

R_MIN = 1e-4
_N_ANG = 10
_N_RAD = 10
_TAIL_LEVELS = 20


def default_radii(r0: float, n: int = 40, r_min: float = R_MIN) -> np.ndarray:
    """n log-spaced radii on [r_min, r0], ascending."""
    if not 0.0 < r_min < r0:
        raise DomainError("need 0 < r_min < r0")
    return np.geomspace(r_min, r0, n)


# ------------------------------------------------------------------ rules

@lru_cache(maxsize=256)
def _angular_rule(N: int, s: float, t_exp: float, mid: int):
    """theta-rule on (0, pi/2) returning nodes and weights times sin^{N-1}."""
    p_hi = -abs(1.0 - 2.0 * s)
    rule = composite_rule(0.0, HALF_PI, _N_ANG, p_lo=N - 3.0 + 2.0 * t_exp,
                          p_hi=p_hi if p_hi != 0.0 else None, levels_lo=20, levels_hi=36,
                          mid_cells=mid, zone=0.1)
    th = np.asarray(rule.nodes)
    w = np.asarray(rule.weights) * np.sin(th) ** (N - 1)
    th.setflags(write=False)
    w.setflags(write=False)
    return th, w


def _mid_cells(field, rho: float) -> int:
    return 4 + int(math.ceil(field.jmax * rho * HALF_PI / 3.0))


def _angular_for(field, rho: float):
    return _angular_rule(field.N, float(field.s), float(field.t_exponent), _mid_cells(field, rho))


def _split_cell(a: float, b: float, jmax: float):
    k_log = int(math.ceil(math.log(b / a) / 0.7))
    k_osc = int(math.ceil(jmax * (b - a) / 3.0))
    if k_log >= k_osc:
        return np.geomspace(a, b, max(k_log, 1) + 1)
    return np.linspace(a, b, k_osc + 1)


class _RadialCells:
    """Gauss cells on (0, r_max] aligned with the requested radii.

    ``cells`` is a list of (nodes, weights) in ascending order and
    ``stops[i]`` is the number of cells lying below radii[i].
    """

    def __init__(self, radii, jmax: float, p_end: float):
        radii = np.asarray(radii, dtype=float)
        leg = gauss_rule("legendre", _N_RAD)
        jac = gauss_rule("jacobi", _N_RAD, 0.0, p_end)
        self.cells = []
        r_first = float(radii[0])
        end = r_first * 0.5 ** _TAIL_LEVELS
        r = jac.mapped(0.0, end)
        x = np.asarray(r.nodes)
        self.cells.append((x, np.asarray(r.weights) / x ** p_end))
        edges = [end * 2.0 ** k for k in range(_TAIL_LEVELS + 1)]
        edges[-1] = r_first
        for a, b in zip(edges[:-1], edges[1:]):
            for c0, c1 in zip(*_pairs(_split_cell(a, b, jmax))):
                q = leg.mapped(c0, c1)
                self.cells.append((np.asarray(q.nodes), np.asarray(q.weights)))
        self.stops = [len(self.cells)]
        for a, b in zip(radii[:-1], radii[1:]):
            if b > a:
                for c0, c1 in zip(*_pairs(_split_cell(a, b, jmax))):
                    q = leg.mapped(c0, c1)
                    self.cells.append((np.asarray(q.nodes), np.asarray(q.weights)))
            self.stops.append(len(self.cells))

    def cumulative(self, cell_sums) -> np.ndarray:
        c = np.cumsum(np.concatenate([[0.0], cell_sums]))
        return c[self.stops]


def _pairs(edges):
    return edges[:-1], edges[1:]


# ---------------------------------------------------------- sphere moments

@dataclass(frozen=True)
class SphereMoments:
    """Weighted integrals over S_r^+ (the factor |S^{N-1}| r^N included)."""

    r: float
    U2: float      # int y^{1-2s} U^2
    grad: float    # int y^{1-2s} |grad U|^2
    pot: float     # int y^{1-2s} U^2 / t^2
    n2: float      # int y^{1-2s} (dU/dnu)^2
    Un: float      # int y^{1-2s} U dU/dnu
    disc: float    # int y^{1-2s} (dU/dnu - kappa U)^2 with kappa = Un / U2

    def form(self, alpha: float) -> float:
        return self.grad - alpha * self.pot


def _moment_arrays(field, rho, th, w):
    """Angular integrals for each rho (array) on the rule (th, w)."""
    s = field.s
    R = rho[:, None]
    st = np.sin(th)[None, :]
    ct = cos_polar(th)[None, :]
    T = R * st
    Y = R * ct
    u, ut, fy = field.evaluate(T.ravel(), Y.ravel())
    shp = T.shape
    u = u.reshape(shp)
    ut = ut.reshape(shp)
    fy = fy.reshape(shp)
    yw = Y ** (1.0 - 2.0 * s)
    return u, ut, fy, yw, st, ct, T


def sphere_moments(field, r: float) -> SphereMoments:
    """Sphere integrals at radius r from the chain rule on (U_t, y^{1-2s} U_y)."""
    th, w = _angular_for(field, r)
    u, ut, fy, yw, st, ct, T = _moment_arrays(field, np.array([float(r)]), th, w)
    u, ut, fy, yw, st, ct, T = u[0], ut[0], fy[0], yw[0], st[0], ct[0], T[0]
    scale = sphere_area(field.N) * r ** field.N
    U2 = scale * float(np.dot(w, yw * u * u))
    grad = scale * float(np.dot(w, yw * ut * ut + fy * fy / yw))
    pot = scale * float(np.dot(w, yw * u * u / (T * T)))
    # y^{1-2s} (dU/dnu)^2 with dU/dnu = sin U_t + cos U_y
    dn = st * ut + ct * fy / yw
    n2 = scale * float(np.dot(w, yw * dn * dn))
    Un = scale * float(np.dot(w, yw * u * dn))
    kappa = Un / U2 if U2 > 0 else 0.0
    e = dn - kappa * u
    disc = scale * float(np.dot(w, yw * e * e))
    return SphereMoments(float(r), U2, grad, pot, n2, Un, disc)


def _bulk_cumulative(field, radii, mass: bool = False):
    """int_{B_r^+} y^{1-2s} |grad U|^2 and y^{1-2s} U^2/t^2 for each radius.

    With ``mass`` the weighted L^2 integral int_{B_r^+} y^{1-2s} U^2 is
    returned as a third array.
    """
    N, s = field.N, field.s
    p_end = N - 1.0 - 2.0 * s + 2.0 * field.rho_exponent
    cells = _RadialCells(radii, field.jmax, p_end)
    g_sums = []
    p_sums = []
    m_sums = []
    area = sphere_area(N)
    for x, wx in cells.cells:
        th, w = _angular_for(field, float(x[-1]))
        u, ut, fy, yw, st, ct, T = _moment_arrays(field, x, th, w)
        G = (yw * ut * ut + fy * fy / yw) @ w
        P = (yw * u * u / (T * T)) @ w
        fac = wx * area * x ** N
        g_sums.append(float(np.dot(fac, G)))
        p_sums.append(float(np.dot(fac, P)))
        if mass:
            m_sums.append(float(np.dot(fac, (yw * u * u) @ w)))
    out = (cells.cumulative(g_sums), cells.cumulative(p_sums))
    if mass:
        out = out + (cells.cumulative(m_sums),)
    return out


def _trace_cumulative(field, radii, densities, p_end):
    """int_{B_r'} density dx = |S^{N-1}| int_0^r t^{N-1} density(t) dt."""
    cells = _RadialCells(radii, field.jmax, p_end)
    area = sphere_area(field.N)
    out = []
    for dens in densities:
        sums = []
        for x, wx in cells.cells:
            sums.append(area * float(np.dot(wx * x ** (field.N - 1), dens(x))))
        out.append(cells.cumulative(sums))
    return out


# ----------------------------------------------------------- the profile

@dataclass
class FrequencyProfile:
    """H, D, N, v1, v2 on an ascending radius grid, plus the raw integrals."""

    r: np.ndarray
    H: np.ndarray
    D: np.ndarray
    N: np.ndarray
    v1: np.ndarray
    v2: np.ndarray
    bulk: np.ndarray       # int_{B_r^+} y^{1-2s}(|grad U|^2 - alpha U^2/t^2)
    bulk_grad: np.ndarray  # int_{B_r^+} y^{1-2s}|grad U|^2
    bulk_pot: np.ndarray   # int_{B_r^+} y^{1-2s} U^2/t^2
    trace: np.ndarray      # int_{B_r'} g u^2
    trace_v2: np.ndarray   # int_{B_r'} (2sg + x.grad g) u^2
    pohozaev_trace: np.ndarray  # trace part of the Pohozaev identity
    moments: list
    params: dict = field(default_factory=dict)

    @property
    def half_gap(self) -> float:
        return 0.5 * (self.params["N"] - 2.0 * self.params["s"])

    def rows(self):
        return list(zip(self.r, self.H, self.D, self.N, self.v1, self.v2))

    def to_csv(self, path):
        return write_csv(path, ["r", "H", "D", "N", "v1", "v2"], self.rows())

    def pohozaev_residuals(self) -> np.ndarray:
        return np.array([_pohozaev_from(self, i) for i in range(len(self.r))])

    def summary(self) -> dict:
        return {
            "r_min": float(self.r[0]),
            "r_max": float(self.r[-1]),
            "N_min": float(self.N.min()),
            "N_max": float(self.N.max()),
            "N_at_r_min": float(self.N[0]),
            "v1_min": float(self.v1.min()),
            "v2_abs_max": float(np.abs(self.v2).max()),
            "lower_barrier": -self.half_gap,
            "params": dict(self.params),
        }

    def to_dict(self):
        return self.summary()

    def write_json(self, path, extra=None):
        d = self.summary()
        if extra:
            d.update(extra)
        return write_json(path, d)


def _pohozaev_from(prof: FrequencyProfile, i: int) -> float:
    m = prof.moments[i]
    r = m.r
    alpha = prof.params["alpha"]
    c_s = prof.params["c_s"]
    lhs = 0.5 * r * m.form(alpha) - r * m.n2 + c_s * prof.pohozaev_trace[i]
    rhs = 0.5 * (prof.params["N"] - 2.0 * prof.params["s"]) * prof.bulk[i]
    den = abs(lhs) + abs(rhs)
    return abs(lhs - rhs) / den if den > 0 else 0.0


def frequency_profile(field, radii=None, source=None, c_s: float | None = None,
                      r0: float | None = None) -> FrequencyProfile:
    """Compute H, D, N, v1, v2 at each radius (ascending, within (0, r0])."""
    N, s, alpha = field.N, field.s, field.alpha
    if r0 is None:
        r0 = field.params.r0
    radii = default_radii(r0) if radii is None else np.sort(np.atleast_1d(np.asarray(radii, dtype=float)))
    if radii[0] <= 0.0 or radii[-1] > r0 * (1.0 + 1e-12):
        raise DomainError(f"radii must lie in (0, r0={r0}]")
    if field.is_zero:
        raise DomainError("the zero field has no frequency")
    source = field.default_source if source is None else source
    c_s = neumann_constant(s) if c_s is None else float(c_s)
    moments = [sphere_moments(field, float(r)) for r in radii]
    U2 = np.array([m.U2 for m in moments])
    if np.any(U2 <= 0.0):
        raise ConvergenceError("H vanished on the grid (quadrature floor)")
    bulk_grad, bulk_pot = _bulk_cumulative(field, radii)
    bulk = bulk_grad - alpha * bulk_pot
    p_tr = N - 1.0 + field.t_exponent + source.flux_exponent(field)
    trace, trace_v2, poh = _trace_cumulative(
        field, radii,
        [lambda t: source.trace_density(field, t),
         lambda t: source.v2_density(field, t),
         lambda t: source.pohozaev_density(field, t)],
        p_tr,
    )
    poh = poh + np.array([source.pohozaev_boundary(field, float(r)) for r in radii])
    H = U2 / radii ** (N + 1.0 - 2.0 * s)
    D = (bulk - c_s * trace) / radii ** (N - 2.0 * s)
    v1 = np.array([2.0 * m.r * m.disc / m.U2 for m in moments])
    v2 = -c_s * trace_v2 / U2
    params = {"N": N, "s": s, "alpha": alpha, "c_s": c_s, "source": repr(source),
              "r0": float(r0)}
    return FrequencyProfile(radii, H, D, D / H, v1, v2, bulk, bulk_grad, bulk_pot, trace,
                            trace_v2, poh, moments, params)


def height(field, r: float, r0: float | None = None) -> float:
    """H(r) = r^{-(N+1-2s)} int_{S_r^+} y^{1-2s} U^2 dS."""
    r0 = field.params.r0 if r0 is None else r0
    if not 0.0 < r <= r0:
        raise DomainError(f"r={r} outside (0, r0={r0}]")
    if field.is_zero:
        return 0.0
    m = sphere_moments(field, r)
    return m.U2 / r ** (field.N + 1.0 - 2.0 * field.s)


def energy(field, r: float, source=None, c_s=None, r0=None) -> float:
    if field.is_zero:
        return 0.0
    return float(frequency_profile(field, [r], source, c_s, r0).D[0])


def frequency(field, r: float, source=None, c_s=None, r0=None) -> float:
    return float(frequency_profile(field, [r], source, c_s, r0).N[0])


def check_hprime(field, radii=None, source=None, c_s=None, rel_step: float = 1e-4,
                 profile: FrequencyProfile | None = None) -> float:
    """max_r |H'_FD - 2D/r| / (|H'_FD| + |2D/r|) with a 4th-order centred difference."""
    prof = profile or frequency_profile(field, radii, source, c_s)
    worst = 0.0
    for r, D in zip(prof.r, prof.D):
        h = rel_step * r
        hs = [height(field, r + k * h, r0=np.inf) for k in (-2, -1, 1, 2)]
        d = (hs[0] - 8.0 * hs[1] + 8.0 * hs[2] - hs[3]) / (12.0 * h)
        ref = 2.0 * D / r
        den = abs(d) + abs(ref)
        if den > 0:
            worst = max(worst, abs(d - ref) / den)
    return worst


def pohozaev_residual(field, r: float, source=None, c_s=None, r0=None) -> float:
    """|LHS - RHS| / (|LHS| + |RHS|) of the Pohozaev identity on B_r^+."""
    prof = frequency_profile(field, [r], source, c_s, r0)
    return _pohozaev_from(prof, 0)


# ------------------------------------------------------------------ audits

@dataclass(frozen=True)
class V2Audit:
    C_fit: float
    per_r: np.ndarray
    drift: float  # relative spread of C(r) over the smallest decade

    def to_dict(self):
        return {"C_fit": self.C_fit, "drift": self.drift}


def v2_bound_audit(profile: FrequencyProfile, eps: float) -> V2Audit:
    """C(r) = |v2| r^{1-eps} / (N + (N-2s)/2); report its max and tail drift."""
    denom = profile.N + profile.half_gap
    per = np.abs(profile.v2) * profile.r ** (1.0 - eps) / denom
    C = float(per.max())
    tail = per[profile.r <= 10.0 * profile.r[0]]
    if C == 0.0 or tail.max() == 0.0:
        drift = 0.0
    else:
        drift = float((tail.max() - tail.min()) / tail.max())
    return V2Audit(C, per, drift)


def frequency_upper_bound(profile: FrequencyProfile, C: float, eps: float) -> float:
    """C1 = -(N-2s)/2 + (N(r0) + (N-2s)/2) exp((C/eps) r0^eps)."""
    h = profile.half_gap
    r0 = float(profile.r[-1])
    return -h + (float(profile.N[-1]) + h) * math.exp(C / eps * r0 ** eps)


@dataclass(frozen=True)
class HeightBounds:
    gamma: float
    K: float
    K_sigma: dict
    tail_ratio_min: float
    tail_ratio_max: float

    @property
    def tail_variation(self) -> float:
        return (self.tail_ratio_max - self.tail_ratio_min) / self.tail_ratio_max

    def to_dict(self):
        return {"gamma": self.gamma, "K": self.K, "K_sigma": {str(k): v for k, v in self.K_sigma.items()},
                "tail_ratio_min": self.tail_ratio_min, "tail_ratio_max": self.tail_ratio_max,
                "tail_variation": self.tail_variation}


def height_bounds(profile: FrequencyProfile, gamma: float, sigmas=(0.1, 0.01)) -> HeightBounds:
    """Constants in K_sigma r^{2 gamma + sigma} <= H(r) <= K r^{2 gamma} on the grid."""
    r, H = profile.r, profile.H
    ratio = H / r ** (2.0 * gamma)
    K = float(ratio.max())
    Ks = {float(sg): float((H / r ** (2.0 * gamma + sg)).min()) for sg in sigmas}
    tail = ratio[r <= 10.0 * r[0]]
    return HeightBounds(float(gamma), K, Ks, float(tail.min()), float(tail.max()))


@dataclass(frozen=True)
class BoundaryHardyReport:
    ratios: np.ndarray
    violations: int
    family_deltas: tuple
    family_ratios: tuple

    def to_dict(self):
        return {"max_ratio": float(self.ratios.max()), "violations": self.violations,
                "family_deltas": list(self.family_deltas), "family_ratios": list(self.family_ratios)}


class _PowerField:
    """U = t^a, independent of y: the near-extremal family of the Hardy bound."""

    def __init__(self, N, s, a):
        self.N, self.s, self.alpha = N, s, 0.0
        self.a = a
        self.jmax = 1.0
        self.t_exponent = a
        self.rho_exponent = a
        self.is_zero = False

    def evaluate(self, t, y, gradient=True):
        t = np.asarray(t, dtype=float)
        return t ** self.a, self.a * t ** (self.a - 1.0), np.zeros_like(t)


def _boundary_hardy_terms(field, r, k):
    """(lhs, rhs) of the boundary Hardy inequality on B_r^+."""
    N, s = field.N, field.s
    grad, pot = _bulk_cumulative(field, [r])
    m = sphere_moments(field, r)
    # average of 1/|theta|_k^2 over S^{N-1} is (N-2)/(k-2)
    lhs = ((k - 2) / 2.0) ** 2 * (N - 2.0) / (k - 2.0) * pot[0]
    rhs = grad[0] + (N - 2.0 * s) / (2.0 * r) * m.U2
    return lhs, rhs


def _boundary_hardy_ratio(field, r, k):
    lhs, rhs = _boundary_hardy_terms(field, r, k)
    return lhs / rhs


def hardy_boundary_audit(params, n_trials: int = 100, seed: int = 0, r: float = 0.5,
                         deltas=(0.2, 0.1, 0.05, 0.01)) -> BoundaryHardyReport:
    """Boundary Hardy inequality on seeded two-mode fields.

    Trials are extensions of random combinations of two of the first four
    x-radial Dirichlet modes (alpha = 0).  Both sides are quadratic in the
    coefficients, so their 4x4 matrices are assembled once by polarization.
    For k = N the family t^{-(N-2)/2+delta} probes sharpness.
    """
    from .extension import ExtendedField
    from .spectrum import SpectralField, radial_catalog

    N, k, s = params.N, params.k, params.s
    base = params.with_(alpha=0.0, k=N)
    n = 4
    cat = radial_catalog(base, n)
    L = np.empty((n, n))
    R = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            c = np.zeros(n)
            c[i] += 1.0
            c[j] += 1.0
            L[i, j], R[i, j] = _boundary_hardy_terms(ExtendedField(SpectralField(cat, c)), r, k)
    d_L, d_R = np.diag(L) / 4.0, np.diag(R) / 4.0
    for i in range(n):
        for j in range(i + 1, n):
            L[i, j] = L[j, i] = 0.5 * (L[i, j] - d_L[i] - d_L[j])
            R[i, j] = R[j, i] = 0.5 * (R[i, j] - d_R[i] - d_R[j])
    np.fill_diagonal(L, d_L)
    np.fill_diagonal(R, d_R)
    rng = np.random.default_rng(seed)
    ratios = []
    for _ in range(n_trials):
        c = np.zeros(n)
        idx = rng.choice(n, size=2, replace=False)
        c[idx] = rng.standard_normal(2)
        ratios.append(float(c @ L @ c) / float(c @ R @ c))
    ratios = np.array(ratios)
    fam = []
    if k == N:
        for d in deltas:
            fam.append(float(_boundary_hardy_ratio(_PowerField(N, s, -(N - 2) / 2.0 + d), r, k)))
    return BoundaryHardyReport(ratios, int(np.sum(ratios > 1.0)), tuple(deltas) if fam else (),
                               tuple(fam))


@dataclass(frozen=True)
class DoublingReport:
    lambdas: np.ndarray
    factors: tuple
    ratios: np.ndarray  # shape (len(lambdas), len(factors))
    C1: float
    violations: int

    def to_dict(self):
        return {"C1": self.C1, "violations": self.violations, "factors": list(self.factors),
                "n_lambda": int(len(self.lambdas))}


def doubling_audit(field, lambdas=None, factors=(1.25, 1.5, 2.0), C1: float | None = None,
                   r0: float | None = None, tol: float = 1e-10) -> DoublingReport:
    """Check R^{2s-N} <= H(R lam)/H(lam) <= R^{2 C1} on a lambda grid.

    Without an explicit C1 the largest frequency over the lambda grid, the
    scaled radii and 20 extra radii up to r0 is used.
    """
    r0 = field.params.r0 if r0 is None else r0
    lambdas = np.geomspace(1e-3, r0 / 2.0, 20) if lambdas is None else np.asarray(lambdas, dtype=float)
    if np.any(lambdas <= 0) or np.any(lambdas > r0 / 2.0 * (1 + 1e-12)):
        raise DomainError("lambda grid must lie in (0, r0/2]")
    N, s = field.N, field.s
    if C1 is None:
        pts = np.unique(np.concatenate([lambdas] + [lambdas * R for R in factors]
                                       + [np.geomspace(lambdas.min(), r0, 20)]))
        C1 = float(frequency_profile(field, pts, r0=r0).N.max())
    H0 = np.array([height(field, lam, r0=r0) for lam in lambdas])
    ratios = np.empty((len(lambdas), len(factors)))
    bad = 0
    for j, R in enumerate(factors):
        HR = np.array([height(field, R * lam, r0=r0) for lam in lambdas])
        q = HR / H0
        ratios[:, j] = q
        lo = R ** (2.0 * s - N)
        hi = R ** (2.0 * C1)
        bad += int(np.sum((q < lo * (1 - tol)) | (q > hi * (1 + tol))))
    return DoublingReport(lambdas, tuple(factors), ratios, float(C1), bad)
