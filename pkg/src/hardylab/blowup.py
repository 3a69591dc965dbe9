"""Blow-up analysis: rescaled fields, vanishing exponent and limit profile.

For a field U with height H, the rescaled family is
V^lam(z) = U(lam z) / sqrt(H(lam)).  Its exponent gamma is read off the
slope of log H, matched to an x-radial hemisphere class Z, and the limit
coefficient beta is computed from the Fourier coefficient
phi(lam) = int_{S^+} theta^{1-2s} U(lam theta) Z(theta) dS together with
Ups(lam) = c_s int_{B_lam'} f Z(pi/2) dx, where f is the Neumann data.

Swapping the order of integration in the two Ups-integrals of the beta
formula gives a single kernel,

    beta(r) = phi(r) / r^gamma
              + c_s Z_eq / (a + 2 gamma) int_{B_r'} f(x) (|x|^{-a-gamma} - |x|^gamma r^{-a-2gamma}) dx,

with a = N - 2s; beta(r) must not depend on r.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .almgren import (
    _RadialCells,
    _angular_for,
    _bulk_cumulative,
    default_radii,
    frequency_profile,
    height,
    sphere_moments,
)
from .errors import DomainError
from .extension import HomogeneousField
from .io import write_csv, write_json
from .params import neumann_constant, sphere_area
from .sphere import (ClassEigenfunction, cos_polar, eigenvalue_from_exponent,
                     exponent_from_eigenvalue, hemisphere_eigen)

__all__ = [
    "dyadic_lambdas",
    "ScaledField",
    "rescaled_field",
    "ExponentFit",
    "exponent_fit",
    "ClassMatch",
    "match_class",
    "fourier_coefficient",
    "upsilon",
    "BetaResult",
    "beta_coefficients",
    "AsymptoticReport",
    "asymptotic_check",
    "convergence_check",
    "Certificate",
    "unique_continuation_probe",
    "BlowupReport",
    "blowup_analysis",
]


def dyadic_lambdas(r0: float, lam_min: float = 1e-4, min_count: int = 10) -> np.ndarray:
    """r0/4, r0/8, ... down to lam_min (continued to min_count values), ascending."""
    out = []
    lam = r0 / 4.0
    while lam >= lam_min * (1 - 1e-12) or len(out) < min_count:
        out.append(lam)
        lam *= 0.5
    return np.array(out[::-1])


# --------------------------------------------------------------- rescaling

class ScaledField:
    """V(z) = amp * U(lam z) for a parent field U, with the same interface."""

    def __init__(self, parent, lam: float, amp: float):
        self.parent = parent
        self.lam = float(lam)
        self.amp = float(amp)
        self.N, self.s, self.alpha = parent.N, parent.s, parent.alpha
        self.params = parent.params
        self.jmax = parent.jmax * self.lam
        self.t_exponent = parent.t_exponent
        self.rho_exponent = parent.rho_exponent
        self.is_zero = parent.is_zero
        self.default_source = parent.default_source.rescaled(self.s, self.lam)
        tgt = getattr(parent, "target_source", None)
        self.target_source = tgt.rescaled(self.s, self.lam) if tgt is not None else None

    def evaluate(self, t, y, gradient: bool = True):
        lam, A = self.lam, self.amp
        u, ut, fy = self.parent.evaluate(lam * np.asarray(t, dtype=float),
                                         lam * np.asarray(y, dtype=float), gradient)
        return A * u, A * lam * ut, A * lam ** (2.0 * self.s) * fy

    def value(self, t, y):
        return self.evaluate(t, y, gradient=False)[0]

    def trace(self, t):
        return self.amp * self.parent.trace(self.lam * np.asarray(t, dtype=float))

    def trace_deriv(self, t):
        return self.amp * self.lam * self.parent.trace_deriv(self.lam * np.asarray(t, dtype=float))

    def source(self, t):
        return self.amp * self.lam ** (2.0 * self.s) * self.parent.source(self.lam * np.asarray(t, dtype=float))

    def source_deriv(self, t):
        lam = self.lam
        return self.amp * lam ** (2.0 * self.s + 1.0) * self.parent.source_deriv(lam * np.asarray(t, dtype=float))


def rescaled_field(field, lam: float) -> ScaledField:
    """V^lam(z) = U(lam z) / sqrt(H(lam)), normalized on the unit half sphere."""
    r0 = field.params.r0
    if not 0.0 < lam <= r0:
        raise DomainError(f"lambda={lam} outside (0, r0={r0}]")
    return ScaledField(field, lam, 1.0 / math.sqrt(height(field, lam)))


class _DiffField:
    """A - B for two fields sharing N, s and alpha."""

    def __init__(self, a, b, jmax, t_exp, rho_exp):
        self.a, self.b = a, b
        self.N, self.s, self.alpha = a.N, a.s, a.alpha
        self.jmax = jmax
        self.t_exponent = t_exp
        self.rho_exponent = rho_exp
        self.is_zero = False

    def evaluate(self, t, y, gradient: bool = True):
        ua, ta, fa = self.a.evaluate(t, y, gradient)
        ub, tb, fb = self.b.evaluate(t, y, gradient)
        return ua - ub, ta - tb, fa - fb


# ---------------------------------------------------------------- exponent

@dataclass(frozen=True)
class ExponentFit:
    gamma: float
    width: float
    n_points: int

    def to_dict(self):
        return {"gamma_fit": self.gamma, "width": self.width, "n_points": self.n_points}


def exponent_fit(lams, H) -> ExponentFit:
    """Half the least-squares slope of log H against log lam over the smallest decade.

    The width is twice the standard error of the half-slope (floored at the
    largest absolute residual divided by the log-span), so an exact power
    law gets width 0.
    """
    lams = np.asarray(lams, dtype=float)
    H = np.asarray(H, dtype=float)
    if len(lams) < 10:
        raise DomainError("at least 10 lambda values are required")
    if np.any(H <= 0.0):
        raise DomainError("nonpositive H sample")
    order = np.argsort(lams)
    lams, H = lams[order], H[order]
    sel = lams <= 10.0 * lams[0] * (1 + 1e-12)
    if sel.sum() < 3:
        sel[:3] = True
    x = np.log(lams[sel])
    yv = np.log(H[sel])
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, yv, rcond=None)
    res = yv - A @ coef
    n = len(x)
    sxx = float(np.sum((x - x.mean()) ** 2))
    se = math.sqrt(float(np.sum(res ** 2)) / max(n - 2, 1) / sxx) if n > 2 else 0.0
    width = max(2.0 * 0.5 * se, float(np.abs(res).max()) / (x[-1] - x[0]))
    return ExponentFit(0.5 * float(coef[0]), width, n)


@dataclass(frozen=True)
class ClassMatch:
    index: int              # m of the matched x-radial class
    eigenvalue: float       # hemisphere eigenvalue of that class
    gamma_predicted: float
    distance: float         # |eigenvalue_from_exponent(gamma_fit) - eigenvalue|
    ambiguous: bool
    candidates: tuple

    def to_dict(self):
        return {"class_n": self.index, "eigenvalue": self.eigenvalue,
                "gamma_predicted": self.gamma_predicted, "distance": self.distance,
                "ambiguous": self.ambiguous, "candidates": list(self.candidates)}


def match_class(params, fit: ExponentFit, n_classes: int = 3, grid_size: int = 1000) -> ClassMatch:
    """Nearest x-radial hemisphere eigenvalue to gamma_fit (N - 2s + gamma_fit).

    Two candidates within twice the fit width (mapped to eigenvalue units)
    are reported as ambiguous; no tie-break is applied.
    """
    N, s = params.N, params.s
    spec = hemisphere_eigen(params, n_eigs=n_classes, grid_size=grid_size)
    eigs = np.asarray(spec.gammas)
    target = eigenvalue_from_exponent(N, s, fit.gamma)
    dist = np.abs(eigs - target)
    i = int(np.argmin(dist))
    tol = 2.0 * fit.width * abs(N - 2.0 * s + 2.0 * fit.gamma)
    close = [int(j) for j in np.nonzero(dist <= dist[i] + tol)[0]]
    return ClassMatch(i, float(eigs[i]), exponent_from_eigenvalue(N, s, float(eigs[i])),
                      float(dist[i]), len(close) > 1, tuple(float(e) for e in eigs))


# ----------------------------------------------------------------- Fourier

def theta_grid(field, lam: float) -> np.ndarray:
    """theta nodes used for the Fourier coefficient at scale lam."""
    return _angular_for(field, lam)[0]


def fourier_coefficient(field, Z, lam: float) -> float:
    """phi(lam) = |S^{N-1}| int sin^{N-1} cos^{1-2s} U(lam theta) Z(theta) dtheta.

    ``Z`` is a callable of theta or a pair (theta, values) sampled on
    ``theta_grid(field, lam)``.
    """
    th, w = _angular_for(field, lam)
    if callable(Z):
        z = Z(th)
    else:
        zt, z = (np.asarray(a, dtype=float) for a in Z)
        if zt.shape != th.shape or np.max(np.abs(zt - th)) > 1e-14:
            raise DomainError("Z samples are not on the quadrature grid")
    ct = cos_polar(th)
    u = field.value(lam * np.sin(th), lam * ct)
    wc = w * ct ** (1.0 - 2.0 * field.s)
    return sphere_area(field.N) * float(np.dot(wc, u * z))


def _source_integrals(field, source, radii, kernels_exp, p_first):
    """int_{B_r'} f |x|^q dx for each q in kernels_exp and each r (ascending)."""
    cells = _RadialCells(radii, field.jmax, p_first)
    area = sphere_area(field.N)
    out = []
    for q in kernels_exp:
        sums = [area * float(np.dot(wx * x ** (field.N - 1 + q), source.flux_density(field, x)))
                for x, wx in cells.cells]
        out.append(cells.cumulative(sums))
    return out


def upsilon(field, Z, lams, source=None, c_s: float | None = None) -> np.ndarray:
    """Ups(lam) = c_s Z(pi/2) int_{B_lam'} f dx for ascending lams."""
    source = field.default_source if source is None else source
    c_s = neumann_constant(field.s) if c_s is None else c_s
    lams = np.sort(np.atleast_1d(np.asarray(lams, dtype=float)))
    if source.name == "none":
        return np.zeros_like(lams)
    zeq = float(Z(np.array([0.5 * math.pi]))[0])
    p = field.N - 1.0 + source.flux_exponent(field)
    (I,) = _source_integrals(field, source, lams, [0.0], p)
    return c_s * zeq * I


@dataclass(frozen=True)
class BetaResult:
    radii: np.ndarray
    values: np.ndarray

    @property
    def mean(self) -> float:
        return float(np.mean(self.values))

    @property
    def spread(self) -> float:
        """max |beta(r) - mean| / |mean|."""
        m = self.mean
        dev = float(np.max(np.abs(self.values - m)))
        return dev / abs(m) if m != 0.0 else dev

    def to_dict(self):
        return {"beta": self.mean, "spread": self.spread, "per_r": self.values.tolist(),
                "radii": self.radii.tolist()}


def beta_coefficients(field, Z, radii, gamma: float, source=None,
                      c_s: float | None = None) -> BetaResult:
    """beta(r) for each radius; r-independence is the audit."""
    radii = np.sort(np.atleast_1d(np.asarray(radii, dtype=float)))
    if len(radii) < 1:
        raise DomainError("at least one radius is required")
    source = field.default_source if source is None else source
    c_s = neumann_constant(field.s) if c_s is None else c_s
    N, s = field.N, field.s
    a = N - 2.0 * s
    zeq = float(Z(np.array([0.5 * math.pi]))[0])
    if source.name == "none":
        I1 = I2 = np.zeros_like(radii)
    else:
        p = N - 1.0 + source.flux_exponent(field) - a - gamma
        if p <= -1.0:
            raise DomainError("the Upsilon integral diverges at the origin")
        I1, I2 = _source_integrals(field, source, radii, [-a - gamma, gamma], p)
    phi = np.array([fourier_coefficient(field, Z, r) for r in radii])
    vals = phi / radii ** gamma + c_s * zeq / (a + 2.0 * gamma) * (I1 - radii ** (-a - 2.0 * gamma) * I2)
    return BetaResult(radii, vals)


@dataclass(frozen=True)
class AsymptoticReport:
    slope: float
    required: float
    at_floor: bool
    passed: bool

    def to_dict(self):
        return {"slope": self.slope, "required": self.required, "at_floor": self.at_floor,
                "passed": self.passed}


def asymptotic_check(lams, phi, gamma: float, beta: float, eps: float,
                     floor: float = 1e-10) -> AsymptoticReport:
    """Slope of log|phi - beta lam^gamma| against log lam must reach gamma + 0.8 eps.

    Samples whose remainder is below ``floor`` times |phi| are dropped; if
    fewer than three remain the check passes with the floor flag.
    """
    lams = np.asarray(lams, dtype=float)
    phi = np.asarray(phi, dtype=float)
    rem = np.abs(phi - beta * lams ** gamma)
    keep = rem > floor * np.abs(phi)
    req = gamma + 0.8 * eps
    if keep.sum() < 3:
        return AsymptoticReport(float("inf"), req, True, True)
    slope = float(np.polyfit(np.log(lams[keep]), np.log(rem[keep]), 1)[0])
    return AsymptoticReport(slope, req, bool(keep.sum() < len(lams)), slope >= req)


def convergence_check(field, lams, Z, gamma: float, beta: float):
    """Weighted L^2 and H^1 errors of U(lam z)/lam^gamma against beta |z|^gamma Z on B_1^+.

    Both are relative to the corresponding norms of the limit profile; the
    H^1 norm is the gradient seminorm plus the weighted L^2 norm.
    Returns two arrays (err_L2, err_H1) in the order of ``lams``.
    """
    params = field.params
    lim = HomogeneousField(params, [beta] if Z.m == 0 else
                           [0.0] * Z.m + [beta], Z.eta)
    g_ref, _, m_ref = _bulk_cumulative(lim, [1.0], mass=True)
    eL2, eH1 = [], []
    for lam in np.atleast_1d(lams):
        sc = ScaledField(field, lam, lam ** (-gamma))
        diff = _DiffField(sc, lim, sc.jmax, min(field.t_exponent, lim.t_exponent), gamma)
        g, _, m = _bulk_cumulative(diff, [1.0], mass=True)
        eL2.append(math.sqrt(m[0] / m_ref[0]))
        # full weighted H^1 norm: the seminorm alone vanishes when gamma = 0
        eH1.append(math.sqrt((g[0] + m[0]) / (g_ref[0] + m_ref[0])))
    return np.array(eL2), np.array(eH1)


@dataclass(frozen=True)
class Certificate:
    ratio_min: float
    ratio_max: float
    variation: float
    floor: float
    passed: bool
    diagnosis: str

    def to_dict(self):
        return {"ratio_min": self.ratio_min, "ratio_max": self.ratio_max,
                "variation": self.variation, "floor": self.floor, "passed": self.passed,
                "diagnosis": self.diagnosis}


def unique_continuation_probe(radii, H, gamma: float, max_variation: float = 0.01,
                              floor: float = 1e-290) -> Certificate:
    """r^{-2 gamma} H(r) must stay in [c, C], 0 < c, over the smallest decade."""
    radii = np.asarray(radii, dtype=float)
    H = np.asarray(H, dtype=float)
    if not np.any(H > 0):
        raise DomainError("the zero field has no vanishing order")
    ratio = H / radii ** (2.0 * gamma)
    tail = ratio[radii <= 10.0 * radii.min() * (1 + 1e-12)]
    lo, hi = float(tail.min()), float(tail.max())
    var = (hi - lo) / hi if hi > 0 else float("inf")
    if lo <= 10.0 * floor:
        return Certificate(lo, hi, var, floor, False, "ratio at the quadrature floor (underflow)")
    if var >= max_variation:
        return Certificate(lo, hi, var, floor, False,
                           "ratio drifts on the tail: exponent mismatch or unresolved quadrature")
    return Certificate(lo, hi, var, floor, True, "ok")


# ------------------------------------------------------------------ report

@dataclass
class BlowupReport:
    fit: ExponentFit
    match: ClassMatch
    lambdas: np.ndarray
    H: np.ndarray
    phi: np.ndarray
    upsilon: np.ndarray
    beta: BetaResult
    asymptotic: AsymptoticReport
    err_L2: np.ndarray
    err_H1: np.ndarray
    normalization: np.ndarray
    certificate: Certificate
    meta: dict = field(default_factory=dict)

    @property
    def gamma_fit(self) -> float:
        return self.fit.gamma

    def to_dict(self):
        return {
            "gamma_fit": self.fit.gamma,
            "gamma_width": self.fit.width,
            "gamma_predicted": self.match.gamma_predicted,
            "class_n": self.match.index,
            "class_ambiguous": self.match.ambiguous,
            "class_eigenvalue": self.match.eigenvalue,
            "eigenvalue_from_fit": eigenvalue_from_exponent(self.meta["N"], self.meta["s"], self.fit.gamma),
            "beta": [self.beta.mean],
            "beta_spread": self.beta.spread,
            "beta_per_r": self.beta.values.tolist(),
            "asymptotic": self.asymptotic.to_dict(),
            "errors_L2": self.err_L2.tolist(),
            "errors_H1": self.err_H1.tolist(),
            "normalization_max_error": float(np.max(np.abs(self.normalization - 1.0))),
            "certificate": self.certificate.to_dict(),
            "meta": dict(self.meta),
        }

    def write_json(self, path):
        return write_json(path, self.to_dict())

    def to_csv(self, path):
        rows = zip(self.lambdas, self.H, self.phi, self.upsilon, self.err_L2, self.err_H1)
        return write_csv(path, ["lambda", "H", "phi_0", "upsilon_0", "err_L2", "err_H1"], rows)


def blowup_analysis(field, source=None, lams=None, r_set=None, eps: float | None = None,
                    c_s: float | None = None, n_classes: int = 3) -> BlowupReport:
    """Run the whole blow-up pipeline on an x-radial field."""
    params = field.params
    if params.k != params.N:
        raise DomainError("blow-up classification is implemented for x-radial classes (k = N)")
    if field.is_zero:
        raise DomainError("the zero field has no blow-up limit")
    source = field.default_source if source is None else source
    c_s = neumann_constant(field.s) if c_s is None else c_s
    r0 = params.r0
    lams = dyadic_lambdas(r0) if lams is None else np.sort(np.asarray(lams, dtype=float))
    r_set = np.geomspace(r0 / 8.0, r0, 5) if r_set is None else np.asarray(r_set, dtype=float)
    eps = params.g_eps if eps is None else eps
    H = np.array([height(field, lam) for lam in lams])
    fit = exponent_fit(lams, H)
    match = match_class(params, fit, n_classes)
    Z = ClassEigenfunction(params.N, params.s, -params.alpha, match.index)
    # closed-form exponent of the matched class (the numerical one agrees to ~1e-10)
    gamma = Z.exponent
    phi = np.array([fourier_coefficient(field, Z, lam) for lam in lams])
    ups = upsilon(field, Z, lams, source, c_s)
    beta = beta_coefficients(field, Z, r_set, gamma, source, c_s)
    asym = asymptotic_check(lams, phi, gamma, beta.mean, eps)
    eL2, eH1 = convergence_check(field, lams, Z, gamma, beta.mean)
    norm = np.array([sphere_moments(rescaled_field(field, lam), 1.0).U2 for lam in lams])
    cert = unique_continuation_probe(lams, H, fit.gamma)
    meta = {"N": params.N, "s": params.s, "alpha": params.alpha, "r0": r0, "eps": eps,
            "c_s": c_s, "source": repr(source)}
    return BlowupReport(fit, match, lams, H, phi, ups, beta, asym, eL2, eH1, norm, cert, meta)
