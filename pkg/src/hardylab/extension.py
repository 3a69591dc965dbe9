"""Extension profiles, extended fields and the Neumann trace data.

The profile of a mode with eigenvalue mu solves

    h'' + (1-2s)/y h' - mu h = 0,   h(0) = 1,   h(y) -> 0 as y -> infinity,

and is h(y) = 2^{1-s}/Gamma(s) (a y)^s K_s(a y) with a = sqrt(mu).  The
recurrence d/dz[z^s K_s(z)] = -z^s K_{s-1}(z) = -z^s K_{1-s}(z) gives
y^{1-2s} h'(y) = -2^{1-s}/Gamma(s) a^{2s} (a y)^{1-s} K_{1-s}(a y), whose
limit at y = 0 is -c_s mu^s with c_s = 2^{1-2s} Gamma(1-s)/Gamma(s).

Fields expose ``evaluate(t, y)`` returning (U, dU/dt, y^{1-2s} dU/dy) for
an x-radial field, where t = |x|.  The weighted flux is returned instead of
dU/dy because it stays bounded at y = 0 for every s.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import DomainError
from .io import write_csv
from .numerics.quadrature import composite_rule, graded_rule
from .numerics.special import gamma_fn, k_constants, scaled_k_pair
from .params import ProblemParams, neumann_constant, sphere_area
from .sphere import ClassEigenfunction, HALF_PI, cos_polar
from .spectrum import SpectralField, fractional_apply, hs_norm

__all__ = [
    "neumann_constant",
    "h_profile",
    "h_profile_deriv",
    "h_flux",
    "ExtensionProfile",
    "ExtendedField",
    "HomogeneousField",
    "NoSource",
    "PowerLaw",
    "SelfSource",
    "eval_extended",
    "eval_extended_grad",
    "cylinder_energy",
    "extension_residual",
    "weak_form_residual",
    "smooth_test_functions",
]


def _profile_pref(s: float) -> float:
    return 2.0 ** (1.0 - s) / gamma_fn(s)


def _check(mu, s):
    if not mu > 0.0:
        raise DomainError("eigenvalue mu must be positive")
    if not 0.0 < s < 1.0:
        raise DomainError("order s must lie in (0, 1)")


def h_profile(mu: float, s: float, y):
    """Extension profile h(y) for eigenvalue mu; exactly 0 once sqrt(mu) y > 700."""
    _check(mu, s)
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0):
        raise DomainError("y must be >= 0")
    a, _ = scaled_k_pair(s, math.sqrt(mu) * ya)
    return _profile_pref(s) * a


def h_flux(mu: float, s: float, y):
    """y^{1-2s} h'(y), finite at y = 0 where it equals -c_s mu^s."""
    _check(mu, s)
    ya = np.asarray(y, dtype=float)
    if np.any(ya < 0):
        raise DomainError("y must be >= 0")
    _, b = scaled_k_pair(s, math.sqrt(mu) * ya)
    return -_profile_pref(s) * mu ** s * b


def h_profile_deriv(mu: float, s: float, y):
    """h'(y) for y > 0."""
    ya = np.asarray(y, dtype=float)
    if np.any(ya <= 0):
        raise DomainError("h' needs y > 0")
    return h_flux(mu, s, ya) / ya ** (1.0 - 2.0 * s)


@dataclass(frozen=True)
class ExtensionProfile:
    """Closed-form profile of one mode."""

    mu: float
    s: float

    def __post_init__(self):
        _check(self.mu, self.s)

    @property
    def prefactor(self) -> float:
        return _profile_pref(self.s)

    def __call__(self, y):
        return h_profile(self.mu, self.s, y)

    def deriv(self, y):
        return h_profile_deriv(self.mu, self.s, y)

    def flux(self, y):
        return h_flux(self.mu, self.s, y)

    @staticmethod
    def underflows(mu: float, y: float) -> bool:
        return math.sqrt(mu) * y > 700.0


# ------------------------------------------------------------------ sources

class NoSource:
    """g = 0."""

    name = "none"

    def _zero(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def trace_density(self, field, t):
        """g (Tr U)^2, the integrand of the trace term of the energy."""
        return self._zero(t)

    def flux_density(self, field, t):
        """Neumann data f with -y^{1-2s} U_y -> c_s f."""
        return self._zero(t)

    def v2_density(self, field, t):
        """(2s g + x.grad g)(Tr U)^2."""
        return self._zero(t)

    def pohozaev_density(self, field, t):
        """Integrand P with trace part of the Pohozaev identity = c_s(int P + boundary)."""
        return self._zero(t)

    def pohozaev_boundary(self, field, r: float) -> float:
        return 0.0

    def sphere_trace(self, field, r: float) -> float:
        """g(r) (Tr U(r))^2, the density of int_{S_r'} g (Tr U)^2."""
        return 0.0

    def flux_exponent(self, field) -> float:
        """Leading power of the Neumann data f at the origin."""
        return 0.0

    def scaled(self, factor):
        return self

    def rescaled(self, s: float, lam: float) -> "NoSource":
        return self

    def __repr__(self):
        return "NoSource()"


@dataclass(frozen=True)
class PowerLaw:
    """g(x) = amp |x|^{-2s+eps}, so x.grad g = (-2s+eps) g."""

    amp: float
    eps: float
    name: str = "power-law"

    def g(self, s, t):
        return self.amp * np.asarray(t, dtype=float) ** (-2.0 * s + self.eps)

    def trace_density(self, field, t):
        u = field.trace(t)
        return self.g(field.s, t) * u * u

    def flux_density(self, field, t):
        return self.g(field.s, t) * field.trace(t)

    def v2_density(self, field, t):
        return self.eps * self.trace_density(field, t)

    def pohozaev_density(self, field, t):
        # (N g + x.grad g) u^2 / 2
        return 0.5 * (field.N - 2.0 * field.s + self.eps) * self.trace_density(field, t)

    def pohozaev_boundary(self, field, r: float) -> float:
        # -(r/2) int_{S_r'} g u^2 dS'
        return -0.5 * r * sphere_area(field.N) * r ** (field.N - 1) * self.sphere_trace(field, r)

    def sphere_trace(self, field, r: float) -> float:
        return float(self.trace_density(field, np.array([r]))[0])

    def flux_exponent(self, field) -> float:
        return field.t_exponent - 2.0 * field.s + self.eps

    def scaled(self, factor):
        return PowerLaw(self.amp * factor, self.eps)

    def rescaled(self, s: float, lam: float) -> "PowerLaw":
        """Potential lam^{2s} g(lam x) of the blown-up problem."""
        return PowerLaw(self.amp * lam ** self.eps, self.eps)


class SelfSource:
    """The field's own Neumann data f, with -y^{1-2s} U_y -> c_s f.

    A truncated spectral field solves the extension problem exactly for
    f = L^s u.  Writing g = f / u gives g u^2 = f u and
    (x.grad g) u^2 = t (f' u - f u'); the trace part of the Pohozaev
    identity is -c_s int f (x.grad u) dx.
    """

    name = "self"

    def trace_density(self, field, t):
        return field.source(t) * field.trace(t)

    def flux_density(self, field, t):
        return field.source(t)

    def v2_density(self, field, t):
        t = np.asarray(t, dtype=float)
        f = field.source(t)
        u = field.trace(t)
        return 2.0 * field.s * f * u + t * (field.source_deriv(t) * u - f * field.trace_deriv(t))

    def pohozaev_density(self, field, t):
        t = np.asarray(t, dtype=float)
        return -field.source(t) * t * field.trace_deriv(t)

    def pohozaev_boundary(self, field, r: float) -> float:
        return 0.0

    def sphere_trace(self, field, r: float) -> float:
        return float(self.trace_density(field, np.array([r]))[0])

    def flux_exponent(self, field) -> float:
        return field.t_exponent

    def scaled(self, factor):
        raise DomainError("the self source cannot be rescaled")

    def rescaled(self, s: float, lam: float) -> "SelfSource":
        return self

    def __repr__(self):
        return "SelfSource()"


# ------------------------------------------------------------------- fields

class _FieldBase:
    """Shared helpers; subclasses implement ``evaluate`` and the traces."""

    N: int
    s: float
    alpha: float

    @property
    def half_gap(self) -> float:
        return 0.5 * (self.N - 2.0 * self.s)

    def value(self, t, y):
        return self.evaluate(t, y, gradient=False)[0]

    def grad(self, t, y):
        """(dU/dt, dU/dy) for y > 0."""
        _, ut, fy = self.evaluate(t, y)
        return ut, fy / np.asarray(y, dtype=float) ** (1.0 - 2.0 * self.s)

    def samples_to_csv(self, path, t, y):
        t = np.asarray(t, dtype=float).ravel()
        y = np.asarray(y, dtype=float).ravel()
        u, ut, fy = self.evaluate(t, y)
        with np.errstate(divide="ignore"):
            uy = np.where(y > 0, fy / np.where(y > 0, y, 1.0) ** (1.0 - 2.0 * self.s), np.nan)
        rows = zip(t, y, u, ut, uy)
        return write_csv(path, ["t", "y", "U", "dUdt", "dUdy"], rows)


class ExtendedField(_FieldBase):
    """Extension U(x, y) = sum u_n Y_n(x) h_n(y) of an x-radial spectral field."""

    def __init__(self, sfield: SpectralField, source=None):
        """``source`` defaults to the field's own Neumann data, for which the
        truncated series is an exact solution.  ``target_source`` is the
        power law recorded by a Galerkin solve (None otherwise)."""
        if sfield.catalog.ells != (0,):
            raise DomainError("extended fields are evaluated on x-radial catalogs only")
        self.spectral = sfield
        P = sfield.params
        self.params = P
        self.N, self.s, self.alpha = P.N, P.s, P.alpha
        self.nu = sfield.catalog.nu
        self.p = P.p
        self.zeros = np.ascontiguousarray(sfield.catalog.zeros)
        self.weights = np.ascontiguousarray(sfield.coefficients * sfield.catalog.c_norm)
        self._inv_gamma = 1.0 / gamma_fn(self.nu + 1.0)
        self._pref = _profile_pref(self.s)
        self._kc = np.array(k_constants(self.s))
        self._src = fractional_apply(sfield, self.s)
        self.jmax = float(self.zeros[np.nonzero(self.weights)].max()) if np.any(self.weights) else 1.0
        meta = sfield.meta
        self.target_source = None
        if "g_amp" in meta and "g_eps" in meta:
            self.target_source = PowerLaw(float(meta["g_amp"]), float(meta["g_eps"]))
        self.default_source = SelfSource() if source is None else source

    @property
    def t_exponent(self) -> float:
        """Leading power of U in t near the y-axis."""
        return self.nu - self.p

    @property
    def rho_exponent(self) -> float:
        """Leading homogeneity of U at the origin."""
        return self.nu - self.p

    @property
    def is_zero(self) -> bool:
        return not np.any(self.weights)

    def evaluate(self, t, y, gradient: bool = True):
        t = np.asarray(t, dtype=float)
        y = np.broadcast_to(np.asarray(y, dtype=float), t.shape)
        if np.any(t <= 0):
            raise DomainError("evaluation needs t > 0")
        if np.any(y < 0):
            raise DomainError("evaluation needs y >= 0")
        return kernels.impl.radial_field(
            t, np.ascontiguousarray(y), self.nu, self.p, self.s, self.zeros, self.weights,
            self._inv_gamma, self._pref, self._kc, gradient, kernels.thread_count(),
        )

    def trace(self, t):
        return self.spectral.evaluate(t)

    def trace_deriv(self, t):
        return self.spectral.derivative(t)

    def source(self, t):
        """f = L^s u, so that -y^{1-2s} U_y -> c_s f at y = 0."""
        return self._src.evaluate(t)

    def source_deriv(self, t):
        return self._src.derivative(t)

    def energy_exact(self) -> float:
        """c_s ||u||^2_{H^s} (the value the cylinder energy must reproduce)."""
        return neumann_constant(self.s) * hs_norm(self.spectral, self.s) ** 2


class HomogeneousField(_FieldBase):
    """Solid solution V = sum a_m rho^{gamma_m} Z_m(theta) of one x-radial class.

    Each Z_m is the closed-form hemisphere eigenfunction with eigenvalue
    gamma_m (N - 2s + gamma_m), so V solves the extension equation with
    zero Neumann data.  theta is the angle from the y-axis.
    """

    def __init__(self, params: ProblemParams, amplitudes, eta: float | None = None):
        self.params = params
        self.N, self.s, self.alpha = params.N, params.s, params.alpha
        self.eta = -params.alpha if eta is None else float(eta)
        amps = np.atleast_1d(np.asarray(amplitudes, dtype=float))
        self.amplitudes = amps
        self.Z = [ClassEigenfunction(self.N, self.s, self.eta, m) for m in range(len(amps))]
        self.gammas = np.array([z.exponent for z in self.Z])
        self.jmax = 1.0
        self.default_source = NoSource()
        self.target_source = None

    @classmethod
    def single(cls, params: ProblemParams, m: int = 0, eta: float | None = None):
        a = np.zeros(m + 1)
        a[m] = 1.0
        return cls(params, a, eta)

    @property
    def gamma(self) -> float:
        """Exponent of the lowest active component."""
        return float(self.gammas[np.nonzero(self.amplitudes)[0][0]])

    @property
    def t_exponent(self) -> float:
        return self.Z[0].d

    @property
    def rho_exponent(self) -> float:
        return self.gamma

    @property
    def is_zero(self) -> bool:
        return not np.any(self.amplitudes)

    def _polar(self, t, y):
        rho = np.hypot(t, y)
        th = np.arctan2(t, y)
        return rho, th

    def evaluate(self, t, y, gradient: bool = True):
        t = np.asarray(t, dtype=float)
        y = np.broadcast_to(np.asarray(y, dtype=float), t.shape)
        if np.any(t <= 0):
            raise DomainError("evaluation needs t > 0")
        rho, th = self._polar(t, y)
        u = np.zeros_like(t)
        ur = np.zeros_like(t)
        uth = np.zeros_like(t)
        for a, g, Z in zip(self.amplitudes, self.gammas, self.Z):
            if a == 0.0:
                continue
            zr = Z(th)
            u += a * rho ** g * zr
            if gradient:
                ur += a * g * rho ** (g - 1.0) * zr
                uth += a * rho ** (g - 1.0) * Z.deriv(th)
        if not gradient:
            return u, np.zeros_like(t), np.zeros_like(t)
        st, ct = np.sin(th), np.cos(th)
        ut = st * ur + ct * uth
        uy = ct * ur - st * uth
        return u, ut, y ** (1.0 - 2.0 * self.s) * uy

    def trace(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, g, Z in zip(self.amplitudes, self.gammas, self.Z):
            out += a * t ** g * Z.equator_value
        return out

    def trace_deriv(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for a, g, Z in zip(self.amplitudes, self.gammas, self.Z):
            out += a * g * t ** (g - 1.0) * Z.equator_value
        return out

    def source(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def source_deriv(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


def eval_extended(field, t, y):
    """U(t, y); t = 0 returns +-inf for singular fields and the limit otherwise."""
    t = np.asarray(t, dtype=float)
    y = np.broadcast_to(np.asarray(y, dtype=float), t.shape)
    at0 = t == 0.0
    if not np.any(at0):
        return field.value(t, y)
    out = np.empty_like(t)
    if np.any(~at0):
        out[~at0] = field.value(t[~at0], y[~at0])
    e = field.t_exponent
    tiny = 1e-300
    if e < 0:
        # value at a tiny radius fixes the sign of the divergence
        probe = field.value(np.full(int(at0.sum()), 1e-8), y[at0])
        out[at0] = np.where(probe == 0, 0.0, np.sign(probe) * np.inf)
    elif e > 0:
        out[at0] = 0.0
    else:
        out[at0] = field.value(np.full(int(at0.sum()), tiny ** 0.5), y[at0])
    return out


def eval_extended_grad(field, t, y):
    """(dU/dt, dU/dy) at points with t > 0 and y > 0."""
    return field.grad(t, y)


# ------------------------------------------------------------------ energy

def _y_rule(s: float, y_max: float, levels: int = 48, n: int = 12):
    return graded_rule(0.0, y_max, -abs(1.0 - 2.0 * s), levels=levels, n=n)


def _t_rule(field, n: int = 12):
    e = field.t_exponent
    p_lo = field.N - 3.0 + 2.0 * e
    cells = max(8, int(math.ceil(field.jmax / 2.0)))
    return composite_rule(0.0, 1.0, n, p_lo=p_lo, levels_lo=30, mid_cells=cells, zone=0.1)


def _tail_estimate(field: ExtendedField, y_max: float) -> float:
    """Exact energy of the part y > y_max.

    The x-parts are orthogonal for both the L^2 and the Hardy form, and
    int_Y^inf y^{1-2s}(mu h^2 + h'^2) dy = -h(Y) Y^{1-2s} h'(Y) after one
    integration by parts, so the tail is a finite sum.
    """
    s = field.s
    tail = 0.0
    for c, mu in zip(field.spectral.coefficients, field.spectral.catalog.mu):
        if c != 0.0:
            tail -= c * c * float(h_profile(mu, s, y_max)) * float(h_flux(mu, s, y_max))
    return tail


def cylinder_energy(field: ExtendedField, y_max: float | None = None) -> float:
    """int over B_1 x (0, inf) of y^{1-2s}(|grad U|^2 - alpha U^2/|x|^2) by quadrature.

    The y-range is cut at ``y_max`` (chosen from the slowest profile when
    omitted); the discarded tail must be below 1e-10 of the total.
    """
    if field.is_zero:
        return 0.0
    s = field.s
    jmin = float(field.zeros[np.nonzero(field.weights)].min())
    if y_max is None:
        y_max = 16.0 / jmin
    exact_scale = max(field.energy_exact(), 1e-300)
    tail = _tail_estimate(field, y_max)
    if tail > 1e-10 * exact_scale:
        need = y_max
        while _tail_estimate(field, need) > 1e-10 * exact_scale:
            need *= 1.25
        raise DomainError(f"y_max={y_max} leaves a tail of {tail:.3g}; use y_max >= {need:.4g}")
    tr = _t_rule(field)
    yr = _y_rule(s, y_max)
    tn = np.asarray(tr.nodes)
    tw = np.asarray(tr.weights) * tn ** (field.N - 1)
    yn = np.asarray(yr.nodes)
    yw = np.asarray(yr.weights)
    total = 0.0
    # one y-row at a time keeps memory flat; rows are summed in order
    for yi, wyi in zip(yn, yw):
        u, ut, fy = field.evaluate(tn, np.full_like(tn, yi))
        wt = yi ** (1.0 - 2.0 * s)
        integrand = wt * (ut * ut - field.alpha * u * u / (tn * tn)) + fy * fy / wt
        total += wyi * float(np.dot(tw, integrand))
    return sphere_area(field.N) * total


# ------------------------------------------------------- equation residuals

def extension_residual(field, t, y, h: float = 1e-4):
    """Relative residual of div(y^{1-2s} grad U) + y^{1-2s} alpha U / t^2.

    Fluxes come from the analytic first derivatives; their divergence is
    taken with fourth-order centred differences (step h relative to t, y).
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    s, N = field.s, field.N
    ht = h * t
    hy = h * y

    def ft(tt):
        _, ut, _ = field.evaluate(tt, y)
        return tt ** (N - 1) * y ** (1 - 2 * s) * ut

    def fy(yy):
        return field.evaluate(t, yy)[2]

    def d4(f, x, dx):
        return (-f(x + 2 * dx) + 8 * f(x + dx) - 8 * f(x - dx) + f(x - 2 * dx)) / (12 * dx)

    term_t = d4(ft, t, ht) / t ** (N - 1)
    term_y = d4(fy, y, hy)
    u = field.value(t, y)
    term_p = y ** (1 - 2 * s) * field.alpha * u / (t * t)
    scale = np.abs(term_t) + np.abs(term_y) + np.abs(term_p)
    return np.abs(term_t + term_y + term_p) / np.where(scale > 0, scale, 1.0)


def _polar_ball_rule(N, s, t_exp, rho_exp, n=12):
    """Tensor rule on the half ball B_1^+ in (rho, theta)."""
    th = composite_rule(0.0, HALF_PI, n, p_lo=N - 3.0 + 2.0 * t_exp, p_hi=-abs(1.0 - 2.0 * s),
                        levels_lo=24, levels_hi=30, mid_cells=8)
    rr = composite_rule(0.0, 1.0, n, p_lo=N - 1.0 - 2.0 * s + 2.0 * rho_exp, levels_lo=30,
                        mid_cells=8, zone=0.25)
    return rr, th


def weak_form_residual(field, test_functions, source=None, c_s: float | None = None):
    """Relative residual of the weak extension equation for test functions.

    Each test function is a callable (t, y) -> (Phi, dPhi/dt, dPhi/dy),
    x-radial and vanishing on the curved boundary of B_1^+.  The residual
    is |a(U, Phi) - c_s int f Phi(x, 0) dx| divided by the Cauchy-Schwarz
    scale sqrt(a_0(U, U) a_0(Phi, Phi)) of the weighted Dirichlet form,
    maximized over the test functions.
    """
    N, s = field.N, field.s
    c_s = neumann_constant(s) if c_s is None else c_s
    source = source or SelfSource()
    rr, th = _polar_ball_rule(N, s, field.t_exponent, field.rho_exponent)
    rho = np.asarray(rr.nodes)
    wr = np.asarray(rr.weights) * rho ** N
    ang = np.asarray(th.nodes)
    wa = np.asarray(th.weights) * np.sin(ang) ** (N - 1)
    R, TH = np.meshgrid(rho, ang, indexing="ij")
    T = R * np.sin(TH)
    Y = R * cos_polar(TH)
    W = np.outer(wr, wa) * Y ** (1.0 - 2.0 * s)
    u, ut, fy = field.evaluate(T.ravel(), Y.ravel())
    u = u.reshape(T.shape)
    ut = ut.reshape(T.shape)
    uy = fy.reshape(T.shape) / Y ** (1.0 - 2.0 * s)
    tr = composite_rule(0.0, 1.0, 16, p_lo=N - 1.0 + field.t_exponent - 2.0 * s + 0.0,
                        levels_lo=30, mid_cells=max(8, int(field.jmax)), zone=0.1)
    tn = np.asarray(tr.nodes)
    tw = np.asarray(tr.weights) * tn ** (N - 1)
    f = source.flux_density(field, tn)
    area = sphere_area(N)
    worst = 0.0
    for phi in test_functions:
        P, Pt, Py = phi(T, Y)
        bulk = area * float(np.sum(W * (ut * Pt + uy * Py - field.alpha * u * P / (T * T))))
        P0, _, _ = phi(tn, np.zeros_like(tn))
        bnd = c_s * area * float(np.dot(tw, f * P0))
        scale = area * float(np.sqrt(np.sum(W * (ut ** 2 + uy ** 2)) * np.sum(W * (Pt ** 2 + Py ** 2))))
        res = abs(bulk - bnd) / max(scale, 1e-300)
        worst = max(worst, res)
    return worst


def smooth_test_functions(n: int, seed: int = 0, degree: int = 3):
    """Seeded x-radial test functions (1 - t^2 - y^2)^2 q(t^2, y)."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        a = rng.standard_normal((degree, degree))

        def phi(t, y, a=a):
            t = np.asarray(t, dtype=float)
            y = np.asarray(y, dtype=float)
            b = 1.0 - t * t - y * y
            q = np.zeros_like(t)
            qt = np.zeros_like(t)
            qy = np.zeros_like(t)
            for i in range(degree):
                for j in range(degree):
                    c = a[i, j]
                    q += c * t ** (2 * i) * y ** j
                    if i:
                        qt += c * 2 * i * t ** (2 * i - 1) * y ** j
                    if j:
                        qy += c * j * t ** (2 * i) * y ** (j - 1)
            val = b * b * q
            dt = -4.0 * t * b * q + b * b * qt
            dy = -4.0 * y * b * q + b * b * qy
            return val, dt, dy

        out.append(phi)
    return out
