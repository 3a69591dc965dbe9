"""Special functions: Gamma, Bessel J of real order and its zeros, Bessel K.

Scalar helpers (``gamma_fn``, ``bessel_j_zero``) are plain Python; the
array evaluators delegate to the selected kernel backend.
"""
from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from ..errors import ConvergenceError, DomainError
from ..kernels import impl as _k

# Lanczos approximation, g = 7, nine coefficients.
_LANCZOS_G = 7.0
_LANCZOS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def _gamma_scalar(x: float) -> float:
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"Gamma has a pole at {x}")
    if x < 0.5:
        # reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * _gamma_scalar(1.0 - x))
    if x == math.floor(x) and x <= 23.0:
        return float(math.factorial(int(x) - 1))
    z = x - 1.0
    acc = _LANCZOS[0]
    for i in range(1, 9):
        acc += _LANCZOS[i] / (z + i)
    t = z + _LANCZOS_G + 0.5
    # split the power to keep t**(z+0.5) finite for large z
    half = t ** (0.5 * (z + 0.5))
    return math.sqrt(2.0 * math.pi) * half * (half * math.exp(-t)) * acc


def gamma_fn(x):
    """Gamma function for real arguments (scalar or array).

    Raises DomainError at the poles 0, -1, -2, ...
    """
    if np.ndim(x) == 0:
        return _gamma_scalar(float(x))
    arr = np.asarray(x, dtype=float)
    return np.array([_gamma_scalar(v) for v in arr.ravel()]).reshape(arr.shape)


def herbst_constant(N: int, s: float) -> float:
    """Sharp constant 2^{2s} Gamma((N+2s)/4)^2 / Gamma((N-2s)/4)^2."""
    if N < 3:
        raise DomainError("herbst_constant needs N >= 3")
    r = _gamma_scalar((N + 2.0 * s) / 4.0) / _gamma_scalar((N - 2.0 * s) / 4.0)
    return 2.0 ** (2.0 * s) * r * r


# ---------------------------------------------------------------- Bessel J

def bessel_j_pair(nu: float, x):
    """Return (J_nu(x), J_{nu+1}(x)) for nu >= 0, x >= 0 (arrays allowed)."""
    if nu < 0:
        raise DomainError("bessel_j needs nu >= 0")
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0):
        raise DomainError("bessel_j needs x >= 0")
    j0, j1 = _k.jpair(float(nu), xa, 1.0 / _gamma_scalar(nu + 1.0))
    if np.ndim(x) == 0:
        return float(j0), float(j1)
    return j0, j1


def bessel_j(nu: float, x):
    """Bessel function of the first kind J_nu(x), nu >= 0, x >= 0."""
    return bessel_j_pair(nu, x)[0]


def _mcmahon(nu: float, m: int) -> float:
    mu = 4.0 * nu * nu
    b = (m + 0.5 * nu - 0.25) * math.pi
    e = 8.0 * b
    return (
        b
        - (mu - 1.0) / e
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * e ** 3)
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * e ** 5)
    )


def _refine_zero(nu: float, a: float, b: float) -> float:
    """Hybrid bisection/secant on a sign-changing bracket [a, b]."""
    fa = bessel_j(nu, a)
    fb = bessel_j(nu, b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0:
        raise ConvergenceError(f"no sign change in [{a}, {b}] for J_{nu}")
    for it in range(400):
        if b - a <= 2e-16 * b:
            break
        x = b - fb * (b - a) / (fb - fa)
        # every other step bisects, so the bracket shrinks geometrically
        if it % 2 or not (a < x < b):
            x = 0.5 * (a + b)
        fx = bessel_j(nu, x)
        if fx == 0.0:
            return x
        if fa * fx < 0:
            b, fb = x, fx
        else:
            a, fa = x, fx
    x = b - fb * (b - a) / (fb - fa)
    return x if a <= x <= b else 0.5 * (a + b)


# consecutive zeros of J_nu, nu >= 0, are more than 3 apart
_MIN_SPACING = 3.0


@lru_cache(maxsize=256)
def bessel_j_zeros(nu: float, count: int) -> tuple:
    """First ``count`` positive zeros of J_nu (cached, immutable tuple).

    Each zero is bracketed by the McMahon estimate +-0.5.  The bracket is
    accepted only if it changes sign and starts less than the minimal zero
    spacing above the previous zero, which rules out skipping a zero.
    Otherwise the bracket comes from a sign scan starting at the previous
    zero (or at nu, below which J_nu has no positive zero).
    """
    if count < 1:
        raise DomainError("need at least one zero")
    nu = float(nu)
    zeros: list[float] = []
    for m in range(1, count + 1):
        lo = zeros[-1] if zeros else nu
        g = _mcmahon(nu, m)
        a, b = g - 0.5, g + 0.5
        if lo < a and a - lo < _MIN_SPACING and bessel_j(nu, a) * bessel_j(nu, b) < 0:
            zeros.append(_refine_zero(nu, a, b))
            continue
        a = lo + 1e-3 if zeros else max(lo, 1e-3)
        fa = bessel_j(nu, a)
        while True:
            b = a + 0.25
            fb = bessel_j(nu, b)
            if fa * fb <= 0:
                break
            a, fa = b, fb
        zeros.append(_refine_zero(nu, a, b))
    return tuple(zeros)


def bessel_j_zero(nu: float, m: int) -> float:
    """m-th positive zero j_{nu,m} of J_nu (m >= 1)."""
    if m < 1:
        raise DomainError("zero index m must be >= 1")
    return bessel_j_zeros(float(nu), int(m))[m - 1]


# ---------------------------------------------------------------- Bessel K

@lru_cache(maxsize=64)
def k_constants(s: float) -> tuple:
    """Constants consumed by the K-pair kernel for order s in (0, 1)."""
    return (
        math.pi / (2.0 * math.sin(math.pi * s)),
        1.0 / _gamma_scalar(1.0 - s),
        1.0 / _gamma_scalar(1.0 + s),
        1.0 / _gamma_scalar(s),
        1.0 / _gamma_scalar(2.0 - s),
    )


def scaled_k_pair(s: float, z):
    """Return (z^s K_s(z), z^{1-s} K_{1-s}(z)) for 0 < s < 1, z >= 0.

    Both are finite at z = 0 and underflow to exactly 0 for z > 700.
    """
    if not 0.0 < s < 1.0:
        raise DomainError("order s must lie in (0, 1)")
    za = np.asarray(z, dtype=float)
    if np.any(za < 0):
        raise DomainError("argument must be >= 0")
    a, b = _k.kpair(float(s), za, np.array(k_constants(float(s))))
    if np.ndim(z) == 0:
        return float(a), float(b)
    return a, b


def bessel_k(s: float, x):
    """Modified Bessel function K_s(x), 0 < s < 1, x > 0."""
    xa = np.asarray(x, dtype=float)
    if np.any(xa <= 0):
        raise DomainError("bessel_k needs x > 0")
    a, _ = scaled_k_pair(s, xa)
    out = a / xa ** s
    return float(out) if np.ndim(x) == 0 else out


# ------------------------------------------------------ Jacobi polynomials

def jacobi_p(n: int, a: float, b: float, x):
    """Jacobi polynomial P_n^{(a,b)}(x) by the three-term recurrence."""
    x = np.asarray(x, dtype=float)
    p0 = np.ones_like(x)
    if n == 0:
        return p0
    p1 = 0.5 * (a - b) + 0.5 * (a + b + 2.0) * x
    for k in range(2, n + 1):
        c = 2.0 * k + a + b
        a1 = 2.0 * k * (k + a + b) * (c - 2.0)
        a2 = (c - 1.0) * (a * a - b * b)
        a3 = (c - 2.0) * (c - 1.0) * c
        a4 = 2.0 * (k + a - 1.0) * (k + b - 1.0) * c
        p0, p1 = p1, ((a2 + a3 * x) * p1 - a4 * p0) / a1
    return p1


def jacobi_p_deriv(n: int, a: float, b: float, x):
    """Derivative of P_n^{(a,b)} with respect to x."""
    if n == 0:
        return np.zeros_like(np.asarray(x, dtype=float))
    return 0.5 * (n + a + b + 1.0) * jacobi_p(n - 1, a + 1.0, b + 1.0, x)
