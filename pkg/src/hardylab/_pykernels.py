"""Pure numpy implementation of the hot kernels.

This module mirrors ``_ckernels.pyx`` function for function.  It is used
when the compiled extension is unavailable, or when the environment
variable ``HARDYLAB_BACKEND=python`` is set.

Conventions shared by both backends
-----------------------------------
``jpair(nu, x, inv_gamma)``
    Returns ``(J_nu(x), J_{nu+1}(x))`` for ``x >= 0``; ``inv_gamma`` is
    ``1/Gamma(nu+1)`` (computed once by the caller).
``kpair(s, z, consts)``
    Returns ``(z^s K_s(z), z^{1-s} K_{1-s}(z))`` for ``z >= 0``; at ``z=0``
    the finite limits ``2^{sigma-1} Gamma(sigma)`` are returned.
``radial_field(t, y, ...)``
    Sums ``w_m Y_m(t) h_m(y)`` over modes in index order and returns the
    value, the t-derivative and the weighted flux ``y^{1-2s} dU/dy``.
"""
from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

_EPS = 1e-17
_KUNDERFLOW = 700.0


def series_limit(nu: float) -> float:
    """Largest argument handled by the ascending series."""
    return 6.0


def miller_half_order(x: float) -> int:
    """Half the number of backward-recurrence steps used at argument x."""
    return int(math.ceil((x + 15.0 * (0.5 * x) ** (1.0 / 3.0) + 10.0) / 2.0))


def asymptotic_limit(nu: float) -> float:
    """Smallest argument handled by the Hankel expansion."""
    return 25.0 + (nu + 1.0) ** 2


def _j_series(nu, x, ig):
    h = 0.5 * x
    q = -h * h
    # x^nu 2^-nu stays finite where h = x/2 underflows
    t0 = np.power(x, nu) * 0.5 ** nu * ig
    t1 = t0 * h / (nu + 1.0)
    s0 = t0.copy()
    s1 = t1.copy()
    kmax = int(h.max()) + 40 if h.size else 0
    for k in range(kmax):
        t0 = t0 * q / ((k + 1.0) * (k + 1.0 + nu))
        t1 = t1 * q / ((k + 1.0) * (k + 2.0 + nu))
        s0 += t0
        s1 += t1
        if k > h.max() and np.all(np.abs(t0) <= _EPS * np.abs(s0)) and np.all(
            np.abs(t1) <= _EPS * np.abs(s1)
        ):
            break
    return s0, s1


def _hankel_pq(nu, x):
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, 200):
        new = term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * x)
        # stop at the smallest term of the divergent expansion
        active &= np.abs(new) < np.abs(term)
        if not active.any():
            break
        sign = -1.0 if (k // 2) % 2 == 1 else 1.0
        if k % 2 == 0:
            p = np.where(active, p + sign * new, p)
        else:
            q = np.where(active, q + sign * new, q)
        term = new
        active &= np.abs(new) > _EPS
    return p, q


def _j_asymptotic(nu, x):
    out = []
    for order in (nu, nu + 1.0):
        p, q = _hankel_pq(order, x)
        chi = x - (0.5 * order + 0.25) * math.pi
        out.append(np.sqrt(2.0 / (math.pi * x)) * (p * np.cos(chi) - q * np.sin(chi)))
    return out[0], out[1]


def _j_miller(nu, x, ig):
    xmax = float(x.max())
    kk = miller_half_order(xmax)
    # d_k = Gamma(nu+k)/(k! Gamma(nu+1)), d_1 = 1
    d = np.empty(kk + 1)
    d[0] = 0.0
    d[1] = 1.0
    for k in range(1, kk):
        d[k + 1] = d[k] * (nu + k) / (k + 1.0)
    fp1 = np.zeros_like(x)
    f = np.full_like(x, 1e-280)
    norm = np.zeros_like(x)
    top = 2 * kk
    norm += (nu + top) * d[kk] * f
    fnu1 = np.zeros_like(x)
    for n in range(top, 0, -1):
        order = nu + n
        fm1 = (2.0 * order / x) * f - fp1
        fp1, f = f, fm1
        m = n - 1
        if m == 1:
            fnu1 = f.copy()
        if m % 2 == 0:
            k = m // 2
            c = 1.0 if k == 0 else (nu + 2 * k) * d[k]
            norm += c * f
        big = np.abs(f) > 1e250
        if big.any():
            scale = np.where(big, 1e-250, 1.0)
            f *= scale
            fp1 *= scale
            norm *= scale
            fnu1 *= scale
    scale = np.exp(nu * np.log(0.5 * x)) * ig / norm
    return f * scale, fnu1 * scale


def jpair(nu: float, x, inv_gamma: float):
    x = np.asarray(x, dtype=float)
    shape = x.shape
    x = x.ravel()
    j0 = np.empty_like(x)
    j1 = np.empty_like(x)
    zero = x == 0.0
    j0[zero] = 1.0 if nu == 0.0 else 0.0
    j1[zero] = 0.0
    xs = series_limit(nu)
    xa = asymptotic_limit(nu)
    sel = (~zero) & (x <= xs)
    if sel.any():
        j0[sel], j1[sel] = _j_series(nu, x[sel], inv_gamma)
    sel = (x > xs) & (x < xa)
    if sel.any():
        j0[sel], j1[sel] = _j_miller(nu, x[sel], inv_gamma)
    sel = (x > xs) & (x >= xa)
    if sel.any():
        j0[sel], j1[sel] = _j_asymptotic(nu, x[sel])
    return j0.reshape(shape), j1.reshape(shape)


def _k_series(s, z, consts):
    cpi, r1ms, r1ps, rs, r2ms = consts
    h2 = (0.5 * z) ** 2
    with np.errstate(divide="ignore"):
        lh = np.where(z > 0, np.log(0.5 * z), -np.inf)
    res = []
    for sigma, a0, b0 in ((s, r1ms, r1ps), (1.0 - s, rs, r2ms)):
        a = np.full_like(z, a0)
        b = np.full_like(z, b0)
        sa = a.copy()
        sb = b.copy()
        for k in range(40):
            a = a * h2 / ((k + 1.0) * (k + 1.0 - sigma))
            b = b * h2 / ((k + 1.0) * (k + 1.0 + sigma))
            sa += a
            sb += b
            if np.all(np.abs(a) <= _EPS * np.abs(sa)) and np.all(np.abs(b) <= _EPS * np.abs(sb)):
                break
        res.append(cpi * 2.0 ** sigma * (sa - np.exp(2.0 * sigma * lh) * sb))
    return res[0], res[1]


def _k_steed(s, x):
    """Steed/Temme continued fraction for K_mu, K_{mu+1}, |mu| <= 1/2."""
    mu = -s if s <= 0.5 else s - 1.0
    b = 2.0 * (1.0 + x)
    d = 1.0 / b
    h = d.copy()
    delh = d.copy()
    q1 = np.zeros_like(x)
    q2 = np.ones_like(x)
    a1 = 0.25 - mu * mu
    q = np.full_like(x, a1)
    c = np.full_like(x, a1)
    a = np.full_like(x, -a1)
    ssum = 1.0 + q * delh
    active = np.ones(x.shape, dtype=bool)
    for i in range(2, 400):
        a = a - 2.0 * (i - 1)
        c = -a * c / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + c * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = np.where(active, h + delh, h)
        dels = q * delh
        ssum = np.where(active, ssum + dels, ssum)
        active &= np.abs(dels / ssum) >= 1e-16
        if not active.any():
            break
    h = a1 * h
    kmu = np.sqrt(math.pi / (2.0 * x)) * np.exp(-x) / ssum
    kmu1 = kmu * (mu + x + 0.5 - h) / x
    if s <= 0.5:
        ks, k1s = kmu, kmu1
    else:
        ks, k1s = kmu1, kmu
    return ks * x ** s, k1s * x ** (1.0 - s)


def kpair(s: float, z, consts):
    z = np.asarray(z, dtype=float)
    shape = z.shape
    z = z.ravel()
    a = np.zeros_like(z)
    b = np.zeros_like(z)
    small = z <= 2.0
    if small.any():
        a[small], b[small] = _k_series(s, z[small], consts)
    mid = (z > 2.0) & (z <= _KUNDERFLOW)
    if mid.any():
        a[mid], b[mid] = _k_steed(s, z[mid])
    return a.reshape(shape), b.reshape(shape)


def radial_field(t, y, nu, p, s, zeros, weights, inv_gamma, pref, kconsts, gradient=True,
                 threads=1):
    """Evaluate the truncated extension series at points (t, y), t > 0.

    Parameters are the Bessel order ``nu``, the power ``p=(N-2)/2`` with
    ``Y_m(t) = t^{-p} J_nu(j_m t)`` (normalization folded into
    ``weights``), the order ``s`` and the profile prefactor
    ``pref = 2^{1-s}/Gamma(s)``.  Modes are summed in index order.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    tp = np.exp(-p * np.log(t))
    delta = nu - p
    u = np.zeros_like(t)
    ut = np.zeros_like(t)
    fy = np.zeros_like(t)
    for j, w in zip(zeros, weights):
        if w == 0.0:
            continue
        jn, jn1 = jpair(nu, j * t, inv_gamma)
        ka, kb = kpair(s, j * y, kconsts)
        hval = pref * ka
        u += w * tp * jn * hval
        if gradient:
            ut += w * tp * (delta / t * jn - j * jn1) * hval
            fy += w * tp * jn * (-pref * j ** (2.0 * s) * kb)
    return u, ut, fy
