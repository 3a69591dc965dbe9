# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: Bessel J pairs, scaled K pairs and radial field sums.

Algorithms are identical to ``_pykernels`` but evaluated per point in C.
The point loop may run in parallel (OpenMP); each point's mode sum is
accumulated serially in index order, so results do not depend on the
thread count.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport exp, log, sqrt, cos, sin, fabs, ceil, pow, M_PI

cnp.import_array()

BACKEND = "cython"

cdef double _EPS = 1e-17
cdef double _KUNDERFLOW = 700.0
cdef double _SERIES_LIMIT = 6.0


cdef inline double _asym_limit(double nu) noexcept nogil:
    return 25.0 + (nu + 1.0) * (nu + 1.0)


cdef inline int _miller_half(double x) noexcept nogil:
    return <int>ceil((x + 15.0 * pow(0.5 * x, 1.0 / 3.0) + 10.0) / 2.0)


cdef void _j_series(double nu, double x, double ig, double* j0, double* j1) noexcept nogil:
    cdef double h = 0.5 * x
    cdef double q = -h * h
    # x^nu 2^-nu stays finite where h = x/2 underflows
    cdef double t0 = pow(x, nu) * pow(0.5, nu) * ig
    cdef double t1 = t0 * h / (nu + 1.0)
    cdef double s0 = t0, s1 = t1
    cdef int k = 0
    while k < 200:
        t0 = t0 * q / ((k + 1.0) * (k + 1.0 + nu))
        t1 = t1 * q / ((k + 1.0) * (k + 2.0 + nu))
        s0 += t0
        s1 += t1
        if k > h and fabs(t0) <= _EPS * fabs(s0) and fabs(t1) <= _EPS * fabs(s1):
            break
        k += 1
    j0[0] = s0
    j1[0] = s1


cdef double _hankel(double order, double x) noexcept nogil:
    cdef double mu = 4.0 * order * order
    cdef double p = 1.0, q = 0.0, term = 1.0, new, sign
    cdef int k
    for k in range(1, 200):
        new = term * (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (k * 8.0 * x)
        if not (fabs(new) < fabs(term)):
            break
        sign = -1.0 if (k // 2) % 2 == 1 else 1.0
        if k % 2 == 0:
            p += sign * new
        else:
            q += sign * new
        term = new
        if not (fabs(new) > _EPS):
            break
    cdef double chi = x - (0.5 * order + 0.25) * M_PI
    return sqrt(2.0 / (M_PI * x)) * (p * cos(chi) - q * sin(chi))


cdef void _j_miller(double nu, double x, double ig, double* j0, double* j1) noexcept nogil:
    cdef int kk = _miller_half(x)
    cdef int top = 2 * kk
    cdef int k, n, m
    # d_k for k = kk, walked downward: d_{k-1} = d_k * k / (nu + k - 1)
    cdef double dk = 1.0
    for k in range(1, kk):
        dk = dk * (nu + k) / (k + 1.0)
    cdef double fp1 = 0.0, f = 1e-280, fm1, order, c
    cdef double norm = (nu + top) * dk * f
    cdef double fnu1 = 0.0
    cdef int dk_index = kk
    for n in range(top, 0, -1):
        order = nu + n
        fm1 = (2.0 * order / x) * f - fp1
        fp1 = f
        f = fm1
        m = n - 1
        if m == 1:
            fnu1 = f
        if m % 2 == 0:
            k = m // 2
            if k == 0:
                c = 1.0
            else:
                while dk_index > k:
                    dk = dk * dk_index / (nu + dk_index - 1.0)
                    dk_index -= 1
                c = (nu + 2.0 * k) * dk
            norm += c * f
        if fabs(f) > 1e250:
            f *= 1e-250
            fp1 *= 1e-250
            norm *= 1e-250
            fnu1 *= 1e-250
    cdef double scale = exp(nu * log(0.5 * x)) * ig / norm
    j0[0] = f * scale
    j1[0] = fnu1 * scale


cdef void _jpair(double nu, double x, double ig, double* j0, double* j1) noexcept nogil:
    if x == 0.0:
        j0[0] = 1.0 if nu == 0.0 else 0.0
        j1[0] = 0.0
    elif x <= _SERIES_LIMIT:
        _j_series(nu, x, ig, j0, j1)
    elif x < _asym_limit(nu):
        _j_miller(nu, x, ig, j0, j1)
    else:
        j0[0] = _hankel(nu, x)
        j1[0] = _hankel(nu + 1.0, x)


cdef double _k_series_one(double sigma, double z, double cpi, double a0, double b0) noexcept nogil:
    cdef double h2 = 0.25 * z * z
    cdef double a = a0, b = b0, sa = a0, sb = b0
    cdef int k
    for k in range(40):
        a = a * h2 / ((k + 1.0) * (k + 1.0 - sigma))
        b = b * h2 / ((k + 1.0) * (k + 1.0 + sigma))
        sa += a
        sb += b
        if fabs(a) <= _EPS * fabs(sa) and fabs(b) <= _EPS * fabs(sb):
            break
    cdef double tail = 0.0
    if z > 0.0:
        tail = exp(2.0 * sigma * log(0.5 * z)) * sb
    return cpi * pow(2.0, sigma) * (sa - tail)


cdef void _kpair(double s, double z, double* c, double* ka, double* kb) noexcept nogil:
    cdef double mu, b, d, h, delh, q1, q2, a1, q, cc, a, ssum, qnew, dels, kmu, kmu1
    cdef int i
    if z <= 2.0:
        ka[0] = _k_series_one(s, z, c[0], c[1], c[2])
        kb[0] = _k_series_one(1.0 - s, z, c[0], c[3], c[4])
        return
    if z > _KUNDERFLOW:
        ka[0] = 0.0
        kb[0] = 0.0
        return
    mu = -s if s <= 0.5 else s - 1.0
    b = 2.0 * (1.0 + z)
    d = 1.0 / b
    h = d
    delh = d
    q1 = 0.0
    q2 = 1.0
    a1 = 0.25 - mu * mu
    q = a1
    cc = a1
    a = -a1
    ssum = 1.0 + q * delh
    for i in range(2, 400):
        a = a - 2.0 * (i - 1)
        cc = -a * cc / i
        qnew = (q1 - b * q2) / a
        q1 = q2
        q2 = qnew
        q = q + cc * qnew
        b = b + 2.0
        d = 1.0 / (b + a * d)
        delh = (b * d - 1.0) * delh
        h = h + delh
        dels = q * delh
        ssum = ssum + dels
        if fabs(dels / ssum) < 1e-16:
            break
    h = a1 * h
    kmu = sqrt(M_PI / (2.0 * z)) * exp(-z) / ssum
    kmu1 = kmu * (mu + z + 0.5 - h) / z
    if s <= 0.5:
        ka[0] = kmu * pow(z, s)
        kb[0] = kmu1 * pow(z, 1.0 - s)
    else:
        ka[0] = kmu1 * pow(z, s)
        kb[0] = kmu * pow(z, 1.0 - s)


def jpair(double nu, x, double inv_gamma):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    cdef Py_ssize_t n = xv.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o0 = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o1 = np.empty(n)
    cdef double* px = &xv[0] if n else NULL
    cdef double* p0 = &o0[0] if n else NULL
    cdef double* p1 = &o1[0] if n else NULL
    with nogil:
        for i in range(n):
            _jpair(nu, px[i], inv_gamma, &p0[i], &p1[i])
    shape = np.shape(x)
    return o0.reshape(shape), o1.reshape(shape)


def kpair(double s, z, consts):
    cdef cnp.ndarray[cnp.float64_t, ndim=1] zv = np.ascontiguousarray(z, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cv = np.ascontiguousarray(consts, dtype=np.float64)
    cdef Py_ssize_t n = zv.shape[0], i
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o0 = np.empty(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] o1 = np.empty(n)
    cdef double* pz = &zv[0] if n else NULL
    cdef double* p0 = &o0[0] if n else NULL
    cdef double* p1 = &o1[0] if n else NULL
    cdef double* pc = &cv[0]
    with nogil:
        for i in range(n):
            _kpair(s, pz[i], pc, &p0[i], &p1[i])
    shape = np.shape(z)
    return o0.reshape(shape), o1.reshape(shape)


def radial_field(t, y, double nu, double p, double s, zeros, weights,
                 double inv_gamma, double pref, kconsts, bint gradient=True,
                 int threads=1):
    """Compiled counterpart of ``_pykernels.radial_field``."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] tv = np.ascontiguousarray(t, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yv = np.ascontiguousarray(y, dtype=np.float64).ravel()
    cdef cnp.ndarray[cnp.float64_t, ndim=1] jv = np.ascontiguousarray(zeros, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] wv = np.ascontiguousarray(weights, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] cv = np.ascontiguousarray(kconsts, dtype=np.float64)
    cdef Py_ssize_t n = tv.shape[0], nm = jv.shape[0], i, m
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ou = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] ot = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] oy = np.zeros(n)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] j2s = np.power(jv, 2.0 * s)
    cdef double* pt = &tv[0] if n else NULL
    cdef double* py = &yv[0] if n else NULL
    cdef double* pj = &jv[0] if nm else NULL
    cdef double* pw = &wv[0] if nm else NULL
    cdef double* pj2s = &j2s[0] if nm else NULL
    cdef double* pc = &cv[0]
    cdef double* pu = &ou[0] if n else NULL
    cdef double* put = &ot[0] if n else NULL
    cdef double* pfy = &oy[0] if n else NULL
    cdef double delta = nu - p
    cdef double tt, tp, jn, jn1, ka, kb, hval, su, st, sy
    if threads < 1:
        threads = 1
    for i in prange(n, nogil=True, schedule="static", num_threads=threads):
        tt = pt[i]
        tp = exp(-p * log(tt))
        su = 0.0
        st = 0.0
        sy = 0.0
        for m in range(nm):
            if pw[m] == 0.0:
                continue
            _jpair(nu, pj[m] * tt, inv_gamma, &jn, &jn1)
            _kpair(s, pj[m] * py[i], pc, &ka, &kb)
            hval = pref * ka
            su = su + pw[m] * tp * jn * hval
            if gradient:
                st = st + pw[m] * tp * (delta / tt * jn - pj[m] * jn1) * hval
                sy = sy + pw[m] * tp * jn * (-pref * pj2s[m] * kb)
        pu[i] = su
        put[i] = st
        pfy[i] = sy
    shape = np.shape(t)
    return ou.reshape(shape), ot.reshape(shape), oy.reshape(shape)
