# Compiled twin of possim._kernels_py.  Same algorithms, same tie
# handling, scalar loops instead of vectorized temporaries.  Keep the
# formula sequences in sync with the NumPy backend.

import numpy as np

cimport numpy as cnp
from libc.math cimport (INFINITY, acos, cbrt, cos, exp, fabs, lgamma, log,
                        log1p, pi, sqrt)

cnp.import_array()

cdef double LOG_2PI = log(2.0 * pi)


cdef inline double _binom_logkernel_s(double y, long n, double theta) nogil:
    # y log(theta) + (n-y) log(1-theta), 0*log(0) := 0 at the edges
    cdef double t1 = 0.0, t2 = 0.0
    if y != 0.0:
        t1 = y * log(theta)
    if y != <double> n:
        t2 = (n - y) * log1p(-theta)
    return t1 + t2


def binom_contour(theta, long n, long y, double tol=1e-12):
    theta_arr = np.ascontiguousarray(np.atleast_1d(theta), dtype=np.float64)
    cdef const double[::1] th = theta_arr
    cdef Py_ssize_t nt = th.shape[0]
    out_arr = np.empty(nt)
    cdef double[::1] out = out_arr

    loghat_arr = np.empty(n + 1)
    logc_arr = np.empty(n + 1)
    cdef double[::1] loghat = loghat_arr
    cdef double[::1] logc = logc_arr
    cdef Py_ssize_t k
    cdef double yk
    for k in range(n + 1):
        yk = <double> k
        loghat[k] = _binom_logkernel_s(yk, n, yk / n) if 0 < k < n else 0.0
        logc[k] = lgamma(n + 1.0) - lgamma(yk + 1.0) - lgamma(n - yk + 1.0)

    cdef Py_ssize_t i
    cdef double t, logf, logrel, robs, acc, pmf
    cdef bint all_in
    with nogil:
        for i in range(nt):
            t = th[i]
            robs = exp(_binom_logkernel_s(<double> y, n, t) - loghat[y])
            acc = 0.0
            all_in = True
            for k in range(n + 1):
                logf = _binom_logkernel_s(<double> k, n, t)
                logrel = logf - loghat[k]
                if exp(logrel) <= robs + tol:
                    acc += exp(logc[k] + logf)
                else:
                    all_in = False
            if all_in:
                acc = 1.0
            if acc > 1.0:
                acc = 1.0
            elif acc < 0.0:
                acc = 0.0
            out[i] = acc
    return out_arr


def table_contour(theta0, theta1, long n0, long n1, long y01, long y11,
                  double tol=1e-12):
    t0_arr = np.ascontiguousarray(np.atleast_1d(theta0), dtype=np.float64)
    t1_arr = np.ascontiguousarray(np.atleast_1d(theta1), dtype=np.float64)
    if t0_arr.shape != t1_arr.shape:
        raise ValueError("theta0 and theta1 must have matching shapes")
    cdef const double[::1] th0 = t0_arr
    cdef const double[::1] th1 = t1_arr
    cdef Py_ssize_t nt = th0.shape[0]
    out_arr = np.empty(nt)
    cdef double[::1] out = out_arr

    loghat0_arr = np.empty(n0 + 1); logc0_arr = np.empty(n0 + 1)
    loghat1_arr = np.empty(n1 + 1); logc1_arr = np.empty(n1 + 1)
    rel0_arr = np.empty(n0 + 1); pmf0_arr = np.empty(n0 + 1)
    rel1_arr = np.empty(n1 + 1); pmf1_arr = np.empty(n1 + 1)
    cdef double[::1] loghat0 = loghat0_arr, logc0 = logc0_arr
    cdef double[::1] loghat1 = loghat1_arr, logc1 = logc1_arr
    cdef double[::1] rel0 = rel0_arr, pmf0 = pmf0_arr
    cdef double[::1] rel1 = rel1_arr, pmf1 = pmf1_arr

    cdef Py_ssize_t k, j, i
    cdef double yk
    for k in range(n0 + 1):
        yk = <double> k
        loghat0[k] = _binom_logkernel_s(yk, n0, yk / n0) if 0 < k < n0 else 0.0
        logc0[k] = lgamma(n0 + 1.0) - lgamma(yk + 1.0) - lgamma(n0 - yk + 1.0)
    for k in range(n1 + 1):
        yk = <double> k
        loghat1[k] = _binom_logkernel_s(yk, n1, yk / n1) if 0 < k < n1 else 0.0
        logc1[k] = lgamma(n1 + 1.0) - lgamma(yk + 1.0) - lgamma(n1 - yk + 1.0)

    cdef double t0, t1, logf, robs, acc
    cdef bint all_in
    with nogil:
        for i in range(nt):
            t0 = th0[i]; t1 = th1[i]
            for k in range(n0 + 1):
                logf = _binom_logkernel_s(<double> k, n0, t0)
                rel0[k] = logf - loghat0[k]
                pmf0[k] = exp(logc0[k] + logf)
            for j in range(n1 + 1):
                logf = _binom_logkernel_s(<double> j, n1, t1)
                rel1[j] = logf - loghat1[j]
                pmf1[j] = exp(logc1[j] + logf)
            robs = exp(rel0[y01] + rel1[y11])
            acc = 0.0
            all_in = True
            for k in range(n0 + 1):
                for j in range(n1 + 1):
                    if exp(rel0[k] + rel1[j]) <= robs + tol:
                        acc += pmf0[k] * pmf1[j]
                    else:
                        all_in = False
            if all_in:
                acc = 1.0
            if acc > 1.0:
                acc = 1.0
            elif acc < 0.0:
                acc = 0.0
            out[i] = acc
    return out_arr


cdef inline double _corr_ll(double s11, double s12, double s22, long n,
                            double rho) nogil:
    cdef double omr = 1.0 - rho * rho
    return (-n * LOG_2PI - 0.5 * n * log(omr)
            - (s11 - 2.0 * rho * s12 + s22) / (2.0 * omr))


cdef double _corr_mle_s(double s11, double s12, double s22, long n) nogil:
    # Roots of n r^3 - s12 r^2 + (s11 + s22 - n) r - s12 in (-1, 1),
    # picked by likelihood.  Mirrors the NumPy backend exactly.
    cdef double a = -s12 / n
    cdef double b = (s11 + s22 - n) / n
    cdef double c = -s12 / n
    cdef double p = b - a * a / 3.0
    cdef double q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c
    cdef double disc = -4.0 * p * p * p - 27.0 * q * q
    cdef double r0, r1, r2, m, arg, phi, s, u, v
    if disc > 0.0:
        m = 2.0 * sqrt(-p / 3.0)
        arg = 3.0 * q / (p * m)
        if arg > 1.0:
            arg = 1.0
        elif arg < -1.0:
            arg = -1.0
        phi = acos(arg) / 3.0
        r0 = m * cos(phi) - a / 3.0
        r1 = m * cos(phi - 2.0 * pi / 3.0) - a / 3.0
        r2 = m * cos(phi - 4.0 * pi / 3.0) - a / 3.0
    else:
        s = q * q / 4.0 + p * p * p / 27.0
        if s < 0.0:
            s = 0.0
        s = sqrt(s)
        u = cbrt(-q / 2.0 + s)
        v = cbrt(-q / 2.0 - s)
        r0 = u + v - a / 3.0
        r1 = r0
        r2 = r0

    cdef double lim = 1.0 - 1e-12
    cdef double fallback, den
    if fabs(r0) < 1.0:
        fallback = r0
    elif fabs(r1) < 1.0:
        fallback = r1
    elif fabs(r2) < 1.0:
        fallback = r2
    else:
        den = s11 * s22
        if den < 1e-300:
            den = 1e-300
        fallback = s12 / sqrt(den)
        if fallback > lim:
            fallback = lim
        elif fallback < -lim:
            fallback = -lim
    if fabs(r0) >= 1.0:
        r0 = fallback
    if fabs(r1) >= 1.0:
        r1 = fallback
    if fabs(r2) >= 1.0:
        r2 = fallback

    cdef double roots[3]
    roots[0] = r0; roots[1] = r1; roots[2] = r2
    cdef double bn = s11 + s22 - n
    cdef Py_ssize_t k
    cdef int it
    cdef double r, g, gp
    for k in range(3):
        r = roots[k]
        if r > lim:
            r = lim
        elif r < -lim:
            r = -lim
        for it in range(3):
            g = n * r * r * r - s12 * r * r + bn * r - s12
            gp = 3.0 * n * r * r - 2.0 * s12 * r + bn
            if fabs(gp) > 1e-30:
                r = r - g / gp
            if r > lim:
                r = lim
            elif r < -lim:
                r = -lim
        roots[k] = r

    cdef double best = roots[0]
    cdef double best_ll = _corr_ll(s11, s12, s22, n, roots[0])
    cdef double ll
    for k in range(1, 3):
        ll = _corr_ll(s11, s12, s22, n, roots[k])
        if ll > best_ll:
            best_ll = ll
            best = roots[k]
    return best


def corr_loglik(s11, s12, s22, long n, rho):
    s11a = np.ascontiguousarray(np.atleast_1d(s11), dtype=np.float64)
    s12a = np.ascontiguousarray(np.atleast_1d(s12), dtype=np.float64)
    s22a = np.ascontiguousarray(np.atleast_1d(s22), dtype=np.float64)
    rhoa = np.ascontiguousarray(
        np.broadcast_to(np.asarray(rho, dtype=np.float64), s12a.shape)
    )
    cdef const double[::1] v11 = s11a, v12 = s12a, v22 = s22a, vr = rhoa
    out_arr = np.empty(s12a.shape[0])
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(v12.shape[0]):
            out[i] = _corr_ll(v11[i], v12[i], v22[i], n, vr[i])
    return out_arr


def corr_mle(s11, s12, s22, long n):
    s11a = np.ascontiguousarray(np.atleast_1d(s11), dtype=np.float64)
    s12a = np.ascontiguousarray(np.atleast_1d(s12), dtype=np.float64)
    s22a = np.ascontiguousarray(np.atleast_1d(s22), dtype=np.float64)
    cdef const double[::1] v11 = s11a, v12 = s12a, v22 = s22a
    out_arr = np.empty(s12a.shape[0])
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    with nogil:
        for i in range(v12.shape[0]):
            out[i] = _corr_mle_s(v11[i], v12[i], v22[i], n)
    return out_arr


def corr_logrel(s11, s12, s22, long n, rho):
    s11a = np.ascontiguousarray(np.atleast_1d(s11), dtype=np.float64)
    s12a = np.ascontiguousarray(np.atleast_1d(s12), dtype=np.float64)
    s22a = np.ascontiguousarray(np.atleast_1d(s22), dtype=np.float64)
    rhoa = np.ascontiguousarray(
        np.broadcast_to(np.asarray(rho, dtype=np.float64), s12a.shape)
    )
    cdef const double[::1] v11 = s11a, v12 = s12a, v22 = s22a, vr = rhoa
    out_arr = np.empty(s12a.shape[0])
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i
    cdef double rh
    with nogil:
        for i in range(v12.shape[0]):
            rh = _corr_mle_s(v11[i], v12[i], v22[i], n)
            out[i] = (_corr_ll(v11[i], v12[i], v22[i], n, vr[i])
                      - _corr_ll(v11[i], v12[i], v22[i], n, rh))
    return out_arr


def corr_contour_crn(b11, b12, b22, theta, logrel_obs, long n, double tol=1e-12):
    b11a = np.ascontiguousarray(np.atleast_1d(b11), dtype=np.float64)
    b12a = np.ascontiguousarray(np.atleast_1d(b12), dtype=np.float64)
    b22a = np.ascontiguousarray(np.atleast_1d(b22), dtype=np.float64)
    ta = np.ascontiguousarray(np.atleast_1d(theta), dtype=np.float64)
    oa = np.ascontiguousarray(np.atleast_1d(logrel_obs), dtype=np.float64)
    cdef const double[::1] vb11 = b11a, vb12 = b12a, vb22 = b22a
    cdef const double[::1] th = ta, obs = oa
    cdef Py_ssize_t nt = th.shape[0], m = vb12.shape[0]
    out_arr = np.empty(nt)
    cdef double[::1] out = out_arr
    cdef Py_ssize_t i, j
    cdef double t, cth, s11, s12, s22, rh, logrel, robs
    cdef long cnt
    with nogil:
        for i in range(nt):
            t = th[i]
            cth = sqrt(1.0 - t * t)
            robs = exp(obs[i])
            cnt = 0
            for j in range(m):
                s11 = vb11[j]
                s12 = t * vb11[j] + cth * vb12[j]
                s22 = t * t * vb11[j] + 2.0 * t * cth * vb12[j] + cth * cth * vb22[j]
                rh = _corr_mle_s(s11, s12, s22, n)
                logrel = (_corr_ll(s11, s12, s22, n, t)
                          - _corr_ll(s11, s12, s22, n, rh))
                if exp(logrel) <= robs + tol:
                    cnt += 1
            out[i] = (<double> cnt) / (<double> m)
    return out_arr
