"""NumPy implementation of the hot numerical kernels.

These four kernels sit inside the Monte Carlo calibration and exact
enumeration loops and dominate the package's runtime.  A compiled twin
lives in ``_kernels_c.pyx``; both are drop-in interchangeable and are
kept algorithmically identical (same formula sequence, same tie
handling) so that results agree to floating-point noise.  Backend
selection happens in ``possim._backend``.

Conventions shared by both backends:

* relative likelihoods are compared on the raw ``R`` scale with an
  additive tie tolerance (``R' <= R_obs + tol``), so the realized data
  point always counts itself;
* an enumeration that includes every outcome returns exactly 1.0;
* correlation log-likelihoods are fully normalized (constant included).
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

LOG_2PI = float(np.log(2.0 * np.pi))

_CHUNK = 2_000_000  # max temporary elements per enumeration block


def _binom_loghat(n: int) -> np.ndarray:
    """log L_{y'}(y'/n) for y' = 0..n, binomial coefficient excluded."""
    ys = np.arange(n + 1, dtype=np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(ys == 0, 0.0, ys * np.log(ys / n))
        t2 = np.where(ys == n, 0.0, (n - ys) * np.log1p(-ys / n))
    return t1 + t2


def _binom_logkernel(ys: np.ndarray, n: int, theta: np.ndarray) -> np.ndarray:
    """y log(theta) + (n-y) log(1-theta) with 0*log(0) := 0 at the edges."""
    with np.errstate(divide="ignore", invalid="ignore"):
        lt = np.log(theta)
        l1t = np.log1p(-theta)
        t1 = np.where(ys == 0, 0.0, ys * lt)
        t2 = np.where(ys == n, 0.0, (n - ys) * l1t)
    return t1 + t2


def binom_contour(theta, n, y, tol=1e-12):
    """Exact binomial possibility contour by enumeration over y' = 0..n.

    ``pi(theta) = sum_{y'} Binom(y'; n, theta) 1{R(y', theta) <= R(y, theta) + tol}``
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    ys = np.arange(n + 1, dtype=np.float64)
    logc = gammaln(n + 1) - gammaln(ys + 1) - gammaln(n - ys + 1)
    loghat = _binom_loghat(n)
    out = np.empty(theta.shape[0])
    block = max(1, _CHUNK // (n + 1))
    for lo in range(0, theta.shape[0], block):
        th = theta[lo : lo + block, None]
        logf = _binom_logkernel(ys[None, :], n, th)
        logrel = logf - loghat[None, :]
        logrel_obs = _binom_logkernel(np.float64(y), n, th[:, 0]) - loghat[y]
        with np.errstate(over="ignore"):
            ind = np.exp(logrel) <= np.exp(logrel_obs)[:, None] + tol
        pmf = np.exp(logc[None, :] + logf)
        vals = np.where(ind, pmf, 0.0).sum(axis=1)
        vals[ind.all(axis=1)] = 1.0
        out[lo : lo + block] = vals
    return np.clip(out, 0.0, 1.0)


def table_contour(theta0, theta1, n0, n1, y01, y11, tol=1e-12):
    """Exact product-binomial contour for a 2x2 table with fixed row totals.

    ``theta0``/``theta1`` are paired coordinate arrays (one point per entry,
    not a lattice product).  Enumeration runs over the full outcome grid
    (n0+1) x (n1+1).
    """
    theta0 = np.atleast_1d(np.asarray(theta0, dtype=np.float64))
    theta1 = np.atleast_1d(np.asarray(theta1, dtype=np.float64))
    if theta0.shape != theta1.shape:
        raise ValueError("theta0 and theta1 must have matching shapes")
    ys0 = np.arange(n0 + 1, dtype=np.float64)
    ys1 = np.arange(n1 + 1, dtype=np.float64)
    logc0 = gammaln(n0 + 1) - gammaln(ys0 + 1) - gammaln(n0 - ys0 + 1)
    logc1 = gammaln(n1 + 1) - gammaln(ys1 + 1) - gammaln(n1 - ys1 + 1)
    loghat0 = _binom_loghat(n0)
    loghat1 = _binom_loghat(n1)
    out = np.empty(theta0.shape[0])
    block = max(1, _CHUNK // ((n0 + 1) * (n1 + 1)))
    for lo in range(0, theta0.shape[0], block):
        t0 = theta0[lo : lo + block, None]
        t1 = theta1[lo : lo + block, None]
        logf0 = _binom_logkernel(ys0[None, :], n0, t0)
        logf1 = _binom_logkernel(ys1[None, :], n1, t1)
        rel0 = logf0 - loghat0[None, :]
        rel1 = logf1 - loghat1[None, :]
        obs = (
            _binom_logkernel(np.float64(y01), n0, t0[:, 0])
            - loghat0[y01]
            + _binom_logkernel(np.float64(y11), n1, t1[:, 0])
            - loghat1[y11]
        )
        logrel = rel0[:, :, None] + rel1[:, None, :]
        with np.errstate(over="ignore"):
            ind = np.exp(logrel) <= np.exp(obs)[:, None, None] + tol
        pmf = np.exp(logc0[None, :] + logf0)[:, :, None] * np.exp(
            logc1[None, :] + logf1
        )[:, None, :]
        vals = np.where(ind, pmf, 0.0).sum(axis=(1, 2))
        vals[ind.all(axis=(1, 2))] = 1.0
        out[lo : lo + block] = vals
    return np.clip(out, 0.0, 1.0)


def corr_loglik(s11, s12, s22, n, rho):
    """Full bivariate-normal log-likelihood from sufficient statistics.

    ``l(rho) = -n log(2 pi) - (n/2) log(1 - rho^2)
               - (s11 - 2 rho s12 + s22) / (2 (1 - rho^2))``
    """
    s11 = np.asarray(s11, dtype=np.float64)
    s12 = np.asarray(s12, dtype=np.float64)
    s22 = np.asarray(s22, dtype=np.float64)
    rho = np.asarray(rho, dtype=np.float64)
    omr = 1.0 - rho * rho
    return (
        -n * LOG_2PI
        - 0.5 * n * np.log(omr)
        - (s11 - 2.0 * rho * s12 + s22) / (2.0 * omr)
    )


def corr_mle(s11, s12, s22, n):
    """Batched correlation MLE from sufficient statistics.

    Stationary points solve ``n r^3 - s12 r^2 + (s11 + s22 - n) r - s12 = 0``;
    the likelihood diverges to -inf at both endpoints, so the maximizer is an
    interior root.  All real roots in (-1, 1) are found in closed form
    (trigonometric / Cardano), polished with Newton steps, and the one with
    the largest likelihood wins (curved exponential family: up to two local
    maxima are possible).
    """
    s11 = np.atleast_1d(np.asarray(s11, dtype=np.float64))
    s12 = np.atleast_1d(np.asarray(s12, dtype=np.float64))
    s22 = np.atleast_1d(np.asarray(s22, dtype=np.float64))
    a = -s12 / n
    b = (s11 + s22 - n) / n
    c = -s12 / n
    p = b - a * a / 3.0
    q = 2.0 * a**3 / 27.0 - a * b / 3.0 + c
    disc = -4.0 * p**3 - 27.0 * q * q

    roots = np.empty((s12.shape[0], 3))
    three = disc > 0.0
    # three real roots: trigonometric form (p < 0 is implied by disc > 0)
    if np.any(three):
        pt, qt, at = p[three], q[three], a[three]
        m = 2.0 * np.sqrt(-pt / 3.0)
        arg = np.clip(3.0 * qt / (pt * m), -1.0, 1.0)
        phi = np.arccos(arg) / 3.0
        for k in range(3):
            roots[three, k] = m * np.cos(phi - 2.0 * np.pi * k / 3.0) - at / 3.0
    # single real root: Cardano
    one = ~three
    if np.any(one):
        po, qo, ao = p[one], q[one], a[one]
        s = np.sqrt(np.maximum(qo * qo / 4.0 + po**3 / 27.0, 0.0))
        u = np.cbrt(-qo / 2.0 + s)
        v = np.cbrt(-qo / 2.0 - s)
        r = u + v - ao / 3.0
        for k in range(3):
            roots[one, k] = r

    lim = 1.0 - 1e-12
    inside = np.abs(roots) < 1.0
    # replace out-of-range candidates by an in-range one (at least one exists)
    fallback = np.where(
        inside.any(axis=1),
        roots[np.arange(roots.shape[0]), inside.argmax(axis=1)],
        np.clip(s12 / np.sqrt(np.maximum(s11 * s22, 1e-300)), -lim, lim),
    )
    roots = np.where(inside, roots, fallback[:, None])
    roots = np.clip(roots, -lim, lim)

    # Newton polish on g(r) = n r^3 - s12 r^2 + (s11 + s22 - n) r - s12
    bn = s11 + s22 - n
    for _ in range(3):
        g = n * roots**3 - s12[:, None] * roots**2 + bn[:, None] * roots - s12[:, None]
        gp = 3.0 * n * roots**2 - 2.0 * s12[:, None] * roots + bn[:, None]
        step = np.where(np.abs(gp) > 1e-30, g / np.where(gp == 0.0, 1.0, gp), 0.0)
        roots = np.clip(roots - step, -lim, lim)

    ll = corr_loglik(s11[:, None], s12[:, None], s22[:, None], n, roots)
    return roots[np.arange(roots.shape[0]), ll.argmax(axis=1)]


def corr_logrel(s11, s12, s22, n, rho):
    """Batched log relative likelihood log R = l(rho) - l(rho_hat)."""
    rho_hat = corr_mle(s11, s12, s22, n)
    return corr_loglik(s11, s12, s22, n, rho) - corr_loglik(s11, s12, s22, n, rho_hat)


def corr_contour_crn(b11, b12, b22, theta, logrel_obs, n, tol=1e-12):
    """Monte Carlo contour for the correlation model over a theta grid.

    ``b11, b12, b22`` are base sufficient statistics of M independent draws
    at rho = 0 (common random numbers); per grid theta they are rotated via
    the Cholesky transform ``(Z1, theta Z1 + sqrt(1-theta^2) Z2)``, which
    avoids re-simulating pairs.  ``logrel_obs[i]`` is log R(y, theta[i]) of
    the observed data.  Returns the per-theta indicator means.
    """
    theta = np.atleast_1d(np.asarray(theta, dtype=np.float64))
    logrel_obs = np.atleast_1d(np.asarray(logrel_obs, dtype=np.float64))
    out = np.empty(theta.shape[0])
    for i, th in enumerate(theta):
        cth = np.sqrt(1.0 - th * th)
        s11 = b11
        s12 = th * b11 + cth * b12
        s22 = th * th * b11 + 2.0 * th * cth * b12 + cth * cth * b22
        logrel = corr_logrel(s11, s12, s22, n, th)
        with np.errstate(over="ignore"):
            out[i] = np.mean(np.exp(logrel) <= np.exp(logrel_obs[i]) + tol)
    return out
