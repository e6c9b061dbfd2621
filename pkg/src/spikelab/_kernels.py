"""Compiled inner loops for the online optimizers.

Each kernel advances the iterate through a block of steps, consuming one
row of pre-generated standard normals per step (layout: row[:n] is the
vector draw, row[n] the scalar draw). The arithmetic mirrors the pure
reference `optimizers.step` exactly so the two paths stay
stream-equivalent; only the noise is generated in bulk.

Return code per block: 0 = ok, 1 = diverged at the reported step.
"""

from __future__ import annotations

import numpy as np
from numba import njit

DIVERGE_NORM2 = 1.0e24  # ||x||^2 threshold, i.e. ||x|| > 1e12


@njit(cache=True)
def _dot(a, b):
    s = 0.0
    for i in range(a.shape[0]):
        s += a[i] * b[i]
    return s


@njit(cache=True)
def tpca_sgdm_block(x, p, v, noise, k, lam, beta, delta):
    """Heavy-ball steps on the tensor PCA gradient law. Mutates x, p."""
    n = x.shape[0]
    nsteps = noise.shape[0]
    for s in range(nsteps):
        m = _dot(x, v)
        R2 = _dot(x, x)
        if not np.isfinite(R2) or R2 > DIVERGE_NORM2:
            return 1, s, 0
        a = -2.0 * lam * k * m ** (k - 1)
        b = 2.0 * k * R2 ** (k - 1)
        sq_iso = np.sqrt(4.0 * k * R2 ** (k - 1))
        sq_r1 = np.sqrt(4.0 * k * (k - 1) * R2 ** (k - 2))
        coef_x = b + sq_r1 * noise[s, n]
        for i in range(n):
            g = sq_iso * noise[s, i] + coef_x * x[i] + a * v[i]
            p[i] = beta * p[i] - delta * g
            x[i] += p[i]
    return 0, nsteps, 0


@njit(cache=True)
def tpca_sgdu_block(x, v, noise, k, lam, step_len, scratch):
    """Normalized-gradient steps; step length is exactly step_len = c_delta/sqrt(n)."""
    n = x.shape[0]
    nsteps = noise.shape[0]
    skipped = 0
    for s in range(nsteps):
        m = _dot(x, v)
        R2 = _dot(x, x)
        if not np.isfinite(R2) or R2 > DIVERGE_NORM2:
            return 1, s, skipped
        a = -2.0 * lam * k * m ** (k - 1)
        b = 2.0 * k * R2 ** (k - 1)
        sq_iso = np.sqrt(4.0 * k * R2 ** (k - 1))
        sq_r1 = np.sqrt(4.0 * k * (k - 1) * R2 ** (k - 2))
        coef_x = b + sq_r1 * noise[s, n]
        nrm2 = 0.0
        for i in range(n):
            g = sq_iso * noise[s, i] + coef_x * x[i] + a * v[i]
            scratch[i] = g
            nrm2 += g * g
        nrm = np.sqrt(nrm2)
        if nrm == 0.0:
            skipped += 1
            continue
        scale = step_len / nrm
        for i in range(n):
            x[i] -= scale * scratch[i]
    return 0, nsteps, skipped


@njit(cache=True)
def _polyval(c, x):
    """Horner evaluation of sum_j c[j] x^j."""
    res = 0.0
    for j in range(c.shape[0] - 1, -1, -1):
        res = res * x + c[j]
    return res


@njit(cache=True)
def si_poly_sgdm_block(x, p, v, noise, fc, dc, sqrt_sigma2, beta, delta):
    """Heavy-ball steps on the single-index model with polynomial link;
    fc/dc are the link and derivative coefficient vectors."""
    n = x.shape[0]
    nsteps = noise.shape[0]
    for s in range(nsteps):
        xx = _dot(x, x)
        if not np.isfinite(xx) or xx > DIVERGE_NORM2:
            return 1, s, 0
        s_ = 0.0
        t_ = 0.0
        for i in range(n):
            s_ += x[i] * noise[s, i]
            t_ += v[i] * noise[s, i]
        eps = sqrt_sigma2 * noise[s, n]
        coef = 2.0 * (_polyval(fc, s_) - _polyval(fc, t_) + eps) * _polyval(dc, s_)
        for i in range(n):
            p[i] = beta * p[i] - delta * coef * noise[s, i]
            x[i] += p[i]
    return 0, nsteps, 0


@njit(cache=True)
def si_poly_sgdu_block(x, v, noise, fc, dc, sqrt_sigma2, step_len, scratch):
    n = x.shape[0]
    nsteps = noise.shape[0]
    skipped = 0
    for s in range(nsteps):
        xx = _dot(x, x)
        if not np.isfinite(xx) or xx > DIVERGE_NORM2:
            return 1, s, skipped
        s_ = 0.0
        t_ = 0.0
        for i in range(n):
            s_ += x[i] * noise[s, i]
            t_ += v[i] * noise[s, i]
        eps = sqrt_sigma2 * noise[s, n]
        coef = 2.0 * (_polyval(fc, s_) - _polyval(fc, t_) + eps) * _polyval(dc, s_)
        nrm2 = 0.0
        for i in range(n):
            g = coef * noise[s, i]
            scratch[i] = g
            nrm2 += g * g
        nrm = np.sqrt(nrm2)
        if nrm == 0.0:
            skipped += 1
            continue
        scale = step_len / nrm
        for i in range(n):
            x[i] -= scale * scratch[i]
    return 0, nsteps, skipped
