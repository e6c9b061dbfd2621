"""Statistical verification of the Gaussian lemmas behind the limits.

Each oracle compares a Monte-Carlo estimate against the closed form (or
bound) it certifies and reports a standardized deviation z; the suite
passes at |z| < 4. Norm functionals of the structured gradient laws are
sampled in O(1) per draw by splitting the vector into its two-dimensional
informative span plus an isotropic chi-square remainder, so even the
n = 10^4 comparisons stay cheap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from math import atan2, cos, pi, sin, sqrt

import numpy as np

from .gauss import McEstimate, as_generator
from .limits import joint_moment
from .models import TensorPcaModel, summary_stats, tpca_expected_sq_norm

__all__ = [
    "verify_sign_lemma",
    "verify_inverse_moment",
    "verify_cumulants",
    "verify_central_ratio_rate",
    "verify_sphere_moment",
    "verify_angle_formula",
    "verify_si_generators",
    "verify_normalized_gradient_mean",
]

DEFAULT_N_MC = 10**6


def _mc_from(vals: np.ndarray) -> McEstimate:
    n = vals.shape[0]
    return McEstimate(mean=float(vals.mean()),
                      stderr=float(vals.std(ddof=1) / math.sqrt(n)),
                      n_samples=n)


def verify_sign_lemma(var_x: float, var_y: float, cov_xy: float,
                      n_mc: int = DEFAULT_N_MC, rng=None):
    """E[X sgn(Y)] = sqrt(2/pi) Cov(X, Y)/sqrt(Var Y) for jointly centered
    Gaussians."""
    if var_y <= 0 or var_x < 0 or cov_xy**2 > var_x * var_y:
        raise ValueError("invalid covariance structure")
    gen = as_generator(rng)
    z1 = gen.standard_normal(n_mc)
    z2 = gen.standard_normal(n_mc)
    y = math.sqrt(var_y) * z1
    resid = var_x - cov_xy**2 / var_y
    x = (cov_xy / var_y) * y + math.sqrt(max(resid, 0.0)) * z2
    mc = _mc_from(x * np.sign(y))
    closed = math.sqrt(2.0 / math.pi) * cov_xy / math.sqrt(var_y)
    return mc, closed, mc.z_against(closed)


def verify_inverse_moment(n: int, k: int, mean_norm: float = 0.0,
                          n_mc: int = DEFAULT_N_MC, rng=None):
    """E||X||^{-2k} <= (n - 2k)^{-k} for X ~ N(mu, I_n), n > 2k.

    ||X||^2 is sampled exactly as (mu + z)^2 + chi^2_{n-1}.
    """
    if n <= 2 * k:
        raise ValueError("lemma requires n > 2k")
    gen = as_generator(rng)
    sq = (mean_norm + gen.standard_normal(n_mc)) ** 2 + gen.chisquare(n - 1, n_mc)
    mc = _mc_from(sq ** (-float(k)))
    bound = (1.0 / (n - 2 * k)) ** k
    if mc.mean > bound + 3.0 * mc.stderr:
        raise AssertionError(
            f"inverse-moment bound violated: {mc.mean} > {bound} + 3 stderr")
    return mc, bound


def _k_statistics(vals: np.ndarray) -> dict[int, float]:
    """Unbiased cumulant estimators (k-statistics) through order 4."""
    S = vals.shape[0]
    mean = vals.mean()
    d = vals - mean
    m2 = float((d**2).mean())
    m3 = float((d**3).mean())
    m4 = float((d**4).mean())
    k1 = float(mean)
    k2 = S / (S - 1) * m2
    k3 = S**2 / ((S - 1) * (S - 2)) * m3
    k4 = (S**2 * ((S + 1) * m4 - 3 * (S - 1) * m2**2)
          / ((S - 1) * (S - 2) * (S - 3)))
    return {1: k1, 2: k2, 3: k3, 4: k4}


def verify_cumulants(n: int, p_max: int, rank1_coeff: float = 0.0,
                     mean_norm: float = 0.0, n_mc: int = DEFAULT_N_MC,
                     rng=None, n_batches: int = 50):
    """Cumulants of ||X||^2, X ~ N(mu, Sigma), Sigma = I + rank1 u u^T,
    mu = mean_norm * u:

        kappa_p = 2^{p-1} (p-1)! (tr Sigma^p + p <mu, Sigma^{p-1} mu>)

    Sample cumulants are k-statistics over batches; the batch spread gives
    the standard error. Returns one comparison row per order p <= p_max.
    """
    if not 1 <= p_max <= 4:
        raise ValueError("p_max must be in 1..4")
    gen = as_generator(rng)
    s = 1.0 + rank1_coeff  # variance along u
    batch = n_mc // n_batches
    per_batch = {p: [] for p in range(1, p_max + 1)}
    for _ in range(n_batches):
        sq = (mean_norm + math.sqrt(s) * gen.standard_normal(batch)) ** 2 \
            + gen.chisquare(n - 1, batch)
        ks = _k_statistics(sq)
        for p in per_batch:
            per_batch[p].append(ks[p])
    rows = []
    for p in range(1, p_max + 1):
        tr = (n - 1) + s**p
        quad = mean_norm**2 * s ** (p - 1)
        closed = 2.0 ** (p - 1) * math.factorial(p - 1) * (tr + p * quad)
        ests = np.array(per_batch[p])
        mean = float(ests.mean())
        stderr = float(ests.std(ddof=1) / math.sqrt(n_batches))
        z = (mean - closed) / stderr if stderr > 0 else 0.0
        rows.append({"p": p, "sample": mean, "closed": closed,
                     "stderr": stderr, "z": z, "pass": abs(z) < 4.0})
    return rows


def _tpca_span_samples(k: int, lam: float, m: float, r2: float, n: int,
                       gen, n_mc: int):
    """O(1)-per-draw sampler of (<g, v>, ||g||^2) for the tensor PCA
    gradient law at fixed (m, r2) embedded in dimension n."""
    R2 = m * m + r2
    r = sqrt(r2)
    a = -2.0 * lam * k * m ** (k - 1)
    b = 2.0 * k * R2 ** (k - 1)
    iso = 4.0 * k * R2 ** (k - 1)
    rank1 = 4.0 * k * (k - 1) * R2 ** (k - 2)
    gv = gen.standard_normal(n_mc)
    gu = gen.standard_normal(n_mc)
    xi = gen.standard_normal(n_mc)
    chi = gen.chisquare(n - 2, n_mc)
    comp_v = (a + b * m) + math.sqrt(iso) * gv + math.sqrt(rank1) * xi * m
    comp_u = b * r + math.sqrt(iso) * gu + math.sqrt(rank1) * xi * r
    norm_sq = comp_v**2 + comp_u**2 + iso * chi
    return comp_v, norm_sq


def verify_central_ratio_rate(n_list, lam: float, x_summary: tuple[float, float],
                              n_mc: int = DEFAULT_N_MC, rng=None, k: int = 2):
    """E[(1 - E||X||^2/||X||^2)^3] = O(n^{-2}) for the tensor PCA gradient
    law at fixed (m, r2); returns the log-log fitted slope and the per-n
    estimates."""
    n_list = sorted(n_list)
    if n_list[0] < 9:
        raise ValueError("lemma requires n >= 9")
    gen = as_generator(rng)
    m, r2 = x_summary
    ests = []
    for n in n_list:
        model = TensorPcaModel.standard(n, k, lam, 1.0)
        v = model.spike
        u = np.zeros(n)
        u[1] = 1.0
        x = m * v + sqrt(r2) * u
        D2 = tpca_expected_sq_norm(model, x)
        _, norm_sq = _tpca_span_samples(k, lam, m, r2, n, gen, n_mc)
        vals = (1.0 - D2 / norm_sq) ** 3
        ests.append(_mc_from(vals))
    slope = float(np.polyfit(np.log(n_list),
                             np.log([abs(e.mean) for e in ests]), 1)[0])
    return {"slope": slope, "n_list": n_list, "estimates": ests}


def verify_sphere_moment(n: int, n_mc: int = DEFAULT_N_MC, rng=None,
                         chunk: int = 10**5):
    """E[ahat ahat^T] = I/n for ahat uniform on the unit sphere; returns
    the Frobenius deviation of the MC estimate and its error budget."""
    if n < 2:
        raise ValueError("n must be >= 2")
    gen = as_generator(rng)
    acc = np.zeros((n, n))
    done = 0
    while done < n_mc:
        b = min(chunk, n_mc - done)
        A = gen.standard_normal((b, n))
        A /= np.linalg.norm(A, axis=1, keepdims=True)
        acc += A.T @ A
        done += b
    est = acc / n_mc
    frob = float(np.linalg.norm(est - np.eye(n) / n))
    # Var(ahat_i^2) = 3/(n(n+2)) - 1/n^2 on the diagonal,
    # Var(ahat_i ahat_j) = 1/(n(n+2)) off it.
    var_diag = 3.0 / (n * (n + 2)) - 1.0 / n**2
    var_off = 1.0 / (n * (n + 2))
    budget = math.sqrt((n * var_diag + n * (n - 1) * var_off) / n_mc)
    return {"frobenius": frob, "budget": budget, "trace": float(np.trace(est)),
            "pass": frob < 5.0 * budget}


def _angle_closed(m: float, r: float) -> tuple[float, float]:
    a1, a2, a3 = atan2(m, r), atan2(1.0 - m, r), atan2(1.0 + m, r)
    c = sqrt(2.0 / pi)
    return c * (sin(a1) + sin(a2) - sin(a3)), c * (cos(a1) - cos(a2) - cos(a3))


def verify_angle_formula(m: float, r: float, n_mc: int = DEFAULT_N_MC, rng=None):
    """Angle-integral closed forms for the even-link sign pattern
    S = sgn(s (t - s)(t + s)) with s = m a1 + r a2, t = a1:

        E[a1 S] = sqrt(2/pi) (sin a1 + sin a2 - sin a3)
        E[a2 S] = sqrt(2/pi) (cos a1 - cos a2 - cos a3)

    with tan a1 = m/r, tan a2 = (1-m)/r, tan a3 = (1+m)/r.
    """
    if not (0.0 < m < 1.0) or r <= 0:
        raise ValueError("need m in (0, 1) and r > 0")
    gen = as_generator(rng)
    a1 = gen.standard_normal(n_mc)
    a2 = gen.standard_normal(n_mc)
    s = m * a1 + r * a2
    S = np.sign(s * (a1 - s) * (a1 + s))
    mc1 = _mc_from(a1 * S)
    mc2 = _mc_from(a2 * S)
    c1, c2 = _angle_closed(m, r)
    return [
        {"component": "a1", "mc": mc1, "closed": c1, "z": mc1.z_against(c1),
         "pass": abs(mc1.z_against(c1)) < 4.0},
        {"component": "a2", "mc": mc2, "closed": c2, "z": mc2.z_against(c2),
         "pass": abs(mc2.z_against(c2)) < 4.0},
    ]


def monomial_generators(k: int, sigma2: float, m: float, r: float):
    """Closed forms E_m = mP - Q, E_{r,1} = r^2 P, E_{r,2} via joint moments."""
    P = k * (2 * k - 1) * joint_moment(2 * k - 2, 0, m, r)
    if k >= 2:
        P -= k * (k - 1) * joint_moment(k - 2, k, m, r)
    Q = k * k * joint_moment(k - 1, k - 1, m, r)
    E_r2 = k * k * (joint_moment(4 * k - 2, 0, m, r)
                    - 2.0 * joint_moment(3 * k - 2, k, m, r)
                    + joint_moment(2 * k - 2, 2 * k, m, r)
                    + sigma2 * joint_moment(2 * k - 2, 0, m, r))
    return m * P - Q, r * r * P, E_r2


def verify_si_generators(k: int, m: float, r2: float, sigma2: float = 0.0,
                         n_mc: int = DEFAULT_N_MC, rng=None):
    """MC check of the Stein reductions for monomial links:
    E_m = E[a1 Delta f'(s)], E_{r,1} = r E[a2 Delta f'(s)],
    E_{r,2} = E[f'(s)^2 Delta^2], with s = m a1 + r a2,
    Delta = s^k - a1^k + eps."""
    gen = as_generator(rng)
    r = sqrt(r2)
    a1 = gen.standard_normal(n_mc)
    a2 = gen.standard_normal(n_mc)
    eps = math.sqrt(sigma2) * gen.standard_normal(n_mc) if sigma2 > 0 else 0.0
    s = m * a1 + r * a2
    delta = s**k - a1**k + eps
    fp = k * s ** (k - 1)
    closed = monomial_generators(k, sigma2, m, r)
    samples = [a1 * delta * fp, r * a2 * delta * fp, fp**2 * delta**2]
    rows = []
    for name, vals, cl in zip(("E_m", "E_r1", "E_r2"), samples, closed):
        mc = _mc_from(vals)
        z = mc.z_against(cl)
        rows.append({"name": name, "mc": mc, "closed": cl, "z": z,
                     "pass": abs(z) < 4.0})
    return rows


def verify_normalized_gradient_mean(model: TensorPcaModel, x: np.ndarray,
                                    n_list, n_mc: int = DEFAULT_N_MC, rng=None):
    """sqrt(n) E[<grad L/||grad L||, v>] -> sqrt(n) <grad Phi, v>/D as n grows,
    at fixed (m, r2) re-embedded in each dimension of n_list."""
    gen = as_generator(rng)
    m, r2 = summary_stats(x, model.spike)
    k, lam = model.k, model.lam
    rows = []
    for n in sorted(n_list):
        mdl = TensorPcaModel.standard(n, k, lam, model.c_delta)
        v = mdl.spike
        u = np.zeros(n)
        u[1] = 1.0
        xn = m * v + sqrt(r2) * u
        grad_v = float(np.dot(
            -2.0 * lam * k * m ** (k - 1) * v + 2.0 * k * (m * m + r2) ** (k - 1) * xn,
            v))
        D = sqrt(tpca_expected_sq_norm(mdl, xn))
        pred = sqrt(n) * grad_v / D if D > 0 else 0.0
        comp_v, norm_sq = _tpca_span_samples(k, lam, m, r2, n, gen, n_mc)
        mc = _mc_from(sqrt(n) * comp_v / np.sqrt(norm_sq))
        rows.append({"n": n, "mc": mc, "prediction": pred,
                     "abs_error": abs(mc.mean - pred)})
    return rows
