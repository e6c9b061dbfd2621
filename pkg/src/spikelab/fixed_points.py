"""Critical thresholds, fixed-point location, and stability classification.

Closed-form critical signal strengths lambda_crit for tensor PCA, the
k = 2 fixed-point enumeration, single-index fixed points for linear and
quadratic links, the monomial step-size stability threshold with its
large-k asymptotics, and the even-polynomial root/series machinery for
the asymmetric SGD-U fixed point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from .gauss import double_factorial
from .limits import (
    DynamicsSystem,
    evenpoly_F,
    evenpoly_G,
    si_sgdm_system_monomial,
    si_sgdu_system_even,
    tpca_sgdm_system,
    tpca_sgdu_system,
)

__all__ = [
    "FixedPointReport",
    "NoFixedPoint",
    "lambda_crit_sgdm",
    "lambda_crit_sgdu",
    "tpca_fixed_points",
    "classify_stability",
    "si_linear_fixed_point",
    "si_quadratic_fixed_points",
    "si_monomial_cdelta_threshold",
    "si_monomial_threshold_decay_check",
    "evenpoly_m_of_r",
    "evenpoly_c_of_r",
    "evenpoly_fixed_point",
    "evenpoly_series",
    "max_admissible_step",
]

STABILITY_TOL = 1e-8
FP_DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class FixedPointReport:
    point: tuple[float, float]  # (m, r2)
    stability: str  # "stable" | "unstable" | "marginal"
    eigenvalues: tuple[complex, ...]
    context: dict = field(default_factory=dict)


@dataclass(frozen=True)
class NoFixedPoint:
    """Returned when a requested fixed point does not exist; carries the
    quantity whose bound failed (e.g. the maximum of c(r))."""

    reason: str
    bound: float


def lambda_crit_sgdm(k: int, beta: float, c_delta: float) -> float:
    """lambda_crit^M = (c_delta/(k(1-beta)))^{k/2}
    * (2(k-1))^{k-1} / (k-2)^{(k-2)/2}, with 0^0 := 1 at k = 2."""
    if k < 2 or not 0 <= beta < 1 or c_delta <= 0:
        raise ValueError("need k >= 2, beta in [0, 1), c_delta > 0")
    base = (c_delta / (k * (1.0 - beta))) ** (k / 2.0)
    denom = 1.0 if k == 2 else (k - 2.0) ** ((k - 2) / 2.0)
    return base * (2.0 * (k - 1.0)) ** (k - 1) / denom


def _sgdu_F(xi: float, k: int) -> float:
    """F(xi) = xi^{(k-2)(k+1)} (1 - xi^2)^k, the admissibility function of
    the direction cosine in the SGD-U fixed-point construction."""
    e = (k - 2) * (k + 1)
    lead = 1.0 if e == 0 else xi**e
    return lead * (1.0 - xi * xi) ** k


def _sgdu_F_max(k: int) -> float:
    if k == 2:
        return 1.0  # supremum as xi -> 0, exponent 0^0 := 1
    xi2 = (k - 2.0) * (k + 1.0) / ((k + 2.0) * (k - 1.0))
    return _sgdu_F(sqrt(xi2), k)


def lambda_crit_sgdu(k: int, c_delta: float) -> float:
    """lambda_crit^U = (c_delta/(2 sqrt(k)))^{k/(k+1)} / F_max^{1/(k+1)};
    at k = 2 this reduces to c_delta^{2/3}/2."""
    if k < 2 or c_delta <= 0:
        raise ValueError("need k >= 2 and c_delta > 0")
    return (c_delta / (2.0 * sqrt(k))) ** (k / (k + 1.0)) / _sgdu_F_max(k) ** (
        1.0 / (k + 1.0)
    )


def classify_stability(system: DynamicsSystem, point) -> tuple[str, tuple[complex, ...]]:
    """Numerical Jacobian (central differences, step 1e-6) at a claimed
    fixed point; rejects points whose drift norm exceeds 1e-6."""
    if system.regime != "ballistic":
        raise ValueError("stability classification applies to ballistic systems")
    u = np.asarray(point, dtype=float)
    d0 = system.drift(u)
    if np.linalg.norm(d0) > FP_DRIFT_TOL:
        raise ValueError(f"point {point} is not a fixed point (|drift| = "
                         f"{np.linalg.norm(d0):.3e} > {FP_DRIFT_TOL})")
    h = 1e-6
    dim = len(u)
    J = np.empty((dim, dim))
    for j in range(dim):
        up = u.copy()
        um = u.copy()
        up[j] += h
        um[j] -= h
        J[:, j] = (system.drift(up) - system.drift(um)) / (2.0 * h)
    eigs = tuple(np.linalg.eigvals(J))
    re = [e.real for e in eigs]
    if all(x < -STABILITY_TOL for x in re):
        label = "stable"
    elif any(x > STABILITY_TOL for x in re):
        label = "unstable"
    else:
        label = "marginal"
    return label, eigs


def _report(system, point, context) -> FixedPointReport:
    label, eigs = classify_stability(system, point)
    return FixedPointReport(point=(float(point[0]), float(point[1])),
                            stability=label, eigenvalues=eigs, context=context)


def tpca_fixed_points(algorithm: str, lam: float, c_delta: float,
                      beta: float = 0.0) -> list[FixedPointReport]:
    """Enumerate and classify the k = 2 tensor PCA fixed points.

    SGD-M: (0, 0); equator (0, c*); and, when lam > c* = c_delta/(1-beta),
    the pair (+-sqrt(lam - c*), c*).
    SGD-U: equator (0, c_delta^{2/3}/2); when lam > lambda_crit^U, the pair
    (+-sqrt(lam - cdag/sqrt(lam)), cdag/sqrt(lam)) with cdag = c_delta/(2 sqrt(2)).
    """
    if lam <= 0 or c_delta <= 0:
        raise ValueError("lam and c_delta must be positive")
    out: list[FixedPointReport] = []
    if algorithm in ("sgd", "sgd-m"):
        system = tpca_sgdm_system(2, lam, beta, c_delta)
        cstar = c_delta / (1.0 - beta)
        ctx = dict(algorithm="sgd-m", k=2, lam=lam, beta=beta, c_delta=c_delta,
                   c_star=cstar)
        out.append(_report(system, (0.0, 0.0), ctx))
        out.append(_report(system, (0.0, cstar), ctx))
        if lam > cstar:
            mstar = sqrt(lam - cstar)
            out.append(_report(system, (mstar, cstar), ctx))
            out.append(_report(system, (-mstar, cstar), ctx))
    elif algorithm == "sgd-u":
        system = tpca_sgdu_system(2, lam, c_delta)
        cdag = c_delta / (2.0 * sqrt(2.0))
        ctx = dict(algorithm="sgd-u", k=2, lam=lam, c_delta=c_delta, c_dag=cdag)
        out.append(_report(system, (0.0, c_delta ** (2.0 / 3.0) / 2.0), ctx))
        r2 = cdag / sqrt(lam)
        if lam > r2:
            mstar = sqrt(lam - r2)
            out.append(_report(system, (mstar, r2), ctx))
            out.append(_report(system, (-mstar, r2), ctx))
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return out


def si_linear_fixed_point(beta: float, c_delta: float,
                          sigma2: float) -> FixedPointReport | None:
    """Fixed point (1, c_delta sigma^2/(1-beta-c_delta)) of the linear-link
    SGD-M limit, which exists iff c_delta < 1 - beta."""
    if not c_delta < 1.0 - beta:
        return None
    r2 = c_delta * sigma2 / (1.0 - beta - c_delta)
    system = si_sgdm_system_monomial(1, sigma2, beta, c_delta)
    ctx = dict(algorithm="sgd-m", link="x", beta=beta, c_delta=c_delta,
               sigma2=sigma2)
    return _report(system, (1.0, r2), ctx)


def si_quadratic_fixed_points(beta: float, c_delta: float,
                              sigma2: float) -> list[FixedPointReport]:
    """Fixed points of the quadratic-link SGD-M limit.

    Below the step threshold c_delta < (1-beta)/12 the nontrivial branch
    r*^2 = c_delta sigma^2/(1-beta-12 c_delta), m*^2 = 1 - r*^2 exists
    (R^2 = 1); above it, (0, 0) plus the real positive equator roots of
    6 r^2 - 2 = (4 c_delta/(1-beta)) (15 r^4 - 6 r^2 + 3 + sigma^2).
    """
    system = si_sgdm_system_monomial(2, sigma2, beta, c_delta)
    ctx = dict(algorithm="sgd-m", link="x^2", beta=beta, c_delta=c_delta,
               sigma2=sigma2)
    out: list[FixedPointReport] = []
    threshold = (1.0 - beta) / 12.0
    if c_delta < threshold:
        r2 = c_delta * sigma2 / (1.0 - beta - 12.0 * c_delta)
        if r2 < 1.0:
            m = sqrt(1.0 - r2)
            out.append(_report(system, (m, r2), ctx))
            out.append(_report(system, (-m, r2), ctx))
    else:
        out.append(_report(system, (0.0, 0.0), ctx))
        C4 = 4.0 * c_delta / (1.0 - beta)
        # 15 C4 y^2 - (6 C4 + 6) y + (3 + sigma^2) C4 + 2 = 0 in y = r^2
        a, b, c = 15.0 * C4, -(6.0 * C4 + 6.0), (3.0 + sigma2) * C4 + 2.0
        disc = b * b - 4.0 * a * c
        if disc >= 0.0:
            for y in sorted({(-b - sqrt(disc)) / (2 * a), (-b + sqrt(disc)) / (2 * a)}):
                if y > 0.0:
                    out.append(_report(system, (0.0, y), ctx))
    return out


def si_monomial_cdelta_threshold(k: int, beta: float = 0.0) -> float:
    """Largest step constant for which (1, 0) is locally stable under the
    monomial-link SGD-M limit: ((1-beta)/k^2) (2k-3)!!/(4k-5)!!."""
    if k < 1:
        raise ValueError("need k >= 1")
    return (1.0 - beta) / k**2 * double_factorial(2 * k - 3) / double_factorial(4 * k - 5)


def si_monomial_threshold_decay_check(k_range) -> dict:
    """Large-k behavior of the monomial threshold.

    Returns the least-squares slope of log threshold against (k+2) log k
    (the threshold is of order k^{-k-2}) and, per k, the ratio of the
    threshold to its Stirling asymptotic (e/(8(k-1)))^{k-1}/k^2, which
    tends to 1.
    """
    ks = sorted(k_range)
    if not ks or ks[0] < 5 or ks[-1] > 40:
        raise ValueError("k_range must lie in [5, 40]")
    logs = np.array([math.log(si_monomial_cdelta_threshold(k)) for k in ks])
    xs = np.array([(k + 2) * math.log(k) for k in ks])
    slope = float(np.polyfit(xs, logs, 1)[0])
    ratios = {
        k: si_monomial_cdelta_threshold(k)
        / ((math.e / (8.0 * (k - 1))) ** (k - 1) / k**2)
        for k in ks
    }
    return {"slope": slope, "ratios": ratios}


# ---------------------------------------------------------------------------
# Even-polynomial asymmetric fixed point (SGD-U)


def evenpoly_m_of_r(r: float) -> float:
    """Unique root m(r) in (1/2, 1) of F(., r), by bisection to 1e-12.

    For r <= 0.2 the root provably satisfies 1 - r^3 < m(r) < 1, which is
    re-verified here.
    """
    if not 0.0 < r <= 1.0:
        raise ValueError("r must lie in (0, 1]")
    lo, hi = 0.5, 1.0
    flo = evenpoly_F(lo, r)
    fhi = evenpoly_F(hi, r)
    if flo * fhi > 0:
        raise ValueError(f"F does not change sign on [1/2, 1] at r = {r}")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if evenpoly_F(mid, r) * flo <= 0:
            hi = mid
        else:
            lo = mid
    m = 0.5 * (lo + hi)
    if r <= 0.2 and not (1.0 - r**3 < m < 1.0):
        raise AssertionError(f"m(r) = {m} violates the bound 1 - r^3 < m < 1")
    return m


def evenpoly_c_of_r(r: float) -> float:
    """c(r) = (4 r^2 / sqrt(2 pi)) G(m(r), r), extended by c(0) = 0."""
    if r == 0.0:
        return 0.0
    return 4.0 * r * r / sqrt(2.0 * math.pi) * evenpoly_G(evenpoly_m_of_r(r), r)


def evenpoly_fixed_point(c_delta: float, r_max: float = 1.0):
    """Asymmetric fixed point of the even-link SGD-U limit: smallest root
    r* of c(r) = c_delta on (0, r_max], reported as (+-m(r*), r*^2).

    When c_delta exceeds max c on (0, r_max], returns NoFixedPoint carrying
    that maximum.
    """
    if c_delta <= 0 or not 0 < r_max <= 1.0:
        raise ValueError("need c_delta > 0 and r_max in (0, 1]")
    grid = np.linspace(r_max / 2000.0, r_max, 2000)
    cvals = np.array([evenpoly_c_of_r(r) for r in grid])
    bracket = None
    prev_r, prev_c = 0.0, 0.0  # c(0) = 0 < c_delta
    for r, c in zip(grid, cvals):
        if (prev_c - c_delta) * (c - c_delta) <= 0 and c >= c_delta:
            bracket = (prev_r if prev_r > 0 else grid[0] * 1e-6, r)
            break
        prev_r, prev_c = r, c
    if bracket is None:
        return NoFixedPoint(reason="c_delta above max of c(r) on (0, r_max]",
                            bound=float(cvals.max()))
    lo, hi = bracket
    while hi - lo > 1e-13:
        mid = 0.5 * (lo + hi)
        if evenpoly_c_of_r(mid) >= c_delta:
            hi = mid
        else:
            lo = mid
    rstar = 0.5 * (lo + hi)
    mstar = evenpoly_m_of_r(rstar)
    system = si_sgdu_system_even(c_delta)
    drift = system.drift(np.array([mstar, rstar * rstar]))
    if np.linalg.norm(drift) > 1e-9:
        raise AssertionError(f"located point fails the drift equations: {drift}")
    return _report(system, (mstar, rstar * rstar),
                   dict(algorithm="sgd-u", link="even_poly", c_delta=c_delta,
                        r_max=r_max, r_star=rstar))


def evenpoly_series(c_delta: float) -> tuple[float, float]:
    """Small-step series for the asymmetric fixed point:
    kappa = c_delta sqrt(2 pi)/4, r = kappa + kappa^2/2 + kappa^3/2,
    m = 1 - (3/8) r^3. Documented validity c_delta <= 0.1."""
    if c_delta <= 0:
        raise ValueError("c_delta must be positive")
    kappa = c_delta * sqrt(2.0 * math.pi) / 4.0
    r = kappa + kappa**2 / 2.0 + kappa**3 / 2.0
    m = 1.0 - 0.375 * r**3
    return m, r


def max_admissible_step(algorithm: str, lam: float, beta: float = 0.0) -> float:
    """Largest c_delta with nontrivial k = 2 fixed points: lam (1-beta) for
    SGD-M, 2 sqrt(2) lam^{3/2} for SGD-U (inverting lambda_crit)."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if algorithm in ("sgd", "sgd-m"):
        return lam * (1.0 - beta)
    if algorithm == "sgd-u":
        return 2.0 * sqrt(2.0) * lam**1.5
    raise ValueError(f"unknown algorithm {algorithm!r}")
