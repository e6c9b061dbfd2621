"""Effective scaling limits and their integrators.

In the critical step-size scaling delta = c_delta/n the summary
statistics (m, r_perp^2) close on deterministic ODEs (ballistic phase);
near the equator m = 0 the rescaled overlap mtilde = sqrt(n) m of SGD-U
follows a genuine SDE (diffusive phase). This module registers each
limiting system displayed in the analysis and provides fixed-step RK4
and Euler-Maruyama integrators.

State convention: ballistic state u = (m, r2), diffusive state
u = (mtilde, r2), with r2 the squared perpendicular radius.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from math import atan2, comb, cos, pi, sin, sqrt
from typing import Callable

import numpy as np

from .gauss import as_generator, gaussian_moment, gh_expect_2d
from .models import LinkFunction

__all__ = [
    "DynamicsSystem",
    "OdePath",
    "tpca_sgdm_system",
    "tpca_sgdu_system",
    "tpca_sgdu_diffusive_system",
    "si_sgdm_system_quadrature",
    "si_sgdm_system_monomial",
    "joint_moment",
    "si_sgdu_system_mc",
    "si_sgdu_system_increasing",
    "si_sgdu_system_even",
    "evenpoly_F",
    "evenpoly_G",
    "integrate_ode",
    "integrate_sde_em",
    "sde_ensemble_stats",
]

SDE_R2_FLOOR = 1e-8


@dataclass(frozen=True)
class DynamicsSystem:
    regime: str  # "ballistic" | "diffusive"
    state_labels: tuple[str, ...]
    drift: Callable[[np.ndarray], np.ndarray]
    diffusion: Callable[[np.ndarray], np.ndarray] | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.regime == "ballistic" and self.diffusion is not None:
            raise ValueError("ballistic systems carry no diffusion map")


@dataclass(frozen=True)
class OdePath:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), dim)
    step_size: float

    def at(self, label_index: int) -> np.ndarray:
        return self.states[:, label_index]


# ---------------------------------------------------------------------------
# Tensor PCA limits


def tpca_sgdm_system(k: int, lam: float, beta: float, c_delta: float) -> DynamicsSystem:
    """Ballistic SGD-M limit:

        dm   = (1/(1-beta)) * 2m (lam k m^{k-2} - k R^{2(k-1)}) dt
        dr2  = -(4 k R^{2(k-1)}/(1-beta)^2) (r2 (1-beta) - c_delta) dt
    """
    if k < 2 or not 0 <= beta < 1:
        raise ValueError("need k >= 2 and beta in [0, 1)")
    omb = 1.0 - beta

    def drift(u):
        m, r2 = u[0], u[1]
        R2 = m * m + r2
        dm = (2.0 * m / omb) * (lam * k * m ** (k - 2) - k * R2 ** (k - 1))
        dr2 = -(4.0 * k * R2 ** (k - 1) / omb**2) * (r2 * omb - c_delta)
        return np.array([dm, dr2])

    return DynamicsSystem("ballistic", ("m", "r2"), drift,
                          params=dict(family="tpca", algorithm="sgd-m", k=k,
                                      lam=lam, beta=beta, c_delta=c_delta))


def tpca_sgdu_system(k: int, lam: float, c_delta: float) -> DynamicsSystem:
    """Ballistic SGD-U limit:

        dm  = sqrt(k) (lam (m/R)^{k-1} - R^{k-1} m) dt
        dr2 = -2 sqrt(k) (R^{k-1} r2 - c_delta/(2 sqrt(k))) dt

    extended continuously by (0, c_delta) at R = 0.
    """
    if k < 2:
        raise ValueError("need k >= 2")
    sk = sqrt(k)

    def drift(u):
        m, r2 = u[0], u[1]
        R = sqrt(m * m + r2)
        if R == 0.0:
            return np.array([0.0, c_delta])
        dm = sk * (lam * (m / R) ** (k - 1) - R ** (k - 1) * m)
        dr2 = -2.0 * sk * (R ** (k - 1) * r2 - c_delta / (2.0 * sk))
        return np.array([dm, dr2])

    return DynamicsSystem("ballistic", ("m", "r2"), drift,
                          params=dict(family="tpca", algorithm="sgd-u", k=k,
                                      lam=lam, c_delta=c_delta))


def tpca_sgdu_diffusive_system(k: int, lam: float, c_delta: float) -> DynamicsSystem:
    """Diffusive SGD-U limit near the equator, state (mtilde, r2):

        dmtilde = (lam (mtilde/r)^{k-1} 1_{k=2} - r^{k-1} mtilde) dt
                  + sqrt(c_delta) ((k-1) mtilde^2 / r^2 + 1)^{1/2} dB
        dr2     = -2 (r^{k+1} - c_delta/2) dt            (noise-free)

    Implemented exactly as displayed; the signal term is present only at
    k = 2 (for k >= 3 it vanishes at the equator scale).
    """
    if k < 2:
        raise ValueError("need k >= 2")

    def drift(u):
        mt, r2 = u[0], max(u[1], SDE_R2_FLOOR)
        r = sqrt(r2)
        signal = lam * (mt / r) ** (k - 1) if k == 2 else 0.0
        dmt = signal - r ** (k - 1) * mt
        dr2 = -2.0 * (r ** (k + 1) - c_delta / 2.0)
        return np.array([dmt, dr2])

    def diffusion(u):
        mt, r2 = u[0], max(u[1], SDE_R2_FLOOR)
        amp = sqrt(c_delta) * sqrt((k - 1) * mt * mt / r2 + 1.0)
        return np.array([amp, 0.0])

    return DynamicsSystem("diffusive", ("m_tilde", "r2"), drift, diffusion,
                          params=dict(family="tpca", algorithm="sgd-u", k=k,
                                      lam=lam, c_delta=c_delta))


# ---------------------------------------------------------------------------
# Single-index limits (SGD-M)


def joint_moment(p: int, q: int, m: float, r: float) -> float:
    """M_{p,q}(m, r) = E[Z^p a1^q] for Z = m a1 + r a2, independent standard
    Gaussians: sum_j C(p,j) m^j r^{p-j} mu_{j+q} mu_{p-j}."""
    if p < 0 or q < 0:
        raise ValueError("moment orders must be nonnegative")
    total = 0.0
    for j in range(p + 1):
        mu1 = gaussian_moment(j + q)
        mu2 = gaussian_moment(p - j)
        if mu1 == 0 or mu2 == 0:
            continue
        total += comb(p, j) * m**j * r ** (p - j) * mu1 * mu2
    return total


def _monomial_PQE(k: int, sigma2: float, m: float, r: float):
    P = k * (2 * k - 1) * joint_moment(2 * k - 2, 0, m, r)
    if k >= 2:
        P -= k * (k - 1) * joint_moment(k - 2, k, m, r)
    Q = k * k * joint_moment(k - 1, k - 1, m, r)
    E_r2 = k * k * (
        joint_moment(4 * k - 2, 0, m, r)
        - 2.0 * joint_moment(3 * k - 2, k, m, r)
        + joint_moment(2 * k - 2, 2 * k, m, r)
        + sigma2 * joint_moment(2 * k - 2, 0, m, r)
    )
    return P, Q, E_r2


def si_sgdm_system_monomial(k: int, sigma2: float, beta: float,
                            c_delta: float) -> DynamicsSystem:
    """Closed-form SGD-M limit for f(x) = x^k via the joint moments:

        dm  = -2 (m P - Q)/(1-beta) dt
        dr2 = -4 (r2 P - C' E_{r,2})/(1-beta) dt,  C' = c_delta/(1-beta)
    """
    if k < 1:
        raise ValueError("need k >= 1")
    omb = 1.0 - beta
    Cp = c_delta / omb

    def drift(u):
        m, r2 = u[0], max(u[1], 0.0)
        r = sqrt(r2)
        P, Q, E_r2 = _monomial_PQE(k, sigma2, m, r)
        dm = -2.0 * (m * P - Q) / omb
        dr2 = -4.0 * (r2 * P - Cp * E_r2) / omb
        return np.array([dm, dr2])

    return DynamicsSystem("ballistic", ("m", "r2"), drift,
                          params=dict(family="si", algorithm="sgd-m", k=k,
                                      sigma2=sigma2, beta=beta, c_delta=c_delta))


def si_sgdm_system_quadrature(link: LinkFunction, sigma2: float, beta: float,
                              c_delta: float, gh_order: int = 40) -> DynamicsSystem:
    """SGD-M limit for a general link, the two Gaussian expectations
    evaluated by tensorized Gauss-Hermite quadrature:

        dm  = (-2/(1-beta)) E[a1 f'(Z) (f(Z) - f(a1))] dt
        dr2 = (-4/(1-beta)) { r E[a2 f'(Z)(f(Z) - f(a1))]
                              - (c_delta/(1-beta)) E[f'(Z)^2 ((f(Z)-f(a1))^2 + sigma^2)] } dt

    with Z = m a1 + r a2.
    """
    if gh_order < 2:
        raise ValueError("gh_order must be >= 2")
    omb = 1.0 - beta
    Cp = c_delta / omb
    f, fp = link.f, link.fprime

    def drift(u):
        m, r2 = u[0], max(u[1], 0.0)
        r = sqrt(r2)

        def e_m(a1, a2):
            Z = m * a1 + r * a2
            return a1 * fp(Z) * (f(Z) - f(a1))

        def e_r1(a1, a2):
            Z = m * a1 + r * a2
            return a2 * fp(Z) * (f(Z) - f(a1))

        def e_r2(a1, a2):
            Z = m * a1 + r * a2
            d = f(Z) - f(a1)
            return fp(Z) ** 2 * (d * d + sigma2)

        dm = (-2.0 / omb) * gh_expect_2d(e_m, gh_order)
        dr2 = (-4.0 / omb) * (r * gh_expect_2d(e_r1, gh_order)
                              - Cp * gh_expect_2d(e_r2, gh_order))
        return np.array([dm, dr2])

    return DynamicsSystem("ballistic", ("m", "r2"), drift,
                          params=dict(family="si", algorithm="sgd-m",
                                      link=link.kind, sigma2=sigma2, beta=beta,
                                      c_delta=c_delta, gh_order=gh_order))


# ---------------------------------------------------------------------------
# Single-index limits (SGD-U)


def si_sgdu_system_mc(link: LinkFunction, sigma2: float, c_delta: float,
                      n_mc: int, rng) -> DynamicsSystem:
    """Monte-Carlo SGD-U limit for a general link:

        dm  = -E[a1 sgn(f'(Z)(f(Z) - f(a1) + eps))] dt
        dr2 = -2 (r E[a2 sgn(...)] - c_delta/2) dt

    with sgn(0) = 0. The drift carries MC noise of order 1/sqrt(n_mc);
    `drift_with_stderr` reports the per-component standard errors.
    """
    if n_mc < 10**4:
        raise ValueError("n_mc must be >= 1e4")
    gen = as_generator(rng)
    f, fp = link.f, link.fprime

    def _signs(m, r):
        a1 = gen.standard_normal(n_mc)
        a2 = gen.standard_normal(n_mc)
        eps = math.sqrt(sigma2) * gen.standard_normal(n_mc) if sigma2 > 0 else 0.0
        Z = m * a1 + r * a2
        S = np.sign(fp(Z) * (f(Z) - f(a1) + eps))
        return a1, a2, S

    def drift(u):
        m, r2 = u[0], max(u[1], 0.0)
        r = sqrt(r2)
        a1, a2, S = _signs(m, r)
        dm = -float(np.mean(a1 * S))
        dr2 = -2.0 * (r * float(np.mean(a2 * S)) - c_delta / 2.0)
        return np.array([dm, dr2])

    def drift_with_stderr(u):
        m, r2 = u[0], max(u[1], 0.0)
        r = sqrt(r2)
        a1, a2, S = _signs(m, r)
        x1, x2 = a1 * S, a2 * S
        dm = -float(np.mean(x1))
        dr2 = -2.0 * (r * float(np.mean(x2)) - c_delta / 2.0)
        se1 = float(np.std(x1, ddof=1) / math.sqrt(n_mc))
        se2 = 2.0 * r * float(np.std(x2, ddof=1) / math.sqrt(n_mc))
        return np.array([dm, dr2]), np.array([se1, se2])

    system = DynamicsSystem("ballistic", ("m", "r2"), drift,
                            params=dict(family="si", algorithm="sgd-u",
                                        link=link.kind, sigma2=sigma2,
                                        c_delta=c_delta, n_mc=n_mc))
    object.__setattr__(system, "drift_with_stderr", drift_with_stderr)
    return system


def si_sgdu_system_increasing(c_delta: float) -> DynamicsSystem:
    """Universal SGD-U limit for any strictly increasing link (noiseless):

        dm  = -sqrt(2/pi) (m-1)/sqrt((m-1)^2 + r2) dt
        dr2 = [-2 sqrt(2/pi) r2/sqrt((m-1)^2 + r2) + c_delta] dt

    extended by (0, c_delta) at the fixed point argument (1, 0).
    """
    c = sqrt(2.0 / pi)

    def drift(u):
        m, r2 = u[0], max(u[1], 0.0)
        d2 = (m - 1.0) ** 2 + r2
        if d2 == 0.0:
            return np.array([0.0, c_delta])
        den = sqrt(d2)
        return np.array([-c * (m - 1.0) / den, -2.0 * c * r2 / den + c_delta])

    return DynamicsSystem("ballistic", ("m", "r2"), drift,
                          params=dict(family="si", algorithm="sgd-u",
                                      link="increasing", c_delta=c_delta))


def _angles(m: float, r: float):
    return atan2(m, r), atan2(1.0 - m, r), atan2(1.0 + m, r)


def evenpoly_F(m: float, r: float) -> float:
    """F(m, r) = sin(a3) - sin(a2) - sin(a1), tan a1 = m/r,
    tan a2 = (1-m)/r, tan a3 = (1+m)/r. Odd in m; F(0, r) = 0."""
    if r <= 0.0 and abs(m) in (0.0, 1.0):
        raise ValueError("F singular at r = 0 with m in {-1, 0, 1}")
    a1, a2, a3 = _angles(m, r)
    return sin(a3) - sin(a2) - sin(a1)


def evenpoly_G(m: float, r: float) -> float:
    """G(m, r) = (cos(a2) + cos(a3) - cos(a1)) / r. Even in m."""
    if r <= 0.0:
        raise ValueError("G requires r > 0")
    a1, a2, a3 = _angles(m, r)
    return (cos(a2) + cos(a3) - cos(a1)) / r


def si_sgdu_system_even(c_delta: float) -> DynamicsSystem:
    """Universal SGD-U limit for even polynomial links (noiseless):

        dm  = -(2/sqrt(2 pi)) F(m, r) dt
        dr2 = [-(4 r2/sqrt(2 pi)) G(m, r) + c_delta] dt
    """
    c = 2.0 / sqrt(2.0 * pi)

    def drift(u):
        m, r2 = u[0], u[1]
        if r2 <= 0.0:
            raise ValueError("even-link system requires r2 > 0")
        r = sqrt(r2)
        return np.array([-c * evenpoly_F(m, r),
                         -2.0 * c * r2 * evenpoly_G(m, r) + c_delta])

    return DynamicsSystem("ballistic", ("m", "r2"), drift,
                          params=dict(family="si", algorithm="sgd-u",
                                      link="even_poly", c_delta=c_delta))


# ---------------------------------------------------------------------------
# Integrators


def _clamp_r2(u: np.ndarray, labels: tuple[str, ...], floor: float) -> np.ndarray:
    if "r2" in labels:
        i = labels.index("r2")
        if u[i] < floor:
            u[i] = floor
    return u


def integrate_ode(system: DynamicsSystem, u0, T: float, h: float = 1e-3) -> OdePath:
    """Classical RK4 on a fixed grid; the r2 coordinate is clamped at 0."""
    if system.regime != "ballistic":
        raise ValueError("integrate_ode expects a ballistic system")
    if h <= 0 or T <= 0:
        raise ValueError("need T > 0 and h > 0")
    nsteps = int(round(T / h))
    times = np.linspace(0.0, nsteps * h, nsteps + 1)
    dim = len(system.state_labels)
    states = np.empty((nsteps + 1, dim))
    u = np.asarray(u0, dtype=float).copy()
    _clamp_r2(u, system.state_labels, 0.0)
    states[0] = u
    f = system.drift
    for j in range(nsteps):
        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        if not (np.all(np.isfinite(k1)) and np.all(np.isfinite(k4))):
            raise FloatingPointError(
                f"drift non-finite at t = {times[j]:.6g}, state = {u.tolist()}")
        u = u + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _clamp_r2(u, system.state_labels, 0.0)
        states[j + 1] = u
    return OdePath(times=times, states=states, step_size=h)


def integrate_sde_em(system: DynamicsSystem, u0, T: float, h: float = 1e-4,
                     rng=None) -> OdePath:
    """Euler-Maruyama on a fixed grid; the r2 coordinate is clamped at
    SDE_R2_FLOOR before each coefficient evaluation."""
    if system.regime != "diffusive":
        raise ValueError("integrate_sde_em expects a diffusive system")
    if h <= 0 or T <= 0:
        raise ValueError("need T > 0 and h > 0")
    gen = as_generator(rng)
    nsteps = int(round(T / h))
    times = np.linspace(0.0, nsteps * h, nsteps + 1)
    dim = len(system.state_labels)
    states = np.empty((nsteps + 1, dim))
    u = np.asarray(u0, dtype=float).copy()
    _clamp_r2(u, system.state_labels, SDE_R2_FLOOR)
    states[0] = u
    sqh = sqrt(h)
    for j in range(nsteps):
        _clamp_r2(u, system.state_labels, SDE_R2_FLOOR)
        b = system.drift(u)
        sig = system.diffusion(u) if system.diffusion is not None else 0.0
        dB = gen.standard_normal(dim) * sqh
        u = u + h * b + sig * dB
        if not np.all(np.isfinite(u)):
            raise FloatingPointError(f"non-finite state at step {j}")
        states[j + 1] = u
    return OdePath(times=times, states=states, step_size=h)


def sde_ensemble_stats(system: DynamicsSystem, u0_sampler, T: float, h: float,
                       n_paths: int, rng, record_times):
    """Mean/variance of the first coordinate (and mean of the second)
    across an Euler-Maruyama ensemble, at the requested times.

    u0_sampler(gen) must return an initial state per path.
    """
    gen = as_generator(rng)
    record_times = np.asarray(record_times, dtype=float)
    idx = np.round(record_times / h).astype(int)
    first = np.empty((n_paths, len(idx)))
    second = np.empty((n_paths, len(idx)))
    for i in range(n_paths):
        path = integrate_sde_em(system, u0_sampler(gen), T, h, gen)
        first[i] = path.states[idx, 0]
        second[i] = path.states[idx, 1]
    mean = first.mean(axis=0)
    var = first.var(axis=0, ddof=1)
    se_mean = first.std(axis=0, ddof=1) / sqrt(n_paths)
    # stderr of the sample variance via the fourth central moment
    m4 = ((first - mean) ** 4).mean(axis=0)
    se_var = np.sqrt(np.maximum(m4 - (var * (n_paths - 3) / (n_paths - 1)) * var, 0.0)
                     / n_paths)
    return {
        "times": record_times,
        "mean": mean,
        "se_mean": se_mean,
        "var": var,
        "se_var": se_var,
        "second_mean": second.mean(axis=0),
    }
