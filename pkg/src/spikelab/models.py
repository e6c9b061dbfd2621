"""The two learning problems and their stochastic gradients.

Spiked tensor PCA: observations Y = lambda v^{otimes k} + W, loss
L(x, Y) = ||Y - x^{otimes k}||^2. The per-sample gradient is a Gaussian
vector with mean

    grad Phi = -2 lambda k m^{k-1} v + 2 k R^{2k-2} x

and covariance V = 4k R^{2k-2} I + 4k(k-1) R^{2k-4} x x^T, where
m = <x, v>, r^2 = ||x||^2 - m^2, R^2 = m^2 + r^2. We sample directly from
this law (O(n) per draw) instead of materializing n^k tensors; an explicit
k=2 oracle guards against transcription errors.

Single-index: y = f(<a, v>) + eps with a ~ N(0, I), eps ~ N(0, sigma^2);
squared loss gives grad L = 2 (f(s) - y) f'(s) a at s = <x, a>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .gauss import RngStream, as_generator, sample_structured_gaussian

__all__ = [
    "LinkFunction",
    "TensorPcaModel",
    "SingleIndexModel",
    "SummaryPoint",
    "summary_stats",
    "tpca_population_gradient",
    "tpca_gradient_cov_params",
    "tpca_sample_gradient",
    "tpca_expected_sq_norm",
    "tpca_explicit_gradient_oracle",
    "si_sample_gradient",
    "si_noise_sample",
]

_R2_CLAMP = 1e-14  # cancellation guard for ||x||^2 - m^2 near the spike


@dataclass(frozen=True)
class LinkFunction:
    """Scalar link f with derivative; kind tags which limit theory applies.

    Polynomial links additionally carry their coefficient vector
    (coeffs[j] multiplies x^j) so simulations can run in the compiled
    kernels.
    """

    kind: str  # "monomial" | "increasing" | "even_poly" | "polynomial"
    f: Callable[[np.ndarray], np.ndarray]
    fprime: Callable[[np.ndarray], np.ndarray]
    degree: int | None = None  # set for monomial links
    coeffs: tuple[float, ...] | None = None

    @staticmethod
    def monomial(k: int) -> "LinkFunction":
        if k < 1:
            raise ValueError("monomial degree must be >= 1")
        return LinkFunction(
            kind="monomial",
            f=lambda x: x**k,
            fprime=lambda x: k * x ** (k - 1) if k > 1 else np.ones_like(np.asarray(x, dtype=float)),
            degree=k,
            coeffs=(0.0,) * k + (1.0,),
        )

    @staticmethod
    def polynomial(coeffs, kind: str = "polynomial") -> "LinkFunction":
        """Link sum_j coeffs[j] x^j; `kind` may be overridden to tag an
        even polynomial or strictly increasing polynomial as such."""
        coeffs = tuple(float(c) for c in coeffs)
        poly = np.polynomial.Polynomial(coeffs)
        dpoly = poly.deriv()
        return LinkFunction(kind=kind, f=poly, fprime=dpoly, coeffs=coeffs)

    @staticmethod
    def increasing(f, fprime) -> "LinkFunction":
        return LinkFunction(kind="increasing", f=f, fprime=fprime)

    @staticmethod
    def even_poly(f, fprime) -> "LinkFunction":
        return LinkFunction(kind="even_poly", f=f, fprime=fprime)


def _check_spike(v: np.ndarray) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if abs(np.linalg.norm(v) - 1.0) > 1e-12:
        raise ValueError("spike must be a unit vector to within 1e-12")
    return v


@dataclass(frozen=True)
class TensorPcaModel:
    n: int
    k: int
    lam: float
    spike: np.ndarray
    c_delta: float

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("tensor order k must be >= 2")
        if self.lam <= 0 or self.c_delta <= 0:
            raise ValueError("lambda and c_delta must be positive")
        object.__setattr__(self, "spike", _check_spike(self.spike))

    @property
    def delta(self) -> float:
        return self.c_delta / self.n

    @staticmethod
    def standard(n: int, k: int, lam: float, c_delta: float) -> "TensorPcaModel":
        """Spike along the first basis vector (the CLI convention)."""
        v = np.zeros(n)
        v[0] = 1.0
        return TensorPcaModel(n=n, k=k, lam=lam, spike=v, c_delta=c_delta)


@dataclass(frozen=True)
class SingleIndexModel:
    n: int
    link: LinkFunction
    sigma2: float
    spike: np.ndarray
    c_delta: float

    def __post_init__(self):
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be >= 0")
        if self.c_delta <= 0:
            raise ValueError("c_delta must be positive")
        object.__setattr__(self, "spike", _check_spike(self.spike))

    @property
    def delta(self) -> float:
        return self.c_delta / self.n

    @staticmethod
    def standard(n: int, link: LinkFunction, sigma2: float, c_delta: float) -> "SingleIndexModel":
        v = np.zeros(n)
        v[0] = 1.0
        return SingleIndexModel(n=n, link=link, sigma2=sigma2, spike=v, c_delta=c_delta)


@dataclass(frozen=True)
class SummaryPoint:
    t: float
    m: float
    r2: float

    @property
    def R(self) -> float:
        return math.sqrt(self.m * self.m + self.r2)

    @property
    def m_over_R(self) -> float:
        R = self.R
        return self.m / R if R > 0 else 0.0


def summary_stats(x: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """(m, r_perp^2) = (<x, v>, ||x||^2 - m^2), clamped at 0 near rounding."""
    m = float(x @ v)
    r2 = float(x @ x) - m * m
    if r2 < 0.0:
        if r2 < -_R2_CLAMP * max(1.0, m * m):
            raise ValueError(f"r2 = {r2} negative beyond rounding tolerance")
        r2 = 0.0
    return m, r2


def _tpca_mr(model: TensorPcaModel, x: np.ndarray) -> tuple[float, float, float]:
    m, r2 = summary_stats(x, model.spike)
    return m, r2, m * m + r2


def tpca_population_gradient(model: TensorPcaModel, x: np.ndarray) -> np.ndarray:
    m, _, R2 = _tpca_mr(model, x)
    k, lam = model.k, model.lam
    return (-2.0 * lam * k * m ** (k - 1)) * model.spike + (2.0 * k * R2 ** (k - 1)) * x


def tpca_gradient_cov_params(model: TensorPcaModel, x: np.ndarray) -> tuple[float, float]:
    """(iso, rank1) of V = iso*I + rank1 * x x^T."""
    _, _, R2 = _tpca_mr(model, x)
    k = model.k
    iso = 4.0 * k * R2 ** (k - 1)
    rank1 = 4.0 * k * (k - 1) * R2 ** (k - 2)
    return iso, rank1


def tpca_sample_gradient(model: TensorPcaModel, x: np.ndarray, rng) -> np.ndarray:
    mean = tpca_population_gradient(model, x)
    iso, rank1 = tpca_gradient_cov_params(model, x)
    # rank-1 direction x x^T = ||x||^2 * (xhat xhat^T); fold the norm into
    # the coefficient so the sampler sees a unit direction.
    R2 = float(x @ x)
    if R2 > 0:
        dir_ = x / math.sqrt(R2)
        rank1_coeff = rank1 * R2
    else:
        dir_ = x
        rank1_coeff = 0.0
    return sample_structured_gaussian(mean, iso, dir_, rank1_coeff, rng)


def tpca_expected_sq_norm(model: TensorPcaModel, x: np.ndarray) -> float:
    """D^2 = E||grad L||^2 at fixed x."""
    m, _, R2 = _tpca_mr(model, x)
    k, lam, n = model.k, model.lam, model.n
    if R2 == 0.0:
        return 0.0
    return 4.0 * k * k * (
        lam * lam * m ** (2 * k - 2) + R2 ** (2 * k - 1) - lam * m**k * R2 ** (k - 1)
    ) + 4.0 * (n + k - 1) * k * R2 ** (k - 1)


def tpca_explicit_gradient_oracle(n: int, lam: float, x: np.ndarray, rng) -> np.ndarray:
    """k = 2 cross-check: materialize Y = lam v v^T + W, W iid N(0,1), and
    differentiate ||Y - x x^T||^2 directly. O(n^2) memory; small n only."""
    if n > 200:
        raise ValueError("explicit oracle limited to n <= 200")
    gen = as_generator(rng)
    v = np.zeros(n)
    v[0] = 1.0
    W = gen.standard_normal((n, n))
    Y = lam * np.outer(v, v) + W
    return -2.0 * (Y + Y.T) @ x + 4.0 * float(x @ x) * x


def si_sample_gradient(model: SingleIndexModel, x: np.ndarray, rng) -> np.ndarray:
    gen = as_generator(rng)
    a = gen.standard_normal(model.n)
    eps = si_noise_sample(model.sigma2, gen)
    s = float(x @ a)
    t = float(model.spike @ a)
    link = model.link
    delta = float(link.f(s)) - float(link.f(t)) + eps
    return (2.0 * delta * float(link.fprime(s))) * a


def si_noise_sample(sigma2: float, rng) -> float:
    if sigma2 < 0:
        raise ValueError("sigma2 must be >= 0")
    gen = as_generator(rng)
    # draw even when sigma2 == 0 so the stream layout is sigma-independent
    z = gen.standard_normal()
    return math.sqrt(sigma2) * z
