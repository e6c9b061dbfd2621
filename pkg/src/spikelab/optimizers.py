"""Discrete-time online optimizers: SGD, SGD-M (heavy ball), SGD-U.

Updates at step size delta = c_delta / n:

    SGD-M:  p_l = beta p_{l-1} - delta grad L(x_{l-1}),  x_l = x_{l-1} + p_l
    SGD-U:  x_l = x_{l-1} - (c_delta/n) (sqrt(n)/||grad L||) grad L

so every non-skipped SGD-U step has length exactly c_delta/sqrt(n).
Plain SGD is SGD-M with beta = 0 (bitwise-identical given the same
stream). Zero-gradient SGD-U steps are skipped and counted; divergence
(||x|| > 1e12 or non-finite) truncates the trajectory with a flag.

`run_trajectory` advances via compiled block kernels fed bulk-generated
noise whenever the model supports it (tensor PCA, monomial single-index)
and falls back to the pure `step` loop otherwise; the two paths consume
the stream identically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from . import _kernels
from .gauss import RngStream, as_generator
from .models import (
    LinkFunction,
    SingleIndexModel,
    SummaryPoint,
    TensorPcaModel,
    si_sample_gradient,
    summary_stats,
    tpca_sample_gradient,
)

__all__ = [
    "AlgorithmSpec",
    "OptimizerState",
    "Trajectory",
    "UniformSphere",
    "FixedSummary",
    "step",
    "init_position",
    "run_trajectory",
    "ensemble_run",
    "mean_summary",
]

DIVERGE_NORM = 1.0e12
_MAX_BLOCK_ROWS = 1024


@dataclass(frozen=True)
class AlgorithmSpec:
    kind: str  # "sgd" | "sgd-m" | "sgd-u"
    c_delta: float
    beta: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sgd", "sgd-m", "sgd-u"):
            raise ValueError(f"unknown optimizer kind {self.kind!r}")
        if not 0.0 <= self.beta < 1.0:
            raise ValueError("beta must lie in [0, 1)")
        if self.kind != "sgd-m" and self.beta != 0.0:
            raise ValueError(f"{self.kind} does not take momentum (beta must be 0)")
        if self.c_delta <= 0:
            raise ValueError("c_delta must be positive")


@dataclass
class OptimizerState:
    x: np.ndarray
    p: np.ndarray
    step_count: int = 0
    skipped_steps: int = 0

    @staticmethod
    def initial(x0: np.ndarray) -> "OptimizerState":
        x0 = np.asarray(x0, dtype=float)
        return OptimizerState(x=x0.copy(), p=np.zeros_like(x0))


@dataclass(frozen=True)
class UniformSphere:
    radius: float = 1.0


@dataclass(frozen=True)
class FixedSummary:
    m0: float
    r02: float


@dataclass
class Trajectory:
    t: np.ndarray
    m: np.ndarray
    r2: np.ndarray
    meta: dict = field(default_factory=dict)
    diverged: bool = False
    skipped_steps: int = 0

    @property
    def m_over_R(self) -> np.ndarray:
        R = np.sqrt(self.m**2 + self.r2)
        out = np.zeros_like(self.m)
        np.divide(self.m, R, out=out, where=R > 0)
        return out

    @property
    def points(self) -> list[SummaryPoint]:
        return [SummaryPoint(float(t), float(m), float(r2))
                for t, m, r2 in zip(self.t, self.m, self.r2)]


def _sample_gradient(model, x, rng):
    if isinstance(model, TensorPcaModel):
        return tpca_sample_gradient(model, x, rng)
    if isinstance(model, SingleIndexModel):
        return si_sample_gradient(model, x, rng)
    raise TypeError(f"unsupported model type {type(model)!r}")


def step(state: OptimizerState, model, spec: AlgorithmSpec, rng) -> OptimizerState:
    """One optimizer step with a fresh gradient sample (reference path)."""
    gen = as_generator(rng)
    g = _sample_gradient(model, state.x, gen)
    if spec.kind == "sgd-u":
        nrm = float(np.linalg.norm(g))
        if nrm == 0.0:
            return replace(state, step_count=state.step_count + 1,
                           skipped_steps=state.skipped_steps + 1)
        step_len = model.c_delta / math.sqrt(model.n)
        x = state.x - (step_len / nrm) * g
        return OptimizerState(x=x, p=state.p, step_count=state.step_count + 1,
                              skipped_steps=state.skipped_steps)
    p = spec.beta * state.p - model.delta * g
    x = state.x + p
    return OptimizerState(x=x, p=p, step_count=state.step_count + 1,
                          skipped_steps=state.skipped_steps)


def init_position(n: int, mode, v: np.ndarray, rng) -> np.ndarray:
    """Initial iterate: uniform on a sphere, or at fixed (m0, r0^2)."""
    gen = as_generator(rng)
    if isinstance(mode, UniformSphere):
        if mode.radius <= 0:
            raise ValueError("radius must be positive")
        g = gen.standard_normal(n)
        return (mode.radius / np.linalg.norm(g)) * g
    if isinstance(mode, FixedSummary):
        if mode.r02 < 0:
            raise ValueError("r0^2 must be >= 0")
        g = gen.standard_normal(n)
        g_perp = g - (g @ v) * v
        nrm = np.linalg.norm(g_perp)
        u = g_perp / nrm if nrm > 0 else g_perp
        return mode.m0 * v + math.sqrt(mode.r02) * u
    raise TypeError(f"unknown init mode {mode!r}")


def _kernel_dispatch(model, spec):
    """Return a closure advancing (x, p) by a block of noise rows, or None."""
    if isinstance(model, TensorPcaModel):
        k, lam, n = model.k, model.lam, model.n
        if spec.kind == "sgd-u":
            step_len = model.c_delta / math.sqrt(n)
            scratch = np.empty(n)

            def advance(x, p, noise):
                return _kernels.tpca_sgdu_block(x, model.spike, noise, k, lam,
                                                step_len, scratch)
        else:
            delta = model.delta

            def advance(x, p, noise):
                return _kernels.tpca_sgdm_block(x, p, model.spike, noise, k, lam,
                                                spec.beta, delta)
        return advance
    if isinstance(model, SingleIndexModel) and model.link.coeffs is not None:
        n = model.n
        fc = np.asarray(model.link.coeffs, dtype=float)
        dc = np.polynomial.Polynomial(fc).deriv().coef.astype(float)
        sq_s2 = math.sqrt(model.sigma2)
        if spec.kind == "sgd-u":
            step_len = model.c_delta / math.sqrt(n)
            scratch = np.empty(n)

            def advance(x, p, noise):
                return _kernels.si_poly_sgdu_block(x, model.spike, noise, fc, dc,
                                                   sq_s2, step_len, scratch)
        else:
            delta = model.delta

            def advance(x, p, noise):
                return _kernels.si_poly_sgdm_block(x, p, model.spike, noise, fc, dc,
                                                   sq_s2, spec.beta, delta)
        return advance
    return None


def run_trajectory(model, spec: AlgorithmSpec, x0: np.ndarray, horizon_T: float,
                   record_stride: int, rng) -> Trajectory:
    """Run ceil(T n / c_delta) steps, recording (t, m, r2) every
    record_stride steps plus the final step; t = l * c_delta / n."""
    if horizon_T <= 0:
        raise ValueError("horizon_T must be positive")
    if record_stride < 1:
        raise ValueError("record_stride must be >= 1")
    gen = as_generator(rng)
    n = model.n
    total = math.ceil(horizon_T * n / model.c_delta)
    dt = model.c_delta / n
    v = model.spike

    ts, ms, r2s = [], [], []

    def record(step_idx, x):
        m, r2 = summary_stats(x, v)
        ts.append(step_idx * dt)
        ms.append(m)
        r2s.append(r2)

    x = np.asarray(x0, dtype=float).copy()
    p = np.zeros(n)
    record(0, x)
    diverged = False
    skipped = 0

    advance = _kernel_dispatch(model, spec)
    if advance is not None:
        done = 0
        while done < total:
            next_rec = min(done + record_stride - done % record_stride, total)
            block = min(next_rec - done, _MAX_BLOCK_ROWS)
            noise = gen.standard_normal((block, n + 1))
            status, steps_in_block, skip = advance(x, p, noise)
            skipped += skip
            done += steps_in_block
            if status != 0:
                diverged = True
                break
            if done % record_stride == 0 or done == total:
                record(done, x)
    else:
        state = OptimizerState.initial(x0)
        for l in range(1, total + 1):
            state = step(state, model, spec, gen)
            if not np.all(np.isfinite(state.x)) or np.linalg.norm(state.x) > DIVERGE_NORM:
                diverged = True
                break
            if l % record_stride == 0 or l == total:
                record(l, state.x)
        skipped = state.skipped_steps

    if diverged and len(ts) and np.all(np.isfinite(x)):
        pass  # last recorded point already reflects the pre-divergence state

    return Trajectory(
        t=np.asarray(ts), m=np.asarray(ms), r2=np.asarray(r2s),
        meta={
            "model": type(model).__name__,
            "algorithm": spec.kind,
            "beta": spec.beta,
            "c_delta": model.c_delta,
            "n": n,
            "stride": record_stride,
            "total_steps": total,
        },
        diverged=diverged,
        skipped_steps=skipped,
    )


def ensemble_run(model, spec: AlgorithmSpec, init_mode, horizon_T: float,
                 replicas: int, base_seed: int,
                 record_stride: int = 100) -> list[Trajectory]:
    """Independent replicas; replica i owns stream_id = i of base_seed."""
    if replicas < 1:
        raise ValueError("replicas must be >= 1")
    out = []
    for i in range(replicas):
        gen = RngStream(base_seed, i).generator()
        x0 = init_position(model.n, init_mode, model.spike, gen)
        traj = run_trajectory(model, spec, x0, horizon_T, record_stride, gen)
        traj.meta["seed"] = base_seed
        traj.meta["replica"] = i
        out.append(traj)
    return out


def mean_summary(trajectories: Sequence[Trajectory]):
    """Across-replica means on the common grid: (t, m, r2, |m/R|).

    Diverged (truncated) replicas are excluded; all included replicas must
    share the same time grid.
    """
    alive = [tr for tr in trajectories if not tr.diverged]
    if not alive:
        raise ValueError("all replicas diverged; no common grid")
    t = alive[0].t
    for tr in alive[1:]:
        if tr.t.shape != t.shape or not np.array_equal(tr.t, t):
            raise ValueError("replicas recorded on different time grids")
    m = np.mean([tr.m for tr in alive], axis=0)
    r2 = np.mean([tr.r2 for tr in alive], axis=0)
    abs_xi = np.mean([np.abs(tr.m_over_R) for tr in alive], axis=0)
    return t, m, r2, abs_xi
