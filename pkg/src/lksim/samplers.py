"""Segment samplers: exact stable and Gaussian increments, flip-jump draws,
and killed segments via compound-Poisson approximation of the jump measure.

Per-segment draw order is fixed so equal seeds reproduce equal paths:
lifetime first, the flip jump second, then increment noise (normals, Poisson
count, jump positions, jump sizes). Laws that need no noise draw nothing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from . import _kernels
from .levy_model import (
    DEFAULT_QUAD_TOL,
    LevySpec,
    StableDensity,
    StableParams,
    compensator_cutoff,
)

DEFAULT_CP_EPS = 1e-3


@dataclass(frozen=True)
class RngStream:
    """Named, reproducible random stream: (seed, stream) -> PCG64 generator."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence((self.seed, self.stream))))

    def shifted(self, k: int) -> "RngStream":
        return RngStream(self.seed, self.stream + k)


@dataclass(frozen=True)
class GridSpec:
    step: float
    horizon: float

    def __post_init__(self):
        if self.step <= 0.0 or self.horizon <= 0.0:
            raise ValueError("step and horizon must be positive")

    @property
    def n_points(self) -> int:
        return math.ceil(self.horizon / self.step) + 1

    def times(self) -> np.ndarray:
        return np.arange(self.n_points) * self.step


@dataclass
class SegmentPath:
    """One killed-segment path on [0, min(lifetime, horizon)].

    times[0] = 0 and values[0] = 0; the final time is exactly the lifetime
    unless the draw exceeded the horizon, in which case censored is set and
    the path stops at the horizon. flip_jump holds the post-death jump draw
    (unused downstream when censored).
    """

    times: np.ndarray
    values: np.ndarray
    lifetime: float
    flip_jump: float
    censored: bool

    @property
    def terminal_value(self) -> float:
        return float(self.values[-1])


def stable_increment(params: StableParams, dt: float, rng, n: int = 1) -> np.ndarray:
    """Exact strictly stable increments over a step dt (Chambers-Mallows-Stuck).

    alpha = 1 is the symmetric Cauchy case; alpha = 2 raises, use
    gaussian_increment instead.
    """
    if params.alpha == 2.0:
        raise ValueError("alpha = 2 increments are Gaussian; use gaussian_increment")
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    a = params.alpha
    u = rng.uniform(-math.pi / 2.0, math.pi / 2.0, n)
    if a == 1.0:
        return params.scale * dt * np.tan(u)
    w = rng.standard_exponential(n)
    theta0 = math.atan(params.skewness * math.tan(math.pi * a / 2.0)) / a
    z = _kernels.cms_transform(u, w, a, theta0)
    return (params.scale * dt) ** (1.0 / a) * z


def gaussian_increment(drift: float, dt: float, rng, n: int = 1) -> np.ndarray:
    """Increments of drift.t + B_t over a step dt: N(drift*dt, dt)."""
    if dt < 0.0:
        raise ValueError("dt must be nonnegative")
    return drift * dt + math.sqrt(dt) * rng.standard_normal(n)


def sample_jump(law, rng, n: int = 1) -> np.ndarray:
    """Draw n flip jumps from a JumpLaw via its inverse CDF."""
    return np.asarray(law.sample(rng, n), dtype=float)


# --- compound-Poisson scheme -------------------------------------------------

def _numeric_tail_table(measure, eps: float, n_nodes: int = 2048):
    """Inverse-CDF table for |y| >= eps when no closed-form inversion exists."""
    lo, hi = getattr(measure, "support", (-np.inf, np.inf))
    ys = []
    for sign_, bound in ((-1.0, lo), (1.0, hi)):
        if sign_ < 0 and bound >= -eps:
            continue
        if sign_ > 0 and bound <= eps:
            continue
        far = max(1.0, 10.0 * eps)
        cap = abs(bound) if np.isfinite(bound) else None
        while cap is None or far < cap:
            if cap is not None and far * 4.0 >= cap:
                far = cap
                break
            if float(measure.density(sign_ * far)) * far < 1e-14:
                break
            far *= 4.0
        grid = sign_ * np.geomspace(eps, far, n_nodes)
        ys.append(np.sort(grid))
    y = np.concatenate(ys) if ys else np.array([])
    if y.size == 0:
        return y, y
    dens = np.asarray(measure.density(y), dtype=float)
    dens[np.isinf(dens)] = 0.0
    mass = np.zeros_like(y)
    inner = (y[:-1] < 0) & (y[1:] > 0)  # no mass accumulates across (-eps, eps)
    seg = 0.5 * (dens[:-1] + dens[1:]) * np.diff(y)
    seg[inner] = 0.0
    mass[1:] = np.cumsum(seg)
    return y, mass


@dataclass(frozen=True)
class CompoundPoissonScheme:
    """Jumps >= eps at their exact rate, small jumps folded into drift and
    (optionally) a matched Gaussian term."""

    rate: float
    drift: float
    sigma: float
    eps: float
    measure: object
    table_y: tuple
    table_cdf: tuple

    def jump_sizes(self, p: np.ndarray) -> np.ndarray:
        p = np.clip(p, 2.0 ** -53, 1.0 - 2.0 ** -53)
        if getattr(self.measure, "tail_quantile", None) is not None:
            return np.asarray(self.measure.tail_quantile(p, self.eps), dtype=float)
        y = np.asarray(self.table_y)
        cdf = np.asarray(self.table_cdf)
        return np.interp(p * cdf[-1], cdf, y)


@lru_cache(maxsize=64)
def build_cp_scheme(levy: LevySpec, eps: float = DEFAULT_CP_EPS,
                    gaussian_matching: bool = True,
                    tol: float = DEFAULT_QUAD_TOL) -> CompoundPoissonScheme:
    measure = levy.measure
    if measure is None:
        raise ValueError("no jump measure to approximate")
    if eps <= 0.0 or eps >= math.log(2.0):
        raise ValueError("eps must lie in (0, log 2)")
    m_down, m_up = measure.tail_masses(eps)
    rate = m_down + m_up

    def small(y):
        return float(measure.density(y))

    # below eps < log 2 the cutoff is identically e^y - 1
    m_small = sum(quad(lambda y: (y - math.expm1(y)) * small(y), lo, hi,
                       epsabs=tol, epsrel=tol, limit=200)[0]
                  for lo, hi in ((-eps, 0.0), (0.0, eps)))
    var_small = sum(quad(lambda y: y * y * small(y), lo, hi,
                         epsabs=tol, epsrel=tol, limit=200)[0]
                    for lo, hi in ((-eps, 0.0), (0.0, eps)))
    big_comp = quad(lambda y: math.expm1(y) * small(y), eps, math.log(2.0),
                    epsabs=tol, epsrel=tol, limit=200)[0]
    big_comp += quad(lambda y: math.expm1(y) * small(y), -np.inf, -eps,
                     epsabs=tol, epsrel=tol, limit=200)[0]

    sigma2 = levy.gaussian ** 2 + (var_small if gaussian_matching else 0.0)
    table_y, table_cdf = (np.array([]), np.array([]))
    if getattr(measure, "tail_quantile", None) is None:
        table_y, table_cdf = _numeric_tail_table(measure, eps)
    return CompoundPoissonScheme(
        rate=rate,
        drift=levy.linear + m_small - big_comp,
        sigma=math.sqrt(sigma2),
        eps=eps,
        measure=measure,
        table_y=tuple(table_y),
        table_cdf=tuple(table_cdf),
    )


@lru_cache(maxsize=64)
def _cutoff_drift_shift(params: StableParams, tol: float = DEFAULT_QUAD_TOL) -> float:
    # drift translating the package cutoff l to the standard 1{|y|<1} cutoff
    dens = StableDensity(params)

    def f(y):
        return (y * (abs(y) < 1.0) - compensator_cutoff(y)) * float(dens.density(y))

    pieces = ((-np.inf, -1.0), (-1.0, 0.0), (0.0, math.log(2.0)), (math.log(2.0), 1.0))
    return sum(quad(f, lo, hi, epsabs=tol, epsrel=tol, limit=200)[0] for lo, hi in pieces)


def sample_killed_segment(levy: LevySpec, jump_law, grid: GridSpec, rng,
                          eps: float = DEFAULT_CP_EPS,
                          gaussian_matching: bool = True) -> SegmentPath:
    """Sample one killed segment on grid.step up to min(lifetime, grid.horizon).

    Exact increments when the law allows (pure Gaussian, or a StableDensity
    jump part); otherwise the compound-Poisson scheme. The last step is a
    partial step landing exactly on the lifetime.
    """
    q = levy.killing
    with np.errstate(divide="ignore"):
        zeta = float(rng.standard_exponential() / q) if q > 0.0 else np.inf
    flip = float(sample_jump(jump_law, rng, 1)[0])
    censored = zeta > grid.horizon
    t_end = min(zeta, grid.horizon)

    n_full = int(t_end / grid.step)
    times = np.arange(n_full + 1) * grid.step
    if t_end > times[-1]:
        times = np.append(times, t_end)
    dts = np.diff(times)
    n_steps = dts.size

    if n_steps == 0:
        values = np.zeros(1)
    elif levy.measure is None:
        inc = levy.linear * dts
        if levy.gaussian > 0.0:
            inc = inc + levy.gaussian * np.sqrt(dts) * rng.standard_normal(n_steps)
        values = np.concatenate(([0.0], np.cumsum(inc)))
    elif isinstance(levy.measure, StableDensity):
        params = levy.measure.params
        extra = levy.linear + _cutoff_drift_shift(params) - params.drift
        inc = np.empty(n_steps)
        inc[: n_full] = stable_increment(params, grid.step, rng, n_full) if n_full else 0.0
        if n_steps > n_full:
            inc[n_full] = stable_increment(params, float(dts[-1]), rng, 1)[0]
        inc = inc + extra * dts
        if levy.gaussian > 0.0:
            inc = inc + levy.gaussian * np.sqrt(dts) * rng.standard_normal(n_steps)
        values = np.concatenate(([0.0], np.cumsum(inc)))
    else:
        scheme = build_cp_scheme(levy, eps, gaussian_matching)
        inc = scheme.drift * dts
        if scheme.sigma > 0.0:
            inc = inc + scheme.sigma * np.sqrt(dts) * rng.standard_normal(n_steps)
        n_jumps = int(rng.poisson(scheme.rate * t_end))
        if n_jumps:
            jt = rng.uniform(0.0, t_end, n_jumps)
            sizes = scheme.jump_sizes(rng.uniform(size=n_jumps))
            cells = np.searchsorted(times[1:], jt, side="left").astype(np.int64)
            inc = inc + _kernels.place_jumps(cells, sizes, n_steps)
        values = np.concatenate(([0.0], np.cumsum(inc)))

    return SegmentPath(times=times, values=values, lifetime=zeta,
                       flip_jump=flip, censored=censored)
