"""Closed-form model ingredients: stable parametrization, characteristic
exponents, jump measure densities, flip-jump laws, the invariant h function
and regime classification.

Conventions fixed package-wide:

* characteristic exponents use ``E[exp(i lam X_t)] = exp(t psi(lam))``;
* every integro-differential formula compensates small jumps with the cutoff
  ``l(y) = (e^y - 1) 1{|e^y - 1| < 1}`` (see :func:`compensator_cutoff`);
* ``sign`` arguments take +1 for the segment law run while the path is
  positive and -1 for the negative side.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.special import gamma

DEFAULT_QUAD_TOL = 1e-9


def compensator_cutoff(y):
    """l(y) = (e^y - 1) 1{|e^y - 1| < 1}; the indicator reduces to y < log 2."""
    y = np.asarray(y, dtype=float)
    out = np.where(y < math.log(2.0), np.expm1(np.minimum(y, math.log(2.0))), 0.0)
    return out if out.ndim else float(out)


def symmetric_unit_rate(alpha: float) -> float:
    """Common jump rate c+ = c- making the symmetric scale constant one.

    Solves c = 1 in the closed form below; alpha = 1 gives 1/pi.
    """
    if not 0.0 < alpha < 2.0:
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    if alpha == 1.0:
        return 1.0 / math.pi
    return alpha / (2.0 * gamma(1.0 - alpha) * math.cos(math.pi * alpha / 2.0))


@dataclass(frozen=True)
class StableParams:
    """Strictly stable law with index alpha and one-sided rates c_plus, c_minus.

    alpha = 2 is unit-variance Brownian motion and requires both rates zero.
    alpha = 1 is restricted to the symmetric Cauchy case.
    """

    alpha: float
    c_plus: float
    c_minus: float

    def __post_init__(self):
        if not 0.0 < self.alpha <= 2.0:
            raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.c_plus < 0.0 or self.c_minus < 0.0:
            raise ValueError("jump rates must be nonnegative")
        if self.alpha == 2.0:
            if self.c_plus != 0.0 or self.c_minus != 0.0:
                raise ValueError("alpha = 2 is Brownian: jump rates must be zero")
        elif self.c_plus + self.c_minus <= 0.0:
            raise ValueError("at least one jump rate must be positive")
        if self.alpha == 1.0 and self.c_plus != self.c_minus:
            raise ValueError("alpha = 1 supports only the symmetric Cauchy case")

    @classmethod
    def symmetric(cls, alpha: float) -> "StableParams":
        """Symmetric parameters normalized so the scale constant equals one."""
        k = symmetric_unit_rate(alpha)
        return cls(alpha, k, k)

    @property
    def skewness(self) -> float:
        if self.alpha == 2.0:
            return 0.0
        return (self.c_plus - self.c_minus) / (self.c_plus + self.c_minus)

    @property
    def scale(self) -> float:
        """The constant c in psi(lam) = -c |lam|^alpha (1 - i beta tan(pi alpha/2) sgn lam)."""
        a = self.alpha
        if a == 2.0:
            return 0.5
        if a == 1.0:
            return math.pi * self.c_plus
        return -(self.c_plus + self.c_minus) * gamma(2.0 - a) * math.cos(math.pi * a / 2.0) / (a * (a - 1.0))

    @property
    def drift(self) -> float:
        """Linear coefficient of the compensated integral representation."""
        if self.alpha == 1.0 or self.alpha == 2.0:
            return 0.0
        return (self.c_plus - self.c_minus) / (1.0 - self.alpha)


def stable_char_exponent(params: StableParams, lam):
    """psi(lam), vectorized over lam."""
    lam = np.asarray(lam, dtype=float)
    a = params.alpha
    if a == 1.0:
        out = -params.scale * np.abs(lam) + 0.0j
    else:
        skew = params.skewness * math.tan(math.pi * a / 2.0)
        out = -params.scale * np.abs(lam) ** a * (1.0 - 1.0j * skew * np.sign(lam))
    return out if out.ndim else complex(out)


def stable_char_decay(params: StableParams, lam):
    """theta(lam) = -Re psi(lam) = c |lam|^alpha, the modulus decay rate."""
    lam = np.asarray(lam, dtype=float)
    out = params.scale * np.abs(lam) ** params.alpha
    return out if out.ndim else float(out)


class Regime(enum.Enum):
    """Which starting signs admit a sign change in finite time.

    C1: only positive starts flip; C2: only negative starts flip;
    C3: no flips from either side; C4: both sides flip.
    """

    C1 = "C1"
    C2 = "C2"
    C3 = "C3"
    C4 = "C4"


def classify_regime(q_plus: float, q_minus: float) -> Regime:
    if q_plus < 0.0 or q_minus < 0.0:
        raise ValueError("flip rates must be nonnegative")
    if q_plus > 0.0 and q_minus > 0.0:
        return Regime.C4
    if q_plus > 0.0:
        return Regime.C1
    if q_minus > 0.0:
        return Regime.C2
    return Regime.C3


# --- jump measures -----------------------------------------------------------

def _require_nonzero(y):
    if np.any(y == 0.0):
        raise ValueError("jump density undefined at y = 0")


def _log_abs_expm1(y):
    # log|e^y - 1| without overflow on either tail
    out = np.empty_like(y)
    pos = y > 0.0
    out[pos] = y[pos] + np.log1p(-np.exp(-y[pos]))
    out[~pos] = np.log(-np.expm1(y[~pos]))
    return out


@dataclass(frozen=True)
class StableDensity:
    """One-dimensional stable jump density c± |y|^(-alpha-1)."""

    params: StableParams

    def density(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        _require_nonzero(y)
        rate = np.where(y > 0.0, self.params.c_plus, self.params.c_minus)
        out = rate * np.abs(y) ** (-self.params.alpha - 1.0)
        return out if out.shape != (1,) else float(out[0])

    def tail_masses(self, eps: float):
        """Mass of (-inf, -eps] and [eps, inf)."""
        a = self.params.alpha
        return (self.params.c_minus / a * eps ** -a, self.params.c_plus / a * eps ** -a)

    def tail_quantile(self, p, eps: float):
        """Quantile of the measure restricted to |y| >= eps, normalized."""
        a = self.params.alpha
        m_down, m_up = self.tail_masses(eps)
        p = np.asarray(p, dtype=float)
        t = p * (m_down + m_up)
        with np.errstate(divide="ignore"):
            low = -((a * t / self.params.c_minus) ** (-1.0 / a)) if self.params.c_minus else np.full_like(t, -np.inf)
            m = m_down + m_up - t
            high = (a * m / self.params.c_plus) ** (-1.0 / a) if self.params.c_plus else np.full_like(t, np.inf)
        out = np.where(t < m_down, low, high)
        return out if out.ndim else float(out)


def _lamperti_rates(params: StableParams, sign: int):
    # rate multiplying the up-jump branch (argument sign*(e^y - 1) positive)
    if sign == 1:
        return params.c_plus, params.c_minus
    return params.c_minus, params.c_plus


def _lamperti_density(params: StableParams, sign: int, y, y_coeff: float):
    """rate * exp(y_coeff*y - (alpha+1) log|e^y - 1|), evaluated in log space."""
    y = np.atleast_1d(np.asarray(y, dtype=float))
    _require_nonzero(y)
    up, down = _lamperti_rates(params, sign)
    rate = np.where(y > 0.0, up, down)
    out = rate * np.exp(y_coeff * y - (params.alpha + 1.0) * _log_abs_expm1(y))
    return out if out.shape != (1,) else float(out[0])


@dataclass(frozen=True)
class LampertiStableZero:
    """Segment jump measure e^y nu(sign (e^y - 1)) dy of the killed stable family."""

    params: StableParams
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")

    def density(self, y):
        return _lamperti_density(self.params, self.sign, y, 1.0)

    def tail_masses(self, eps: float):
        a = self.params.alpha
        up, down = _lamperti_rates(self.params, self.sign)
        m_up = up / a * math.expm1(eps) ** -a
        m_down = down / a * ((-math.expm1(-eps)) ** -a - 1.0)
        return (m_down, m_up)

    def tail_quantile(self, p, eps: float):
        a = self.params.alpha
        up, down = _lamperti_rates(self.params, self.sign)
        m_down, m_up = self.tail_masses(eps)
        p = np.asarray(p, dtype=float)
        t = p * (m_down + m_up)
        with np.errstate(divide="ignore", invalid="ignore"):
            low = np.log1p(-(1.0 + a * t / down) ** (-1.0 / a)) if down else np.full_like(t, -np.inf)
            m = m_down + m_up - t
            high = np.log1p((a * m / up) ** (-1.0 / a)) if up else np.full_like(t, np.inf)
        out = np.where(t < m_down, low, high)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class LampertiStableCond:
    """Conditioned segment measure e^{alpha y} nu(sign (e^y - 1)) dy."""

    params: StableParams
    sign: int

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if not 1.0 < self.params.alpha < 2.0:
            raise ValueError("conditioned family requires alpha in (1, 2)")

    def density(self, y):
        return _lamperti_density(self.params, self.sign, y, self.params.alpha)

    def tail_masses(self, eps: float):
        a = self.params.alpha
        up, down = _lamperti_rates(self.params, self.sign)
        m_up = up / a * ((-math.expm1(-eps)) ** -a - 1.0)
        m_down = down / a * math.expm1(eps) ** -a
        return (m_down, m_up)

    def tail_quantile(self, p, eps: float):
        a = self.params.alpha
        up, down = _lamperti_rates(self.params, self.sign)
        m_down, m_up = self.tail_masses(eps)
        p = np.asarray(p, dtype=float)
        t = p * (m_down + m_up)
        with np.errstate(divide="ignore", invalid="ignore"):
            low = -np.log1p((a * t / down) ** (-1.0 / a)) if down else np.full_like(t, -np.inf)
            m = m_down + m_up - t
            high = -np.log1p(-(1.0 + a * m / up) ** (-1.0 / a)) if up else np.full_like(t, np.inf)
        out = np.where(t < m_down, low, high)
        return out if out.ndim else float(out)


@dataclass(frozen=True)
class ExplicitMeasure:
    """User-supplied jump density on an interval support."""

    density_fn: Callable
    support: tuple = (-np.inf, np.inf)

    def __post_init__(self):
        lo, hi = self.support
        val, err = quad(lambda y: min(1.0, y * y) * self.density_fn(y), lo, hi,
                        limit=200)
        if not np.isfinite(val) or err > max(1e-6, 1e-6 * abs(val)):
            raise ValueError("explicit measure fails the (1 ^ y^2) integrability check")

    def density(self, y):
        y = np.atleast_1d(np.asarray(y, dtype=float))
        out = np.array([float(self.density_fn(v)) for v in y])
        if np.any(out < 0.0):
            raise ValueError("density must be nonnegative")
        return out if out.shape != (1,) else float(out[0])

    def tail_masses(self, eps: float):
        lo, hi = self.support
        m_down = quad(self.density_fn, lo, -eps, limit=200)[0] if lo < -eps else 0.0
        m_up = quad(self.density_fn, eps, hi, limit=200)[0] if hi > eps else 0.0
        return (m_down, m_up)

    tail_quantile = None  # numeric inversion happens in the sampler


def levy_density(measure, y):
    """Density of a jump measure at y (dispatcher kept for symmetry with specs)."""
    return measure.density(y)


# --- segment characteristics -------------------------------------------------

@dataclass(frozen=True)
class LevySpec:
    """Characteristics (linear, gaussian, jump measure, killing) of one segment law.

    The compensator cutoff is fixed package-wide; the field records it so a
    spec is self-describing.
    """

    linear: float
    gaussian: float
    measure: object
    killing: float
    cutoff: Callable = field(default=compensator_cutoff, repr=False)

    def __post_init__(self):
        if self.gaussian < 0.0:
            raise ValueError("gaussian coefficient must be nonnegative")
        if self.killing < 0.0:
            raise ValueError("killing rate must be nonnegative")


# --- flip-jump laws ----------------------------------------------------------

@dataclass(frozen=True)
class LogParetoZero:
    """Law of the sign-flip log ratio for the killed family.

    Density alpha e^u (1 + e^u)^(-alpha-1); equivalently -J = e^U is
    Pareto: P(e^U > x) = (1 + x)^(-alpha).
    """

    alpha: float

    def density(self, u):
        u = np.asarray(u, dtype=float)
        a = self.alpha
        out = a * np.exp(u - (a + 1.0) * np.logaddexp(0.0, u))
        return out if out.ndim else float(out)

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        out = -np.expm1(-self.alpha * np.logaddexp(0.0, u))
        return out if out.ndim else float(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.log(np.expm1(-np.log1p(-p) / self.alpha))
        return out if out.ndim else float(out)

    def sample(self, rng, n: int):
        return self.quantile(rng.uniform(size=n))


@dataclass(frozen=True)
class LogParetoCond:
    """Flip-jump law of the conditioned family: the negated LogParetoZero draw."""

    alpha: float

    def density(self, u):
        u = np.asarray(u, dtype=float)
        a = self.alpha
        out = a * np.exp(a * u - (a + 1.0) * np.logaddexp(0.0, u))
        return out if out.ndim else float(out)

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        out = np.exp(-self.alpha * np.logaddexp(0.0, -u))
        return out if out.ndim else float(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        with np.errstate(divide="ignore"):
            out = -np.log(np.expm1(-np.log(p) / self.alpha))
        return out if out.ndim else float(out)

    def sample(self, rng, n: int):
        return self.quantile(rng.uniform(size=n))


@dataclass(frozen=True)
class Degenerate:
    """Deterministic flip jump."""

    value: float

    def cdf(self, u):
        u = np.asarray(u, dtype=float)
        out = np.where(u < self.value, 0.0, 1.0)
        return out if out.ndim else float(out)

    def quantile(self, p):
        p = np.asarray(p, dtype=float)
        out = np.full_like(p, self.value)
        return out if out.ndim else float(out)

    def sample(self, rng, n: int):
        rng.uniform(size=n)  # consume draws so substitution keeps streams aligned
        return np.full(n, self.value)


@dataclass(frozen=True)
class ExplicitJumpLaw:
    """User-supplied flip-jump law given by a density and its inverse CDF."""

    density_fn: Callable
    quantile_fn: Callable
    support: tuple = (-np.inf, np.inf)

    def __post_init__(self):
        lo, hi = self.support
        total, _ = quad(self.density_fn, lo, hi, limit=200)
        if abs(total - 1.0) > 1e-8:
            raise ValueError(f"flip-jump density integrates to {total}, not 1")

    def density(self, u):
        u = np.atleast_1d(np.asarray(u, dtype=float))
        out = np.array([float(self.density_fn(v)) for v in u])
        return out if out.shape != (1,) else float(out[0])

    def quantile(self, p):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        out = np.array([float(self.quantile_fn(v)) for v in p])
        return out if out.shape != (1,) else float(out[0])

    def sample(self, rng, n: int):
        return self.quantile(rng.uniform(size=n))


# --- named characteristics ---------------------------------------------------

def killed_stable_characteristics(params: StableParams, sign: int):
    """Segment law (LevySpec, JumpLaw) of the stable process killed at zero."""
    if params.alpha == 2.0:
        raise ValueError("alpha = 2 has no jump segments; build the Brownian model instead")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    _, down = _lamperti_rates(params, sign)
    spec = LevySpec(
        linear=sign * params.drift,
        gaussian=0.0,
        measure=LampertiStableZero(params, sign),
        killing=down / params.alpha,
    )
    return spec, LogParetoZero(params.alpha)


@lru_cache(maxsize=None)
def _cond_drift_integrals(alpha: float, tol: float):
    # integrands behave like +-(alpha-1) u^{1-alpha} near 0: integrable, quad-safe
    i_plus = quad(lambda u: ((1.0 + u) ** (alpha - 1.0) - 1.0) * u ** -alpha,
                  0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)[0]
    i_minus = quad(lambda u: ((1.0 - u) ** (alpha - 1.0) - 1.0) * u ** -alpha,
                   0.0, 1.0, epsabs=tol, epsrel=tol, limit=200)[0]
    return i_plus, i_minus


def conditioned_stable_characteristics(params: StableParams, sign: int,
                                       tol: float = DEFAULT_QUAD_TOL):
    """Segment law of the stable process conditioned to avoid zero; alpha in (1,2)."""
    if not 1.0 < params.alpha < 2.0:
        raise ValueError("conditioned construction requires alpha in (1, 2)")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    i_plus, i_minus = _cond_drift_integrals(params.alpha, tol)
    c_same, c_other = (params.c_plus, params.c_minus) if sign == 1 else (params.c_minus, params.c_plus)
    spec = LevySpec(
        linear=sign * params.drift + c_same * i_plus - c_other * i_minus,
        gaussian=0.0,
        measure=LampertiStableCond(params, sign),
        killing=c_same / params.alpha,
    )
    return spec, LogParetoCond(params.alpha)


def segment_char_exponent(levy: LevySpec, lam: float, tol: float = DEFAULT_QUAD_TOL) -> complex:
    """Characteristic exponent of one segment law, killing excluded.

    i a lam - (sigma^2/2) lam^2 + int (e^{i lam y} - 1 - i lam l(y)) pi(dy).
    The bounded middle range uses plain adaptive quadrature; the oscillatory
    tails use Fourier-weighted quadrature plus the analytic tail masses.
    """
    if lam < 0.0:  # real measure: psi(-lam) = conj(psi(lam))
        return complex(np.conj(segment_char_exponent(levy, -lam, tol)))
    out = 1j * levy.linear * lam - 0.5 * levy.gaussian ** 2 * lam * lam
    if levy.measure is None or lam == 0.0:
        return complex(out)

    def dens(y):
        return float(levy.measure.density(y))

    def re_part(y):
        s = math.sin(0.5 * lam * y)
        return -2.0 * s * s * dens(y)

    def im_part(y):
        return (math.sin(lam * y) - lam * math.expm1(y)) * dens(y)

    log2 = math.log(2.0)
    with warnings.catch_warnings():
        # integrand is O(|y|^{1-alpha}) at 0; QAGS converges but flags roundoff
        warnings.simplefilter("ignore", IntegrationWarning)
        for lo, hi in ((-1.0, 0.0), (0.0, log2)):
            out += quad(re_part, lo, hi, epsabs=tol, epsrel=tol, limit=400)[0]
            out += 1j * quad(im_part, lo, hi, epsabs=tol, epsrel=tol, limit=400)[0]

    m_down, _ = levy.measure.tail_masses(1.0)
    _, m_up = levy.measure.tail_masses(log2)
    out += quad(dens, log2, np.inf, weight="cos", wvar=lam, limit=400)[0] - m_up
    out += 1j * quad(dens, log2, np.inf, weight="sin", wvar=lam, limit=400)[0]
    out += quad(lambda v: dens(-v), 1.0, np.inf, weight="cos", wvar=lam, limit=400)[0] - m_down
    out -= 1j * quad(lambda v: dens(-v), 1.0, np.inf, weight="sin", wvar=lam, limit=400)[0]
    out -= 1j * lam * quad(lambda y: math.expm1(y) * dens(y), -np.inf, -1.0,
                           epsabs=tol, epsrel=tol, limit=400)[0]
    return complex(out)


def h_function(params: StableParams, x):
    """Invariant function K(alpha)(1 - beta sgn x)|x|^{alpha-1} of the killed semigroup."""
    a = params.alpha
    if not 1.0 < a < 2.0:
        raise ValueError("h is defined for alpha in (1, 2)")
    beta = params.skewness
    k = gamma(2.0 - a) * math.sin(math.pi * a / 2.0) / (
        params.scale * math.pi * (a - 1.0) * (1.0 + beta ** 2 * math.tan(math.pi * a / 2.0) ** 2))
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        out = np.where(x == 0.0, 0.0, k * (1.0 - beta * np.sign(x)) * np.abs(x) ** (a - 1.0))
    return out if out.ndim else float(out)
