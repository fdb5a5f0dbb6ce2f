"""Generator formulas by adaptive quadrature, and Monte-Carlo generator
estimates to hold them against.

The quadrature routes and the sampling routes are deliberately independent:
each formula is coded from its own display (the u-form and the shifted form
of the killed generator are two separate quadratures, not a change of
variables of one another), and the MC estimator only needs a marginal
simulator handle.  Agreement then cross-checks the construction itself.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import quad

from .levy_model import (
    DEFAULT_QUAD_TOL,
    Degenerate,
    StableParams,
    conditioned_stable_characteristics,
    levy_density,
)
from .lk_core import LKCharacteristics, self_similar_marginal_sampler
from .samplers import RngStream

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class TestFunction:
    """A twice-differentiable test function with analytic derivative handles."""

    value: Callable
    deriv: Callable
    deriv2: Callable
    bounded: bool = True
    vanishes_at_zero: bool = True
    name: str = "f"

    def __call__(self, x):
        return self.value(x)


def battery() -> tuple:
    """Default test battery: bounded, smooth, f(0) = 0, mixed parities."""
    f1 = TestFunction(
        value=lambda x: x * x * np.exp(-x * x),
        deriv=lambda x: 2.0 * x * (1.0 - x * x) * np.exp(-x * x),
        deriv2=lambda x: (2.0 - 10.0 * x * x + 4.0 * x ** 4) * np.exp(-x * x),
        name="x^2 exp(-x^2)")
    f2 = TestFunction(
        value=lambda x: x / (1.0 + x * x),
        deriv=lambda x: (1.0 - x * x) / (1.0 + x * x) ** 2,
        deriv2=lambda x: (2.0 * x ** 3 - 6.0 * x) / (1.0 + x * x) ** 3,
        name="x/(1+x^2)")
    f3 = TestFunction(
        value=lambda x: np.sin(x) * np.exp(-x * x),
        deriv=lambda x: (np.cos(x) - 2.0 * x * np.sin(x)) * np.exp(-x * x),
        deriv2=lambda x: ((4.0 * x * x - 3.0) * np.sin(x) - 4.0 * x * np.cos(x)) * np.exp(-x * x),
        name="sin(x) exp(-x^2)")
    return f1, f2, f3


@dataclass
class GeneratorReport:
    """One formula-vs-oracle comparison with its error split."""

    x: float
    formula: float
    oracle: float
    abs_err: float
    rel_err: float
    method: dict

    @classmethod
    def build(cls, x, formula, oracle, method) -> "GeneratorReport":
        abs_err = abs(formula - oracle)
        scale = max(abs(formula), abs(oracle))
        # absolute fallback when both sides sit at zero
        rel_err = abs_err / scale if scale > 1e-12 else abs_err
        return cls(x=float(x), formula=float(formula), oracle=float(oracle),
                   abs_err=float(abs_err), rel_err=float(rel_err), method=method)

    @property
    def passed(self) -> bool:
        tol = self.method.get("rel_tol")
        return tol is None or self.rel_err <= tol


def _check_admissible(f: TestFunction, need_zero: bool = True):
    if not f.bounded:
        raise ValueError("generator formulas are stated for bounded test functions")
    if need_zero and not f.vanishes_at_zero:
        raise ValueError("this generator requires f(0) = 0")


def _nu_u(p: StableParams, s: float):
    # stable jump density read through u = arrival/departure on the s side
    c_up, c_dn = (p.c_plus, p.c_minus) if s > 0 else (p.c_minus, p.c_plus)
    a = p.alpha

    def nu(u):
        if u > 1.0:
            return c_up * (u - 1.0) ** (-a - 1.0)
        return c_dn * (1.0 - u) ** (-a - 1.0)

    return nu


def flip_ratio_density(alpha: float, conditioned: bool = False):
    """Density on (-inf, 0) of the ratio across a sign change.

    The killed form alpha (1-u)^(-alpha-1) is the negative Pareto ratio law;
    the conditioned form carries the extra (-u)^(alpha-1) tilt.
    """
    if conditioned:
        return lambda u: alpha * (-u) ** (alpha - 1.0) * (1.0 - u) ** (-alpha - 1.0)
    return lambda u: alpha * (1.0 - u) ** (-alpha - 1.0)


# integrands below are regular, so achieved error far under the formula
# agreement gates; anything above this means a broken integrand, not noise
_QUAD_ERR_CEILING = 1e-6


def _quad_sum(fn, bounds, tol):
    tot = 0.0
    err = 0.0
    for a, b in zip(bounds[:-1], bounds[1:]):
        r = quad(fn, a, b, epsabs=tol, epsrel=tol, limit=300, full_output=1)
        tot += r[0]
        err += r[1]
    if err > _QUAD_ERR_CEILING:
        raise RuntimeError(f"quadrature error {err:.2e} exceeds the generator gates")
    return tot


# exponent ceiling for x e^y arguments: keeps (x e^y)^2 inside double range
# for bounded f; the jump densities decay like e^(-alpha y) out there
_EXP_ARG_CAP = 345.0


def _flip_expectation(f: TestFunction, x: float, law, tol: float) -> float:
    # E f(-x e^U) under the flip-jump law
    lx = math.log(abs(x))
    sx = 1.0 if x > 0.0 else -1.0
    if isinstance(law, Degenerate):
        return float(f.value(-sx * math.exp(min(lx + law.value, _EXP_ARG_CAP))))
    dens = getattr(law, "density", None)
    if dens is None:
        raise ValueError("flip law needs a density or a point mass")
    lo, hi = getattr(law, "support", (-np.inf, np.inf))
    pts = [q for q in (0.0,) if lo < q < hi]

    def integrand(u):
        arg = -sx * math.exp(min(lx + u, _EXP_ARG_CAP))
        return float(f.value(arg)) * float(dens(u))

    return _quad_sum(integrand, [lo] + pts + [hi], tol)


def generator_K(f: TestFunction, x: float, chars: LKCharacteristics,
                tol: float = DEFAULT_QUAD_TOL) -> float:
    """Generator of the multiplicative-invariant process at x by quadrature.

    b x f'(x) + sigma^2/2 x^2 f''(x) with b = a + sigma^2/2, plus the jump
    integral of f(x e^y) - f(x) - x f'(x) l(y) against the segment measure
    (l the package-wide cutoff), plus q (E f(-x e^U) - f(x)).
    """
    _check_admissible(f)
    if x == 0.0:
        raise ValueError("the state space excludes zero")
    spec, law = chars.side(1 if x > 0.0 else -1)
    fx = float(f.value(x))
    xf1 = x * float(f.deriv(x))
    sig2 = spec.gaussian ** 2
    total = (spec.linear + 0.5 * sig2) * xf1 + 0.5 * sig2 * x * x * float(f.deriv2(x))
    if spec.measure is not None:
        cut = spec.cutoff
        lx = math.log(abs(x))
        sx = 1.0 if x > 0.0 else -1.0

        def jump_part(y):
            arg = sx * math.exp(min(lx + y, _EXP_ARG_CAP))
            return ((float(f.value(arg)) - fx - xf1 * float(cut(y)))
                    * float(levy_density(spec.measure, y)))

        lo, hi = getattr(spec.measure, "support", (-np.inf, np.inf))
        pts = [q for q in (-1.0, 0.0, _LOG2) if lo < q < hi]
        total += _quad_sum(jump_part, [lo] + pts + [hi], tol)
    if spec.killing > 0.0:
        total += spec.killing * (_flip_expectation(f, x, law, tol) - fx)
    return total


def generator_A0(f: TestFunction, x: float, p: StableParams,
                 tol: float = DEFAULT_QUAD_TOL) -> float:
    """Generator of the stable process killed at zero, in ratio coordinates.

    |x|^(-alpha) [ sgn(x) a x f'(x)
                   + int_0^inf (f(xu) - f(x) - x f'(x)(u-1) 1{|u-1|<1}) nu_s(u) du
                   + c^(-s)/alpha int_{-inf}^0 (f(xu) - f(x)) g0(u) du ].
    """
    _check_admissible(f)
    if x == 0.0:
        raise ValueError("the state space excludes zero")
    a = p.alpha
    if not 0.0 < a < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    s = 1.0 if x > 0.0 else -1.0
    c_up, c_dn = (p.c_plus, p.c_minus) if x > 0.0 else (p.c_minus, p.c_plus)
    nu = _nu_u(p, s)
    fx = float(f.value(x))
    xf1 = x * float(f.deriv(x))
    d2 = x * x * float(f.deriv2(x))

    # the compensated integrand carries an |u-1|^(1-alpha) endpoint
    # singularity; subtracting its parabola removes it, and the parabola's
    # nu-integral over the cutoff window is (c_up + c_dn)/(2 - alpha) exactly
    def pos(u):
        d = u - 1.0
        if abs(d) < 1.0:
            return (float(f.value(x * u)) - fx - xf1 * d - 0.5 * d2 * d * d) * nu(u)
        return (float(f.value(x * u)) - fx) * nu(u)

    g0 = flip_ratio_density(a)

    def neg(u):
        return (float(f.value(x * u)) - fx) * g0(u)

    ipos = _quad_sum(pos, [0.0, 1.0, 2.0, np.inf], tol) \
        + 0.5 * d2 * (c_up + c_dn) / (2.0 - a)
    ineg = _quad_sum(neg, [-np.inf, -1.0, 0.0], tol)
    return abs(x) ** -a * (s * p.drift * xf1 + ipos + c_dn / a * ineg)


def generator_A0_direct(f: TestFunction, x: float, p: StableParams,
                        tol: float = DEFAULT_QUAD_TOL) -> float:
    """Same operator from the untransformed display: a f'(x) plus the
    compensated integral of f(x+y) against the stable jump density.

    Independent quadrature route (shifted coordinates, no |x|^(-alpha)
    prefactor); used as the oracle for generator_A0.
    """
    _check_admissible(f)
    if x == 0.0:
        raise ValueError("the state space excludes zero")
    a = p.alpha
    if not 0.0 < a < 2.0:
        raise ValueError("alpha must lie in (0, 2)")
    fx = float(f.value(x))
    f1 = float(f.deriv(x))
    d2 = float(f.deriv2(x))

    def nu(y):
        c = p.c_plus if y > 0.0 else p.c_minus
        return c * abs(y) ** (-a - 1.0)

    # same parabola subtraction as the ratio form, in shifted coordinates
    def integrand(y):
        if abs(y) < 1.0:
            return (float(f.value(x + y)) - fx - f1 * y - 0.5 * d2 * y * y) * nu(y)
        return (float(f.value(x + y)) - fx) * nu(y)

    return (p.drift * f1
            + _quad_sum(integrand, [-np.inf, -1.0, 0.0, 1.0, np.inf], tol)
            + 0.5 * d2 * (p.c_plus + p.c_minus) / (2.0 - a))


def generator_Acond(f: TestFunction, x: float, p: StableParams,
                    tol: float = DEFAULT_QUAD_TOL) -> float:
    """Generator of the stable process conditioned to avoid zero.

    Ratio-coordinate quadrature with the tilted jump density u^(alpha-1)
    nu_s(u), the drift from the conditioned segment law, and the c^s/alpha
    tail term (note the sign swap against the killed form).  Constants are
    admissible here: f is only required bounded.
    """
    _check_admissible(f, need_zero=False)
    if x == 0.0:
        raise ValueError("the state space excludes zero")
    a = p.alpha
    if not 1.0 < a < 2.0:
        raise ValueError("conditioning requires alpha in (1, 2)")
    sgn = 1 if x > 0.0 else -1
    c_up, c_dn = (p.c_plus, p.c_minus) if x > 0.0 else (p.c_minus, p.c_plus)
    a_cond = conditioned_stable_characteristics(p, sgn)[0].linear
    nu = _nu_u(p, float(sgn))
    fx = float(f.value(x))
    xf1 = x * float(f.deriv(x))
    d2 = x * x * float(f.deriv2(x))

    # the tilt equals 1 at u = 1 and the compensated bracket vanishes to
    # first order there, so the singular parabola is the same as in the
    # killed form and so is its closed-form window integral
    def pos(u):
        d = u - 1.0
        tilt = u ** (a - 1.0)
        if abs(d) < 1.0:
            return ((float(f.value(x * u)) - fx - xf1 * d) * tilt
                    - 0.5 * d2 * d * d) * nu(u)
        return (float(f.value(x * u)) - fx) * tilt * nu(u)

    gc = flip_ratio_density(a, conditioned=True)

    def neg(u):
        return (float(f.value(x * u)) - fx) * gc(u)

    ipos = _quad_sum(pos, [0.0, 1.0, 2.0, np.inf], tol) \
        + 0.5 * d2 * (c_up + c_dn) / (2.0 - a)
    ineg = _quad_sum(neg, [-np.inf, -1.0, 0.0], tol)
    return abs(x) ** -a * (a_cond * xf1 + ipos + c_up / a * ineg)


# --- Monte-Carlo side --------------------------------------------------------

# replicas are simulated and reduced in blocks of this size so the sample
# count can grow to the 1e9 range without materializing the values
_MC_BLOCK = 2 ** 22


def mc_generator(f: TestFunction, x: float, simulator, t: float, n: int, rng,
                 clip: float = 0.0) -> tuple:
    """Finite-horizon generator estimate (E f(X_t) - f(x)) / t with its SE.

    simulator(x, t, n, rng) returns the n marginal values with 0 at the
    cemetery, so killed paths contribute f = 0 exactly when f(0) = 0.
    Recommended t (q+ + q-) <= 0.05 to keep the flip-term bias linear.

    clip > 0 subtracts the control variate f'(x) clip(X_t - x) from each
    replica.  The control has mean exactly zero when the increment law is
    symmetric (the caller is responsible for that), costs no bias, and
    empties the linear noise channel that otherwise dominates the variance
    wherever f'' is small.
    """
    fx = float(f.value(x))
    df = float(f.deriv(x)) if clip > 0.0 else 0.0
    # accumulate f - f(x): the shifted second moment is O(var), so the
    # variance survives the subtraction at any sample count
    acc = 0.0
    acc2 = 0.0
    done = 0
    while done < n:
        m = min(_MC_BLOCK, n - done)
        vals = np.asarray(simulator(x, t, m, rng), dtype=float)
        fv = np.where(vals == 0.0, 0.0, np.asarray(f.value(vals), dtype=float)) - fx
        if clip > 0.0:
            fv = fv - df * np.clip(vals - x, -clip, clip)
        acc += float(fv.sum())
        acc2 += float(np.square(fv).sum())
        done += m
    mean = acc / n
    var = max(acc2 / n - mean * mean, 0.0) * n / max(n - 1, 1)
    est = mean / t
    se = math.sqrt(var / n) / t
    return est, se


def richardson_generator(f: TestFunction, x: float, simulator, t: float,
                         n: int, rng, clip: float = 0.0) -> tuple:
    """Two-scale extrapolated MC generator: 2 B(t/2) - B(t) cancels the O(t)
    bias of the plain difference quotient.  Returns (estimate, se, detail).
    """
    coarse, se_c = mc_generator(f, x, simulator, t, n, rng, clip)
    fine, se_f = mc_generator(f, x, simulator, t / 2.0, n, rng, clip)
    est = 2.0 * fine - coarse
    se = math.sqrt(4.0 * se_f ** 2 + se_c ** 2)
    return est, se, {"t": t, "coarse": coarse, "fine": fine,
                     "se_coarse": se_c, "se_fine": se_f}


@dataclass
class TwoScalePilot:
    """Per-scale pilot statistics of the extrapolated generator estimator."""

    t: float
    n: int
    clip: float
    coarse: float
    se_coarse: float
    fine: float
    se_fine: float

    @property
    def estimate(self) -> float:
        return 2.0 * self.fine - self.coarse

    @property
    def se(self) -> float:
        return math.sqrt(4.0 * self.se_fine ** 2 + self.se_coarse ** 2)


def two_scale_pilot(f: TestFunction, x: float, simulator, t: float, n: int,
                    rng, clip: float = 0.0) -> TwoScalePilot:
    """Run the two mc_generator scales at n replicas each and keep the
    per-scale means and SEs, so an extension stage can size itself."""
    c_est, c_se = mc_generator(f, x, simulator, t, n, rng, clip)
    f_est, f_se = mc_generator(f, x, simulator, t / 2.0, n, rng, clip)
    return TwoScalePilot(t=t, n=n, clip=clip, coarse=c_est, se_coarse=c_se,
                         fine=f_est, se_fine=f_se)


def extend_two_scale(f: TestFunction, x: float, simulator,
                     pilot: TwoScalePilot, se_target: float, n_cap: int,
                     rng) -> tuple:
    """Grow a pilot until the extrapolated SE meets se_target.

    The extrapolation weights the fine scale by 2, so at equal per-replica
    cost the variance-optimal split puts 2 sqrt(v_fine / v_coarse) times as
    many replicas on t/2 as on t (about 2 sqrt 2 when v_fine = 2 v_coarse).
    Target totals per scale come from the pilot variances alone, never from
    extension draws, so pooling each scale by replica count stays unbiased.
    Each scale is capped at n_cap replicas.  Returns (estimate, se, detail).
    """
    v_c = pilot.se_coarse ** 2 * pilot.n
    v_f = pilot.se_fine ** 2 * pilot.n
    n_coarse, n_fine = pilot.n, pilot.n
    c_est, c_se = pilot.coarse, pilot.se_coarse
    f_est, f_se = pilot.fine, pilot.se_fine
    if pilot.se > se_target:
        s2 = se_target ** 2
        root = 2.0 * math.sqrt(v_f) + math.sqrt(v_c)
        want_c = min(n_cap, int(math.ceil(math.sqrt(v_c) * root / s2)))
        want_f = min(n_cap, int(math.ceil(2.0 * math.sqrt(v_f) * root / s2)))
        if want_c > n_coarse:
            est2, se2 = mc_generator(f, x, simulator, pilot.t,
                                     want_c - n_coarse, rng, pilot.clip)
            c_est, c_se = _pool(c_est, c_se, n_coarse, est2, se2, want_c - n_coarse)
            n_coarse = want_c
        if want_f > n_fine:
            est2, se2 = mc_generator(f, x, simulator, pilot.t / 2.0,
                                     want_f - n_fine, rng, pilot.clip)
            f_est, f_se = _pool(f_est, f_se, n_fine, est2, se2, want_f - n_fine)
            n_fine = want_f
    est = 2.0 * f_est - c_est
    se = math.sqrt(4.0 * f_se ** 2 + c_se ** 2)
    detail = {"t": pilot.t, "n_pilot": pilot.n, "n_coarse": n_coarse,
              "n_fine": n_fine, "se_target": se_target, "clip": pilot.clip}
    return est, se, detail


def _pool(est1, se1, n1, est2, se2, n2):
    n = n1 + n2
    est = (n1 * est1 + n2 * est2) / n
    se = math.sqrt((n1 * se1) ** 2 + (n2 * se2) ** 2) / n
    return est, se


def calibrated_richardson(f: TestFunction, x: float, simulator, t: float,
                          n_pilot: int, se_target: float, n_cap: int, rng,
                          clip: float = 0.0) -> tuple:
    """Extrapolated MC generator with a pilot stage and one sized extension;
    see two_scale_pilot and extend_two_scale for the staging contract."""
    pilot = two_scale_pilot(f, x, simulator, t, n_pilot, rng, clip)
    return extend_two_scale(f, x, simulator, pilot, se_target, n_cap, rng)


def volkonskii_check(f: TestFunction, x: float, chars: LKCharacteristics,
                     alpha: float, t: float = 1e-3, n: int = 10 ** 6,
                     rng=None, simulator=None, tol: float = DEFAULT_QUAD_TOL) -> GeneratorReport:
    """|x|^(-alpha) K f(x) against the MC generator of the time-changed path."""
    if rng is None:
        rng = RngStream(20260814, 0).generator()
    formula = abs(x) ** -alpha * generator_K(f, x, chars, tol)
    if simulator is None:
        simulator = self_similar_marginal_sampler(chars, alpha)
    est, se, detail = richardson_generator(f, x, simulator, t, n, rng)
    method = {"kind": "volkonskii", "f": f.name, "n": n, "se": se, "rel_tol": 0.05}
    method.update(detail)
    return GeneratorReport.build(x, formula, est, method)


def lemma14_identity(x: float, p: StableParams,
                     tol: float = DEFAULT_QUAD_TOL) -> GeneratorReport:
    """Compensator-swap drift identity behind the change of variables between
    the two killed-generator displays.

    I1 collects (u-1) over the region where the unit cutoff and the |x(u-1)|
    cutoff disagree on the positive half-line, I2 the |x(u-1)| cutoff on the
    negative one; their difference has the closed form sgn(x) a (1-|x|^(alpha-1)).
    The alpha = 1 symmetric case holds with a = 0.
    """
    if x == 0.0:
        raise ValueError("the state space excludes zero")
    s = 1.0 if x > 0.0 else -1.0
    nu = _nu_u(p, s)
    ax = abs(x)

    def integrand(u):
        return (u - 1.0) * nu(u)

    if ax < 1.0:
        i1 = -quad(integrand, 2.0, 1.0 + 1.0 / ax, epsabs=tol, epsrel=tol, limit=300)[0]
        i2 = quad(integrand, 1.0 - 1.0 / ax, 0.0, epsabs=tol, epsrel=tol, limit=300)[0]
    elif ax > 1.0:
        i1 = (quad(integrand, 1.0 + 1.0 / ax, 2.0, epsabs=tol, epsrel=tol, limit=300)[0]
              + quad(integrand, 0.0, 1.0 - 1.0 / ax, epsabs=tol, epsrel=tol, limit=300)[0])
        i2 = 0.0
    else:
        i1 = i2 = 0.0
    closed = s * p.drift * (1.0 - ax ** (p.alpha - 1.0))
    return GeneratorReport.build(x, i1 - i2, closed,
                                 {"kind": "lemma14", "I1": i1, "I2": i2})
