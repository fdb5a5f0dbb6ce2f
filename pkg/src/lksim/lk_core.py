"""Alternating killed-segment construction of the multiplicative-invariant
process: two segment laws run in turn, each segment ending in an exponential
lifetime and a flip jump that switches the sign of the driven path.

Sign bookkeeping is integer throughout; the imaginary part of the log path
is never materialized as a complex number.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .levy_model import LevySpec, Regime, classify_regime
from .samplers import (
    DEFAULT_CP_EPS,
    GridSpec,
    SegmentPath,
    build_cp_scheme,
    sample_killed_segment,
)


@dataclass(frozen=True)
class LKCharacteristics:
    """The pair of segment laws: (LevySpec, JumpLaw) for each running sign."""

    plus: tuple
    minus: tuple

    def __post_init__(self):
        for side in (self.plus, self.minus):
            if not np.isfinite(side[0].killing):
                raise ValueError("killing rates must be finite")

    @property
    def q_plus(self) -> float:
        return self.plus[0].killing

    @property
    def q_minus(self) -> float:
        return self.minus[0].killing

    @property
    def regime(self) -> Regime:
        return classify_regime(self.q_plus, self.q_minus)

    def side(self, sign: int) -> tuple:
        return self.plus if sign == 1 else self.minus


@dataclass
class LogPath:
    """Log-magnitude path: completed segments then one censored tail segment.

    renewal_times[k] is the start time of segment k (so renewal_times[0] = 0);
    segment k runs the plus law iff start_sign * (-1)^k = +1.
    """

    start_sign: int
    segments: list
    renewal_times: np.ndarray

    @property
    def covered_time(self) -> float:
        return float(self.renewal_times[-1] + self.segments[-1].times[-1])

    @property
    def total_flips(self) -> int:
        return len(self.segments) - 1

    def flip_count(self, t) -> np.ndarray:
        """N_t: number of sign flips in [0, t], right-continuous."""
        t = np.asarray(t, dtype=float)
        out = np.searchsorted(self.renewal_times[1:], t, side="right")
        return out if out.ndim else int(out)

    def flip_offsets(self) -> np.ndarray:
        """Cumulative (terminal + flip jump) contributions, one per completed segment."""
        parts = [s.terminal_value + s.flip_jump for s in self.segments[:-1]]
        return np.concatenate(([0.0], np.cumsum(parts)))

    def log_magnitude(self, t) -> np.ndarray:
        """Real part of the log path at t (step interpolation inside segments)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0.0) or np.any(t > self.covered_time + 1e-12):
            raise ValueError("t outside the simulated window")
        ks = np.searchsorted(self.renewal_times[1:], t, side="right")
        offs = self.flip_offsets()
        out = np.empty_like(t)
        for k in np.unique(ks):
            seg = self.segments[k]
            mask = ks == k
            sigma = t[mask] - self.renewal_times[k]
            idx = np.searchsorted(seg.times, sigma, side="right") - 1
            np.clip(idx, 0, len(seg.values) - 1, out=idx)
            out[mask] = offs[k] + seg.values[idx]
        return out


def simulate_log_path(chars: LKCharacteristics, start_sign: int, grid: GridSpec,
                      rng, eps: float = DEFAULT_CP_EPS,
                      gaussian_matching: bool = True) -> LogPath:
    """Run alternating killed segments until the horizon is exhausted.

    With both killing rates zero this returns a single censored segment.
    """
    if start_sign not in (1, -1):
        raise ValueError("start_sign must be +1 or -1")
    segments = []
    starts = [0.0]
    sign = start_sign
    elapsed = 0.0
    while True:
        remaining = grid.horizon - elapsed
        spec, law = chars.side(sign)
        seg = sample_killed_segment(spec, law, GridSpec(grid.step, remaining),
                                    rng, eps, gaussian_matching)
        segments.append(seg)
        if seg.censored:
            break
        elapsed += seg.lifetime
        if grid.horizon - elapsed <= 0.0:
            # lifetime landed exactly on the horizon: close with an empty tail
            segments[-1] = SegmentPath(seg.times, seg.values, seg.lifetime,
                                       seg.flip_jump, False)
            starts.append(elapsed)
            segments.append(SegmentPath(np.zeros(1), np.zeros(1), np.inf, 0.0, True))
            break
        starts.append(elapsed)
        sign = -sign
    return LogPath(start_sign=start_sign, segments=segments,
                   renewal_times=np.asarray(starts))


def path_value(path: LogPath, x: float, t):
    """Value of the multiplicative-invariant process started at x, at time t."""
    if x == 0.0:
        raise ValueError("start point must be nonzero")
    if (1 if x > 0 else -1) != path.start_sign:
        raise ValueError("sign of x does not match the path's start sign")
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    mag = path.log_magnitude(t_arr)
    flips = np.searchsorted(path.renewal_times[1:], t_arr, side="right")
    out = x * np.exp(mag) * np.where(flips % 2 == 0, 1.0, -1.0)
    return out if np.ndim(t) else float(out[0])


def flip_probability(chars: LKCharacteristics, start_sign: int, t) -> float:
    """P(sign at time t differs from the start sign) for the two-state flip chain."""
    if start_sign not in (1, -1):
        raise ValueError("start_sign must be +1 or -1")
    q_own = chars.q_plus if start_sign == 1 else chars.q_minus
    q_tot = chars.q_plus + chars.q_minus
    t = np.asarray(t, dtype=float)
    if q_tot == 0.0:
        out = np.zeros_like(t)
    else:
        out = q_own / q_tot * -np.expm1(-q_tot * t)
    return out if out.ndim else float(out)


def scale_path(path: LogPath, a: float, chars: LKCharacteristics = None,
               grid: GridSpec = None, rng=None, eps: float = DEFAULT_CP_EPS) -> LogPath:
    """The log path driving a.Y under the multiplicative scaling y -> a.y.

    Positive a leaves the driving path unchanged (scaling acts on the start
    point alone). Negative a swaps the roles of the two segment laws, which
    is a change of law: a fresh path with the opposite start sign is sampled,
    so chars, grid and rng are required.
    """
    if a == 0.0:
        raise ValueError("scale factor must be nonzero")
    if a > 0.0:
        return path
    if chars is None or grid is None or rng is None:
        raise ValueError("negative scaling resamples: chars, grid and rng are required")
    return simulate_log_path(chars, -path.start_sign, grid, rng, eps)


# --- marginal sampling through the time change -------------------------------

def self_similar_marginal_sampler(chars: LKCharacteristics, alpha: float,
                                  eps: float = DEFAULT_CP_EPS,
                                  base_steps: int = 64, max_rounds: int = 60):
    """Vectorized sampler of the self-similar marginal X_t built from chars.

    Returns run(x, t, n, rng) -> values advancing n replicas of the log path
    on a micro grid in multiplicative time while accumulating the exponential
    functional, and reading the value off at the inverse clock.  Flips are
    thinned per micro step (bias O(step)).  Replicas whose clock stalls below
    machine resolution are reported dead (the hitting time was passed) with
    the cemetery value 0.0; replicas still short of the target after
    max_rounds are reported at their current value.
    """
    sides = {}
    for s in (1, -1):
        spec, law = chars.side(s)
        if spec.measure is None:
            scheme = None
        else:
            scheme = build_cp_scheme(spec, eps)
        sides[s] = (spec, law, scheme)

    def run(x: float, t: float, n: int, rng):
        if x == 0.0:
            raise ValueError("start point must be nonzero")
        a_target = t * abs(x) ** (-alpha)
        delta = a_target / base_steps
        sqdelta = math.sqrt(delta)
        sign0 = 1 if x > 0 else -1
        log_mag = np.zeros(n)
        sign = np.full(n, sign0, dtype=np.int64)
        clock = np.zeros(n)
        done = np.zeros(n, dtype=bool)
        dead = np.zeros(n, dtype=bool)
        for _ in range(max_rounds * base_steps):
            act = ~done
            if not act.any():
                break
            rate = np.exp(alpha * log_mag[act])
            stalled = rate < 1e-250
            new_clock = clock[act] + delta * rate
            crossed = new_clock >= a_target
            clock[act] = new_clock
            idx = np.nonzero(act)[0]
            done[idx[crossed | stalled]] = True
            dead[idx[stalled & ~crossed]] = True
            moving = idx[~(crossed | stalled)]
            if moving.size == 0:
                continue
            for s in (1, -1):
                m = moving[sign[moving] == s]
                if m.size == 0:
                    continue
                spec, law, scheme = sides[s]
                if scheme is None:
                    inc = spec.linear * delta
                    if spec.gaussian > 0.0:
                        inc = inc + spec.gaussian * sqdelta * rng.standard_normal(m.size)
                    else:
                        inc = np.full(m.size, inc)
                else:
                    inc = scheme.drift * delta + scheme.sigma * sqdelta * rng.standard_normal(m.size)
                    counts = rng.poisson(scheme.rate * delta, m.size)
                    tot = int(counts.sum())
                    if tot:
                        sizes = scheme.jump_sizes(rng.uniform(size=tot))
                        inc = inc + np.bincount(np.repeat(np.arange(m.size), counts),
                                                weights=sizes, minlength=m.size)
                log_mag[m] += inc
                q = spec.killing
                if q > 0.0:
                    flip = rng.uniform(size=m.size) < q * delta
                    if flip.any():
                        fl = m[flip]
                        log_mag[fl] += np.asarray(law.sample(rng, fl.size), dtype=float)
                        sign[fl] = -s
        return np.where(dead, 0.0, sign * abs(x) * np.exp(log_mag))

    return run
