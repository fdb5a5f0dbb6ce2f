"""Time changes between the multiplicative-invariant path Y and the
self-similar path X: the exponential-functional clock, its inverse, both
conversion directions, and zero-hitting partial sums.

All integrals use the step rule on the simulated grid (the integrand is a
step function there, so the clock itself is piecewise linear and exact for
that interpolation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .levy_model import Regime
from .lk_core import LKCharacteristics, LogPath, path_value
from .samplers import GridSpec


class HorizonExhaustedError(RuntimeError):
    """The requested clock time lies beyond the simulated window.

    Carries .needed and .available so callers can extend the horizon."""

    def __init__(self, needed: float, available: float):
        super().__init__(
            f"clock target {needed:.6g} exceeds simulated range {available:.6g}; "
            "extend the horizon and resimulate")
        self.needed = needed
        self.available = available


@dataclass
class ClockTable:
    """Piecewise-linear increasing clock sampled on a path grid."""

    times: np.ndarray
    values: np.ndarray

    def value_at(self, t):
        return np.interp(t, self.times, self.values)

    def inverse_at(self, s):
        """Inverse clock; raises HorizonExhaustedError for s >= the final value."""
        s_arr = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s_arr < 0.0):
            raise ValueError("clock times are nonnegative")
        if np.any(s_arr >= self.values[-1]):
            raise HorizonExhaustedError(float(np.max(s_arr)), float(self.values[-1]))
        out = np.interp(s_arr, self.values, self.times)
        return out if np.ndim(s) else float(out[0])


@dataclass
class SampledPath:
    """A real path on an increasing time grid with marked sign-change indices."""

    times: np.ndarray
    values: np.ndarray
    flip_indices: np.ndarray


@dataclass
class TimeChangedPath:
    """Self-similar path obtained from a log path via the inverse clock."""

    source: LogPath
    x: float
    alpha: float
    clock: ClockTable
    samples: SampledPath


def _mark_flips(values: np.ndarray) -> np.ndarray:
    sgn = np.sign(values)
    return np.nonzero(sgn[1:] != sgn[:-1])[0] + 1


def exp_functional(path: LogPath, alpha: float) -> ClockTable:
    """A_t = int_0^t exp(alpha * log-magnitude) ds on the path's own grid."""
    times = [np.zeros(1)]
    increments = []
    offs = path.flip_offsets()
    for k, seg in enumerate(path.segments):
        if seg.times.size < 2:
            continue
        times.append(path.renewal_times[k] + seg.times[1:])
        increments.append(np.exp(alpha * (offs[k] + seg.values[:-1])) * np.diff(seg.times))
    t = np.concatenate(times)
    a = np.concatenate(([0.0], np.cumsum(np.concatenate(increments)))) if increments else np.zeros(1)
    return ClockTable(times=t, values=a)


def exp_functional_inverse(table: ClockTable, s):
    """tau(s): the first time the clock exceeds s (piecewise-linear inverse)."""
    return table.inverse_at(s)


def flip_times_self_similar(path: LogPath, x: float, alpha: float,
                            table: ClockTable = None) -> np.ndarray:
    """Exact self-similar flip times |x|^alpha A(T_n) for the completed segments."""
    if table is None:
        table = exp_functional(path, alpha)
    renewals = path.renewal_times[1:]
    return abs(x) ** alpha * table.value_at(renewals)


def to_self_similar(path: LogPath, x: float, alpha: float,
                    grid) -> TimeChangedPath:
    """Sample X_t = Y_{tau(t |x|^{-alpha})} on a grid (GridSpec or time array).

    Raises HorizonExhaustedError when the grid horizon outruns the simulated
    clock range; the caller extends the log path and retries.
    """
    if x == 0.0:
        raise ValueError("start point must be nonzero")
    table = exp_functional(path, alpha)
    t_out = grid.times() if isinstance(grid, GridSpec) else np.asarray(grid, dtype=float)
    tau = table.inverse_at(t_out * abs(x) ** (-alpha))
    values = path_value(path, x, tau)
    samples = SampledPath(times=t_out, values=values, flip_indices=_mark_flips(values))
    return TimeChangedPath(source=path, x=x, alpha=alpha, clock=table, samples=samples)


def to_mult_invariant(samples: SampledPath, alpha: float) -> SampledPath:
    """Invert the time change: accumulate the |X|^{-alpha} clock sample by
    sample, so sample j of X at t_j becomes sample j of Y at the accumulated
    clock time s_j.

    Sign-change indices carry over unchanged (the clock is a continuous
    increasing bijection, so flips map one-to-one). The input must be nonzero
    over the window; the clock diverges at a zero.
    """
    x_vals = samples.values
    if np.any(x_vals == 0.0):
        raise ValueError("input path touches zero; restrict the window first")
    dts = np.diff(samples.times)
    if np.any(dts <= 0.0):
        raise ValueError("sample times must be strictly increasing")
    w = np.concatenate(([0.0], np.cumsum(np.abs(x_vals[:-1]) ** (-alpha) * dts)))
    return SampledPath(times=w, values=x_vals.copy(),
                       flip_indices=np.asarray(samples.flip_indices).copy())


def zero_hitting_time(path: LogPath, x: float, alpha: float,
                      n_max: int = 10_000, tol: float = 1e-6,
                      chars: LKCharacteristics = None):
    """Partial sums of the zero-hitting time from the completed segments.

    H_{n+1} = H_n + |X_{H_n}|^alpha * int_0^{zeta_n} exp(alpha xi^{(n)}) du,
    accumulated until the relative increment drops below tol or segments or
    n_max run out. Returns (estimate, converged).
    """
    if chars is not None and chars.regime is not Regime.C4:
        raise ValueError("hitting-time sums require both killing rates positive (C4)")
    if x == 0.0:
        raise ValueError("start point must be nonzero")
    log_mag = math.log(abs(x))
    h = 0.0
    converged = False
    n_avail = len(path.segments) - 1  # censored tail cannot contribute
    for n in range(min(n_max, n_avail)):
        seg = path.segments[n]
        a_seg = float(_kernels.segment_exp_integral(seg.values, seg.times, alpha))
        inc = math.exp(alpha * log_mag) * a_seg
        h += inc
        log_mag += seg.terminal_value + seg.flip_jump
        if inc <= tol * h:
            converged = True
            break
    return h, converged
