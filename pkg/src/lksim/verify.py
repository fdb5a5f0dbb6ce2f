"""Path-level flip extraction and the statistical test kit: sign-change
decomposition with excursion rescaling, Kolmogorov-Smirnov one- and
two-sample tests, and the lag probes used by the verification suites.

Test design note: acceptance suites run every KS check once against a
preregistered stream; exploratory reruns must move to a fresh stream id, or
the quoted levels mean nothing.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr

from .timechange import SampledPath


class InsufficientSampleError(ValueError):
    """A statistical routine received fewer samples than its validity floor."""


@dataclass
class KSResult:
    """One Kolmogorov-Smirnov comparison at a configured level.

    n is the effective sample size entering the asymptotic tail (the
    harmonic combination for two-sample runs, so it need not be integral).
    """

    statistic: float
    n: float
    p_value: float
    level: float
    passed: bool
    label: str = ""

    def to_json(self) -> str:
        return json.dumps({
            "label": self.label, "statistic": self.statistic, "n": self.n,
            "p_value": self.p_value, "level": self.level, "passed": self.passed,
        })


def write_ks_results(results, path):
    """KSResult batch -> JSON lines file."""
    with open(path, "w") as fh:
        for r in results:
            fh.write(r.to_json() + "\n")


def kolmogorov_p(x: float) -> float:
    """Upper tail P(K > x) of the Kolmogorov distribution.

    The alternating series 2 sum (-1)^(k-1) exp(-2 k^2 x^2) converges for
    every x > 0 but needs ~1/x terms; below 0.5 the Jacobi-transformed
    series (three terms, no cancellation) takes over.
    """
    if x <= 0.0:
        return 1.0
    if x < 0.5:
        s = sum(math.exp(-(2.0 * k - 1.0) ** 2 * math.pi ** 2 / (8.0 * x * x))
                for k in range(1, 4))
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / x * s))
    if x > 6.5:
        return 0.0
    s = 0.0
    for k in range(1, 200):
        term = math.exp(-2.0 * k * k * x * x)
        s += -term if k % 2 == 0 else term
        if term < 1e-18:
            break
    return min(1.0, max(0.0, 2.0 * s))


def ks_one_sample(samples, cdf, level: float = 0.01, label: str = "") -> KSResult:
    """Exact-distribution KS test: D = sup |F_n - F| with the asymptotic
    p-value at x = D sqrt(n)."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    if n < 8:
        raise InsufficientSampleError(f"need at least 8 samples, got {n}")
    fv = np.asarray(cdf(s), dtype=float)
    grid = np.arange(n + 1) / n
    d = float(max(np.max(fv - grid[:-1]), np.max(grid[1:] - fv)))
    p = kolmogorov_p(d * math.sqrt(n))
    return KSResult(statistic=d, n=float(n), p_value=p, level=level,
                    passed=p > level, label=label)


def ks_two_sample(a, b, level: float = 0.01, label: str = "") -> KSResult:
    """Two-sample KS over the pooled order statistics, with the harmonic
    effective size n_a n_b / (n_a + n_b) in the Kolmogorov tail."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size < 8 or b.size < 8:
        raise InsufficientSampleError("need at least 8 samples on each side")
    pooled = np.concatenate((a, b))
    # evaluating both empirical CDFs just past every pooled point covers all
    # candidate sup locations, including ties between the samples
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    d = float(np.max(np.abs(fa - fb)))
    n_eff = a.size * b.size / (a.size + b.size)
    p = kolmogorov_p(d * math.sqrt(n_eff))
    return KSResult(statistic=d, n=n_eff, p_value=p, level=level,
                    passed=p > level, label=label)


def independence_probe(seq, lag: int) -> tuple:
    """Spearman rank correlation of (seq_k, seq_{k+lag}) with its normal
    z-score sqrt(m) rho; |z| <= 3 is the customary acceptance band."""
    seq = np.asarray(seq, dtype=float)
    if lag < 1:
        raise ValueError("lag must be a positive integer")
    m = seq.size - lag
    if m < 30:
        raise InsufficientSampleError(f"need lag + 30 = {lag + 30} points, got {seq.size}")
    rho = float(spearmanr(seq[:-lag], seq[lag:]).statistic)
    return rho, math.sqrt(m) * rho


# --- sign-change decomposition ------------------------------------------------

@dataclass
class FlipDecomposition:
    """Per-flip data of one sampled path.

    Row n (counted from 1) describes the n-th sign change: H[n-1] is its
    time (left grid point of the straddling interval), J[n-1] the ratio of
    the values just after and just before, clocks[n-1] the |X|^(-alpha)
    duration of the stretch that the flip terminates (the first stretch is
    measured from time zero).  excursions[n-1] holds that stretch rescaled
    to start at +-1 on its own magnitude clock; its parity n-1 fixes its
    starting sign relative to the path start.
    """

    alpha: float
    H: np.ndarray
    J: np.ndarray
    clocks: np.ndarray
    excursions: list

    @property
    def n_flips(self) -> int:
        return int(self.H.size)

    def terminal_logs(self) -> np.ndarray:
        """log |X_{H_{n+1}-} / X_{H_n}| per excursion, the scalar functional
        the parity checks compare (start values are rescaled to 1)."""
        return np.array([math.log(abs(e.values[-1])) for e in self.excursions])

    def parity_split(self, values) -> tuple:
        values = np.asarray(values)
        return values[0::2], values[1::2]

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("n,H,J,clock\n")
            for i in range(self.n_flips):
                fh.write(f"{i + 1},{float(self.H[i])!r},{float(self.J[i])!r},"
                         f"{float(self.clocks[i])!r}\n")


def decompose_flips(path: SampledPath, alpha: float) -> FlipDecomposition:
    """Extract sign-change times, ratios, inter-flip clocks and rescaled
    excursions from a sampled path.

    Flip times are grid-resolved to the left endpoint of the straddling
    interval and the adjacent grid values stand in for the limits from the
    left and right; the refinement study quantifies the induced bias.  A
    path with no flips decomposes into empty arrays (not an error).  Only
    completed stretches are kept: the tail after the last flip has no
    terminal ratio and is dropped.
    """
    if alpha <= 0.0:
        raise ValueError("alpha must be positive")
    t = np.asarray(path.times, dtype=float)
    v = np.asarray(path.values, dtype=float)
    if np.any(v == 0.0):
        raise ValueError("path touches zero; decomposition needs a signed path")
    flips = np.asarray(path.flip_indices, dtype=np.int64)
    if flips.size == 0:
        return FlipDecomposition(alpha=alpha, H=np.empty(0), J=np.empty(0),
                                 clocks=np.empty(0), excursions=[])
    h = t[flips - 1]
    j = v[flips] / v[flips - 1]
    # step-rule clock on the same grid the conversions use
    w = np.concatenate(([0.0], np.cumsum(np.abs(v[:-1]) ** (-alpha) * np.diff(t))))
    w_at = w[flips - 1]
    clocks = np.diff(np.concatenate(([0.0], w_at)))
    starts = np.concatenate(([0], flips[:-1]))
    excursions = []
    for s, e in zip(starts, flips):
        mag = abs(v[s])
        excursions.append(SampledPath(
            times=(t[s:e] - t[s]) * mag ** -alpha,
            values=v[s:e] / mag,
            flip_indices=np.empty(0, dtype=np.int64)))
    return FlipDecomposition(alpha=alpha, H=h, J=j, clocks=clocks,
                             excursions=excursions)


def excursion_law_probe(decomp, reference=None, level: float = 0.01,
                        label: str = "excursion-parity") -> KSResult:
    """Compare the terminal-log excursion functional across parity classes.

    decomp may be a single FlipDecomposition or an iterable of them (parity
    counts restart per path, which is what the parity claim is about).  With
    reference = None the even and odd classes are tested against each other
    (the symmetric-model prediction); a reference sample of first-excursion
    functionals from a given start sign is tested against the matching
    parity class instead.  Needs 50 excursions per compared group.
    """
    if isinstance(decomp, FlipDecomposition):
        decomp = [decomp]
    even, odd = [], []
    for d in decomp:
        fn = d.terminal_logs()
        e, o = d.parity_split(fn)
        even.append(e)
        odd.append(o)
    even = np.concatenate(even) if even else np.empty(0)
    odd = np.concatenate(odd) if odd else np.empty(0)
    if reference is None:
        if min(even.size, odd.size) < 50:
            raise InsufficientSampleError("need 50 excursions per parity")
        return ks_two_sample(even, odd, level, label)
    reference = np.asarray(reference, dtype=float)
    if min(even.size, reference.size) < 50:
        raise InsufficientSampleError("need 50 excursions per compared group")
    return ks_two_sample(even, reference, level, label)
