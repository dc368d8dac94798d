"""Summary statistics used for every reported benchmark value.

Continuous quantities are summarised as median, quartiles and a percentile
bootstrap interval for the median. Binomial proportions get Wilson score
intervals.

Conventions other labs need to replicate the numbers exactly:

* quantiles use linear interpolation at index ``h = (n - 1) * q`` over the
  sorted sample (Hyndman-Fan type 7, numpy's default ``"linear"``);
* the bootstrap draws ``B`` index vectors with replacement from numpy's
  PCG64 generator seeded with the configured 64-bit seed, all in one
  ``integers(0, n, size=(B, n))`` call, and takes type-7 quantiles of the
  resampled medians;
* the normal quantile for Wilson intervals comes from
  :meth:`statistics.NormalDist.inv_cdf` (Wichura's AS241 rational
  approximation, accurate to about 1e-16).
"""

from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .errors import EmptySample

BOOTSTRAP_METHOD = "bootstrap-percentile"


@dataclass(frozen=True)
class BootstrapConfig:
    resamples: int = 2000
    confidence: float = 0.95
    seed: int = 42

    def __post_init__(self):
        if self.resamples < 100:
            raise ValueError("bootstrap needs at least 100 resamples")
        if not 0.0 < self.confidence < 1.0:
            raise ValueError("confidence must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def derive(self, label: str) -> "BootstrapConfig":
        """Child config with a seed derived from ``label``.

        Used so each metric family (and each artifact within it) resamples
        from its own stream while staying reproducible from one session seed.
        """
        ss = np.random.SeedSequence([self.seed, zlib.crc32(label.encode("utf-8"))])
        child = int(ss.generate_state(1, dtype=np.uint64)[0])
        return BootstrapConfig(self.resamples, self.confidence, child)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.seed))


@dataclass(frozen=True)
class SummaryStat:
    n: int
    median: float
    q1: float
    q3: float
    ci95: tuple[float, float]
    method: str = BOOTSTRAP_METHOD

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        return d


@dataclass(frozen=True)
class Proportion:
    successes: int
    trials: int
    point: float
    wilson95: tuple[float, float]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wilson95"] = list(self.wilson95)
        return d


def _as_sample(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).reshape(-1)
    if x.size == 0:
        raise EmptySample("statistic of an empty sample")
    return x


def _quantile_sorted(xs: np.ndarray, q: float) -> np.ndarray:
    # xs sorted along the last axis
    n = xs.shape[-1]
    h = (n - 1) * q
    lo = int(math.floor(h))
    hi = min(lo + 1, n - 1)
    frac = h - lo
    a = xs[..., lo]
    if frac == 0.0 or hi == lo:
        return a
    return a + frac * (xs[..., hi] - a)


def quantile(samples: Sequence[float], q: float) -> float:
    """Type-7 (linear interpolation) sample quantile."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"quantile level {q} outside [0, 1]")
    x = np.sort(_as_sample(samples))
    return float(_quantile_sorted(x, q))


def bootstrap_medians(samples, cfg: BootstrapConfig) -> np.ndarray:
    """Medians of ``cfg.resamples`` resamples drawn with replacement."""
    x = _as_sample(samples)
    idx = cfg.generator().integers(0, x.size, size=(cfg.resamples, x.size))
    return np.median(x[idx], axis=1)


def percentile_interval(stats: np.ndarray, confidence: float) -> tuple[float, float]:
    s = np.sort(np.asarray(stats, dtype=float))
    alpha = 1.0 - confidence
    return float(_quantile_sorted(s, alpha / 2)), float(_quantile_sorted(s, 1 - alpha / 2))


def summarize(samples: Sequence[float], cfg: BootstrapConfig | None = None) -> SummaryStat:
    cfg = cfg or BootstrapConfig()
    x = np.sort(_as_sample(samples))
    if x[0] == x[-1]:
        # degenerate: every resample is the same constant
        c = float(x[0])
        return SummaryStat(int(x.size), c, c, c, (c, c))
    lo, hi = percentile_interval(bootstrap_medians(x, cfg), cfg.confidence)
    return SummaryStat(
        n=int(x.size),
        median=float(_quantile_sorted(x, 0.5)),
        q1=float(_quantile_sorted(x, 0.25)),
        q3=float(_quantile_sorted(x, 0.75)),
        ci95=(lo, hi),
    )


def normal_quantile(p: float) -> float:
    return NormalDist().inv_cdf(p)


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    g, n = int(successes), int(trials)
    if n < 1:
        raise EmptySample("Wilson interval needs at least one trial")
    if not 0 <= g <= n:
        raise ValueError(f"successes {g} outside [0, {n}]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")
    z = normal_quantile(0.5 + confidence / 2)
    p = g / n
    z2 = z * z
    denom = 1.0 + z2 / n
    center = (p + z2 / (2 * n)) / denom
    margin = (z / denom) * math.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    lo = 0.0 if g == 0 else max(0.0, min(p, center - margin))
    hi = 1.0 if g == n else min(1.0, max(p, center + margin))
    return lo, hi


def proportion(successes: int, trials: int, confidence: float = 0.95) -> Proportion:
    interval = wilson_interval(successes, trials, confidence)
    return Proportion(int(successes), int(trials), successes / trials, interval)
