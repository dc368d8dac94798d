"""Trace processing: smoothing, power integration, slip onset, phases."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    InvalidPhaseMarks,
    NonMonotonicTrace,
    PhaseInferenceFailed,
    TraceTooShort,
    WindowOutOfRange,
)
from .model import Phase, PhaseMark, SampledTrace, TraceKind

DEFAULT_SMOOTHING = 0.05  # s
DEFAULT_PLATEAU = 0.5  # s

# Slack for comparing sample times against window edges.
_TIME_EPS = 1e-9


@dataclass(frozen=True)
class SlipDetectorConfig:
    """Parameters of the peak-before-sustained-drop slip rule.

    ``min_force`` is the running maximum (N) below which drops are ignored,
    so sensor noise around zero load at the start of a ramp cannot be
    mistaken for slip.
    """

    drop_fraction: float = 0.20
    sustain_window: float = 0.1
    smoothing_window: float = DEFAULT_SMOOTHING
    min_force: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.drop_fraction < 1.0:
            raise ValueError("drop_fraction must lie in (0, 1)")
        if self.sustain_window <= 0 or self.smoothing_window <= 0:
            raise ValueError("windows must be positive")
        if self.min_force < 0:
            raise ValueError("min_force must be nonnegative")


@dataclass(frozen=True)
class PhaseInferenceConfig:
    smoothing_window: float = DEFAULT_SMOOTHING
    baseline_window: float = 0.2
    mad_factor: float = 3.0


def _check_monotonic(t: np.ndarray) -> None:
    if len(t) >= 2 and not np.all(np.diff(t) > 0):
        raise NonMonotonicTrace("timestamps must be strictly increasing")


def moving_average(t: np.ndarray, y: np.ndarray, window: float) -> np.ndarray:
    """Centered moving average over a time window.

    Each output sample averages the inputs within ``window / 2`` of it. Near
    the ends the half-width shrinks symmetrically to the distance to the
    nearest end, so the window stays centered and linear trends are not
    biased at the trace edges. Means are accumulated as deviations from the
    center sample, which keeps constant stretches bit-exact.
    """
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if window <= 0:
        raise ValueError("smoothing window must be positive")
    _check_monotonic(t)
    if len(t) < 2:
        return y.copy()
    half = np.minimum(window / 2, np.minimum(t - t[0], t[-1] - t))
    lo = np.searchsorted(t, t - half - _TIME_EPS, side="left")
    hi = np.searchsorted(t, t + half + _TIME_EPS, side="right")
    count = hi - lo
    width = int(count.max())
    if width == 1:
        return y.copy()
    idx = lo[:, None] + np.arange(width)
    inside = idx < hi[:, None]
    idx = np.minimum(idx, len(t) - 1)
    center = y[:, None] if y.ndim == 1 else y[:, None, :]
    dev = y[idx] - center
    if y.ndim == 1:
        dev = np.where(inside, dev, 0.0)
        return y + dev.sum(axis=1) / count
    dev = np.where(inside[:, :, None], dev, 0.0)
    return y + dev.sum(axis=1) / count[:, None]


def smooth(trace: SampledTrace, window: float = DEFAULT_SMOOTHING) -> SampledTrace:
    if len(trace) < 2:
        raise TraceTooShort("smoothing needs at least 2 samples")
    return trace.with_values(moving_average(trace.t, trace.values, window))


def power_trace(trace: SampledTrace) -> SampledTrace:
    """Convert a voltage/current trace to a power trace (``P = U*I``)."""
    return SampledTrace(TraceKind.POWER, trace.t, trace.power, trace.phase_marks)


def integrate_power(trace: SampledTrace, t0: float | None = None, t1: float | None = None) -> float:
    """Energy in joules: trapezoidal integral of power over ``[t0, t1]``.

    Power at the window edges is linearly interpolated between samples, so
    the integral is additive over adjacent windows.
    """
    t = trace.t
    p = trace.power
    _check_monotonic(t)
    if len(t) < 2:
        raise TraceTooShort("integration needs at least 2 samples")
    t0 = t[0] if t0 is None else float(t0)
    t1 = t[-1] if t1 is None else float(t1)
    if not t0 < t1:
        raise WindowOutOfRange(f"empty window [{t0}, {t1}]")
    if t0 < t[0] - _TIME_EPS or t1 > t[-1] + _TIME_EPS:
        raise WindowOutOfRange(f"window [{t0}, {t1}] outside trace span [{t[0]}, {t[-1]}]")
    t0 = max(t0, t[0])
    t1 = min(t1, t[-1])
    inner = (t > t0) & (t < t1)
    tt = np.concatenate(([t0], t[inner], [t1]))
    pp = np.concatenate(([np.interp(t0, t, p)], p[inner], [np.interp(t1, t, p)]))
    return float(np.sum((pp[1:] + pp[:-1]) * np.diff(tt)) / 2)


def _true_runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Inclusive (start, end) index pairs of contiguous True stretches."""
    padded = np.concatenate(([False], mask, [False])).astype(np.int8)
    edges = np.flatnonzero(np.diff(padded))
    return [(int(a), int(b) - 1) for a, b in zip(edges[::2], edges[1::2])]


def detect_slip_onset(
    trace: SampledTrace, cfg: SlipDetectorConfig | None = None
) -> tuple[float, float]:
    """Return ``(t_slip, F_slip)`` for a tangential or pull force trace.

    The running maximum of the smoothed force is tracked; slip is declared at
    the first stretch where the raw force stays at or below
    ``(1 - drop_fraction)`` of that maximum for at least ``sustain_window``.
    F_slip is the largest smoothed force up to the start of that stretch.
    Without such a stretch the load never let go (safety limit reached) and
    the global maximum of the smoothed trace is returned.
    """
    cfg = cfg or SlipDetectorConfig()
    if trace.kind not in (TraceKind.TANGENTIAL, TraceKind.PULL, TraceKind.FORCE):
        raise TypeError(f"slip detection needs a force trace, got {trace.kind.value}")
    t, y = trace.t, trace.values
    _check_monotonic(t)
    if len(t) < 2:
        raise TraceTooShort("slip detection needs at least 2 samples")
    s = moving_average(t, y, cfg.smoothing_window)
    runmax = np.maximum.accumulate(s)
    below = (y <= (1.0 - cfg.drop_fraction) * runmax) & (runmax >= cfg.min_force)
    onset = None
    for start, end in _true_runs(below):
        if t[end] - t[start] >= cfg.sustain_window - _TIME_EPS:
            onset = start
            break
    i = int(np.argmax(s)) if onset is None else int(np.argmax(s[: onset + 1]))
    return float(t[i]), float(s[i])


def peak_plateau(
    trace: SampledTrace,
    plateau_window: float = DEFAULT_PLATEAU,
    smoothing_window: float = DEFAULT_SMOOTHING,
) -> tuple[float, float]:
    """Peak and plateau (median of the final ``plateau_window``) of a force trace."""
    t = trace.t
    _check_monotonic(t)
    if len(t) < 2 or t[-1] - t[0] < plateau_window - _TIME_EPS:
        raise TraceTooShort(f"trace shorter than plateau window {plateau_window} s")
    s = moving_average(t, trace.values, smoothing_window)
    tail = s[t >= t[-1] - plateau_window - _TIME_EPS]
    return float(s.max()), float(np.median(tail))


def _check_marks(marks) -> tuple[PhaseMark, ...]:
    marks = tuple(marks)
    for m in marks:
        if not m.t_start < m.t_end:
            raise InvalidPhaseMarks(f"{m.phase.value}: t_start must precede t_end")
    for a, b in zip(marks, marks[1:]):
        if b.t_start < a.t_end:
            raise InvalidPhaseMarks("phase marks overlap or are out of order")
    return marks


def segment_phases(
    trace: SampledTrace,
    marks=None,
    cfg: PhaseInferenceConfig | None = None,
) -> tuple[PhaseMark, ...]:
    """Grasp/hold/release marks for a power trace.

    Explicit marks (argument, else the trace's own) are checked and returned
    as given. Otherwise phases are inferred from the smoothed power: the idle
    baseline is the median over the first ``baseline_window`` seconds and the
    activity threshold sits ``mad_factor`` scaled MADs above it. Active
    stretches shorter than the smoothing window are ignored. The first active
    stretch is the grasp, the last the release, and the hold spans the gap.
    Stretch edges are snapped to the raw samples that exceed the threshold.
    """
    if marks is None:
        marks = trace.phase_marks
    if marks is not None:
        return _check_marks(marks)
    cfg = cfg or PhaseInferenceConfig()
    t = trace.t
    if len(t) < 2:
        raise PhaseInferenceFailed("trace too short to infer phases")
    _check_monotonic(t)
    p = trace.power
    s = moving_average(t, p, cfg.smoothing_window)
    base = s[t <= t[0] + cfg.baseline_window + _TIME_EPS]
    baseline = float(np.median(base))
    mad = 1.4826 * float(np.median(np.abs(base - baseline)))
    scale = max(1.0, float(np.max(np.abs(p))))
    thr = baseline + cfg.mad_factor * mad + 1e-12 * scale
    regions = []
    for a, b in _true_runs(s > thr):
        if t[b] - t[a] < cfg.smoothing_window - _TIME_EPS:
            continue
        hits = np.flatnonzero(p[a : b + 1] > thr)
        if hits.size:
            regions.append((a + int(hits[0]), a + int(hits[-1])))
    if len(regions) < 2:
        raise PhaseInferenceFailed(
            f"found {len(regions)} active region(s) in power trace; need grasp and release"
        )
    (g0, g1), (r0, r1) = regions[0], regions[-1]
    last = len(t) - 1
    grasp = PhaseMark(Phase.GRASP, float(t[g0]), float(t[min(g1 + 1, last)]))
    release = PhaseMark(Phase.RELEASE, float(t[r0]), float(t[min(r1 + 1, last)]))
    if not grasp.t_end < release.t_start:
        raise PhaseInferenceFailed("no hold interval between grasp and release")
    hold = PhaseMark(Phase.HOLD, grasp.t_end, release.t_start)
    return (grasp, hold, release)


def phase_of(marks, phase: Phase) -> PhaseMark:
    for m in marks:
        if m.phase is phase:
            return m
    raise PhaseInferenceFailed(f"no {phase.value} phase")
