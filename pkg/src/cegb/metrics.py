"""Benchmark metric families: YCB, NIST, transfer, energy and ideal payload."""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    InconsistentOverride,
    MissingFingerLength,
    MissingProfile,
    NegativeDuration,
    TraceSpanMismatch,
    UnbalancedAttempts,
    ZeroMass,
    ZeroNormalForce,
)
from .model import (
    ArtifactSpec,
    GraspAttempt,
    GripperProfile,
    Outcome,
    Phase,
    PhaseMark,
    SampledTrace,
    TraceKind,
    TransferCycle,
)
from .signal import (
    DEFAULT_PLATEAU,
    DEFAULT_SMOOTHING,
    SlipDetectorConfig,
    detect_slip_onset,
    integrate_power,
    peak_plateau,
    phase_of,
    segment_phases,
)
from .stats import (
    BootstrapConfig,
    Proportion,
    SummaryStat,
    percentile_interval,
    proportion,
    summarize,
)

# Success criterion for a YCB attempt.
LIFT_DEADLINE = 3.0  # s from grasp command to 5 cm lift
HOLD_REQUIRED = 3.0  # s
ATTEMPT_TIMEOUT = 10.0  # s from grasp command

HOLD10 = 10.0  # s, standardized holding interval


def _opt(stat):
    return None if stat is None else stat.to_dict()


# -- YCB ------------------------------------------------------------------


class Reason(str, enum.Enum):
    OK = "Ok"
    NOT_LIFTED = "NotLifted"
    LIFT_TOO_SLOW = "LiftTooSlow"
    HOLD_TOO_SHORT = "HoldTooShort"
    SLIP_DURING_HOLD = "SlipDuringHold"
    TIMEOUT = "Timeout"
    OVERRIDE = "Override"
    NO_DATA = "NoData"


def _classify_events(ev) -> tuple[Outcome, Reason]:
    if ev.t_lift_5cm is None:
        return Outcome.FAILURE, Reason.NOT_LIFTED
    if ev.t_lift_5cm - ev.t_grasp_cmd > LIFT_DEADLINE:
        return Outcome.FAILURE, Reason.LIFT_TOO_SLOW
    if ev.hold_duration is None or ev.hold_duration < HOLD_REQUIRED:
        return Outcome.FAILURE, Reason.HOLD_TOO_SHORT
    if ev.slip_during_hold:
        return Outcome.FAILURE, Reason.SLIP_DURING_HOLD
    deadline = ev.t_grasp_cmd + ATTEMPT_TIMEOUT
    stamps = (ev.t_lift_5cm, ev.t_release_done)
    if any(ts is not None and ts > deadline for ts in stamps):
        return Outcome.FAILURE, Reason.TIMEOUT
    return Outcome.SUCCESS, Reason.OK


def classify_attempt(attempt: GraspAttempt) -> tuple[Outcome, Reason]:
    """Apply the lift/hold/slip/timeout success criterion to one attempt.

    Logged events decide the outcome; ``outcome_override`` is only used for
    attempts without events and must agree with them otherwise.
    """
    ev = attempt.events
    if not ev.has_events:
        if attempt.outcome_override is not None:
            return attempt.outcome_override, Reason.OVERRIDE
        return Outcome.FAILURE, Reason.NO_DATA
    outcome, reason = _classify_events(ev)
    if attempt.outcome_override is not None and attempt.outcome_override is not outcome:
        raise InconsistentOverride(
            "attempt {}/{}/{}: override {} contradicts events ({})".format(
                *attempt.key, attempt.outcome_override.value, reason.value
            )
        )
    return outcome, reason


@dataclass(frozen=True)
class MacroAverage:
    point: float
    ci95: tuple[float, float]
    method: str = "bootstrap-percentile over objects"

    def to_dict(self):
        return {"point": self.point, "ci95": list(self.ci95), "method": self.method}


@dataclass(frozen=True)
class YcbResult:
    per_pose: dict[tuple[str, int], Proportion]
    per_object: dict[str, float]
    micro: Proportion
    macro: MacroAverage
    attempts_per_pose: int
    poses_per_object: dict[str, int]
    time_to_lift: SummaryStat | None
    time_to_release: SummaryStat | None

    def to_dict(self) -> dict:
        return {
            "config": {
                "objects": len(self.per_object),
                "poses_per_object": dict(self.poses_per_object),
                "attempts_per_pose": self.attempts_per_pose,
            },
            "per_pose": {f"{o}/{j}": p.to_dict() for (o, j), p in self.per_pose.items()},
            "per_object": dict(self.per_object),
            "micro": self.micro.to_dict(),
            "macro": self.macro.to_dict(),
            "time_to_lift": _opt(self.time_to_lift),
            "time_to_release": _opt(self.time_to_release),
        }


def ycb_aggregate(attempts: Sequence[GraspAttempt], cfg: BootstrapConfig | None = None) -> YcbResult:
    """Per-pose, per-object, micro and macro success rates.

    The macro-average interval is a percentile bootstrap over objects, since
    the macro statistic weights objects, not attempts, equally. Time-to-lift
    and time-to-release are summarised over successful attempts; release is
    timed from the end of the hold (lift + hold duration).
    """
    cfg = cfg or BootstrapConfig()
    if not attempts:
        raise ValueError("no YCB attempts")
    groups: dict[tuple[str, int], list[bool]] = defaultdict(list)
    lift_times, release_times = [], []
    for att in sorted(attempts, key=lambda a: a.key):
        outcome, _ = classify_attempt(att)
        ok = outcome is Outcome.SUCCESS
        groups[(att.object_id, att.pose_index)].append(ok)
        ev = att.events
        if ok and ev.t_lift_5cm is not None:
            lift_times.append(ev.t_lift_5cm - ev.t_grasp_cmd)
            if ev.t_release_done is not None and ev.hold_duration is not None:
                release_times.append(ev.t_release_done - (ev.t_lift_5cm + ev.hold_duration))

    counts = {len(v) for v in groups.values()}
    if len(counts) != 1:
        raise UnbalancedAttempts(f"pose groups have differing attempt counts {sorted(counts)}")
    a = counts.pop()

    per_pose = {key: proportion(sum(v), a, cfg.confidence) for key, v in groups.items()}
    by_object: dict[str, list[float]] = defaultdict(list)
    for (obj, _), prop in per_pose.items():
        by_object[obj].append(prop.point)
    per_object = {obj: float(np.mean(v)) for obj, v in by_object.items()}

    g_total = sum(p.successes for p in per_pose.values())
    micro = proportion(g_total, a * len(per_pose), cfg.confidence)

    s_o = np.array(list(per_object.values()))
    macro_point = float(s_o.mean())
    if s_o.size > 1 and np.ptp(s_o) > 0:
        mcfg = cfg.derive("ycb.macro")
        idx = mcfg.generator().integers(0, s_o.size, size=(mcfg.resamples, s_o.size))
        macro_ci = percentile_interval(s_o[idx].mean(axis=1), cfg.confidence)
    else:
        macro_ci = (macro_point, macro_point)

    return YcbResult(
        per_pose=per_pose,
        per_object=per_object,
        micro=micro,
        macro=MacroAverage(macro_point, macro_ci),
        attempts_per_pose=a,
        poses_per_object={obj: len(v) for obj, v in by_object.items()},
        time_to_lift=summarize(lift_times, cfg.derive("ycb.lift")) if lift_times else None,
        time_to_release=summarize(release_times, cfg.derive("ycb.release")) if release_times else None,
    )


# -- NIST -----------------------------------------------------------------


def cycle_time(events: Iterable[tuple[float, float]], cfg: BootstrapConfig | None = None) -> SummaryStat:
    durations = []
    for start, stop in events:
        if not stop > start:
            raise NegativeDuration(f"cycle stop {stop} not after start {start}")
        durations.append(stop - start)
    return summarize(durations, cfg)


def total_force(finger_traces: Sequence[SampledTrace]) -> SampledTrace:
    """Pointwise sum of per-finger normal force traces on a shared time grid."""
    if not finger_traces:
        raise TraceSpanMismatch("no finger traces")
    first = finger_traces[0]
    for tr in finger_traces[1:]:
        if not np.array_equal(tr.t, first.t):
            raise TraceSpanMismatch("finger traces must share one sample grid")
    total = np.sum([tr.values for tr in finger_traces], axis=0)
    return SampledTrace(TraceKind.FORCE, first.t, total)


@dataclass(frozen=True)
class StrengthResult:
    per_trial: list[tuple[float, float]]  # (peak, plateau) of the summed force
    peak: SummaryStat
    plateau: SummaryStat
    F_total: SummaryStat

    def to_dict(self):
        return {
            "peak": self.peak.to_dict(),
            "plateau": self.plateau.to_dict(),
            "F_total": self.F_total.to_dict(),
        }


def grasp_strength(
    trials: Sequence[Sequence[SampledTrace]],
    cfg: BootstrapConfig | None = None,
    plateau_window: float = DEFAULT_PLATEAU,
    smoothing_window: float = DEFAULT_SMOOTHING,
) -> StrengthResult:
    """Total grasp force per trial: fingers summed, then peak and plateau."""
    cfg = cfg or BootstrapConfig()
    per_trial = [
        peak_plateau(total_force(fingers), plateau_window, smoothing_window) for fingers in trials
    ]
    peaks = [p for p, _ in per_trial]
    plateaus = [q for _, q in per_trial]
    plateau = summarize(plateaus, cfg.derive("plateau"))
    return StrengthResult(per_trial, summarize(peaks, cfg.derive("peak")), plateau, plateau)


@dataclass(frozen=True)
class SlipMeasurement:
    t_slip: float
    F_slip: float
    mu_eff: float | None
    Q_hold: float | None


def slip_metrics(
    tangential: SampledTrace,
    normals_sum: float | None,
    artifact: ArtifactSpec | None = None,
    applied_torque: float | None = None,
    cfg: SlipDetectorConfig | None = None,
) -> SlipMeasurement:
    """F_slip from the trace, mu_eff = F_slip / sum(N), Q_hold = F_slip * L / T_a.

    ``mu_eff`` is None when no normal-force sum was logged and ``Q_hold``
    when no torque was applied; neither is ever reported as zero.
    """
    t_slip, f_slip = detect_slip_onset(tangential, cfg)
    mu = None
    if normals_sum is not None:
        if not normals_sum > 0:
            raise ZeroNormalForce("normal force sum must be positive")
        mu = f_slip / normals_sum
    q = None
    if applied_torque is not None:
        if artifact is None or artifact.finger_length_L is None:
            raise MissingFingerLength("Q_hold needs the finger length L")
        if not applied_torque > 0:
            raise ZeroNormalForce("applied torque must be positive")
        q = f_slip * artifact.finger_length_L / applied_torque
    return SlipMeasurement(t_slip, f_slip, mu, q)


@dataclass(frozen=True)
class SlipSummary:
    per_trial: list[SlipMeasurement]
    F_slip: SummaryStat
    mu_eff: SummaryStat | None
    Q_hold: SummaryStat | None

    def to_dict(self):
        return {
            "F_slip": self.F_slip.to_dict(),
            "mu_eff": _opt(self.mu_eff),
            "Q_hold": _opt(self.Q_hold),
        }


def summarize_slip(measurements: Sequence[SlipMeasurement], cfg: BootstrapConfig) -> SlipSummary:
    mus = [m.mu_eff for m in measurements if m.mu_eff is not None]
    qs = [m.Q_hold for m in measurements if m.Q_hold is not None]
    return SlipSummary(
        list(measurements),
        summarize([m.F_slip for m in measurements], cfg.derive("F_slip")),
        summarize(mus, cfg.derive("mu_eff")) if mus else None,
        summarize(qs, cfg.derive("Q_hold")) if qs else None,
    )


@dataclass(frozen=True)
class NistResult:
    artifacts: dict[str, ArtifactSpec]
    cycle_time: dict[str, SummaryStat] = field(default_factory=dict)
    grasp_strength: dict[str, StrengthResult] = field(default_factory=dict)
    slip: dict[str, SlipSummary] = field(default_factory=dict)

    def _art(self, aid):
        art = self.artifacts[aid]
        return {"artifact_id": aid, "dimension_mm": art.characteristic_dimension, "shape": art.shape.value}

    def to_dict(self):
        return {
            "cycle_time": {k: {**self._art(k), **v.to_dict()} for k, v in self.cycle_time.items()},
            "grasp_strength": {k: {**self._art(k), **v.to_dict()} for k, v in self.grasp_strength.items()},
            "slip": {k: {**self._art(k), **v.to_dict()} for k, v in self.slip.items()},
        }


# -- transfer -------------------------------------------------------------


@dataclass(frozen=True)
class TransferStats:
    T_transfer_mean: float | None
    T_summary: SummaryStat | None
    S_transfer: Proportion

    def to_dict(self):
        return {
            "T_transfer_mean": self.T_transfer_mean,
            "T_summary": _opt(self.T_summary),
            "S_transfer": self.S_transfer.to_dict(),
        }


@dataclass(frozen=True)
class TransferResult:
    overall: TransferStats
    per_group: dict[str, TransferStats]

    def to_dict(self):
        return {
            "overall": self.overall.to_dict(),
            "per_group": {g: s.to_dict() for g, s in self.per_group.items()},
        }


def _transfer_stats(cycles: Sequence[TransferCycle], cfg: BootstrapConfig) -> TransferStats:
    ok = [c.duration for c in cycles if c.success]
    return TransferStats(
        T_transfer_mean=float(np.mean(ok)) if ok else None,
        T_summary=summarize(ok, cfg) if ok else None,
        S_transfer=proportion(len(ok), len(cycles), cfg.confidence),
    )


def transfer_summary(cycles: Sequence[TransferCycle], cfg: BootstrapConfig | None = None) -> TransferResult:
    """Mean and median transfer durations plus the fault-free success rate.

    Cycles with faults count against robustness but are left out of the
    duration statistics.
    """
    cfg = cfg or BootstrapConfig()
    if not cycles:
        raise ValueError("no transfer cycles")
    groups: dict[str, list[TransferCycle]] = defaultdict(list)
    for c in cycles:
        groups[c.group].append(c)
    return TransferResult(
        overall=_transfer_stats(cycles, cfg.derive("transfer.overall")),
        per_group={g: _transfer_stats(cs, cfg.derive(f"transfer.{g}")) for g, cs in groups.items()},
    )


# -- energy ---------------------------------------------------------------


@dataclass(frozen=True)
class EnergyTrial:
    E_grasp: float
    E_hold: float
    E_release: float
    hold_duration: float
    mass: float | None

    @property
    def E_cycle(self) -> float:
        return self.E_grasp + self.E_hold + self.E_release

    @property
    def P_hold(self) -> float:
        return self.E_hold / self.hold_duration


@dataclass(frozen=True)
class EnergyResult:
    per_trial: list[EnergyTrial]
    E_grasp: SummaryStat
    E_hold: SummaryStat
    E_release: SummaryStat
    E_cycle: SummaryStat
    P_hold_mean: float
    E_hold10: float
    E_hold10_summary: SummaryStat
    energy_to_weight_cycle: float | None
    energy_to_weight_grasp: float | None
    t_hold_nominal: float | None = None

    def to_dict(self):
        return {
            "E_grasp": self.E_grasp.to_dict(),
            "E_hold": self.E_hold.to_dict(),
            "E_release": self.E_release.to_dict(),
            "E_cycle": self.E_cycle.to_dict(),
            "P_hold_mean": self.P_hold_mean,
            "E_hold10": self.E_hold10,
            "E_hold10_summary": self.E_hold10_summary.to_dict(),
            "energy_to_weight_cycle": self.energy_to_weight_cycle,
            "energy_to_weight_grasp": self.energy_to_weight_grasp,
            "t_hold_nominal": self.t_hold_nominal,
        }


def phase_energies(trace: SampledTrace, marks: Sequence[PhaseMark] | None = None):
    """Integrate one power trace over its grasp, hold and release phases."""
    marks = segment_phases(trace, marks)
    g, h, r = (phase_of(marks, ph) for ph in (Phase.GRASP, Phase.HOLD, Phase.RELEASE))
    return (
        integrate_power(trace, g.t_start, g.t_end),
        integrate_power(trace, h.t_start, h.t_end),
        integrate_power(trace, r.t_start, r.t_end),
        h.duration,
    )


def energy_metrics(
    trials: Sequence[tuple[SampledTrace, Sequence[PhaseMark] | None, float | None]],
    t_hold_nominal: float | None = None,
    cfg: BootstrapConfig | None = None,
) -> EnergyResult:
    """Phase energies, standardized 10 s holding energy and energy-to-weight.

    Each trial is ``(power trace, phase marks or None, object mass in g)``.
    Missing marks are inferred from the power profile. Energy-to-weight
    ratios are medians of per-trial ratios in J/g.
    """
    cfg = cfg or BootstrapConfig()
    if not trials:
        raise ValueError("no energy trials")
    results = []
    for trace, marks, mass in trials:
        eg, eh, er, dur = phase_energies(trace, marks)
        if mass is not None and not mass > 0:
            raise ZeroMass("object mass must be positive for energy-to-weight")
        results.append(EnergyTrial(eg, eh, er, dur, mass))

    p_hold = [r.P_hold for r in results]
    p_hold_mean = float(np.median(p_hold))
    weighed = [r for r in results if r.mass is not None]
    return EnergyResult(
        per_trial=results,
        E_grasp=summarize([r.E_grasp for r in results], cfg.derive("E_grasp")),
        E_hold=summarize([r.E_hold for r in results], cfg.derive("E_hold")),
        E_release=summarize([r.E_release for r in results], cfg.derive("E_release")),
        E_cycle=summarize([r.E_cycle for r in results], cfg.derive("E_cycle")),
        P_hold_mean=p_hold_mean,
        E_hold10=HOLD10 * p_hold_mean,
        E_hold10_summary=summarize([HOLD10 * p for p in p_hold], cfg.derive("E_hold10")),
        energy_to_weight_cycle=float(np.median([r.E_cycle / r.mass for r in weighed])) if weighed else None,
        energy_to_weight_grasp=float(np.median([r.E_grasp / r.mass for r in weighed])) if weighed else None,
        t_hold_nominal=t_hold_nominal,
    )


# -- ideal payload --------------------------------------------------------


@dataclass(frozen=True)
class IipbResult:
    profile_code: str
    profile: GripperProfile
    artifacts: dict[str, ArtifactSpec]
    per_artifact: dict[str, SummaryStat]

    def to_dict(self):
        prof = self.profile
        return {
            "profile_code": self.profile_code,
            "profile": {
                "compliance": prof.compliance.value,
                "grip_type": prof.grip_type.value,
                "ideal_shape": prof.ideal_shape.value,
                "range_mm": list(prof.gripping_range),
            },
            "per_artifact": {
                aid: {
                    "artifact_id": aid,
                    "dimension_mm": self.artifacts[aid].characteristic_dimension,
                    "shape": self.artifacts[aid].shape.value,
                    "F_ideal": stat.to_dict(),
                }
                for aid, stat in self.per_artifact.items()
            },
        }


def iipb_metrics(
    pull_trials: Sequence[tuple[SampledTrace, ArtifactSpec]],
    profile: GripperProfile | None,
    cfg: BootstrapConfig | None = None,
    slip_cfg: SlipDetectorConfig | None = None,
) -> IipbResult:
    """Ideal payload (largest sustained pull force) per artifact."""
    cfg = cfg or BootstrapConfig()
    if profile is None:
        raise MissingProfile("ideal-payload results need a gripper profile")
    forces: dict[str, list[float]] = defaultdict(list)
    artifacts = {}
    for trace, art in pull_trials:
        forces[art.artifact_id].append(detect_slip_onset(trace, slip_cfg)[1])
        artifacts[art.artifact_id] = art
    order = sorted(forces, key=lambda aid: (artifacts[aid].characteristic_dimension, aid))
    return IipbResult(
        profile_code=profile.code,
        profile=profile,
        artifacts={aid: artifacts[aid] for aid in order},
        per_artifact={aid: summarize(forces[aid], cfg.derive(f"iipb.{aid}")) for aid in order},
    )
