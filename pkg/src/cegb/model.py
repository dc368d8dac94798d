"""Domain model for gripper benchmark sessions.

All quantities are SI internally (seconds, newtons, joules, watts, volts,
amperes). Artifact dimensions are millimetres and masses grams, matching
how the benchmark tables are usually printed. Every type is immutable once
constructed; traces hold read-only numpy arrays.

Constructors do not check invariants. A session read from disk or built by
hand is checked with :func:`validate_session`, which reports problems as
data instead of raising.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

SCHEMA_VERSION = "cegb-1"
SUPPORTED_SCHEMA_VERSIONS = frozenset({SCHEMA_VERSION})


class Shape(str, enum.Enum):
    CYLINDER = "Cylinder"
    BOX = "Box"
    SPHERE = "Sphere"


class Compliance(str, enum.Enum):
    RIGID = "R"
    ONE_AXIS = "1S"
    TWO_AXIS = "2S"
    FULL = "F"


class GripType(str, enum.Enum):
    WRAP = "W"
    PINCH = "P"


class IdealShape(str, enum.Enum):
    CYLINDER = "C"
    BOX = "B"
    SPHERE = "S"


class Outcome(str, enum.Enum):
    SUCCESS = "Success"
    FAILURE = "Failure"


class Fault(str, enum.Enum):
    MECHANICAL_MISALIGNMENT = "MechanicalMisalignment"
    ELECTRICAL_CONNECTOR = "ElectricalConnector"
    SOFTWARE_COMM = "SoftwareComm"


# Participant groups used in transfer studies. Any other non-empty string is
# accepted as a free-form group name.
KNOWN_GROUPS = ("Bachelor", "Master", "UntrainedColleague", "Experienced")


class TraceKind(str, enum.Enum):
    FORCE = "Force_N"
    TANGENTIAL = "Tangential_N"
    PULL = "Pull_N"
    POWER = "Power_W"
    VOLTAGE_CURRENT = "VoltageCurrent"

    @property
    def is_power(self) -> bool:
        return self in (TraceKind.POWER, TraceKind.VOLTAGE_CURRENT)

    @property
    def n_channels(self) -> int:
        return 2 if self is TraceKind.VOLTAGE_CURRENT else 1


class Phase(str, enum.Enum):
    APPROACH = "Approach"
    GRASP = "Grasp"
    HOLD = "Hold"
    RELEASE = "Release"


class TrialFamily(str, enum.Enum):
    """Which measurement protocol a trace-backed trial belongs to."""

    STRENGTH = "strength"
    SLIP = "slip"
    PAYLOAD = "payload"
    ENERGY = "energy"


FAMILY_KINDS = {
    TrialFamily.STRENGTH: {TraceKind.FORCE},
    TrialFamily.SLIP: {TraceKind.TANGENTIAL, TraceKind.PULL},
    TrialFamily.PAYLOAD: {TraceKind.PULL, TraceKind.TANGENTIAL},
    TrialFamily.ENERGY: {TraceKind.POWER, TraceKind.VOLTAGE_CURRENT},
}


@dataclass(frozen=True)
class GripperProfile:
    compliance: Compliance
    grip_type: GripType
    ideal_shape: IdealShape
    gripping_range: tuple[float, float]

    @property
    def code(self) -> str:
        return f"{self.compliance.value}-{self.grip_type.value}-{self.ideal_shape.value}"


@dataclass(frozen=True)
class Manifest:
    schema_version: str
    gripper_name: str
    platform_name: str
    gripper_profile: GripperProfile | None = None
    operator_notes: str | None = None


@dataclass(frozen=True)
class ArtifactSpec:
    artifact_id: str
    shape: Shape
    characteristic_dimension: float  # mm
    mass: float  # g
    coating: str | None = None
    finger_length_L: float | None = None  # m

    @property
    def label(self) -> str:
        return f"{self.characteristic_dimension:g} mm"


@dataclass(frozen=True)
class AttemptEvents:
    t_grasp_cmd: float
    t_lift_5cm: float | None = None
    hold_duration: float | None = None
    slip_during_hold: bool = False
    t_release_done: float | None = None

    @property
    def has_events(self) -> bool:
        return (
            self.t_lift_5cm is not None
            or self.hold_duration is not None
            or self.t_release_done is not None
            or self.slip_during_hold
        )


@dataclass(frozen=True)
class GraspAttempt:
    object_id: str
    pose_index: int
    attempt_index: int
    events: AttemptEvents
    outcome_override: Outcome | None = None

    @property
    def key(self) -> tuple[str, int, int]:
        return (self.object_id, self.pose_index, self.attempt_index)


@dataclass(frozen=True)
class TransferCycle:
    participant_id: str
    group: str
    duration: float
    faults: frozenset[Fault] = frozenset()

    @property
    def success(self) -> bool:
        return not self.faults


@dataclass(frozen=True)
class PhaseMark:
    phase: Phase
    t_start: float
    t_end: float

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True, eq=False)
class SampledTrace:
    """Timestamped samples of one trace kind.

    ``values`` is 1-D for scalar kinds and ``(n, 2)`` (volts, amperes) for
    :attr:`TraceKind.VOLTAGE_CURRENT`.
    """

    kind: TraceKind
    t: np.ndarray
    values: np.ndarray
    phase_marks: tuple[PhaseMark, ...] | None = None

    def __post_init__(self):
        t = np.array(self.t, dtype=float)
        v = np.array(self.values, dtype=float)
        if self.kind.n_channels == 2:
            v = v.reshape(-1, 2)
        else:
            v = v.reshape(-1)
        if len(t) != len(v):
            raise ValueError(f"trace has {len(t)} timestamps but {len(v)} samples")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "t", t)
        object.__setattr__(self, "values", v)
        if self.phase_marks is not None:
            object.__setattr__(self, "phase_marks", tuple(self.phase_marks))

    def __len__(self) -> int:
        return len(self.t)

    def __eq__(self, other):
        if not isinstance(other, SampledTrace):
            return NotImplemented
        return (
            self.kind == other.kind
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.values, other.values)
            and self.phase_marks == other.phase_marks
        )

    __hash__ = None

    @property
    def power(self) -> np.ndarray:
        """Instantaneous power in watts (``U*I`` for voltage/current traces)."""
        if self.kind is TraceKind.POWER:
            return self.values
        if self.kind is TraceKind.VOLTAGE_CURRENT:
            return self.values[:, 0] * self.values[:, 1]
        raise TypeError(f"{self.kind.value} trace carries no power")

    def with_values(self, values, kind: TraceKind | None = None) -> "SampledTrace":
        return SampledTrace(kind or self.kind, self.t, values, self.phase_marks)


@dataclass(frozen=True)
class CycleTrial:
    """One grasp-hold-release timing run on a NIST artifact."""

    artifact_id: str
    t_start: float
    t_stop: float


@dataclass(frozen=True)
class TrialRecord:
    """Index entry tying one trace-backed trial to its artifact and traces.

    Strength trials list one trace per finger; the other families use a
    single trace. ``normals_sum`` (N) and ``applied_torque`` (N*m) are only
    meaningful for slip trials.
    """

    family: TrialFamily
    artifact_id: str
    trial_index: int
    trace_ids: tuple[str, ...]
    normals_sum: float | None = None
    applied_torque: float | None = None


@dataclass(frozen=True)
class Session:
    manifest: Manifest
    attempts: tuple[GraspAttempt, ...] = ()
    transfer_cycles: tuple[TransferCycle, ...] = ()
    traces: Mapping[str, SampledTrace] = field(default_factory=dict)
    artifacts: Mapping[str, ArtifactSpec] = field(default_factory=dict)
    cycle_trials: tuple[CycleTrial, ...] = ()
    trials: tuple[TrialRecord, ...] = ()

    def trials_of(self, family: TrialFamily) -> list[TrialRecord]:
        return [tr for tr in self.trials if tr.family is family]


@dataclass(frozen=True)
class Violation:
    record: str
    invariant: str

    def __str__(self):
        return f"{self.record}: {self.invariant}"


def _check_trace(tid: str, trace: SampledTrace) -> list[Violation]:
    out = []
    rec = f"trace {tid}"
    if len(trace) < 2:
        out.append(Violation(rec, "at least 2 samples"))
    if len(trace) >= 2 and not np.all(np.diff(trace.t) > 0):
        out.append(Violation(rec, "timestamps strictly increasing"))
    if not (np.all(np.isfinite(trace.t)) and np.all(np.isfinite(trace.values))):
        out.append(Violation(rec, "samples finite"))
    marks = trace.phase_marks or ()
    for m in marks:
        if not m.t_start < m.t_end:
            out.append(Violation(rec, f"phase {m.phase.value} t_start < t_end"))
    for a, b in zip(marks, marks[1:]):
        if b.t_start < a.t_end:
            out.append(Violation(rec, "phase marks ordered and non-overlapping"))
            break
    return out


def _check_events(rec: str, ev: AttemptEvents) -> list[Violation]:
    out = []
    for name in ("t_lift_5cm", "t_release_done"):
        val = getattr(ev, name)
        if val is not None and val < ev.t_grasp_cmd:
            out.append(Violation(rec, f"{name} >= t_grasp_cmd"))
    if ev.t_lift_5cm is not None and ev.t_release_done is not None:
        if ev.t_lift_5cm > ev.t_release_done:
            out.append(Violation(rec, "t_lift_5cm <= t_release_done"))
    if ev.hold_duration is not None and ev.hold_duration < 0:
        out.append(Violation(rec, "hold_duration >= 0"))
    return out


def validate_session(session: Session) -> list[Violation]:
    """Check every model invariant; an empty list means the session is sound."""
    out: list[Violation] = []
    man = session.manifest
    if man.schema_version not in SUPPORTED_SCHEMA_VERSIONS:
        out.append(Violation("manifest", "schema_version supported"))
    if not man.gripper_name:
        out.append(Violation("manifest", "gripper_name non-empty"))
    if not man.platform_name:
        out.append(Violation("manifest", "platform_name non-empty"))
    prof = man.gripper_profile
    if prof is not None and not prof.gripping_range[0] < prof.gripping_range[1]:
        out.append(Violation("gripper_profile", "gripping_range min < max"))

    for aid, art in session.artifacts.items():
        rec = f"artifact {aid}"
        if aid != art.artifact_id:
            out.append(Violation(rec, "artifact id matches key"))
        if not art.characteristic_dimension > 0:
            out.append(Violation(rec, "characteristic_dimension > 0"))
        if not art.mass >= 0:
            out.append(Violation(rec, "mass >= 0"))
        if art.finger_length_L is not None and not art.finger_length_L > 0:
            out.append(Violation(rec, "finger_length_L > 0"))

    seen = set()
    for att in session.attempts:
        rec = "attempt {}/{}/{}".format(*att.key)
        if att.key in seen:
            out.append(Violation(rec, "attempt key unique"))
        seen.add(att.key)
        if att.pose_index < 1:
            out.append(Violation(rec, "pose_index >= 1"))
        if att.attempt_index < 1:
            out.append(Violation(rec, "attempt_index >= 1"))
        out.extend(_check_events(rec, att.events))

    for i, cyc in enumerate(session.transfer_cycles):
        rec = f"transfer cycle {i + 1} ({cyc.participant_id})"
        if not cyc.duration > 0:
            out.append(Violation(rec, "transfer duration > 0"))
        if not cyc.group:
            out.append(Violation(rec, "group non-empty"))

    for tid, trace in session.traces.items():
        out.extend(_check_trace(tid, trace))

    for i, ct in enumerate(session.cycle_trials):
        rec = f"cycle trial {i + 1}"
        if ct.artifact_id not in session.artifacts:
            out.append(Violation(rec, "dangling artifact reference"))
        if not ct.t_stop > ct.t_start:
            out.append(Violation(rec, "T_stop > T_start"))

    for tr in session.trials:
        rec = f"{tr.family.value} trial {tr.artifact_id}#{tr.trial_index}"
        if tr.artifact_id not in session.artifacts:
            out.append(Violation(rec, "dangling artifact reference"))
        if not tr.trace_ids:
            out.append(Violation(rec, "at least one trace"))
        for tid in tr.trace_ids:
            if tid not in session.traces:
                out.append(Violation(rec, "dangling trace reference"))
            elif session.traces[tid].kind not in FAMILY_KINDS[tr.family]:
                out.append(Violation(rec, "trace kind matches trial family"))
        if tr.normals_sum is not None and tr.normals_sum < 0:
            out.append(Violation(rec, "normals_sum >= 0"))
        if tr.applied_torque is not None and not tr.applied_torque > 0:
            out.append(Violation(rec, "applied_torque > 0"))
    return out
