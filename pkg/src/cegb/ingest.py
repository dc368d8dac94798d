"""Reading and writing session bundles.

A bundle is a directory::

    session.json             manifest, gripper profile, artifact table, trial index
    attempts.csv             YCB attempts (optional)
    transfers.csv            transfer cycles (optional)
    traces/<id>.csv          one sampled trace per file
    traces/<id>.phases.csv   optional phase marks for a trace

CSV headers carry units and must match exactly. Numbers are written with
Python's shortest round-trip float repr, so ``load_session(write_session(s))``
reproduces every sample bit for bit. Loading is all-or-nothing: the first
problem raises and no partial session is returned.
"""

from __future__ import annotations

import csv
import json
import math
import os
from pathlib import Path

import numpy as np

from .errors import (
    IngestError,
    MissingManifest,
    ParseError,
    SchemaVersionUnsupported,
    UnitError,
)
from .model import (
    SCHEMA_VERSION,
    SUPPORTED_SCHEMA_VERSIONS,
    ArtifactSpec,
    AttemptEvents,
    Compliance,
    CycleTrial,
    Fault,
    GraspAttempt,
    GripperProfile,
    GripType,
    IdealShape,
    Manifest,
    Outcome,
    Phase,
    PhaseMark,
    SampledTrace,
    Session,
    Shape,
    TraceKind,
    TransferCycle,
    TrialFamily,
    TrialRecord,
    validate_session,
)

MANIFEST = "session.json"
ATTEMPTS = "attempts.csv"
TRANSFERS = "transfers.csv"
TRACE_DIR = "traces"

TRACE_HEADERS = {
    TraceKind.FORCE: ("t_s", "f_N"),
    TraceKind.TANGENTIAL: ("t_s", "tan_N"),
    TraceKind.PULL: ("t_s", "pull_N"),
    TraceKind.POWER: ("t_s", "p_W"),
    TraceKind.VOLTAGE_CURRENT: ("t_s", "u_V", "i_A"),
}
KIND_BY_HEADER = {v: k for k, v in TRACE_HEADERS.items()}
PHASE_HEADER = ("phase", "t_start_s", "t_end_s")

ATTEMPT_COLUMNS = (
    "object_id",
    "pose_index",
    "attempt_index",
    "t_grasp_cmd_s",
    "t_lift5cm_s",
    "hold_duration_s",
    "slip",
    "t_release_done_s",
    "outcome_override",
)
ATTEMPT_REQUIRED = ("object_id", "pose_index", "attempt_index", "t_grasp_cmd_s", "slip")
TRANSFER_COLUMNS = ("participant_id", "group", "duration_s", "fault_mech", "fault_elec", "fault_sw")
FAULT_COLUMNS = {
    "fault_mech": Fault.MECHANICAL_MISALIGNMENT,
    "fault_elec": Fault.ELECTRICAL_CONNECTOR,
    "fault_sw": Fault.SOFTWARE_COMM,
}


def fmt(x: float | None) -> str:
    if x is None:
        return ""
    return repr(float(x))


# -- low-level field parsing ----------------------------------------------


class _Rows:
    """Tracks file/line context while parsing CSV fields."""

    def __init__(self, path: Path, root: Path):
        self.path = path
        self.name = str(path.relative_to(root))

    def error(self, line, column, reason):
        return ParseError(self.name, line, column, reason)

    def number(self, line, column, text, optional=False):
        text = text.strip()
        if text == "":
            if optional:
                return None
            raise self.error(line, column, "missing value")
        try:
            val = float(text)
        except ValueError:
            raise self.error(line, column, f"not a decimal number: {text!r}") from None
        if not math.isfinite(val):
            raise self.error(line, column, f"non-finite value {text!r}")
        return val

    def integer(self, line, column, text):
        try:
            return int(text.strip())
        except ValueError:
            raise self.error(line, column, f"not an integer: {text!r}") from None

    def flag(self, line, column, text):
        text = text.strip()
        if text not in ("0", "1"):
            raise self.error(line, column, f"expected 0 or 1, got {text!r}")
        return text == "1"


def _read_csv(path: Path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return None, []
    return tuple(h.strip() for h in rows[0]), rows[1:]


def _table(rows_ctx: _Rows, header, body, allowed, required):
    if header is None:
        raise rows_ctx.error(1, None, "empty file, expected a header row")
    unknown = [h for h in header if h not in allowed]
    if unknown:
        raise rows_ctx.error(1, unknown[0], "unknown column")
    missing = [c for c in required if c not in header]
    if missing:
        raise rows_ctx.error(1, missing[0], "required column missing")
    for lineno, row in enumerate(body, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise rows_ctx.error(lineno, None, f"expected {len(header)} fields, got {len(row)}")
        yield lineno, dict(zip(header, row))


# -- readers ---------------------------------------------------------------


def _load_attempts(root: Path) -> tuple[GraspAttempt, ...]:
    path = root / ATTEMPTS
    if not path.exists():
        return ()
    ctx = _Rows(path, root)
    header, body = _read_csv(path)
    out = []
    for ln, rec in _table(ctx, header, body, ATTEMPT_COLUMNS, ATTEMPT_REQUIRED):
        override = rec.get("outcome_override", "").strip()
        if override not in ("", "Success", "Failure"):
            raise ctx.error(ln, "outcome_override", f"expected Success or Failure, got {override!r}")
        events = AttemptEvents(
            t_grasp_cmd=ctx.number(ln, "t_grasp_cmd_s", rec["t_grasp_cmd_s"]),
            t_lift_5cm=ctx.number(ln, "t_lift5cm_s", rec.get("t_lift5cm_s", ""), optional=True),
            hold_duration=ctx.number(ln, "hold_duration_s", rec.get("hold_duration_s", ""), optional=True),
            slip_during_hold=ctx.flag(ln, "slip", rec["slip"]),
            t_release_done=ctx.number(ln, "t_release_done_s", rec.get("t_release_done_s", ""), optional=True),
        )
        obj = rec["object_id"].strip()
        if not obj:
            raise ctx.error(ln, "object_id", "missing value")
        out.append(
            GraspAttempt(
                object_id=obj,
                pose_index=ctx.integer(ln, "pose_index", rec["pose_index"]),
                attempt_index=ctx.integer(ln, "attempt_index", rec["attempt_index"]),
                events=events,
                outcome_override=Outcome(override) if override else None,
            )
        )
    return tuple(out)


def _load_transfers(root: Path) -> tuple[TransferCycle, ...]:
    path = root / TRANSFERS
    if not path.exists():
        return ()
    ctx = _Rows(path, root)
    header, body = _read_csv(path)
    out = []
    for ln, rec in _table(ctx, header, body, TRANSFER_COLUMNS, TRANSFER_COLUMNS):
        faults = frozenset(f for col, f in FAULT_COLUMNS.items() if ctx.flag(ln, col, rec[col]))
        out.append(
            TransferCycle(
                participant_id=rec["participant_id"].strip(),
                group=rec["group"].strip(),
                duration=ctx.number(ln, "duration_s", rec["duration_s"]),
                faults=faults,
            )
        )
    return tuple(out)


def _load_phases(path: Path, root: Path) -> tuple[PhaseMark, ...]:
    ctx = _Rows(path, root)
    header, body = _read_csv(path)
    if header != PHASE_HEADER:
        raise UnitError(ctx.name, ",".join(PHASE_HEADER), ",".join(header or ()))
    marks = []
    for ln, rec in _table(ctx, header, body, PHASE_HEADER, PHASE_HEADER):
        try:
            phase = Phase(rec["phase"].strip())
        except ValueError:
            raise ctx.error(ln, "phase", f"unknown phase {rec['phase']!r}") from None
        marks.append(
            PhaseMark(
                phase,
                ctx.number(ln, "t_start_s", rec["t_start_s"]),
                ctx.number(ln, "t_end_s", rec["t_end_s"]),
            )
        )
    return tuple(marks)


def _fast_numbers(rows, width):
    """All-finite float matrix from well-formed rows, else None."""
    if any(len(r) != width for r in rows):
        return None
    try:
        data = np.array(rows, dtype=float).reshape(len(rows), width)
    except ValueError:
        return None
    return data if np.all(np.isfinite(data)) else None


def _load_trace(root: Path, tid: str, kind: TraceKind) -> SampledTrace:
    path = root / TRACE_DIR / f"{tid}.csv"
    ctx = _Rows(path, root)
    if not path.exists():
        raise ParseError(MANIFEST, 0, "traces", f"trace file {ctx.name} not found")
    header, body = _read_csv(path)
    expected = TRACE_HEADERS[kind]
    if header != expected:
        raise UnitError(ctx.name, ",".join(expected), ",".join(header or ()))
    data = _fast_numbers([row for row in body if row], len(expected))
    if data is not None:
        t, vals = data[:, 0], data[:, 1:]
    else:
        # slow path, only to pinpoint the offending field
        t, vals = [], []
        for ln, row in enumerate(body, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise ctx.error(ln, None, f"expected {len(expected)} fields, got {len(row)}")
            t.append(ctx.number(ln, expected[0], row[0]))
            vals.append([ctx.number(ln, col, txt) for col, txt in zip(expected[1:], row[1:])])
    phases_path = root / TRACE_DIR / f"{tid}.phases.csv"
    marks = _load_phases(phases_path, root) if phases_path.exists() else None
    return SampledTrace(kind, t, vals, marks)


def _enum(ctx_name, field, cls, value):
    try:
        return cls(value)
    except ValueError:
        raise ParseError(ctx_name, 0, field, f"invalid value {value!r}") from None


def _manifest_num(field, value, optional=False):
    if value is None and optional:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ParseError(MANIFEST, 0, field, f"expected a number, got {value!r}")
    return float(value)


def _parse_manifest(doc: dict):
    if not isinstance(doc, dict):
        raise ParseError(MANIFEST, 1, None, "top level must be a JSON object")
    version = doc.get("schema_version")
    if version not in SUPPORTED_SCHEMA_VERSIONS:
        raise SchemaVersionUnsupported(
            f"schema_version {version!r} is not supported (supported: {sorted(SUPPORTED_SCHEMA_VERSIONS)})"
        )
    for key in ("gripper_name", "platform_name"):
        if not isinstance(doc.get(key), str):
            raise ParseError(MANIFEST, 0, key, "expected a string")

    profile = None
    prof = doc.get("gripper_profile")
    if prof is not None:
        try:
            rng = prof["range_mm"]
            profile = GripperProfile(
                compliance=_enum(MANIFEST, "gripper_profile.compliance", Compliance, prof["compliance"]),
                grip_type=_enum(MANIFEST, "gripper_profile.grip_type", GripType, prof["grip_type"]),
                ideal_shape=_enum(MANIFEST, "gripper_profile.ideal_shape", IdealShape, prof["ideal_shape"]),
                gripping_range=(
                    _manifest_num("gripper_profile.range_mm", rng[0]),
                    _manifest_num("gripper_profile.range_mm", rng[1]),
                ),
            )
        except (KeyError, IndexError, TypeError) as exc:
            raise ParseError(MANIFEST, 0, "gripper_profile", f"malformed profile ({exc})") from None

    manifest = Manifest(
        schema_version=version,
        gripper_name=doc["gripper_name"],
        platform_name=doc["platform_name"],
        gripper_profile=profile,
        operator_notes=doc.get("notes"),
    )

    artifacts = {}
    for a in doc.get("artifacts", []):
        try:
            art = ArtifactSpec(
                artifact_id=a["id"],
                shape=_enum(MANIFEST, "artifacts.shape", Shape, a["shape"]),
                characteristic_dimension=_manifest_num("artifacts.dimension_mm", a["dimension_mm"]),
                mass=_manifest_num("artifacts.mass_g", a.get("mass_g", 0.0)),
                coating=a.get("coating"),
                finger_length_L=_manifest_num("artifacts.finger_length_m", a.get("finger_length_m"), optional=True),
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(MANIFEST, 0, "artifacts", f"malformed artifact ({exc})") from None
        artifacts[art.artifact_id] = art

    traces = []
    for tr in doc.get("traces", []):
        try:
            traces.append((tr["id"], _enum(MANIFEST, "traces.kind", TraceKind, tr["kind"])))
        except (KeyError, TypeError) as exc:
            raise ParseError(MANIFEST, 0, "traces", f"malformed trace entry ({exc})") from None

    cycles = []
    for c in doc.get("cycle_trials", []):
        try:
            cycles.append(
                CycleTrial(
                    c["artifact_id"],
                    _manifest_num("cycle_trials.t_start_s", c["t_start_s"]),
                    _manifest_num("cycle_trials.t_stop_s", c["t_stop_s"]),
                )
            )
        except (KeyError, TypeError) as exc:
            raise ParseError(MANIFEST, 0, "cycle_trials", f"malformed cycle trial ({exc})") from None

    trials = []
    for t in doc.get("trials", []):
        try:
            trials.append(
                TrialRecord(
                    family=_enum(MANIFEST, "trials.family", TrialFamily, t["family"]),
                    artifact_id=t["artifact_id"],
                    trial_index=int(t["trial_index"]),
                    trace_ids=tuple(t["trace_ids"]),
                    normals_sum=_manifest_num("trials.normals_sum_N", t.get("normals_sum_N"), optional=True),
                    applied_torque=_manifest_num(
                        "trials.applied_torque_Nm", t.get("applied_torque_Nm"), optional=True
                    ),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, IngestError):
                raise
            raise ParseError(MANIFEST, 0, "trials", f"malformed trial ({exc})") from None

    return manifest, artifacts, traces, tuple(cycles), tuple(trials)


def load_session(path, validate: bool = True) -> Session:
    """Load and validate a session bundle directory."""
    root = Path(path)
    mpath = root / MANIFEST
    if not mpath.is_file():
        raise MissingManifest(f"{mpath} not found")
    try:
        with open(mpath, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(MANIFEST, exc.lineno, str(exc.colno), exc.msg) from None
    manifest, artifacts, trace_index, cycles, trials = _parse_manifest(doc)
    traces = {tid: _load_trace(root, tid, kind) for tid, kind in trace_index}
    session = Session(
        manifest=manifest,
        attempts=_load_attempts(root),
        transfer_cycles=_load_transfers(root),
        traces=traces,
        artifacts=artifacts,
        cycle_trials=cycles,
        trials=trials,
    )
    if validate:
        problems = validate_session(session)
        if problems:
            raise InvalidSession(problems)
    return session


class InvalidSession(IngestError, ValueError):
    def __init__(self, violations):
        self.violations = list(violations)
        lines = "; ".join(str(v) for v in self.violations[:5])
        more = f" (+{len(self.violations) - 5} more)" if len(self.violations) > 5 else ""
        super().__init__(f"session failed validation: {lines}{more}")


# -- writers ---------------------------------------------------------------


def _manifest_doc(session: Session) -> dict:
    man = session.manifest
    prof = man.gripper_profile
    doc = {
        "schema_version": man.schema_version,
        "gripper_name": man.gripper_name,
        "platform_name": man.platform_name,
        "gripper_profile": None
        if prof is None
        else {
            "compliance": prof.compliance.value,
            "grip_type": prof.grip_type.value,
            "ideal_shape": prof.ideal_shape.value,
            "range_mm": list(prof.gripping_range),
        },
        "notes": man.operator_notes,
        "artifacts": [
            {
                "id": a.artifact_id,
                "shape": a.shape.value,
                "dimension_mm": a.characteristic_dimension,
                "mass_g": a.mass,
                "coating": a.coating,
                "finger_length_m": a.finger_length_L,
            }
            for a in session.artifacts.values()
        ],
        "traces": [{"id": tid, "kind": tr.kind.value} for tid, tr in session.traces.items()],
        "cycle_trials": [
            {"artifact_id": c.artifact_id, "t_start_s": c.t_start, "t_stop_s": c.t_stop}
            for c in session.cycle_trials
        ],
        "trials": [
            {
                "family": t.family.value,
                "artifact_id": t.artifact_id,
                "trial_index": t.trial_index,
                "trace_ids": list(t.trace_ids),
                "normals_sum_N": t.normals_sum,
                "applied_torque_Nm": t.applied_torque,
            }
            for t in session.trials
        ],
    }
    return doc


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_trace(root: Path, tid: str, trace: SampledTrace) -> None:
    tdir = Path(root) / TRACE_DIR
    tdir.mkdir(parents=True, exist_ok=True)
    data = np.column_stack([trace.t, trace.values.reshape(len(trace), -1)]).tolist()
    lines = [",".join(TRACE_HEADERS[trace.kind])]
    lines += [",".join(map(repr, row)) for row in data]
    (tdir / f"{tid}.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    if trace.phase_marks is not None:
        _write_csv(
            tdir / f"{tid}.phases.csv",
            PHASE_HEADER,
            ([m.phase.value, fmt(m.t_start), fmt(m.t_end)] for m in trace.phase_marks),
        )


def write_session(session: Session, path) -> Path:
    """Write ``session`` as a bundle directory (created if needed)."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    with open(root / MANIFEST, "w", encoding="utf-8") as fh:
        json.dump(_manifest_doc(session), fh, indent=2, ensure_ascii=False)
        fh.write("\n")
    if session.attempts:
        _write_csv(
            root / ATTEMPTS,
            ATTEMPT_COLUMNS,
            (
                [
                    a.object_id,
                    a.pose_index,
                    a.attempt_index,
                    fmt(a.events.t_grasp_cmd),
                    fmt(a.events.t_lift_5cm),
                    fmt(a.events.hold_duration),
                    int(a.events.slip_during_hold),
                    fmt(a.events.t_release_done),
                    a.outcome_override.value if a.outcome_override else "",
                ]
                for a in session.attempts
            ),
        )
    if session.transfer_cycles:
        _write_csv(
            root / TRANSFERS,
            TRANSFER_COLUMNS,
            (
                [c.participant_id, c.group, fmt(c.duration)]
                + [int(f in c.faults) for f in FAULT_COLUMNS.values()]
                for c in session.transfer_cycles
            ),
        )
    for tid, trace in session.traces.items():
        write_trace(root, tid, trace)
    return root


def append_transfer_row(path, cycle: TransferCycle) -> None:
    """Append one cycle to a transfers.csv file, writing the header if new."""
    path = Path(path)
    new = not path.exists() or os.path.getsize(path) == 0
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if new:
            w.writerow(TRANSFER_COLUMNS)
        w.writerow(
            [cycle.participant_id, cycle.group, fmt(cycle.duration)]
            + [int(f in cycle.faults) for f in FAULT_COLUMNS.values()]
        )
