import numpy as np

from cegb.model import (
    ArtifactSpec,
    AttemptEvents,
    GraspAttempt,
    Manifest,
    Phase,
    PhaseMark,
    SampledTrace,
    Shape,
    TraceKind,
    TransferCycle,
    TrialFamily,
    TrialRecord,
    validate_session,
)

from conftest import bare_session, uniform_trace


def _good_session():
    art = ArtifactSpec("C50", Shape.CYLINDER, 50.0, 0.0)
    return bare_session(
        attempts=(GraspAttempt("o1", 1, 1, AttemptEvents(0.0, 1.0, 3.0, False, 5.0)),),
        transfer_cycles=(TransferCycle("p1", "Master", 14.2),),
        traces={"s1": uniform_trace([0, 1, 2, 3], kind=TraceKind.TANGENTIAL)},
        artifacts={"C50": art},
        trials=(TrialRecord(TrialFamily.SLIP, "C50", 1, ("s1",), 9.79),),
    )


def test_well_formed_session_has_no_violations():
    assert validate_session(_good_session()) == []


def test_equal_timestamps_flagged_once():
    s = bare_session(traces={"x": SampledTrace(TraceKind.FORCE, [0.0, 0.1, 0.1, 0.2], [1, 2, 3, 4])})
    v = validate_session(s)
    assert [x.invariant for x in v] == ["timestamps strictly increasing"]
    assert v[0].record == "trace x"


def test_dangling_trace_reference():
    s = _good_session()
    s = bare_session(
        artifacts=s.artifacts,
        trials=(TrialRecord(TrialFamily.SLIP, "C50", 1, ("missing",)),),
    )
    assert [x.invariant for x in validate_session(s)] == ["dangling trace reference"]


def test_validation_is_idempotent():
    s = bare_session(
        attempts=(
            GraspAttempt("o", 1, 1, AttemptEvents(5.0, 4.0)),
            GraspAttempt("o", 1, 1, AttemptEvents(0.0)),
        )
    )
    first = validate_session(s)
    assert first == validate_session(s)
    assert {v.invariant for v in first} == {"t_lift_5cm >= t_grasp_cmd", "attempt key unique"}


def test_manifest_and_artifact_invariants():
    s = bare_session(artifacts={"a": ArtifactSpec("a", Shape.BOX, 0.0, -1.0)})
    s = type(s)(manifest=Manifest("cegb-99", "", "x"), artifacts=s.artifacts)
    inv = {v.invariant for v in validate_session(s)}
    assert inv == {
        "schema_version supported",
        "gripper_name non-empty",
        "characteristic_dimension > 0",
        "mass >= 0",
    }


def test_phase_marks_and_short_trace_flagged():
    marks = (PhaseMark(Phase.GRASP, 0.0, 2.0), PhaseMark(Phase.HOLD, 1.5, 3.0))
    tr = SampledTrace(TraceKind.POWER, [0.0], [1.0], marks)
    inv = {v.invariant for v in validate_session(bare_session(traces={"p": tr}))}
    assert inv == {"at least 2 samples", "phase marks ordered and non-overlapping"}


def test_transfer_duration_must_be_positive():
    s = bare_session(transfer_cycles=(TransferCycle("p", "Bachelor", 0.0),))
    assert [v.invariant for v in validate_session(s)] == ["transfer duration > 0"]


def test_trace_arrays_are_read_only():
    tr = uniform_trace([1.0, 2.0])
    assert not tr.values.flags.writeable and not tr.t.flags.writeable


def test_voltage_current_power():
    tr = SampledTrace(TraceKind.VOLTAGE_CURRENT, [0, 1], [[2.0, 0.5], [4.0, 0.25]])
    np.testing.assert_array_equal(tr.power, [1.0, 1.0])
