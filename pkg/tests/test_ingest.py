import json
import shutil

import numpy as np
import pytest

from cegb.errors import MissingManifest, ParseError, SchemaVersionUnsupported, UnitError
from cegb.ingest import InvalidSession, append_transfer_row, fmt, load_session, write_session
from cegb.model import Fault, TransferCycle
from cegb.synth import build_random_session


@pytest.fixture
def bundle(tmp_path):
    session, _ = build_random_session(3, noise=True, energy_rate=100.0)
    return session, write_session(session, tmp_path / "b")


def test_round_trip_is_identity(bundle):
    session, root = bundle
    assert load_session(root) == session


def test_fmt_round_trips_floats():
    for x in (0.1, 1 / 3, 1e-300, 123456789.123456789, -0.0):
        assert float(fmt(x)) == x
    assert fmt(None) == ""


def test_missing_manifest(tmp_path):
    with pytest.raises(MissingManifest):
        load_session(tmp_path)


def test_schema_version_rejected(bundle):
    _, root = bundle
    doc = json.loads((root / "session.json").read_text())
    doc["schema_version"] = "cegb-99"
    (root / "session.json").write_text(json.dumps(doc))
    with pytest.raises(SchemaVersionUnsupported):
        load_session(root)


def test_bad_number_reports_line_and_column(bundle):
    _, root = bundle
    path = root / "attempts.csv"
    lines = path.read_text().splitlines()
    cells = lines[2].split(",")
    cells[3] = "soon"
    lines[2] = ",".join(cells)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as info:
        load_session(root)
    err = info.value
    assert (err.file, err.line, err.column) == ("attempts.csv", 3, "t_grasp_cmd_s")


def test_wrong_unit_header(bundle):
    _, root = bundle
    path = next((root / "traces").glob("energy_*[0-9].csv"))
    text = path.read_text().replace("t_s,p_W", "t_s,p_mW", 1)
    path.write_text(text)
    with pytest.raises(UnitError) as info:
        load_session(root)
    assert info.value.expected == "t_s,p_W" and info.value.found == "t_s,p_mW"


def test_invalid_session_lists_violations(bundle):
    _, root = bundle
    path = next((root / "traces").glob("slip_*.csv"))
    lines = path.read_text().splitlines()
    lines[3] = lines[2]  # repeat a timestamp
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(InvalidSession) as info:
        load_session(root)
    assert [v.invariant for v in info.value.violations] == ["timestamps strictly increasing"]
    # skipping validation still loads
    assert load_session(root, validate=False)


def test_dangling_trace_file(bundle):
    _, root = bundle
    victim = next((root / "traces").glob("payload_*.csv"))
    victim.unlink()
    with pytest.raises(ParseError):
        load_session(root)


def test_attempts_and_transfers_optional(bundle):
    _, root = bundle
    (root / "attempts.csv").unlink()
    (root / "transfers.csv").unlink()
    s = load_session(root)
    assert s.attempts == () and s.transfer_cycles == ()


def test_append_transfer_row(tmp_path):
    out = tmp_path / "transfers.csv"
    append_transfer_row(out, TransferCycle("p1", "Master", 14.25))
    append_transfer_row(out, TransferCycle("p2", "Master", 15.5, frozenset({Fault.SOFTWARE_COMM})))
    assert out.read_text().splitlines() == [
        "participant_id,group,duration_s,fault_mech,fault_elec,fault_sw",
        "p1,Master,14.25,0,0,0",
        "p2,Master,15.5,0,0,1",
    ]


def test_write_is_stable(tmp_path, bundle):
    session, root = bundle
    again = write_session(session, tmp_path / "again")
    for f in sorted(p.relative_to(root) for p in root.rglob("*") if p.is_file()):
        assert (root / f).read_bytes() == (again / f).read_bytes()


def test_voltage_current_trace_round_trip(replica_dir, tmp_path):
    dst = tmp_path / "copy"
    shutil.copytree(replica_dir, dst)
    s = load_session(dst)
    tr = s.traces["energy_M600_01"]
    assert tr.values.shape[1] == 2
    np.testing.assert_array_equal(load_session(write_session(s, tmp_path / "w")).traces["energy_M600_01"].values, tr.values)


@pytest.mark.parametrize("bad,reason", [("nan", "non-finite"), ("1.2.3", "not a decimal"), ("", "missing")])
def test_bad_trace_sample_located(bundle, bad, reason):
    _, root = bundle
    path = next((root / "traces").glob("slip_*.csv"))
    lines = path.read_text().splitlines()
    t, _ = lines[4].split(",")
    lines[4] = f"{t},{bad}"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as info:
        load_session(root)
    assert (info.value.line, info.value.column) == (5, "tan_N")
    assert reason in info.value.reason


def test_ragged_trace_row(bundle):
    _, root = bundle
    path = next((root / "traces").glob("slip_*.csv"))
    lines = path.read_text().splitlines()
    lines[2] += ",7"
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(ParseError) as info:
        load_session(root)
    assert info.value.line == 3


# -- worked examples -----------------------------------------------------------


def _minimal(root, name="g"):
    root.mkdir()
    (root / "session.json").write_text(
        json.dumps({"schema_version": "cegb-1", "gripper_name": name, "platform_name": "arm"}), encoding="utf-8"
    )
    (root / "attempts.csv").write_text(
        "object_id,pose_index,attempt_index,t_grasp_cmd_s,t_lift5cm_s,hold_duration_s,slip,t_release_done_s,outcome_override\n"
        "mug,1,1,0.0,1.2,3.1,0,5.0,\n"
    )
    return root


def test_minimal_bundle(tmp_path):
    s = load_session(_minimal(tmp_path / "m"))
    assert len(s.attempts) == 1 and s.attempts[0].events.t_lift_5cm == 1.2


def test_voltage_current_header_maps_kind(tmp_path):
    root = _minimal(tmp_path / "m")
    doc = json.loads((root / "session.json").read_text())
    doc["traces"] = [{"id": "e1", "kind": "VoltageCurrent"}]
    (root / "session.json").write_text(json.dumps(doc))
    (root / "traces").mkdir()
    (root / "traces" / "e1.csv").write_text("t_s,u_V,i_A\n0.0,7.4,0.1\n0.01,7.4,0.2\n")
    tr = load_session(root).traces["e1"]
    assert tr.kind.value == "VoltageCurrent" and tr.values.shape == (2, 2)


def test_unbalanced_attempts_load_but_do_not_aggregate(tmp_path):
    from cegb.errors import UnbalancedAttempts
    from cegb.metrics import ycb_aggregate

    root = _minimal(tmp_path / "m")
    with open(root / "attempts.csv", "a") as fh:
        fh.write("mug,1,2,20.0,,,0,25.0,\nmug,2,1,40.0,,,0,45.0,\n")
    s = load_session(root)
    with pytest.raises(UnbalancedAttempts):
        ycb_aggregate(s.attempts)


def test_absent_transfers_not_emitted(tmp_path):
    s = load_session(_minimal(tmp_path / "m"))
    out = write_session(s, tmp_path / "w")
    assert not (out / "transfers.csv").exists()


def test_unicode_gripper_name(tmp_path):
    name = "Greifer für Äpfel – 把持器"
    s = load_session(_minimal(tmp_path / "m", name))
    assert s.manifest.gripper_name == name
    assert load_session(write_session(s, tmp_path / "w")).manifest.gripper_name == name
