import numpy as np
import pytest

from cegb.model import SCHEMA_VERSION, Manifest, SampledTrace, Session, TraceKind
from cegb.synth import gen_paper_replica


def uniform_trace(values, rate=100.0, kind=TraceKind.FORCE, t0=0.0):
    values = np.asarray(values, dtype=float)
    return SampledTrace(kind, t0 + np.arange(len(values)) / rate, values)


def bare_session(**kw):
    return Session(manifest=Manifest(SCHEMA_VERSION, "test gripper", "test platform"), **kw)


@pytest.fixture(scope="session")
def replica_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("replica")
    return gen_paper_replica(42, root).root_path


# -- acceptance summary --------------------------------------------------------

_CRITERIA: dict[int, dict] = {}


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("acceptance")
    if mark is None or call.when != "call":
        return
    num, title = mark.args
    entry = _CRITERIA.setdefault(num, {"title": title, "passed": 0, "failed": []})
    if call.excinfo is None:
        entry["passed"] += 1
    else:
        entry["failed"].append(item.callspec.id if hasattr(item, "callspec") else item.name)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_CRITERIA):
        e = _CRITERIA[num]
        total = e["passed"] + len(e["failed"])
        status = "PASS" if not e["failed"] else "FAIL"
        line = f"criterion {num} ({e['title']}): {status} [{e['passed']}/{total} checks]"
        if e["failed"]:
            line += " failing: " + ", ".join(e["failed"])
        terminalreporter.write_line(line)
