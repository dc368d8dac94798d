"""
Reference gripper report from a synthetic replica
==================================================

Build a session bundle that mirrors a published reference gripper, load it
back from disk and render the full report.
"""

import tempfile
from pathlib import Path

from cegb import AnalysisConfig, analyze_session, load_session
from cegb.report import to_markdown
from cegb.synth import gen_paper_replica

# %%
# The replica is written as an ordinary bundle: a JSON manifest, CSV logs
# and a ground_truth.json with the values it was built from.
workdir = Path(tempfile.mkdtemp(prefix="cegb-demo-"))
bundle = gen_paper_replica(seed=42, path=workdir / "replica")
print(sorted(p.name for p in bundle.root_path.iterdir()))

# %%
# Loading validates every invariant before any metric is computed.
session = load_session(bundle.root_path)
print(len(session.attempts), "YCB attempts,", len(session.traces), "traces")

# %%
# One call runs every metric family the session has data for.
report = analyze_session(session, AnalysisConfig(seed=42))
print(to_markdown(report))
