"""
Comparing two grippers
======================

Reports are juxtaposed side by side; families one gripper lacks are shown
as not measured.
"""

import tempfile
from pathlib import Path

from cegb import AnalysisConfig, analyze_session, load_session
from cegb.report import compare_reports, comparison_markdown
from cegb.synth import gen_bundle, gen_paper_replica

workdir = Path(tempfile.mkdtemp(prefix="cegb-compare-"))
cfg = AnalysisConfig(seed=42, bootstrap=500)

reference = analyze_session(load_session(gen_paper_replica(42, workdir / "ref").root_path), cfg)
candidate = analyze_session(load_session(gen_bundle(7, workdir / "cand").root_path), cfg)

# Drop the candidate's YCB results to show how gaps are rendered.
candidate.ycb = None

print(comparison_markdown(compare_reports([reference, candidate])))
