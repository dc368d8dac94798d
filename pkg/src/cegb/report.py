"""Whole-session analysis and report emission (JSON and Markdown)."""

from __future__ import annotations

import json
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any

from . import __version__
from .errors import SchemaMismatch
from .metrics import (
    NistResult,
    cycle_time,
    energy_metrics,
    grasp_strength,
    iipb_metrics,
    slip_metrics,
    summarize_slip,
    transfer_summary,
    ycb_aggregate,
)
from .model import Session, TrialFamily, validate_session
from .signal import DEFAULT_PLATEAU, DEFAULT_SMOOTHING, SlipDetectorConfig
from .stats import BootstrapConfig

REPORT_SCHEMA = "cegb-report-1"
NOT_MEASURED = "not measured"
FAMILIES = ("ycb", "nist", "transfer", "energy", "iipb")


@dataclass(frozen=True)
class AnalysisConfig:
    seed: int = 42
    bootstrap: int = 2000
    confidence: float = 0.95
    slip: SlipDetectorConfig = field(default_factory=SlipDetectorConfig)
    plateau_window: float = DEFAULT_PLATEAU
    smoothing_window: float = DEFAULT_SMOOTHING
    t_hold_nominal: float | None = None

    @property
    def bootstrap_config(self) -> BootstrapConfig:
        return BootstrapConfig(self.bootstrap, self.confidence, self.seed)

    def echo(self) -> dict:
        d = asdict(self)
        d["slip"] = asdict(self.slip)
        return d


@dataclass
class Report:
    """Plain-data report; every field is JSON-compatible."""

    meta: dict
    ycb: dict | None = None
    nist: dict | None = None
    transfer: dict | None = None
    energy: dict | None = None
    iipb: dict | None = None
    violations: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, doc: dict) -> "Report":
        if not isinstance(doc, dict) or "meta" not in doc:
            raise SchemaMismatch("not a cegb report")
        schema = doc["meta"].get("schema")
        if schema != REPORT_SCHEMA:
            raise SchemaMismatch(f"report schema {schema!r}, expected {REPORT_SCHEMA!r}")
        return cls(**{k: doc.get(k) for k in ("meta", *FAMILIES)}, violations=doc.get("violations", []))

    @classmethod
    def from_json(cls, text: str) -> "Report":
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path) -> "Report":
        return cls.from_json(Path(path).read_text(encoding="utf-8"))

    @property
    def label(self) -> str:
        return f"{self.meta['gripper']} @ {self.meta['platform']}"


def _nist(session: Session, cfg: AnalysisConfig, boot: BootstrapConfig) -> dict | None:
    arts = session.artifacts
    cycles = defaultdict(list)
    for c in session.cycle_trials:
        cycles[c.artifact_id].append((c.t_start, c.t_stop))
    strength = defaultdict(list)
    for tr in session.trials_of(TrialFamily.STRENGTH):
        strength[tr.artifact_id].append([session.traces[t] for t in tr.trace_ids])
    slips = defaultdict(list)
    for tr in session.trials_of(TrialFamily.SLIP):
        slips[tr.artifact_id].append(
            slip_metrics(
                session.traces[tr.trace_ids[0]],
                tr.normals_sum,
                arts[tr.artifact_id],
                tr.applied_torque,
                cfg.slip,
            )
        )
    if not (cycles or strength or slips):
        return None

    def order(keys):
        return sorted(keys, key=lambda a: (arts[a].characteristic_dimension, a))

    res = NistResult(
        artifacts=dict(arts),
        cycle_time={a: cycle_time(cycles[a], boot.derive(f"cycle.{a}")) for a in order(cycles)},
        grasp_strength={
            a: grasp_strength(strength[a], boot.derive(f"strength.{a}"), cfg.plateau_window, cfg.smoothing_window)
            for a in order(strength)
        },
        slip={a: summarize_slip(slips[a], boot.derive(f"slip.{a}")) for a in order(slips)},
    )
    return res.to_dict()


def analyze_session(session: Session, cfg: AnalysisConfig | None = None) -> Report:
    """Compute every metric family the session has data for.

    Families without data are None in the report, never zero. Each family
    resamples from its own seed derived from ``cfg.seed``.
    """
    cfg = cfg or AnalysisConfig()
    boot = cfg.bootstrap_config
    man = session.manifest
    meta = {
        "schema": REPORT_SCHEMA,
        "tool_version": __version__,
        "session_schema": man.schema_version,
        "gripper": man.gripper_name,
        "platform": man.platform_name,
        "profile_code": man.gripper_profile.code if man.gripper_profile else None,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "conventions": {
            "quantile": "linear interpolation, h = (n - 1) q",
            "continuous": "median, IQR, percentile bootstrap CI of the median (PCG64)",
            "proportions": "Wilson score interval",
            "ycb_macro_ci": "percentile bootstrap over objects",
            "transfer_durations": "fault-free cycles only",
            "time_to_release": "t_release_done - (t_lift_5cm + hold_duration)",
        },
    }
    report = Report(meta=meta, violations=[str(v) for v in validate_session(session)])
    if session.attempts:
        report.ycb = ycb_aggregate(session.attempts, boot.derive("ycb")).to_dict()
    report.nist = _nist(session, cfg, boot.derive("nist"))
    if session.transfer_cycles:
        report.transfer = transfer_summary(session.transfer_cycles, boot.derive("transfer")).to_dict()
    energy = session.trials_of(TrialFamily.ENERGY)
    if energy:
        trials = [
            (session.traces[tr.trace_ids[0]], None, session.artifacts[tr.artifact_id].mass or None)
            for tr in energy
        ]
        report.energy = energy_metrics(trials, cfg.t_hold_nominal, boot.derive("energy")).to_dict()
    pulls = session.trials_of(TrialFamily.PAYLOAD)
    if pulls:
        report.iipb = iipb_metrics(
            [(session.traces[tr.trace_ids[0]], session.artifacts[tr.artifact_id]) for tr in pulls],
            man.gripper_profile,
            boot.derive("iipb"),
            cfg.slip,
        ).to_dict()
    return report


# -- Markdown ---------------------------------------------------------------

_GRIP_NAMES = {"P": "pinch", "W": "wrap"}


def _num(x, digits=2):
    if x is None:
        return "-"
    return f"{x:.{digits}f}"


def _ci(stat, digits=2):
    lo, hi = stat["ci95"]
    return f"[{lo:.{digits}f}, {hi:.{digits}f}]"


def _table(header, rows):
    lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
    lines += ["| " + " | ".join(str(c) for c in row) + " |" for row in rows]
    return "\n".join(lines)


def _stat_row(stat, digits=2):
    return [_num(stat["median"], digits), f"[{stat['q1']:.{digits}f}, {stat['q3']:.{digits}f}]", _ci(stat, digits)]


def to_markdown(report: Report) -> str:
    m = report.meta
    grip = _GRIP_NAMES.get((m.get("profile_code") or "--").split("-")[1], "-") if m.get("profile_code") else "-"
    out = [
        f"# Gripper benchmark report: {m['gripper']} on {m['platform']}",
        "",
        f"Tool {m['tool_version']}, seed {m['seed']}, bootstrap B = {m['config']['bootstrap']}, "
        f"confidence {m['config']['confidence']}. Continuous values: median, IQR, 95% bootstrap CI; "
        "proportions: Wilson score interval.",
    ]
    if report.violations:
        out += ["", "## Validation problems", ""] + [f"- {v}" for v in report.violations]

    y = report.ycb
    out += ["", "## YCB grasp success", ""]
    if y is None:
        out.append(NOT_MEASURED)
    else:
        cfg = y["config"]
        out.append(
            f"{cfg['objects']} objects, {cfg['attempts_per_pose']} attempts per pose, "
            f"poses per object: {', '.join(f'{k}={v}' for k, v in cfg['poses_per_object'].items())}."
        )
        out.append("")
        mi, ma = y["micro"], y["macro"]
        rows = [
            ["micro-average", f"{100 * mi['point']:.1f}%", f"[{100 * mi['wilson95'][0]:.2f}, {100 * mi['wilson95'][1]:.2f}]"],
            ["macro-average", f"{100 * ma['point']:.1f}%", f"[{100 * ma['ci95'][0]:.2f}, {100 * ma['ci95'][1]:.2f}]"],
        ]
        out.append(_table(["Statistic", "Success rate", "95% CI [%]"], rows))
        out.append("")
        rows = [[obj, f"{100 * s:.1f}%"] for obj, s in y["per_object"].items()]
        out.append(_table(["Object", "Success rate"], rows))
        for key, title in (("time_to_lift", "Time-to-lift [s]"), ("time_to_release", "Time-to-release [s]")):
            st = y[key]
            out += ["", f"{title}: " + (NOT_MEASURED if st is None else f"{_num(st['median'])} IQR [{st['q1']:.2f}, {st['q3']:.2f}] CI {_ci(st)}")]

    n = report.nist
    out += ["", "## NIST grasp cycle time", ""]
    if not n or not n["cycle_time"]:
        out.append(NOT_MEASURED)
    else:
        rows = [[f"{v['dimension_mm']:g}", grip, *_stat_row(v)] for v in n["cycle_time"].values()]
        out.append(_table(["Artifact [mm]", "Type", "Cycle time [s]", "IQR [s]", "95% CI [s]"], rows))
    out += ["", "## NIST grasp strength", ""]
    if not n or not n["grasp_strength"]:
        out.append(NOT_MEASURED)
    else:
        rows = [
            [f"{v['dimension_mm']:g} mm", grip, *_stat_row(v["F_total"]), _num(v["peak"]["median"])]
            for v in n["grasp_strength"].values()
        ]
        out.append(_table(["Artifact", "Grasp Type", "F_total [N]", "IQR [N]", "95% CI [N]", "Peak [N]"], rows))
    out += ["", "## NIST slip resistance", ""]
    if not n or not n["slip"]:
        out.append(NOT_MEASURED)
    else:
        rows = []
        for v in n["slip"].values():
            mu, q = v["mu_eff"], v["Q_hold"]
            rows.append(
                [
                    f"{v['dimension_mm']:g}",
                    grip,
                    *_stat_row(v["F_slip"]),
                    NOT_MEASURED if mu is None else _num(mu["median"], 3),
                    NOT_MEASURED if q is None else _num(q["median"], 3),
                ]
            )
        out.append(_table(["Artifact [mm]", "Grasp Type", "F_slip [N]", "IQR [N]", "95% CI [N]", "mu_eff", "Q_hold"], rows))

    t = report.transfer
    out += ["", "## Transfer time", ""]
    if t is None:
        out.append(NOT_MEASURED)
    else:
        rows = []
        for name, s in [("all", t["overall"]), *t["per_group"].items()]:
            st, sp = s["T_summary"], s["S_transfer"]
            rows.append(
                [
                    name,
                    sp["trials"],
                    _num(s["T_transfer_mean"]),
                    *(_stat_row(st) if st else ["-", "-", "-"]),
                    f"{sp['point']:.2f} [{sp['wilson95'][0]:.2f}, {sp['wilson95'][1]:.2f}]",
                ]
            )
        out.append(
            _table(["Group", "Cycles", "Mean [s]", "Median [s]", "IQR [s]", "95% CI [s]", "S_transfer [Wilson 95%]"], rows)
        )

    e = report.energy
    out += ["", "## Energy consumption", ""]
    if e is None:
        out.append(NOT_MEASURED)
    else:
        rows = [
            ["Grasping", *_stat_row(e["E_grasp"])],
            ["Holding", *_stat_row(e["E_hold"])],
            ["Holding 10s", *_stat_row(e["E_hold10_summary"])],
            ["Releasing", *_stat_row(e["E_release"])],
            ["Cycle", *_stat_row(e["E_cycle"])],
        ]
        out.append(_table(["Cycle phase", "Median [J]", "IQR [J]", "95% CI [J]"], rows))
        out.append("")
        out.append(f"E_hold10 = 10 x P_hold = {e['E_hold10']:.3f} J (P_hold = {e['P_hold_mean']:.4f} W).")
        if e["energy_to_weight_cycle"] is not None:
            out.append(
                f"Energy-to-weight: cycle {e['energy_to_weight_cycle']:.3e} J/g, "
                f"grasping {e['energy_to_weight_grasp']:.3e} J/g."
            )

    i = report.iipb
    out += ["", "## Intent-specific ideal payload", ""]
    if i is None:
        out.append(NOT_MEASURED)
    else:
        p = i["profile"]
        out.append(
            f"Profile {i['profile_code']} (compliance {p['compliance']}, grip {p['grip_type']}, "
            f"shape {p['ideal_shape']}, range {p['range_mm'][0]:g}-{p['range_mm'][1]:g} mm)."
        )
        out.append("")
        rows = [[f"{v['dimension_mm']:g}", *_stat_row(v["F_ideal"])] for v in i["per_artifact"].values()]
        out.append(_table(["Artifact [mm]", "Ideal Max Load [N]", "IQR [N]", "95% CI [N]"], rows))
    return "\n".join(out) + "\n"


# -- comparison -------------------------------------------------------------


def _flatten(prefix: str, obj: Any, out: dict):
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, (int, float)) and not isinstance(obj, bool):
        out[prefix] = obj


_COMPARE_FIELDS = ("median", "point", "T_transfer_mean", "E_hold10", "P_hold_mean", "energy_to_weight_cycle", "energy_to_weight_grasp")


def _headline(family: str, doc: dict | None) -> dict[str, float]:
    """Point values worth juxtaposing: medians, proportions and scalar results."""
    if doc is None:
        return {}
    flat: dict[str, float] = {}
    _flatten("", doc, flat)
    keep = {}
    for key, val in flat.items():
        last = key.rsplit(".", 1)[-1]
        if last in _COMPARE_FIELDS and ".per_pose." not in f".{key}":
            keep[key] = val
    return keep


def compare_reports(reports: list[Report]) -> dict:
    """Side-by-side point values per family, with deltas against the first report."""
    if len(reports) < 2:
        raise ValueError("comparison needs at least two reports")
    schemas = {r.meta.get("schema") for r in reports}
    if len(schemas) != 1:
        raise SchemaMismatch(f"reports use different schemas: {sorted(map(str, schemas))}")
    columns = [r.label for r in reports]
    families = {}
    for fam in FAMILIES:
        per = [_headline(fam, getattr(r, fam)) for r in reports]
        keys = []
        for p in per:
            keys += [k for k in p if k not in keys]
        rows = []
        for k in keys:
            vals = [p.get(k) for p in per]
            base = vals[0]
            deltas = [None if v is None or base is None else v - base for v in vals[1:]]
            rows.append({"metric": k, "values": vals, "deltas": deltas})
        families[fam] = {
            "measured": [getattr(r, fam) is not None for r in reports],
            "rows": rows,
        }
    return {"schema": "cegb-compare-1", "columns": columns, "families": families}


def comparison_markdown(comp: dict) -> str:
    cols = comp["columns"]
    out = ["# Gripper comparison", ""]
    for fam, body in comp["families"].items():
        out += [f"## {fam}", ""]
        if not any(body["measured"]):
            out += [NOT_MEASURED, ""]
            continue
        header = ["Metric", *cols, *(f"delta {c}" for c in cols[1:])]
        rows = []
        for r in body["rows"]:
            vals = [
                NOT_MEASURED if v is None or not body["measured"][j] else f"{v:.4g}" for j, v in enumerate(r["values"])
            ]
            deltas = ["-" if d is None else f"{d:+.4g}" for d in r["deltas"]]
            rows.append([r["metric"], *vals, *deltas])
        out += [_table(header, rows), ""]
    return "\n".join(out)
