"""Synthetic sessions with known ground truth.

Every generator is a pure function of its arguments and seed (numpy PCG64).
Ground truth is stored next to a written bundle as ``ground_truth.json``.

Generated signals follow a few construction rules that keep zero-noise
recovery exact:

* slip and pull ramps dwell at their peak for ``dwell`` seconds before the
  drop, so the smoothed maximum equals the true peak;
* power traces are piecewise constant with phase boundaries on sample
  instants, padded by idle stretches at the holding power level. The
  trapezoid rule is then off by at most ``|dP| * dt / 2`` per boundary
  (:func:`trapezoid_edge_bound`).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .ingest import write_session
from .model import (
    SCHEMA_VERSION,
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
    Phase,
    PhaseMark,
    SampledTrace,
    Session,
    Shape,
    TraceKind,
    TransferCycle,
    TrialFamily,
    TrialRecord,
)

GROUND_TRUTH = "ground_truth.json"

GROUND_TRUTH_SCHEMA = {
    "type": "object",
    "required": ["seed"],
    "additionalProperties": False,
    "properties": {
        "seed": {"type": "integer", "minimum": 0},
        "ycb": {
            "type": ["object", "null"],
            "required": ["successes", "trials", "micro", "macro", "per_object"],
            "properties": {
                "successes": {"type": "integer"},
                "trials": {"type": "integer"},
                "micro": {"type": "number"},
                "macro": {"type": "number"},
                "per_object": {"type": "object", "additionalProperties": {"type": "number"}},
            },
        },
        "cycle_time": {"$ref": "#/$defs/by_key"},
        "strength": {"$ref": "#/$defs/by_key"},
        "slip": {"$ref": "#/$defs/by_key"},
        "payload": {"$ref": "#/$defs/by_key"},
        "transfer": {"$ref": "#/$defs/by_key"},
        "energy": {
            "type": ["object", "null"],
            "properties": {
                k: {"type": "number"} for k in ("E_grasp", "E_hold", "E_release", "E_cycle", "E_hold10")
            },
        },
        "profile_code": {"type": ["string", "null"]},
    },
    "$defs": {
        "by_key": {"type": ["object", "null"], "additionalProperties": {"type": "number"}},
    },
}


@dataclass
class GroundTruth:
    """True values behind a generated session.

    Dict-valued families map artifact id (or transfer group) to the true
    median of the per-trial values.
    """

    seed: int
    ycb: dict | None = None
    cycle_time: dict | None = None
    strength: dict | None = None
    slip: dict | None = None
    payload: dict | None = None
    transfer: dict | None = None
    energy: dict | None = None
    profile_code: str | None = None

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, doc: dict) -> "GroundTruth":
        jsonschema.validate(doc, GROUND_TRUTH_SCHEMA)
        return cls(**doc)

    def write(self, root) -> Path:
        doc = self.to_dict()
        jsonschema.validate(doc, GROUND_TRUTH_SCHEMA)
        path = Path(root) / GROUND_TRUTH
        path.write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        return path

    @classmethod
    def load(cls, root) -> "GroundTruth":
        return cls.from_dict(json.loads((Path(root) / GROUND_TRUTH).read_text(encoding="utf-8")))

    def merge(self, other: "GroundTruth") -> "GroundTruth":
        mine = self.to_dict()
        for k, v in other.to_dict().items():
            if k != "seed" and v is not None:
                mine[k] = v
        return GroundTruth(**mine)


@dataclass(frozen=True)
class SessionBundle:
    root_path: Path
    manifest_file: str = "session.json"
    attempts_file: str = "attempts.csv"
    transfers_file: str | None = "transfers.csv"
    trace_files: str = "traces/*.csv"


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _median(values) -> float:
    return float(np.median(values))


# -- YCB --------------------------------------------------------------------


def _attempt_events(rng: np.random.Generator, success: bool, t0: float) -> AttemptEvents:
    if success:
        lift = t0 + rng.uniform(0.5, 2.9)
        hold = rng.uniform(3.0, 3.5)
        return AttemptEvents(t0, lift, hold, False, lift + hold + rng.uniform(0.3, 1.0))
    mode = rng.integers(4)
    if mode == 0:  # never lifted
        return AttemptEvents(t0, None, None, False, t0 + rng.uniform(3.0, 9.0))
    if mode == 1:  # lifted too late
        lift = t0 + rng.uniform(3.1, 5.0)
        return AttemptEvents(t0, lift, 3.2, False, lift + 3.5)
    if mode == 2:  # dropped early
        lift = t0 + rng.uniform(0.5, 2.9)
        hold = rng.uniform(0.2, 2.8)
        return AttemptEvents(t0, lift, hold, False, lift + hold + 0.5)
    lift = t0 + rng.uniform(0.5, 2.9)  # slipped while held
    return AttemptEvents(t0, lift, 3.1, True, lift + 3.6)


def gen_ycb(p_table: dict, a: int, seed: int, k: int | None = None):
    """YCB attempts with Bernoulli outcomes.

    ``p_table`` maps ``(object_id, pose_index)`` to a success probability.
    ``k`` is only checked: every object must have exactly ``k`` poses when
    given. Returns ``(Session, GroundTruth)``; the ground truth holds the
    generated counts, so micro and macro are exact functions of the data.
    """
    for key, p in p_table.items():
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"probability {p} for {key} outside [0, 1]")
    if k is not None:
        poses = {}
        for obj, _ in p_table:
            poses[obj] = poses.get(obj, 0) + 1
        if any(n != k for n in poses.values()):
            raise ValueError(f"every object needs {k} poses")
    rng = _rng(seed)
    attempts = []
    counts: dict[str, list[int]] = {}
    t = 0.0
    for (obj, pose), p in sorted(p_table.items()):
        g = 0
        for i in range(1, a + 1):
            ok = bool(rng.random() < p)
            g += ok
            attempts.append(GraspAttempt(obj, pose, i, _attempt_events(rng, ok, t)))
            t += 15.0
        counts.setdefault(obj, []).append(g)
    per_object = {obj: float(np.mean([g / a for g in gs])) for obj, gs in counts.items()}
    total = sum(sum(gs) for gs in counts.values())
    n = a * len(p_table)
    session = Session(
        manifest=Manifest(SCHEMA_VERSION, "synthetic gripper", "synthetic platform"),
        attempts=tuple(attempts),
    )
    truth = GroundTruth(
        seed=int(seed),
        ycb={
            "successes": total,
            "trials": n,
            "micro": total / n,
            "macro": float(np.mean(list(per_object.values()))),
            "per_object": per_object,
        },
    )
    return session, truth


# -- energy -------------------------------------------------------------------


def trapezoid_edge_bound(levels, rate: float) -> float:
    """Worst-case trapezoid error (J) for a piecewise-constant power profile.

    ``levels`` are the successive constant power levels (W); each jump of
    ``dP`` costs at most ``|dP| / (2 * rate)`` joules in the phase it ends.
    """
    levels = np.asarray(levels, dtype=float)
    return float(np.sum(np.abs(np.diff(levels)))) / (2 * rate)


def gen_energy(
    phase_powers,
    durations,
    noise_sd: float = 0.0,
    rate: float = 100.0,
    seed: int = 0,
    lead: float = 0.5,
    idle_power: float | None = None,
    voltage: float | None = None,
):
    """Piecewise-constant grasp/hold/release power trace with noise.

    Returns ``(trace, phases, GroundTruth)``. The trace is padded with
    ``lead`` seconds of idle power (default: the holding level) on both
    ends. With ``voltage`` set, a voltage/current trace with constant
    voltage is produced instead of a power trace. Ground-truth energies are
    power times duration for each phase.
    """
    pg, ph, pr = map(float, phase_powers)
    dg, dh, dr = map(float, durations)
    if min(dg, dh, dr) <= 0:
        raise ValueError("phase durations must be positive")
    if rate < 10:
        raise ValueError("sampling rate must be at least 10 Hz")
    idle = ph if idle_power is None else float(idle_power)
    counts = [int(round(x * rate)) for x in (lead, dg, dh, dr, lead)]
    levels = [idle, pg, ph, pr, idle]
    n = sum(counts) + 1
    t = np.arange(n) / rate
    p = np.concatenate([np.full(c, lv) for c, lv in zip(counts, levels)] + [[idle]])
    if noise_sd > 0:
        p = p + _rng(seed).normal(0.0, noise_sd, size=n)
    edges = np.cumsum([0] + counts) / rate
    phases = (
        PhaseMark(Phase.GRASP, float(edges[1]), float(edges[2])),
        PhaseMark(Phase.HOLD, float(edges[2]), float(edges[3])),
        PhaseMark(Phase.RELEASE, float(edges[3]), float(edges[4])),
    )
    if voltage is None:
        trace = SampledTrace(TraceKind.POWER, t, p, phases)
    else:
        trace = SampledTrace(TraceKind.VOLTAGE_CURRENT, t, np.column_stack([np.full(n, voltage), p / voltage]), phases)
    dg, dh, dr = (counts[i] / rate for i in (1, 2, 3))
    e = {"E_grasp": pg * dg, "E_hold": ph * dh, "E_release": pr * dr}
    e["E_cycle"] = e["E_grasp"] + e["E_hold"] + e["E_release"]
    e["E_hold10"] = 10.0 * ph
    return trace, phases, GroundTruth(seed=int(seed), energy=e)


# -- slip / pull ------------------------------------------------------------


def force_ramp(
    F_true: float,
    ramp_rate: float,
    post_drop_level: float | None,
    noise_sd: float = 0.0,
    rate: float = 100.0,
    seed: int = 0,
    dwell: float = 0.1,
    after: float = 1.0,
    kind: TraceKind = TraceKind.TANGENTIAL,
) -> SampledTrace:
    """Linear ramp from zero to ``F_true``, a short dwell, then a drop.

    ``post_drop_level`` is the fraction of ``F_true`` held for ``after``
    seconds once slip occurs; ``None`` ends the trace at the peak (the test
    stopped at its safety limit).
    """
    if not F_true > 0 or not ramp_rate > 0:
        raise ValueError("F_true and ramp_rate must be positive")
    dt = 1.0 / rate
    n_ramp = int(np.ceil(F_true / ramp_rate * rate))
    ramp = F_true * np.arange(n_ramp + 1) / n_ramp
    parts = [ramp, np.full(int(round(dwell * rate)), F_true)]
    if post_drop_level is not None:
        parts.append(np.full(int(round(after * rate)), post_drop_level * F_true))
    f = np.concatenate(parts)
    if noise_sd > 0:
        f = f + _rng(seed).normal(0.0, noise_sd, size=f.size)
    return SampledTrace(kind, np.arange(f.size) * dt, f)


def gen_slip(
    F_true: float,
    ramp_rate: float = 2.0,
    post_drop_level: float | None = 0.4,
    noise_sd: float = 0.0,
    rate: float = 100.0,
    seed: int = 0,
    dwell: float = 0.1,
):
    """Tangential-load ramp to slip at ``F_true``; returns ``(trace, GroundTruth)``."""
    trace = force_ramp(F_true, ramp_rate, post_drop_level, noise_sd, rate, seed, dwell)
    return trace, GroundTruth(seed=int(seed), slip={"F_slip": float(F_true)})


def strength_trace(
    F_plateau: float,
    overshoot: float = 1.2,
    duration: float = 3.0,
    rate: float = 100.0,
    noise_sd: float = 0.0,
    seed: int = 0,
) -> SampledTrace:
    """Grasp-force trace: rise to an overshoot, hold briefly, settle to a plateau."""
    t = np.arange(int(round(duration * rate)) + 1) / rate
    peak = overshoot * F_plateau
    f = np.interp(t, [0.0, 0.3, 0.45, 0.8, duration], [0.0, peak, peak, F_plateau, F_plateau])
    if noise_sd > 0:
        f = f + _rng(seed).normal(0.0, noise_sd, size=t.size)
    return SampledTrace(TraceKind.FORCE, t, f)


# -- transfer ---------------------------------------------------------------

_FAULT_ORDER = (Fault.MECHANICAL_MISALIGNMENT, Fault.ELECTRICAL_CONNECTOR, Fault.SOFTWARE_COMM)


def gen_transfer(group_params: dict, fault_rate: float = 0.0, seed: int = 0):
    """Transfer cycles per group; durations are normal, truncated at zero.

    ``group_params`` maps group name to ``(mean_s, sd_s, n_cycles)``.
    Returns ``(cycles, GroundTruth)`` with the true group means.
    """
    rng = _rng(seed)
    cycles = []
    for group, (mean, sd, n) in group_params.items():
        if not mean > 0 or sd < 0:
            raise ValueError(f"group {group}: need mean > 0 and sd >= 0")
        for i in range(int(n)):
            d = 0.0
            while not d > 0:
                d = float(mean) if sd == 0 else float(rng.normal(mean, sd))
            faults = frozenset(f for f in _FAULT_ORDER if rng.random() < fault_rate / len(_FAULT_ORDER))
            cycles.append(TransferCycle(f"{group}-{i + 1:02d}", group, d, faults))
    truth = GroundTruth(seed=int(seed), transfer={g: float(p[0]) for g, p in group_params.items()})
    return tuple(cycles), truth


# -- composite bundles ---------------------------------------------------------


def _centered(rng: np.random.Generator, target: float, sd: float, n: int) -> np.ndarray:
    """``n`` values mirrored around ``target``: their mean and median are ``target``."""
    half = np.abs(rng.normal(0.0, sd, size=n // 2))
    vals = np.concatenate([target - half, target + half, [target] * (n % 2)])
    return np.sort(vals)


@dataclass
class _Builder:
    rng: np.random.Generator
    artifacts: dict = field(default_factory=dict)
    traces: dict = field(default_factory=dict)
    trials: list = field(default_factory=list)
    cycle_trials: list = field(default_factory=list)

    def artifact(self, aid, shape, dim, mass=0.0, coating=None):
        self.artifacts[aid] = ArtifactSpec(aid, shape, float(dim), float(mass), coating)

    def trial(self, family, aid, idx, traces, normals_sum=None):
        ids = []
        for j, tr in enumerate(traces):
            tid = f"{family.value}_{aid}_{idx:02d}" + (f"_f{j + 1}" if len(traces) > 1 else "")
            self.traces[tid] = tr
            ids.append(tid)
        self.trials.append(TrialRecord(family, aid, idx, tuple(ids), normals_sum))


REFERENCE_GROUP_TIMES = {"Bachelor": 16.1, "Master": 14.2, "UntrainedColleague": 22.8, "Experienced": 17.6}
REFERENCE_GROUP_SIZES = {"Bachelor": 12, "Master": 11, "UntrainedColleague": 12, "Experienced": 10}


def build_reference_replica(seed: int = 42) -> tuple[Session, GroundTruth]:
    """In-memory session mirroring the reference gripper's published results."""
    rng = _rng(seed)
    b = _Builder(rng)
    for dim in (32, 50, 75, 80, 100):
        b.artifact(f"C{dim}", Shape.CYLINDER, dim)
    for dim in (50, 75, 100):
        b.artifact(f"B{dim}", Shape.BOX, dim, coating="PVC")
    b.artifact("M600", Shape.BOX, 75, mass=600.0)

    cycle_targets = {"C50": (3.91, 0.03), "C80": (3.23, 0.05)}
    t = 0.0
    for aid, (target, sd) in cycle_targets.items():
        for d in _centered(rng, target, sd, 32):
            b.cycle_trials.append(CycleTrial(aid, round(t, 3), round(t, 3) + float(d)))
            t += 10.0

    strength_targets = {"C50": (9.79, 0.03), "C80": (8.18, 0.03)}
    for aid, (target, sd) in strength_targets.items():
        for i, f in enumerate(_centered(rng, target, sd, 10), start=1):
            finger = strength_trace(f / 2)
            b.trial(TrialFamily.STRENGTH, aid, i, [finger, finger])

    slip_targets = {"C32": (6.28, 0.1), "C50": (5.78, 0.08), "C75": (6.24, 0.15), "C100": (3.75, 0.07)}
    for aid, (target, sd) in slip_targets.items():
        normals = strength_targets.get(aid, (None,))[0]
        for i, f in enumerate(_centered(rng, target, sd, 10), start=1):
            trace = force_ramp(float(f), 2.0, 0.4, kind=TraceKind.TANGENTIAL)
            b.trial(TrialFamily.SLIP, aid, i, [trace], normals_sum=normals)

    payload_targets = {"B50": (11.37, 0.3), "B75": (11.99, 0.35), "B100": (7.67, 0.4)}
    for aid, (target, sd) in payload_targets.items():
        detach = None if aid == "B100" else 0.0
        for i, f in enumerate(_centered(rng, target, sd, 10), start=1):
            trace = force_ramp(float(f), 2.0, detach, kind=TraceKind.PULL)
            b.trial(TrialFamily.PAYLOAD, aid, i, [trace])

    energy_truth = []
    grasp = _centered(rng, 1.295, 0.015, 10)
    release = _centered(rng, 0.955, 0.005, 10)
    for i in range(10):
        trace, _, gt = gen_energy((grasp[i], 0.15, release[i]), (2.0, 10.0, 2.0), rate=100.0, voltage=7.4)
        b.trial(TrialFamily.ENERGY, "M600", i + 1, [trace])
        energy_truth.append(gt.energy)

    transfer = []
    for g, target in REFERENCE_GROUP_TIMES.items():
        durations = _centered(rng, target, 0.12 * target, 5 * REFERENCE_GROUP_SIZES[g])
        rng.shuffle(durations)
        for j, d in enumerate(durations):
            transfer.append(TransferCycle(f"{g}-{j // 5 + 1:02d}", g, float(d)))

    p_table = {}
    for o in range(1, 11):
        base = (0.9, 0.7, 0.6, 0.4, 0.35, 0.3, 0.2, 0.1, 0.02, 0.8)[o - 1]
        for j in (1, 2, 3):
            p_table[(f"ycb{o:02d}", j)] = base
    ycb_session, ycb_truth = gen_ycb(p_table, a=5, seed=int(rng.integers(2**63)), k=3)

    profile = GripperProfile(Compliance.TWO_AXIS, GripType.PINCH, IdealShape.BOX, (40.0, 100.0))
    session = Session(
        manifest=Manifest(
            SCHEMA_VERSION,
            "reference self-locking gripper (replica)",
            "industrial manipulator",
            profile,
            "synthetic replica of published reference-gripper results",
        ),
        attempts=ycb_session.attempts,
        transfer_cycles=tuple(transfer),
        traces=b.traces,
        artifacts=b.artifacts,
        cycle_trials=tuple(b.cycle_trials),
        trials=tuple(b.trials),
    )
    e_keys = ("E_grasp", "E_hold", "E_release", "E_cycle", "E_hold10")
    truth = GroundTruth(
        seed=int(seed),
        ycb=ycb_truth.ycb,
        cycle_time={k: v[0] for k, v in cycle_targets.items()},
        strength={k: v[0] for k, v in strength_targets.items()},
        slip={k: v[0] for k, v in slip_targets.items()},
        payload={k: v[0] for k, v in payload_targets.items()},
        transfer=dict(REFERENCE_GROUP_TIMES),
        energy={k: _median([e[k] for e in energy_truth]) for k in e_keys},
        profile_code=profile.code,
    )
    return session, truth


def gen_paper_replica(seed: int = 42, path=None) -> SessionBundle:
    """Write the replica bundle (plus ground truth) to ``path``."""
    if path is None:
        raise ValueError("gen_paper_replica needs an output directory")
    session, truth = build_reference_replica(seed)
    root = write_session(session, path)
    truth.write(root)
    return SessionBundle(Path(root))


def build_random_session(seed: int, noise: bool = False, energy_rate: float = 1000.0):
    """Random full-family session used as an oracle; zero noise by default.

    Per-trial true values are drawn from wide ranges; with ``noise=False``
    the analysis should recover every family up to integration error.
    """
    rng = _rng(seed)
    b = _Builder(rng)
    sd = 0.05 if noise else 0.0

    def sub():
        return int(rng.integers(2**63))

    n_obj = int(rng.integers(2, 5))
    p_table = {}
    for o in range(n_obj):
        for j in range(1, int(rng.integers(1, 4)) + 1):
            p_table[(f"obj{o}", j)] = float(rng.uniform(0, 1))
    ycb_session, ycb_truth = gen_ycb(p_table, a=int(rng.integers(2, 7)), seed=sub())

    truth = GroundTruth(seed=int(seed), ycb=ycb_truth.ycb, cycle_time={}, strength={}, slip={}, payload={})
    for dim in rng.choice([32, 50, 75, 100], size=2, replace=False):
        aid = f"C{dim}"
        b.artifact(aid, Shape.CYLINDER, dim)
        cyc = rng.uniform(1.5, 6.0, size=5)
        for i, d in enumerate(cyc):
            b.cycle_trials.append(CycleTrial(aid, 20.0 * i, 20.0 * i + float(d)))
        truth.cycle_time[aid] = _median(cyc)

        forces = rng.uniform(2.0, 20.0, size=3)
        for i, f in enumerate(forces, start=1):
            fingers = [strength_trace(f / 2, float(rng.uniform(1.0, 1.5)), noise_sd=sd, seed=sub()) for _ in range(2)]
            b.trial(TrialFamily.STRENGTH, aid, i, fingers)
        truth.strength[aid] = _median(forces)

        slips = rng.uniform(1.0, 12.0, size=3)
        for i, f in enumerate(slips, start=1):
            tr = force_ramp(float(f), float(rng.uniform(0.5, 4.0)), float(rng.uniform(0.1, 0.6)), sd, seed=sub())
            b.trial(TrialFamily.SLIP, aid, i, [tr], normals_sum=float(rng.uniform(5, 30)))
        truth.slip[aid] = _median(slips)

        bid = f"B{dim}"
        b.artifact(bid, Shape.BOX, dim)
        pulls = rng.uniform(1.0, 20.0, size=3)
        for i, f in enumerate(pulls, start=1):
            drop = None if rng.random() < 0.3 else float(rng.uniform(0.0, 0.5))
            tr = force_ramp(float(f), float(rng.uniform(0.5, 4.0)), drop, sd, seed=sub(), kind=TraceKind.PULL)
            b.trial(TrialFamily.PAYLOAD, bid, i, [tr])
        truth.payload[bid] = _median(pulls)

    mass = float(rng.uniform(100, 1000))
    b.artifact("M", Shape.BOX, 60, mass=mass)
    e_list = []
    for i in range(3):
        powers = (rng.uniform(0.8, 1.5), rng.uniform(0.1, 0.3), rng.uniform(0.8, 1.5))
        durs = (rng.uniform(1.5, 3.0), 10.0, rng.uniform(1.5, 3.0))
        trace, _, gt = gen_energy(powers, durs, 0.02 if noise else 0.0, energy_rate, sub())
        b.trial(TrialFamily.ENERGY, "M", i + 1, [trace])
        e_list.append(gt.energy)
    truth.energy = {k: _median([e[k] for e in e_list]) for k in e_list[0]}

    groups = {g: (float(rng.uniform(8, 30)), 0.0 if not noise else 2.0, int(rng.integers(2, 6))) for g in REFERENCE_GROUP_TIMES}
    cycles, ttruth = gen_transfer(groups, 0.0, sub())
    truth.transfer = ttruth.transfer

    profile = GripperProfile(
        Compliance(rng.choice([c.value for c in Compliance])),
        GripType(rng.choice([g.value for g in GripType])),
        IdealShape(rng.choice([s.value for s in IdealShape])),
        (20.0, 120.0),
    )
    truth.profile_code = profile.code
    session = Session(
        manifest=Manifest(SCHEMA_VERSION, f"synthetic gripper {seed}", "synthetic platform", profile),
        attempts=ycb_session.attempts,
        transfer_cycles=cycles,
        traces=b.traces,
        artifacts=b.artifacts,
        cycle_trials=tuple(b.cycle_trials),
        trials=tuple(b.trials),
    )
    return session, truth


def gen_bundle(seed: int, path, noise: bool = False) -> SessionBundle:
    session, truth = build_random_session(seed, noise)
    root = write_session(session, path)
    truth.write(root)
    return SessionBundle(Path(root))
