"""``cegb`` command-line front end.

Exit codes: 0 success, 1 validation or input failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

from .errors import CegbError, PhaseInferenceFailed, SchemaMismatch, UnknownTrace
from .ingest import InvalidSession, append_transfer_row, fmt, load_session
from .model import KNOWN_GROUPS, Fault, TransferCycle, validate_session
from .report import AnalysisConfig, Report, analyze_session, compare_reports, comparison_markdown, to_markdown
from .signal import moving_average, segment_phases
from .synth import gen_bundle, gen_paper_replica

log = logging.getLogger("cegb")

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2
DEFAULT_SEED = 42


def resolve_seed(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("CEGB_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise SystemExit(f"cegb: CEGB_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_validate(args) -> int:
    try:
        session = load_session(args.session_dir, validate=False)
    except CegbError as exc:
        print(f"cegb: {exc}", file=sys.stderr)
        return EXIT_INVALID
    problems = validate_session(session)
    for v in problems:
        print(v)
    if not problems:
        print(f"{args.session_dir}: ok")
    return EXIT_INVALID if problems else EXIT_OK


def cmd_analyze(args) -> int:
    try:
        session = load_session(args.session_dir)
        cfg = AnalysisConfig(seed=resolve_seed(args.seed), bootstrap=args.bootstrap)
        report = analyze_session(session, cfg)
    except InvalidSession as exc:
        for v in exc.violations:
            print(f"cegb: {v}", file=sys.stderr)
        return EXIT_INVALID
    except CegbError as exc:
        print(f"cegb: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(report.to_json() if args.format == "json" else to_markdown(report), args.out)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        report = Report.load(args.report)
    except (OSError, json.JSONDecodeError, SchemaMismatch) as exc:
        print(f"cegb: {exc}", file=sys.stderr)
        return EXIT_INVALID
    _emit(report.to_json() if args.format == "json" else to_markdown(report), args.out)
    return EXIT_OK


def cmd_compare(args) -> int:
    if len(args.reports) < 2:
        print("cegb: compare needs at least two reports", file=sys.stderr)
        return EXIT_USAGE
    try:
        comp = compare_reports([Report.load(p) for p in args.reports])
    except (OSError, json.JSONDecodeError, SchemaMismatch) as exc:
        print(f"cegb: {exc}", file=sys.stderr)
        return EXIT_INVALID
    text = json.dumps(comp, indent=2, ensure_ascii=False) + "\n" if args.format == "json" else comparison_markdown(comp)
    _emit(text, args.out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = resolve_seed(args.seed)
    if args.replica:
        bundle = gen_paper_replica(seed, args.out)
    else:
        bundle = gen_bundle(seed, args.out, noise=args.noise)
    print(bundle.root_path)
    return EXIT_OK


_FAULT_KEYS = {
    "m": Fault.MECHANICAL_MISALIGNMENT,
    "e": Fault.ELECTRICAL_CONNECTOR,
    "s": Fault.SOFTWARE_COMM,
}


def run_timer(group, participant, out, lines=None, clock=time.monotonic, say=None) -> TransferCycle | None:
    """Time one attach/detach cycle from line-based key presses.

    Enter starts the clock; while running, ``m``/``e``/``s`` toggle the
    mechanical, electrical and software fault flags, Enter stops and ``q``
    aborts without writing. The finished cycle is appended to ``out``.
    """
    lines = iter(lines if lines is not None else sys.stdin)
    say = say or (lambda msg: print(msg, file=sys.stderr))

    def key():
        try:
            return next(lines).strip().lower()
        except StopIteration:
            return "q"

    say("Enter: start timing, q: abort")
    if key() == "q":
        say("aborted")
        return None
    start = clock()
    faults: set[Fault] = set()
    say("timing... m/e/s: toggle fault, Enter: stop, q: abort")
    while True:
        k = key()
        if k == "":
            stop = clock()
            break
        if k == "q":
            say("aborted")
            return None
        if k in _FAULT_KEYS:
            faults ^= {_FAULT_KEYS[k]}
            say("faults: " + (", ".join(sorted(f.value for f in faults)) or "none"))
    cycle = TransferCycle(participant, group, round(stop - start, 3), frozenset(faults))
    append_transfer_row(out, cycle)
    say(f"{participant} ({group}): {cycle.duration:.3f} s")
    return cycle


def cmd_timer(args) -> int:
    if args.group not in KNOWN_GROUPS:
        log.warning("group %r is not one of %s; recording as free-form", args.group, ", ".join(KNOWN_GROUPS))
    try:
        run_timer(args.group, args.participant, args.out)
    except OSError as exc:
        print(f"cegb: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


def phase_labels(t, marks) -> list[str]:
    labels = []
    last = marks[-1] if marks else None
    for ti in t:
        name = "idle"
        for m in marks:
            if m.t_start <= ti < m.t_end or (m is last and ti == m.t_end):
                name = m.phase.value
                break
        labels.append(name)
    return labels


def cmd_plotdata(args) -> int:
    try:
        session = load_session(args.session_dir)
        if args.trace_id not in session.traces:
            raise UnknownTrace(f"no trace {args.trace_id!r} in {args.session_dir}")
    except CegbError as exc:
        print(f"cegb: {exc}", file=sys.stderr)
        return EXIT_INVALID
    trace = session.traces[args.trace_id]
    if not trace.kind.is_power:
        print(f"cegb: trace {args.trace_id!r} is {trace.kind.value}, not a power trace", file=sys.stderr)
        return EXIT_INVALID
    p = trace.power
    smooth = moving_average(trace.t, p, args.window)
    try:
        labels = phase_labels(trace.t, segment_phases(trace))
    except PhaseInferenceFailed as exc:
        log.warning("phase inference failed (%s); phase column set to 'unknown'", exc)
        labels = ["unknown"] * len(trace)
    rows = ([fmt(t), fmt(a), fmt(b), lab] for t, a, b, lab in zip(trace.t, p, smooth, labels))
    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_s", "p_W_raw", "p_W_smooth", "phase"])
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def _common(default_format: str = "json") -> argparse.ArgumentParser:
    # argparse parents share Action objects, so each subcommand gets its own
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="bootstrap/generator seed (default: $CEGB_SEED or 42)")
    common.add_argument("--bootstrap", type=int, default=2000, metavar="B", help="bootstrap resamples")
    common.add_argument("--format", choices=("json", "md"), default=default_format)
    common.add_argument("--out", default=None, help="output path (default: stdout)")
    return common


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cegb", description="Cross-embodiment gripper benchmark analysis.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[_common()], help="check a session bundle")
    p.add_argument("session_dir")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("analyze", parents=[_common()], help="compute all metric families")
    p.add_argument("session_dir")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("report", parents=[_common("md")], help="render a JSON report")
    p.add_argument("report")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("compare", parents=[_common("md")], help="juxtapose two or more reports")
    p.add_argument("reports", nargs="+")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("simulate", parents=[_common()], help="write a synthetic bundle with ground truth")
    p.add_argument("--replica", action="store_true", help="replica of the published reference results")
    p.add_argument("--noise", action="store_true", help="add sensor noise (random bundles only)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("timer", parents=[_common()], help="time transfer cycles interactively")
    p.add_argument("--group", required=True)
    p.add_argument("--participant", required=True)
    p.set_defaults(func=cmd_timer)

    p = sub.add_parser("plotdata", parents=[_common()], help="CSV of raw and smoothed power with phases")
    p.add_argument("session_dir")
    p.add_argument("trace_id")
    p.add_argument("--window", type=float, default=0.05, help="smoothing window in seconds")
    p.set_defaults(func=cmd_plotdata)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="cegb: %(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command in ("simulate", "timer") and not args.out:
        parser.error(f"{args.command} needs --out")
    if args.bootstrap < 100:
        parser.error("--bootstrap must be at least 100")
    result = args.func(args)
    return result if isinstance(result, int) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
