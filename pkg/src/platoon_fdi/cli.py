"""Command-line pipeline: topology, synth, simulate, run, plot.

Machine-readable ``key=value`` lines go to stdout, diagnostics to stderr.
Exit codes: 0 success / attack found, 1 error, 2 no attack exists,
3 inconclusive (the solver backend could not decide).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from platoon_fdi.config import parse_config
from platoon_fdi.csvio import read_attack_csv, read_trace_csv, write_attack_csv, write_trace_csv
from platoon_fdi.errors import PlatoonError
from platoon_fdi.plots import emit_plots
from platoon_fdi.simulator import simulate
from platoon_fdi.synthesis import synthesize, verify_attack
from platoon_fdi.topology import build_adjacency, parse_matrix

log = logging.getLogger("platoon_fdi")

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_FOUND = 2
EXIT_INCONCLUSIVE = 3


def _emit(**pairs) -> None:
    for key, value in pairs.items():
        if isinstance(value, bool):
            value = str(value).lower()
        print(f"{key}={value}")


def _output_dir(args, config) -> Path:
    out = Path(args.out) if getattr(args, "out", None) else config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summarize_trace(trace) -> dict:
    kinds = [e.kind for e in trace.events]
    return {
        "violations": len(trace.events),
        "safety_events": kinds.count("safety"),
        "performance_events": kinds.count("performance"),
        "collision_events": kinds.count("collision"),
        "min_gap": repr(trace.min_gap()),
        "max_gap": repr(trace.max_gap()),
    }


def cmd_topology(args) -> int:
    matrix = parse_matrix(args.matrix) if args.matrix else None
    topo = build_adjacency(args.kind, args.n, matrix)
    for row in topo.matrix:
        print(" ".join(str(int(v)) for v in row))
    return EXIT_OK


def _synth(config, backend):
    result = synthesize(config.scenario, config.attack, backend)
    _emit(status=result.status, feasible=result.found, problems=result.problems_solved)
    for reason in result.unknown_reasons:
        log.warning("undecided disjunct %s", reason)
    return result


def cmd_synth(args) -> int:
    config = parse_config(args.config)
    out = _output_dir(args, config)
    result = _synth(config, args.backend)
    if result.status == "inconclusive":
        return EXIT_INCONCLUSIVE
    if not result.found:
        log.info("no %s attack within theta=%g", config.attack.goal, config.attack.theta)
        return EXIT_NOT_FOUND
    path = write_attack_csv(out / "attack.csv", result.vector)
    i, k = result.disjunct
    _emit(disjunct_vehicle=i, disjunct_step=k, max_abs_delta=repr(max(abs(x) for x in result.vector.deltas)),
          attack_csv=path)
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = parse_config(args.config)
    out = _output_dir(args, config)
    attack = vector = None
    if args.attack:
        attack = config.attack
        vector = read_attack_csv(args.attack, attack.duration)
    at = config.attack
    trace = simulate(config.scenario, attack, vector, args.horizon or config.horizon, at.d_min, at.d_max)
    path = write_trace_csv(out / "trace.csv", trace)
    _emit(attacked=attack is not None, **_summarize_trace(trace), trace_csv=path)
    return EXIT_OK


def cmd_run(args) -> int:
    config = parse_config(args.config)
    out = _output_dir(args, config)
    at = config.attack
    result = _synth(config, args.backend)
    if result.status == "inconclusive":
        return EXIT_INCONCLUSIVE
    if not result.found:
        trace = simulate(config.scenario, horizon=config.horizon, d_min=at.d_min, d_max=at.d_max)
        write_trace_csv(out / "trace.csv", trace)
        emit_plots(trace, out)
        _emit(verified=False, **_summarize_trace(trace))
        return EXIT_NOT_FOUND

    attack_path = write_attack_csv(out / "attack.csv", result.vector)
    vector = read_attack_csv(attack_path, at.duration)
    report = verify_attack(config.scenario, at, vector, config.horizon)
    trace = report.trace
    trace_path = write_trace_csv(out / "trace.csv", trace)
    plots = emit_plots(trace, out)
    for reason in report.failed:
        log.error("verification: %s", reason)
    i, k = result.disjunct
    _emit(
        disjunct_vehicle=i,
        disjunct_step=k,
        window_violations=len(report.violations),
        **_summarize_trace(trace),
        attack_csv=attack_path,
        trace_csv=trace_path,
        plots=",".join(p.name for p in plots),
        verified=report.holds,
    )
    return EXIT_OK if report.holds else EXIT_ERROR


def cmd_plot(args) -> int:
    trace = read_trace_csv(args.trace)
    window = None
    if args.config:
        at = parse_config(args.config).attack
        window = (at.onset, at.duration)
    elif args.onset is not None and args.duration is not None:
        window = (args.onset, args.duration)
    out = Path(args.out) if args.out else Path(args.trace).parent
    out.mkdir(parents=True, exist_ok=True)
    paths = emit_plots(trace, out, window)
    _emit(plots=",".join(str(p) for p in paths))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="platoon-fdi", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topology", help="print the adjacency matrix of a topology")
    p.add_argument("--kind", required=True, help="PF, PLF, TPF, TPLF or Custom")
    p.add_argument("--n", type=int, required=True, help="number of followers")
    p.add_argument("--matrix", help="Custom adjacency, e.g. '0,0;1,0'")
    p.set_defaults(func=cmd_topology)

    for name, func, text in (
        ("synth", cmd_synth, "synthesize an attack vector into attack.csv"),
        ("run", cmd_run, "synthesize, simulate, verify and plot"),
    ):
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", required=True)
        p.add_argument("--out", help="output directory (default: run.output_dir)")
        p.add_argument("--backend", help="feasibility backend (default: $PLATOON_SOLVER or simplex)")
        p.set_defaults(func=func)

    p = sub.add_parser("simulate", help="simulate, optionally under a given attack.csv")
    p.add_argument("--config", required=True)
    p.add_argument("--attack", help="attack vector CSV (k,delta); omit for a clean run")
    p.add_argument("--out", help="output directory (default: run.output_dir)")
    p.add_argument("--horizon", type=int, help="override run.horizon")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("plot", help="render SVG plots from trace.csv")
    p.add_argument("--trace", required=True)
    p.add_argument("--out", help="output directory (default: next to the trace)")
    p.add_argument("--config", help="config whose attack window is shaded")
    p.add_argument("--onset", type=int)
    p.add_argument("--duration", type=int)
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (PlatoonError, ValueError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
