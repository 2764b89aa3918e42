"""Batch command-line entry points.

Exit codes: 0 ok, 1 usage, 2 data error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import monitor, scenario
from .charts import ChartSpec, Series, write_svg
from .corpus import load_corpus_dir
from .ingest import (
    IngestError,
    ReviewError,
    build_graph,
    extract_corpus,
    load_decisions,
    read_candidates_csv,
    review,
    write_candidates_csv,
)
from .query import Query, result_to_dict, result_to_text, run_query
from .riskgraph import GraphError, load_graph, save_graph

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        raise UsageError(message)


def build_parser() -> _Parser:
    parser = _Parser(prog="plantguard", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("simulate", help="run a closed-loop scenario to a telemetry CSV")
    p.add_argument("--config", required=True, help="scenario YAML")
    p.add_argument("--out", required=True, help="telemetry CSV path")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--full", action="store_true",
                   help="include the feed_temp column (needed for detect)")

    p = sub.add_parser("detect", help="scan a telemetry CSV for alarms")
    p.add_argument("--telemetry", required=True)
    p.add_argument("--out", required=True, help="alarms CSV path")
    p.add_argument("--config", default=None,
                   help="scenario YAML supplying charts/setpoint (default: built-in)")
    p.add_argument("--svg-dir", default=None, help="also write one SVG per chart")

    p = sub.add_parser("ingest", help="extract candidate triples from a corpus directory")
    p.add_argument("--corpus", required=True, help="directory with manifest.csv")
    p.add_argument("--out", required=True, help="candidates CSV path")

    p = sub.add_parser("review", help="apply a review decisions file to candidates")
    p.add_argument("--candidates", required=True)
    p.add_argument("--decisions", required=True)
    p.add_argument("--out", required=True, help="reviewed candidates CSV path")

    p = sub.add_parser("build-graph", help="load reviewed triples into a graph file")
    p.add_argument("--reviewed", required=True, help="reviewed candidates CSV")
    p.add_argument("--out", required=True, help="graph TSV path")

    p = sub.add_parser("query", help="keyword query against a graph file")
    p.add_argument("--graph", required=True)
    p.add_argument("--keywords", required=True, nargs="+")
    p.add_argument("--depth", type=int, default=4)
    p.add_argument("--json", action="store_true", help="emit JSON instead of text")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--graph", default=None, help="graph file (default: built-in corpus)")

    p = sub.add_parser("export-chart", help="render a telemetry channel to SVG")
    p.add_argument("--telemetry", required=True)
    p.add_argument("--channel", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hline", action="append", default=[], metavar="LABEL=VALUE",
                   help="horizontal reference line (repeatable)")
    return parser


def cmd_simulate(args) -> int:
    config = scenario.load_config(args.config)
    if args.seed is not None:
        config.seed = args.seed
    result = scenario.run_scenario(config)
    scenario.write_telemetry_csv(result, args.out, full=args.full)
    print(f"wrote {len(result.samples)} rows to {args.out}")
    return EXIT_OK


def _detect_charts(args):
    if args.config:
        config = scenario.load_config(args.config)
        return config.charts, config.setpoint
    return scenario.default_charts(), monitor.SetpointConfig(
        channel="tank_temp", setpoint=373.0, deadband=1.0
    )


def cmd_detect(args) -> int:
    channels = scenario.read_telemetry_csv(args.telemetry)
    charts, setpoint = _detect_charts(args)
    if not channels or not channels.get("time"):
        print("warning: telemetry file is empty; writing empty outputs", file=sys.stderr)
        monitor.write_alarms_csv([], args.out)
        return EXIT_OK
    times = channels["time"]
    events = monitor.scan(channels, charts, times)
    if setpoint is not None and setpoint.channel in channels:
        events += monitor.setpoint_alarm(
            channels[setpoint.channel], setpoint.setpoint, setpoint.deadband,
            times, setpoint.channel,
        )
    events.sort(key=lambda e: (e.t, e.channel, e.chart))
    monitor.write_alarms_csv(events, args.out)
    print(f"wrote {len(events)} alarms to {args.out}")
    if args.svg_dir:
        os.makedirs(args.svg_dir, exist_ok=True)
        for chart in charts:
            if chart.channel not in channels:
                continue
            stats = monitor.chart_statistics(channels[chart.channel], chart)
            spec = ChartSpec(
                title=f"{chart.channel} {chart.kind} chart (window {chart.window})",
                series=[Series(name=chart.kind, x=times, y=list(stats))],
                x_label="t",
            )
            if chart.kind != "trend":
                limits = monitor.chart_limits(chart)
                spec.hlines = [("UCL", limits.ucl), ("CL", limits.center),
                               ("LCL", limits.lcl)]
            path = os.path.join(args.svg_dir, f"{chart.channel}_{chart.kind}.svg")
            write_svg(spec, path)
            print(f"wrote {path}")
    return EXIT_OK


def cmd_ingest(args) -> int:
    documents = load_corpus_dir(args.corpus)
    candidates = extract_corpus(documents)
    write_candidates_csv(candidates, args.out)
    print(f"wrote {len(candidates)} candidates to {args.out}")
    return EXIT_OK


def cmd_review(args) -> int:
    candidates = read_candidates_csv(args.candidates)
    with open(args.decisions, "r", encoding="utf-8") as fh:
        decisions = load_decisions(fh.read())
    accepted = review(candidates, decisions)
    write_candidates_csv(accepted, args.out)
    print(f"{len(accepted)} of {len(candidates)} candidates accepted -> {args.out}")
    return EXIT_OK


def cmd_build_graph(args) -> int:
    reviewed = read_candidates_csv(args.reviewed)
    graph = build_graph(reviewed)
    save_graph(graph, args.out)
    stats = graph.stats()
    print(f"wrote graph with {stats['nodes']} nodes / {stats['triples']} triples to {args.out}")
    return EXIT_OK


def cmd_query(args) -> int:
    graph = load_graph(args.graph)
    result = run_query(graph, Query(keywords=tuple(args.keywords), max_depth=args.depth))
    if args.json:
        import json

        print(json.dumps(result_to_dict(result), indent=2))
    else:
        sys.stdout.write(result_to_text(result))
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .api import create_app
    from .service import SessionManager

    graph = load_graph(args.graph) if args.graph else None
    app = create_app(SessionManager(graph=graph))
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        print(f"error: could not bind {args.host}:{args.port} ({exc})", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_export_chart(args) -> int:
    channels = scenario.read_telemetry_csv(args.telemetry)
    if args.channel not in channels:
        raise IngestError(
            f"channel {args.channel!r} not in {args.telemetry} "
            f"(have {sorted(channels)})"
        )
    hlines = []
    for spec in args.hline:
        label, _, value = spec.partition("=")
        if not value:
            raise UsageError(f"--hline expects LABEL=VALUE, got {spec!r}")
        hlines.append((label, float(value)))
    times = channels.get("time", [float(i) for i in range(1, len(channels[args.channel]) + 1)])
    chart = ChartSpec(
        title=args.channel,
        series=[Series(name=args.channel, x=times, y=channels[args.channel])],
        hlines=hlines,
    )
    write_svg(chart, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "detect": cmd_detect,
    "ingest": cmd_ingest,
    "review": cmd_review,
    "build-graph": cmd_build_graph,
    "query": cmd_query,
    "serve": cmd_serve,
    "export-chart": cmd_export_chart,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help()
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestError, ReviewError, GraphError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except KeyboardInterrupt:
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last-resort diagnostic
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
