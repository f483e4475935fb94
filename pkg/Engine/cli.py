import argparse
import json
import logging
import sys
from contextlib import contextmanager
from enum import Enum
from typing import Any, Callable, Dict, IO, Iterator, List, Optional

from pydantic import BaseModel, ConfigDict, ValidationError

from Engine.config import ConfigError, OutputFormat, apply_overrides, settings
from Engine.constructions import Family, FamilySpec, family
from Engine.embedding import embed
from Engine.enumeration import (
    EnumSpec,
    Objective,
    census_edge_counts,
    enumerate_graphs,
    extremal_scan,
    parse_family,
)
from Engine.graph_core import Graph, GraphError, canonical_code, is_2connected
from Engine.graph_io import load_graph, to_dot
from Engine.memo import minor_memo
from Engine.recognition import edge_bound, is_outerplanar_by_peeling, verdict
from Engine.spectra import (
    BoundCertificate,
    BoundKind,
    ConvergenceError,
    certify_bound,
    closed_form_bounds,
    spectrum_report,
)
from Engine.suites import DEFAULT_RANGES, SUITES, SuiteParams, run_suite
from Engine.timing import run_tracker
from Engine.violations import TheoremViolation, violation_collector

logger = logging.getLogger(__name__)

PROG = "outerplanar-spectra"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATION = 2


class UsageError(Exception):
    pass


class Command(str, Enum):
    CHECK = "check"
    GENERATE = "generate"
    ENUMERATE = "enumerate"
    SCAN = "scan"
    BOUNDS = "bounds"
    CENSUS = "census"
    VERIFY_THEOREMS = "verify-theorems"
    SPECTRUM = "spectrum"
    CERTIFY = "certify"


class OutputTarget(BaseModel):
    model_config = ConfigDict(extra="forbid")

    path: Optional[str] = None
    format: OutputFormat = OutputFormat.JSON


class ExperimentConfig(BaseModel):
    """A run described as data: `--config FILE.json` instead of flags."""

    model_config = ConfigDict(extra="forbid")

    command: Command
    params: Dict[str, Any] = {}
    tolerances: Dict[str, float] = {}
    output: OutputTarget = OutputTarget()


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# argument helpers


def parse_range(text: str) -> List[int]:
    """'4..16', '16,18,20' or '6'."""
    out: List[int] = []
    try:
        for part in text.split(","):
            part = part.strip()
            if ".." in part:
                lo, hi = part.split("..", 1)
                out.extend(range(int(lo), int(hi) + 1))
            elif part:
                out.append(int(part))
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid range {text!r}; use a..b or a,b,c")
    if not out:
        raise argparse.ArgumentTypeError(f"empty range {text!r}")
    return out


def parse_floats(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number list {text!r}")


def parse_tolerance(text: str) -> tuple:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"tolerance must be key=value, got {text!r}")
    key, value = text.split("=", 1)
    return key.strip(), value.strip()


def parse_chords(text: str) -> List[List[int]]:
    """'0-3,4-7' as chord index pairs."""
    chords = []
    try:
        for part in text.split(","):
            if part.strip():
                a, b = part.split("-")
                chords.append([int(a), int(b)])
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid chord plan {text!r}; use a-b,c-d")
    return chords


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help="write the report here instead of stdout")
    common.add_argument("--format", choices=[f.value for f in OutputFormat], default=OutputFormat.JSON.value)
    common.add_argument("--tolerance", action="append", type=parse_tolerance, default=[],
                        metavar="KEY=VALUE", help="override a setting, e.g. residual_tol=1e-10")
    common.add_argument("--workers", type=int, help="process pool size for enumeration")
    common.add_argument("--override-cap", action="store_true", help="run past the configured enumeration caps")
    common.add_argument("--no-metadata", action="store_true", help="omit the timing/metadata block")

    parser = _Parser(prog=PROG, description="Maximal bipartite outerplanar graphs and their spectra",
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    parser.add_argument("--config", help="ExperimentConfig JSON file; replaces the subcommand")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(name, parents=[common], help=help_text,
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    p = add("check", "recognize a graph: bipartite, outerplanar, maximal, structure")
    p.add_argument("file")
    p.add_argument("--graph6", action="store_true", help="input is graph6 text")

    p = add("generate", "build a named family member")
    p.add_argument("--family", required=True, choices=[f.value for f in Family])
    p.add_argument("--n", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--index", type=int, help="H-case index 1..5")
    p.add_argument("--root", type=int, help="pendant root")
    p.add_argument("--eps", type=int, help="pendant count")
    p.add_argument("--chords", type=parse_chords, help="quadrangulation chord plan a-b,c-d")
    p.add_argument("--unchecked", action="store_true", help="allow s outside the stated family ranges")
    p.add_argument("--emit", choices=["json", "dot"], help="shorthand for --format")

    p = add("enumerate", "enumerate a family, one class per isomorphism type")
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=parse_range, required=True)
    p.add_argument("--iso", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--cap", type=int)

    p = add("scan", "extremal spectral scan over a family")
    p.add_argument("--family", default="bip-outerplanar")
    p.add_argument("--n", type=parse_range, required=True)
    p.add_argument("--objective", choices=["max-rho", "min-lambda"], default="max-rho")
    p.add_argument("--table", action="store_true", help="include the full ranked table")

    p = add("bounds", "closed-form spectral bounds")
    p.add_argument("--kind", required=True, choices=[k.value for k in BoundKind])
    p.add_argument("--n", type=parse_range, required=True)
    p.add_argument("--eps", type=int, default=0)

    p = add("census", "edge-count census against the edge bound")
    p.add_argument("--family", default="bip-outerplanar")
    p.add_argument("--n", type=parse_range, required=True)

    p = add("verify-theorems", "run named theorem suites")
    p.add_argument("--suite", default="all", choices=["all"] + sorted(SUITES))
    p.add_argument("--n", type=parse_range)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=500)

    p = add("spectrum", "spectral radius, least eigenvalue and full spectrum")
    p.add_argument("file")
    p.add_argument("--graph6", action="store_true")

    p = add("certify", "check f(A) y <= r y and the implied bound on rho")
    p.add_argument("file")
    p.add_argument("--poly", type=parse_floats, required=True, help="coefficients, highest power first")
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--y", type=parse_floats, help="test vector (default all ones)")
    p.add_argument("--graph6", action="store_true")

    return parser


def config_to_argv(cfg: ExperimentConfig) -> List[str]:
    argv = [cfg.command.value]
    params = dict(cfg.params)
    positional = params.pop("file", None)
    for key, value in sorted(params.items()):
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif value is False:
            if key == "iso":
                argv.append("--no-iso")
        elif isinstance(value, list):
            if value and isinstance(value[0], list):
                argv += [flag, ",".join(f"{a}-{b}" for a, b in value)]
            else:
                argv += [flag, ",".join(str(v) for v in value)]
        else:
            argv += [flag, str(value)]
    for key, value in sorted(cfg.tolerances.items()):
        argv += ["--tolerance", f"{key}={value}"]
    if cfg.output.path:
        argv += ["--output", cfg.output.path]
    argv += ["--format", cfg.output.format.value]
    if positional is not None:
        argv.append(str(positional))
    return argv


def load_experiment(path: str) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as e:
        raise UsageError(f"Cannot parse config {path}: {e}")
    return ExperimentConfig(**data)


# ---------------------------------------------------------------------------
# command handlers: each returns the report body (and graphs for dot output)


def _graph_entry(g: Graph) -> Dict[str, Any]:
    return {"code": canonical_code(g).hex(), **g.to_payload()}


def cmd_check(args) -> Dict[str, Any]:
    g = load_graph(args.file, args.graph6)
    result = verdict(g)
    result["edge_bound"] = edge_bound(g.n)
    return {"result": result, "graphs": [g]}


def cmd_generate(args) -> Dict[str, Any]:
    extra: Dict[str, Any] = {}
    for key in ("index", "root", "eps", "chords"):
        value = getattr(args, key)
        if value is not None:
            extra[key] = value
    spec = FamilySpec(family=args.family, n=args.n, s=args.s, extra=extra, unchecked=args.unchecked)
    g = family(spec)
    return {"result": {"family": spec.family.value, "graph": g.to_payload(), "m": g.m}, "graphs": [g]}


def cmd_enumerate(args, sink: "ReportSink") -> Dict[str, Any]:
    fam = parse_family(args.family)
    per_n = []
    graphs: List[Graph] = []
    for n in args.n:
        spec = EnumSpec(order=n, family=fam, iso_reduce=args.iso, cap=args.cap, override_cap=args.override_cap)
        result = enumerate_graphs(spec)
        entries = [_graph_entry(g) for g in result.graphs]
        for entry in entries:
            sink.stream({"n": n, **entry})
        per_n.append({"n": n, "count": len(entries), "truncated": result.truncated, "graphs": entries})
        graphs.extend(result.graphs)
    return {"result": {"family": fam.value, "orders": per_n}, "graphs": graphs}


def cmd_scan(args) -> Dict[str, Any]:
    fam = parse_family(args.family)
    objective = Objective(args.objective.replace("-", "_"))
    scans = [
        extremal_scan(EnumSpec(order=n, family=fam, override_cap=args.override_cap), objective, args.table)
        for n in args.n
    ]
    return {"result": {"scans": scans}}


def cmd_bounds(args) -> Dict[str, Any]:
    kind = BoundKind(args.kind)
    values = [
        {"n": n, "eps": args.eps, "bound": round(float(closed_form_bounds(kind, n, args.eps)), 12)}
        for n in args.n
    ]
    return {"result": {"kind": kind.value, "bounds": values}}


def cmd_census(args) -> Dict[str, Any]:
    fam = parse_family(args.family)
    censuses = [
        census_edge_counts(EnumSpec(order=n, family=fam, override_cap=args.override_cap)) for n in args.n
    ]
    return {"result": {"censuses": censuses}}


def cmd_verify(args) -> Dict[str, Any]:
    params = SuiteParams(seed=args.seed, samples=args.samples)
    names = sorted(SUITES) if args.suite == "all" else [args.suite]
    suites = [run_suite(name, args.n if args.suite != "all" else None, params) for name in names]
    return {
        "result": {
            "suites": suites,
            "all_passed": all(s["failed"] == 0 for s in suites),
            "default_ranges": {k: [v[0], v[-1]] for k, v in sorted(DEFAULT_RANGES.items()) if k in names},
        }
    }


def cmd_spectrum(args) -> Dict[str, Any]:
    g = load_graph(args.file, args.graph6)
    return {"result": spectrum_report(g), "graphs": [g]}


def cmd_certify(args) -> Dict[str, Any]:
    g = load_graph(args.file, args.graph6)
    cert = certify_bound(g, BoundCertificate(poly=args.poly, y=args.y or [], r=args.r))
    return {"result": cert.to_payload(), "graphs": [g]}


HANDLERS: Dict[str, Callable[..., Dict[str, Any]]] = {
    Command.CHECK.value: cmd_check,
    Command.GENERATE.value: cmd_generate,
    Command.SCAN.value: cmd_scan,
    Command.BOUNDS.value: cmd_bounds,
    Command.CENSUS.value: cmd_census,
    Command.VERIFY_THEOREMS.value: cmd_verify,
    Command.SPECTRUM.value: cmd_spectrum,
    Command.CERTIFY.value: cmd_certify,
}


# ---------------------------------------------------------------------------
# output


class ReportSink:
    """Single writer for one run; jsonl lines are flushed as they are produced."""

    def __init__(self, stream: IO[str], fmt: OutputFormat):
        self.stream_out = stream
        self.format = fmt
        self.streamed = 0

    def stream(self, record: Dict[str, Any]):
        if self.format != OutputFormat.JSONL:
            return
        self.stream_out.write(json.dumps(record, sort_keys=True) + "\n")
        self.stream_out.flush()
        self.streamed += 1

    def finish(self, report: Dict[str, Any], graphs: List[Graph]):
        if self.format == OutputFormat.JSON:
            self.stream_out.write(json.dumps(report, sort_keys=True, indent=2) + "\n")
        elif self.format == OutputFormat.JSONL:
            self.stream_out.write(json.dumps(report, sort_keys=True) + "\n")
        elif self.format == OutputFormat.DOT:
            if not graphs:
                raise UsageError(f"--format dot needs a command that produces graphs, not {report['command']}")
            for i, g in enumerate(graphs):
                self.stream_out.write(to_dot(g, _embedding_or_none(g), name=f"G{i}"))
        else:
            self.stream_out.write(render_table(report))
        self.stream_out.flush()


def _embedding_or_none(g: Graph):
    if is_2connected(g) and is_outerplanar_by_peeling(g):
        return embed(g)
    return None


def render_table(report: Dict[str, Any]) -> str:
    result = report.get("result", {})
    lines: List[str] = []
    if "suites" in result:
        lines.append(f"{'suite':<16}{'instances':>10}{'passed':>10}{'failed':>10}")
        for s in result["suites"]:
            lines.append(f"{s['name']:<16}{s['instances']:>10}{s['passed']:>10}{s['failed']:>10}")
    elif "scans" in result:
        lines.append(f"{'n':>4}  {'objective':<12}{'value':>18}  star_attains  winners")
        for s in result["scans"]:
            value = "-" if s["value"] is None else f"{s['value']:.12f}"
            lines.append(f"{s['n']:>4}  {s['objective']:<12}{value:>18}  {str(s['star_attains']):<13}{len(s['winners'])}")
            for row in s.get("ranked", []):
                lines.append(f"      {row['code']}  m={row['m']:<4}{row['value']:.12f}")
    elif "censuses" in result:
        lines.append(f"{'n':>4}{'bound':>8}{'max_m':>8}{'count':>8}{'equal':>8}")
        for c in result["censuses"]:
            lines.append(f"{c['n']:>4}{c['bound']:>8}{str(c['max_m']):>8}{c['count']:>8}{c['equality_count']:>8}")
    elif "orders" in result:
        lines.append(f"{'n':>4}{'count':>10}  truncated")
        for o in result["orders"]:
            lines.append(f"{o['n']:>4}{o['count']:>10}  {o['truncated']}")
    else:
        for key, value in sorted(result.items()):
            lines.append(f"{key:<28}{json.dumps(value, sort_keys=True)}")
    return "\n".join(lines) + "\n"


@contextmanager
def _open_output(path: Optional[str]) -> Iterator[IO[str]]:
    if not path:
        yield sys.stdout
        return
    with open(path, "w", encoding="utf-8") as fh:
        yield fh


def _metadata() -> Dict[str, Any]:
    return {
        **run_tracker.get_metrics(),
        "minor_memo": minor_memo.get_stats(),
        "violations": violation_collector.get_summary(),
    }


# ---------------------------------------------------------------------------


def _parse(argv: List[str]) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        if args.command:
            raise UsageError("--config replaces the subcommand; give one or the other")
        cfg = load_experiment(args.config)
        args = parser.parse_args(config_to_argv(cfg))
    if not args.command:
        raise UsageError(f"{PROG}: a command or --config is required")
    if getattr(args, "emit", None):
        args.format = args.emit
    return args


def execute(args: argparse.Namespace) -> int:
    overrides: Dict[str, Any] = dict(args.tolerance)
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        apply_overrides(overrides)

    fmt = OutputFormat(args.format)
    params = {k: v for k, v in sorted(vars(args).items())
              if k not in ("config", "output", "format", "tolerance", "no_metadata", "emit")}

    with _open_output(args.output) as out:
        sink = ReportSink(out, fmt)
        with run_tracker.track(f"command:{args.command}"):
            if args.command == Command.ENUMERATE.value:
                body = cmd_enumerate(args, sink)
            else:
                body = HANDLERS[args.command](args)

        report: Dict[str, Any] = {
            "command": args.command,
            "params": params,
            "tolerances": settings.tolerances(),
            "result": body["result"],
            "violations": violation_collector.report_entries(),
        }
        if not args.no_metadata:
            report["metadata"] = _metadata()
        sink.finish(report, body.get("graphs", []))

    if violation_collector.fired:
        logger.error(f"{violation_collector.get_summary()['total']} theorem violation(s) recorded")
        return EXIT_VIOLATION
    return EXIT_OK


def run(argv: Optional[List[str]] = None) -> int:
    violation_collector.clear()
    run_tracker.reset()
    minor_memo.clear()
    snapshot = settings.model_dump()
    try:
        args = _parse(list(sys.argv[1:] if argv is None else argv))
        return execute(args)
    except SystemExit as e:
        # --help
        return EXIT_OK if not e.code else EXIT_USAGE
    except TheoremViolation as e:
        logger.error(f"Run aborted by a theorem violation: {e}")
        return EXIT_VIOLATION
    except (UsageError, ValidationError, ConfigError, GraphError, ConvergenceError, OSError) as e:
        logger.error(f"{e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        # overrides apply to this run only
        apply_overrides(snapshot)


def main() -> int:
    return run()
