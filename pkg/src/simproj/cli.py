"""``simproj`` command line: check, estimate, render, whatif, init.

Exit codes: 0 success, 1 plan/validation failure, 2 usage, I/O or syntax error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from simproj.dsl import PlanDocument, PlanSyntaxError, load_plan
from simproj.estimator import (
    IllegalAttribute,
    NotValidated,
    UnknownNode,
    estimate,
    format_term,
    validate,
    what_if,
)
from simproj.model import Duration, GraphError, InvalidParams, TimeUnit
from simproj.render import RenderOptions, to_ascii, to_dot

OK, FAILED, USAGE = 0, 1, 2

STARTER_PLAN = """\
; Starter plan.
; Symbols: # agile module, * SIM module, { splitter, } integrator,
;          C checker, @ start/end.
; Node keys: x=<n><d|w|m> cycle period, cycles=<n>, dur=<n><unit> (splitter
;            and checker only), team=<label>:<size>.
plan { x=1d alpha=5 }

start @ begin
sim * discovery team=T1:3
splitter { fork
agile # frontend team=T2:3
agile # backend team=T3:3
integrator } merge
checker C review
end @ finish

begin -> discovery
discovery -> fork
fork -> frontend
fork -> backend
frontend -> merge
backend -> merge
merge -> review
review -> finish
"""


class _Fail(Exception):
    def __init__(self, code: int):
        self.code = code


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _where(path: str, doc: PlanDocument | None, nodes) -> str:
    if doc is not None:
        for n in nodes:
            if n in doc.source_spans:
                line, col = doc.source_spans[n]
                return f"{path}:{line}:{col}"
    return path


def _load(path: str) -> PlanDocument:
    try:
        return load_plan(path)
    except OSError as exc:
        _err(f"{path}: error: cannot read plan: {exc.strerror or exc}")
        raise _Fail(USAGE)
    except UnicodeDecodeError:
        _err(f"{path}: error: plan is not valid UTF-8")
        raise _Fail(USAGE)
    except PlanSyntaxError as exc:
        _err(f"{path}:{exc.line}:{exc.col}: error {type(exc).__name__}: {exc.expected}")
        raise _Fail(USAGE)
    except GraphError as exc:
        for issue in exc.issues:
            loc = f"{path}:{issue.span[0]}:{issue.span[1]}" if issue.span else path
            _err(f"{loc}: error {issue.code}: {issue.message}")
        raise _Fail(FAILED)


def _report(path: str, doc: PlanDocument, diagnostics) -> bool:
    for d in diagnostics:
        _err(f"{_where(path, doc, d.nodes)}: {d.severity} {d.code}: {d.message}")
    return not any(d.severity == "error" for d in diagnostics)


def _load_valid(path: str) -> PlanDocument:
    doc = _load(path)
    if not _report(path, doc, [d for d in validate(doc.graph) if d.severity == "error"]):
        raise _Fail(FAILED)
    return doc


def _params(doc: PlanDocument, args):
    try:
        return doc.params(x=args.x, alpha=args.alpha, cycles=args.cycles)
    except InvalidParams as exc:
        _err(f"error: {exc}")
        raise _Fail(USAGE)


def cmd_check(args) -> int:
    doc = _load(args.path)
    diagnostics = validate(doc.graph)
    if not _report(args.path, doc, diagnostics):
        return FAILED
    warnings = sum(d.severity == "warning" for d in diagnostics)
    g = doc.graph
    print(f"{args.path}: ok ({len(g.nodes)} nodes, {len(g.edges)} edges, {warnings} warning(s))")
    return OK


def _estimate_lines(est) -> list[str]:
    lines = [
        f"total: {est.total}",
        f"headcount: {est.headcount}",
        f"sum: {est.sum_expression}",
        "stages:",
    ]
    rows = [("#", "kind", "duration", "term", "nodes")]
    for i, s in enumerate(est.stages, 1):
        rows.append((str(i), s.kind.value, s.duration.describe(), format_term(s, est.params),
                     ",".join(s.nodes)))
    widths = [max(len(r[c]) for r in rows) for c in range(4)]
    for r in rows:
        lines.append("  " + "  ".join(r[c].ljust(widths[c]) for c in range(4)) + "  " + r[4])
    lines.append("checkers:")
    if not est.checker_scenarios:
        lines.append("  (none)")
    w = max((len(c) for c, _ in est.checker_scenarios), default=0)
    for cid, span in est.checker_scenarios:
        lines.append(f"  {cid.ljust(w)}  {span}")
    return [line.rstrip() for line in lines]


def cmd_estimate(args) -> int:
    doc = _load_valid(args.path)
    est = estimate(doc.graph, _params(doc, args))
    if args.json:
        print(json.dumps(est.to_dict(), indent=2))
    else:
        print("\n".join(_estimate_lines(est)))
    return OK


def cmd_render(args) -> int:
    doc = _load_valid(args.path)
    if args.format == "ascii":
        text = to_ascii(doc.graph)
    else:
        opts = RenderOptions(
            show_durations=not args.no_durations,
            show_teams=not args.no_teams,
            annotate_critical_path=not args.no_critical,
        )
        text = to_dot(doc.graph, estimate(doc.graph, _params(doc, args)), opts)
    if args.out:
        try:
            Path(args.out).write_text(text, encoding="utf-8")
        except OSError as exc:
            _err(f"{args.out}: error: cannot write: {exc.strerror or exc}")
            return USAGE
    else:
        sys.stdout.write(text)
    return OK


def _parse_set(text: str) -> tuple[str, str, str]:
    target, sep, value = text.partition("=")
    node, dot, attr = target.rpartition(".")
    if not sep or not dot or not node or not attr or not value:
        raise argparse.ArgumentTypeError(f"expected node.attr=value, got {text!r}")
    return node, attr, value


def cmd_whatif(args) -> int:
    doc = _load_valid(args.path)
    params = _params(doc, args)
    overrides: dict[str, dict[str, str]] = {}
    for node, attr, value in args.set or []:
        overrides.setdefault(node, {})[attr] = value
    base = estimate(doc.graph, params)
    try:
        changed = what_if(doc.graph, params, overrides)
    except (UnknownNode, IllegalAttribute) as exc:
        _err(f"{args.path}: error {exc}")
        return FAILED
    except NotValidated as exc:
        for d in exc.diagnostics:
            if d.severity == "error":
                _err(f"{args.path}: error {d.code}: {d.message}")
        return FAILED
    rows = [
        ("", "baseline", "what-if"),
        ("total:", str(base.total), str(changed.total)),
        ("headcount:", str(base.headcount), str(changed.headcount)),
        ("sum:", base.sum_expression, changed.sum_expression),
    ]
    w0 = max(len(r[0]) for r in rows)
    w1 = max(len(r[1]) for r in rows)
    for r in rows:
        print(f"{r[0].ljust(w0)}  {r[1].ljust(w1)}  {r[2]}".rstrip())
    dd = changed.total_days - base.total_days
    dh = changed.headcount - base.headcount
    print(f"delta: total {dd:+d} days, headcount {dh:+d}")
    return OK


def cmd_init(args) -> int:
    path = Path(args.path)
    if path.exists() and not args.force:
        _err(f"{path}: error: file exists (use --force to overwrite)")
        return FAILED
    try:
        path.write_text(STARTER_PLAN, encoding="utf-8")
    except OSError as exc:
        _err(f"{path}: error: cannot write: {exc.strerror or exc}")
        return USAGE
    print(f"wrote {path}")
    return OK


def _duration_arg(text: str) -> Duration:
    try:
        d = Duration.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if d.magnitude < 1 or d.unit is TimeUnit.YEAR:
        raise argparse.ArgumentTypeError("cycle period must be a positive count of d, w or m")
    return d


def _positive(text: str) -> int:
    if not text.isdigit() or int(text) < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return int(text)


def _add_param_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group(
        "estimation parameters",
        "flags override the file's plan { } block, which overrides the defaults "
        "(x=1d, alpha=5, cycles=alpha)",
    )
    g.add_argument("--x", type=_duration_arg, metavar="DUR", help="cycle period, e.g. 1d or 1w")
    g.add_argument("--alpha", type=_positive, metavar="N", help="cycles per module unit")
    g.add_argument("--cycles", type=_positive, metavar="N", help="default cycles per module")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simproj", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("check", help="validate a plan and print diagnostics")
    p.add_argument("path")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("estimate", help="total duration, headcount and stage breakdown")
    p.add_argument("path")
    _add_param_flags(p)
    p.add_argument("--json", action="store_true", help="emit the estimate as JSON only")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("render", help="draw the plan as ASCII or Graphviz DOT")
    p.add_argument("path")
    p.add_argument("--format", choices=("ascii", "dot"), default="ascii")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--no-durations", action="store_true")
    p.add_argument("--no-teams", action="store_true")
    p.add_argument("--no-critical", action="store_true", help="do not highlight the critical path")
    _add_param_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("whatif", help="compare the plan against modified node attributes")
    p.add_argument("path")
    p.add_argument("--set", action="append", type=_parse_set, metavar="NODE.ATTR=VALUE",
                   help="attribute override (x, cycles, dur or team); repeatable")
    _add_param_flags(p)
    p.set_defaults(func=cmd_whatif)

    p = sub.add_parser("init", help="write a starter plan")
    p.add_argument("path")
    p.add_argument("--force", action="store_true", help="overwrite an existing file")
    p.set_defaults(func=cmd_init)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _Fail as exc:
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
