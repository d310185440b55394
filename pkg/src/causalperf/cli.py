"""Command-line front end: ``causalperf <command> [flags]``.

Exit codes: 0 success, 1 usage error, 2 data or graph error, 3 degenerate
statistics. Every output file is written atomically.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import graph as G
from .data import read_csv, read_metadata, write_csv, write_metadata
from .discovery import DiscoveryParams, discover, parse_background
from .errors import CausalPerfError, DegenerateInputError
from .estimation import ExperimentalData, adjustment_estimate, cond_summary, estimate
from .graph import GraphKind, MixedGraph, NodeRole
from .queries import (EXPERIMENT, SOURCE, TARGET, CausalQuery, TransportQuery, build_selection_diagram, id_effect,
                      parse_query, recoverability_report, s_admissible_adjustment, s_nodes_of, s_recoverable,
                      to_json, to_text, trivially_transportable)
from .queries.query_file import parse_assignment
from .synthlab import SCMSpec, SelectionMechanism, sample_scm, simulate

__all__ = ["main", "run"]

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------------------
# I/O helpers


def _read(path) -> bytes:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"input file not found: {path}")
    return p.read_bytes()


def _write(path, data: bytes | str):
    """Write via a temporary file in the target directory, then rename over ``path``."""
    if isinstance(data, str):
        data = data.encode()
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{p.name}.", dir=p.parent)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, p)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _names(text) -> list[str]:
    return [p.strip() for p in (text or "").split(",") if p.strip()]


def _graph(path) -> MixedGraph:
    return G.from_text(_read(path))


def _dataset(data_path, meta_path):
    if meta_path is None:
        raise UsageError("--data needs --meta")
    return read_csv(_read(data_path), read_metadata(_read(meta_path)))


def _committed(g: MixedGraph) -> MixedGraph:
    """A CPDAG without undirected edges is a single DAG; treat it as one."""
    if g.kind is GraphKind.CPDAG and all(e.mark_a is not e.mark_b for e in g.edges):
        return g.replace(kind=GraphKind.DAG)
    return g


def _query_from(args) -> tuple[CausalQuery, dict]:
    if args.query:
        spec = parse_query(_read(args.query))
        return spec.query(), spec.given_values()
    if not args.outcome:
        raise UsageError("give --outcome (and --treatment) or --query")
    given = parse_assignment(args.given or "")
    q = CausalQuery(frozenset(_names(args.treatment)), frozenset(_names(args.outcome)), frozenset(given),
                    interventional=not getattr(args, "statistical", False))
    return q, {k: v for k, v in given.items() if v is not None}


# ---------------------------------------------------------------------------
# commands


def cmd_discover(args, out):
    d = _dataset(args.data, args.meta)
    bk = parse_background(_read(args.bk)) if args.bk else None
    params = DiscoveryParams(alpha=args.alpha, max_cond_size=args.max_cond_size, algorithm=args.algo,
                             stable=not args.unstable, workers=args.workers, ci_test=args.ci_test)
    res = discover(d, bk, params)
    g = res.graph
    if args.out:
        _write(args.out, G.to_text(g))
    if args.dot:
        _write(args.dot, G.to_dot(g))
    perf = [v for v in g.nodes if g.role(v) is NodeRole.PERFORMANCE]
    opts = [v for v in g.nodes if g.role(v) is NodeRole.OPTION]
    influential = sorted({o for o in opts for p in perf if g.adjacent(o, p)})
    out.write(f"algorithm: {params.algorithm}\n")
    out.write(f"variables: {len(g.nodes)}\n")
    out.write(f"edges: {len(g.edges)}\n")
    out.write(f"influential options: {len(influential)}")
    out.write(f" ({', '.join(influential)})\n" if influential else "\n")
    for p in perf:
        adj = sorted(o for o in opts if g.adjacent(o, p))
        out.write(f"  {p}: {', '.join(adj) if adj else '-'}\n")
    out.write(f"ci tests: {res.n_tests}\n")
    if res.truncated:
        out.write(f"warning: conditioning sets were capped at {params.max_cond_size}\n")
    for msg in res.diagnostics:
        out.write(f"note: {msg}\n")
    for e in g.edges:
        out.write(f"edge: {e.a} {e.mark_a.value}-{e.mark_b.value} {e.b}\n")


def cmd_identify(args, out):
    g = _committed(_graph(args.graph))
    q, values = _query_from(args)
    res = id_effect(g, q)
    out.write(f"status: {res.status}\n")
    if not res.identified:
        out.write(f"witness: {res.witness.describe()}\n")
        return
    out.write(f"method: {res.method}\n")
    out.write(f"estimand: {to_text(res.estimand)}\n")
    if args.json:
        _write(args.json, to_json(res.estimand))
    if args.data:
        d = _dataset(args.data, args.meta)
        table = estimate(res.estimand, {SOURCE: d}, values)
        _emit_estimate(table, out)


def _emit_estimate(table, out):
    if isinstance(table, float):
        out.write(f"value: {table:.6g}\n")
    else:
        out.write(table.to_text())


def cmd_transport(args, out):
    src, tgt = _graph(args.source), _graph(args.target)
    if set(src.nodes) != set(tgt.nodes) or set(src.edges) != set(tgt.edges):
        raise UsageError("source and target graphs must share their structure; mark the mechanisms that "
                         "differ with --s-nodes")
    q, values = _query_from(args)
    diagram = build_selection_diagram(_committed(tgt), _names(args.s_nodes))
    tq = TransportQuery(diagram, q)
    s = ", ".join(f"{k}->{v}" for k, v in sorted(s_nodes_of(diagram).items()))
    out.write(f"s-nodes: {s or '-'}\n")
    trivial = trivially_transportable(tq)
    out.write(f"trivially transportable: {'yes' if trivial is not None else 'no'}\n")
    if trivial is not None:
        out.write(f"estimand: {to_text(trivial)}\n")
    adj = None
    if q.interventional and not q.conditioning:
        adj = s_admissible_adjustment(tq)
        if adj is None:
            out.write("s-admissible set: none\n")
        else:
            z, formula = adj
            out.write(f"s-admissible set: {{{', '.join(sorted(z))}}}\n")
            out.write(f"transport formula: {to_text(formula)}\n")
    if args.json:
        doc = {"trivial": json.loads(to_json(trivial)) if trivial is not None else None,
               "adjustment": None if adj is None else {"z": sorted(adj[0]), "estimand": json.loads(to_json(adj[1]))}}
        _write(args.json, json.dumps(doc, indent=2) + "\n")
    if args.target_data:
        tgt_data = _dataset(args.target_data, args.meta)
        if trivial is not None:
            out.write("target estimate:\n")
            _emit_estimate(estimate(trivial, {TARGET: tgt_data}, values), out)
        if adj is not None and args.source_data:
            exp = ExperimentalData(_dataset(args.source_data, args.meta), q.treatment)
            out.write("transported estimate:\n")
            _emit_estimate(estimate(adj[1], {TARGET: tgt_data, EXPERIMENT: exp}, values), out)


def cmd_recover(args, out):
    g = _graph(args.graph)
    x, y = _names(args.x), _names(args.y)
    if not y:
        raise UsageError("--y needs at least one variable")
    ok = s_recoverable(g, x, y, args.selection)
    out.write(f"recoverable: {str(ok).lower()}\n")
    if args.report:
        opts = list(g.nodes_with_role(NodeRole.OPTION))
        perf = list(g.nodes_with_role(NodeRole.PERFORMANCE))
        out.write(recoverability_report(g, opts, perf, args.selection).to_text())


def cmd_simulate(args, out):
    spec = SCMSpec.from_json(_read(args.spec))
    spec = SCMSpec(**{**spec.__dict__, "seed": args.seed})
    m = sample_scm(spec)
    sel = SelectionMechanism.from_json(_read(args.selection)) if args.selection else None
    d = simulate(m, args.n, seed=args.seed, sel=sel)
    meta_path = args.meta_out or str(Path(args.out).with_suffix(".meta.json"))
    _write(args.out, write_csv(d))
    _write(meta_path, write_metadata(d.variables))
    if args.truth:
        _write(args.truth, G.to_text(m.graph))
    if args.scm_out:
        _write(args.scm_out, m.to_json())
    out.write(f"rows: {d.n}\n")
    out.write(f"columns: {', '.join(d.names)}\n")
    out.write(f"data: {args.out}\nmetadata: {meta_path}\n")


def cmd_dsep(args, out):
    g = _graph(args.graph)
    ok = G.separated(g, _names(args.x), _names(args.y), _names(args.given))
    out.write(f"separated: {str(ok).lower()}\n")


def cmd_estimate(args, out):
    d = _dataset(args.data, args.meta)
    given = {k: v for k, v in parse_assignment(args.given or "").items() if v is not None}
    if args.treatment:
        q = CausalQuery(frozenset(_names(args.treatment)), frozenset([args.outcome]))
        table = adjustment_estimate(d, q, _names(args.adjust), smoothing=args.smoothing)
        out.write(table.to_text())
        if args.json:
            _write(args.json, table.to_json())
        return
    s = cond_summary(d, args.outcome, given, smoothing=args.smoothing)
    rec = s.to_record()
    if s.discrete:
        for lv, p in zip(s.levels, s.probs):
            out.write(f"P({args.outcome}={lv}): {p:.6g}\n")
    else:
        out.write(f"mean: {s.mean:.6g}\nvariance: {s.variance:.6g}\nse: {s.se:.6g}\n")
    out.write(f"count: {s.count}\n")
    if args.json:
        _write(args.json, json.dumps(rec, indent=2) + "\n")


# ---------------------------------------------------------------------------
# parser


def _alpha(text):
    try:
        a = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not 0.0 < a < 1.0:
        raise argparse.ArgumentTypeError("alpha must lie in (0, 1)")
    return a


def _positive(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if n < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return n


def _seed(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= n < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be a non-negative 64-bit integer")
    return n


def _query_flags(p):
    p.add_argument("--treatment", help="comma-separated treatment variables")
    p.add_argument("--outcome", help="comma-separated outcome variables")
    p.add_argument("--given", help="conditioning assignment, e.g. A=1,B=0")
    p.add_argument("--query", help="query file with treatment:/outcome:/given: lines")
    p.add_argument("--json", help="write the estimand tree(s) as JSON here")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="causalperf", description="Causal analysis of configurable-system performance data.")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("discover", help="learn a causal graph from measurements")
    p.add_argument("--data", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--algo", choices=["pc", "fci", "PC", "FCI"], default="pc")
    p.add_argument("--alpha", type=_alpha, default=0.01)
    p.add_argument("--max-cond-size", type=int, default=None)
    p.add_argument("--unstable", action="store_true", help="classic order-dependent PC skeleton")
    p.add_argument("--workers", type=_positive, default=1)
    p.add_argument("--ci-test", choices=["auto", "g_squared", "fisher_z", "fisher_z_rank"], default="auto")
    p.add_argument("--bk", help="background knowledge file")
    p.add_argument("--out", help="graph output file")
    p.add_argument("--dot", help="DOT output file")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("identify", help="identify P(y | do(x)) in a graph")
    p.add_argument("--graph", required=True)
    _query_flags(p)
    p.add_argument("--statistical", action="store_true", help="query P(y | x) instead of P(y | do(x))")
    p.add_argument("--data", help="estimate the identified effect on this CSV")
    p.add_argument("--meta")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("transport", help="transport a relation from a source to a target environment")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--s-nodes", default="", help="nodes whose mechanisms may differ")
    _query_flags(p)
    p.add_argument("--statistical", action="store_true")
    p.add_argument("--source-data", help="source experimental CSV (treatment randomized)")
    p.add_argument("--target-data", help="target observational CSV")
    p.add_argument("--meta")
    p.set_defaults(func=cmd_transport)

    p = sub.add_parser("recover", help="test s-recoverability under selection bias")
    p.add_argument("--graph", required=True)
    p.add_argument("--selection", required=True)
    p.add_argument("--x", default="")
    p.add_argument("--y", required=True)
    p.add_argument("--report", action="store_true", help="also tabulate every option/performance pair")
    p.set_defaults(func=cmd_recover)

    p = sub.add_parser("simulate", help="sample a synthetic configurable system")
    p.add_argument("--spec", required=True)
    p.add_argument("--n", type=_positive, required=True)
    p.add_argument("--seed", type=_seed, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--meta-out")
    p.add_argument("--truth")
    p.add_argument("--scm-out")
    p.add_argument("--selection")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dsep", help="graphical separation query")
    p.add_argument("--graph", required=True)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True)
    p.add_argument("--given", default="")
    p.set_defaults(func=cmd_dsep)

    p = sub.add_parser("estimate", help="conditional summaries and adjustment estimates")
    p.add_argument("--data", required=True)
    p.add_argument("--meta", required=True)
    p.add_argument("--outcome", required=True)
    p.add_argument("--given")
    p.add_argument("--treatment")
    p.add_argument("--adjust", default="")
    p.add_argument("--smoothing", type=float, default=0.0)
    p.add_argument("--json")
    p.set_defaults(func=cmd_estimate)
    return ap


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if not getattr(args, "command", None):
            raise UsageError("missing command")
        args.func(args, stdout)
    except UsageError as exc:
        stderr.write(f"usage error: {exc}\n")
        return EXIT_USAGE
    except DegenerateInputError as exc:
        stderr.write(f"degenerate statistics: {exc}\n")
        return EXIT_DEGENERATE
    except CausalPerfError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    return EXIT_OK


def main():  # pragma: no cover - console entry point
    sys.exit(run())
