"""Recoverability of conditional distributions from selection-biased samples."""
from __future__ import annotations

from dataclasses import dataclass

from ..errors import InputError
from ..graph import MixedGraph, NodeRole, separated

__all__ = ["s_recoverable", "RecoverabilityReport", "recoverability_report"]


def _selection_nodes(gs: MixedGraph, s=None) -> frozenset:
    if s is not None:
        s = frozenset([s] if isinstance(s, str) else s)
        unknown = s - set(gs.nodes)
        if unknown:
            raise InputError(f"unknown selection node(s): {', '.join(sorted(unknown))}")
        return s
    found = frozenset(gs.nodes_with_role(NodeRole.SELECTION_VAR))
    if not found:
        raise InputError("the graph has no node with role selection_var")
    return found


def s_recoverable(gs: MixedGraph, x, y, s=None) -> bool:
    """``P(y | x) = P(y | x, S=1)`` holds structurally iff ``S`` and ``y`` are separated by ``x``."""
    x = frozenset([x] if isinstance(x, str) else x)
    y = frozenset([y] if isinstance(y, str) else y)
    if not y:
        raise InputError("outcome set is empty")
    sel = _selection_nodes(gs, s)
    unknown = (x | y) - set(gs.nodes)
    if unknown:
        raise InputError(f"unknown node(s): {', '.join(sorted(unknown))}")
    if (x | y) & sel:
        raise InputError("the selection node cannot appear in the query")
    return separated(gs, sel, y, x)


@dataclass(frozen=True)
class RecoverabilityReport:
    """``pairs[(option, perf)]`` conditions on that option only; ``given_all[perf]`` on every option."""

    pairs: dict
    given_all: dict

    def rows(self):
        for (o, p), ok in sorted(self.pairs.items()):
            yield o, p, ok
        for p, ok in sorted(self.given_all.items()):
            yield "*", p, ok

    def to_text(self) -> str:
        lines = ["option\tperformance\trecoverable"]
        lines += [f"{o}\t{p}\t{str(ok).lower()}" for o, p, ok in self.rows()]
        return "\n".join(lines) + "\n"


def recoverability_report(gs: MixedGraph, options, perf, s=None) -> RecoverabilityReport:
    options = sorted([options] if isinstance(options, str) else options)
    perf = sorted([perf] if isinstance(perf, str) else perf)
    pairs = {(o, p): s_recoverable(gs, {o}, {p}, s) for o in options for p in perf}
    given_all = {p: s_recoverable(gs, set(options), {p}, s) for p in perf}
    return RecoverabilityReport(pairs, given_all)
