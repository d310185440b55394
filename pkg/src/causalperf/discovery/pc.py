"""PC: stable skeleton search, collider orientation and Meek closure."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence

from ..errors import DegenerateInputError, InconsistencyError, InputError
from ..graph import ARROW, TAIL, GraphKind, MarkTable, MixedGraph, _meek_orients
from .knowledge import BackgroundKnowledge

__all__ = [
    "DiscoveryParams",
    "DiscoveryResult",
    "SepSetMap",
    "pc_skeleton",
    "skeleton_search",
    "orient_colliders",
    "meek_closure",
]


@dataclass(frozen=True)
class DiscoveryParams:
    """``max_cond_size=None`` means unlimited; ``pds_max`` caps Possible-D-SEP subsets."""

    alpha: float = 0.01
    max_cond_size: int | None = None
    algorithm: str = "PC"
    stable: bool = True
    pds_max: int = 4
    workers: int = 1
    ci_test: str = "auto"

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise InputError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.max_cond_size is not None and self.max_cond_size < 0:
            raise InputError("max_cond_size must be >= 0")
        if self.pds_max < 0:
            raise InputError("pds_max must be >= 0")
        if self.workers < 1:
            raise InputError("workers must be >= 1")
        algo = self.algorithm.upper()
        if algo not in ("PC", "FCI"):
            raise InputError(f"unknown algorithm {self.algorithm!r}")
        object.__setattr__(self, "algorithm", algo)


class SepSetMap(dict):
    """Unordered pair -> separating set.

    A pair removed by background knowledge rather than by a test maps to
    ``None``; such pairs give no evidence for or against colliders.
    """

    def __setitem__(self, pair, value):
        super().__setitem__(frozenset(pair), None if value is None else frozenset(value))

    def __getitem__(self, pair):
        return super().__getitem__(frozenset(pair))

    def __contains__(self, pair):
        return super().__contains__(frozenset(pair))

    def get(self, pair, default=None):
        return super().get(frozenset(pair), default)


@dataclass
class DiscoveryResult:
    graph: MixedGraph
    sepsets: SepSetMap
    diagnostics: list = field(default_factory=list)
    truncated: bool = False
    n_tests: int = 0


# ---------------------------------------------------------------------------
# skeleton


def _edge_test(test, x, y, cand_x, cand_y, level):
    """First conditioning set of size ``level`` (x side, then y side) yielding independence."""
    seen = set()
    for pool in (cand_x, cand_y):
        if len(pool) < level:
            continue
        for s in combinations(pool, level):
            key = frozenset(s)
            if key in seen:
                continue
            seen.add(key)
            try:
                res = test(x, y, s)
            except DegenerateInputError as exc:
                raise DegenerateInputError(f"testing {x} _||_ {y} | {{{', '.join(s)}}}: {exc}") from None
            if res.independent:
                return key, len(seen)
    return None, len(seen)


def skeleton_search(test: Callable, nodes: Sequence[str], bk: BackgroundKnowledge | None,
                    params: DiscoveryParams) -> tuple[MarkTable, SepSetMap, bool, int]:
    """Shared skeleton phase. Returns (tail-tail table, sepsets, truncated, tests run)."""
    nodes = sorted(nodes)
    if len(nodes) < 2:
        raise InputError("structure learning needs at least two variables")
    if len(set(nodes)) != len(nodes):
        raise InputError("duplicate variable names")
    bk = bk or BackgroundKnowledge()
    bk.check_variables(nodes)
    t = MarkTable.complete(nodes, TAIL)
    sep = SepSetMap()
    for a, b in combinations(nodes, 2):
        if bk.excludes_adjacency(a, b):
            t.remove(a, b)
            sep[(a, b)] = None
    cap = params.max_cond_size
    truncated = False
    n_tests = 0
    level = 0
    pool = ThreadPoolExecutor(params.workers) if params.workers > 1 else None
    try:
        while True:
            if cap is not None and level > cap:
                truncated = any(len(t.m[x]) - 1 >= level or len(t.m[y]) - 1 >= level
                                for x in nodes for y in t.m[x] if not bk.requires_adjacency(x, y))
                break
            frozen = {v: t.adj(v) for v in nodes}
            jobs = []
            for x in nodes:
                for y in frozen[x]:
                    if x < y and not bk.requires_adjacency(x, y):
                        if len(frozen[x]) - 1 >= level or len(frozen[y]) - 1 >= level:
                            jobs.append((x, y))
            if not jobs:
                break
            if params.stable:
                def run(job):
                    x, y = job
                    return _edge_test(test, x, y, [v for v in frozen[x] if v != y],
                                      [v for v in frozen[y] if v != x], level)
                results = list(pool.map(run, jobs)) if pool else [run(j) for j in jobs]
                for (x, y), (s, k) in zip(jobs, results):
                    n_tests += k
                    if s is not None:
                        t.remove(x, y)
                        sep[(x, y)] = s
            else:
                for x, y in jobs:
                    if not t.adjacent(x, y):
                        continue
                    s, k = _edge_test(test, x, y, [v for v in t.adj(x) if v != y],
                                      [v for v in t.adj(y) if v != x], level)
                    n_tests += k
                    if s is not None:
                        t.remove(x, y)
                        sep[(x, y)] = s
            level += 1
    finally:
        if pool:
            pool.shutdown()
    return t, sep, truncated, n_tests


def pc_skeleton(test: Callable, vars: Sequence[str], bk: BackgroundKnowledge | None = None,
                params: DiscoveryParams | None = None) -> tuple[MixedGraph, SepSetMap]:
    """Undirected skeleton and the separating sets of removed pairs."""
    t, sep, _, _ = skeleton_search(test, vars, bk, params or DiscoveryParams())
    return t.freeze(GraphKind.CPDAG), sep


# ---------------------------------------------------------------------------
# orientation


def _reaches(t: MarkTable, src, dst) -> bool:
    """Directed path src -> ... -> dst over the table's directed edges."""
    stack, seen = [src], {src}
    while stack:
        u = stack.pop()
        if u == dst:
            return True
        for w in t.m[u]:
            if w not in seen and t.directed(u, w):
                seen.add(w)
                stack.append(w)
    return False


def _orient(t: MarkTable, a, b, diagnostics, why) -> bool:
    """Orient undirected ``a - b`` as ``a -> b`` unless it would close a directed cycle."""
    if _reaches(t, b, a):
        diagnostics.append(f"{why}: skipped {a} -> {b}, it would create a directed cycle")
        return False
    t.set_mark(a, b, ARROW)
    return True


def _collider_pass(t: MarkTable, sepsets: SepSetMap, diagnostics: list):
    for z in t.nodes:
        for x, y in combinations(t.adj(z), 2):
            if t.adjacent(x, y):
                continue
            s = sepsets.get((x, y))
            if s is None or z in s:
                continue
            for a in (x, y):
                if t.directed(a, z):
                    continue
                if t.directed(z, a):
                    diagnostics.append(f"collider {x} -> {z} <- {y}: kept existing {z} -> {a}")
                    continue
                _orient(t, a, z, diagnostics, f"collider {x} -> {z} <- {y}")


def orient_colliders(skel: MixedGraph | MarkTable, sepsets: SepSetMap, diagnostics: list | None = None,
                     bk: BackgroundKnowledge | None = None) -> MixedGraph:
    """Orient ``x -> z <- y`` for unshielded ``x - z - y`` with ``z`` outside sepset(x, y).

    Background-knowledge orientations are placed first. Triples are then
    visited in lexicographic (z, x, y) order; an edge already pointing the
    other way keeps its first orientation and the clash is appended to
    ``diagnostics``.
    """
    diagnostics = [] if diagnostics is None else diagnostics
    t = skel.copy() if isinstance(skel, MarkTable) else MarkTable.of(skel)
    if bk is not None:
        _apply_knowledge(t, bk, diagnostics)
    _collider_pass(t, sepsets, diagnostics)
    return t.freeze(GraphKind.CPDAG)


def _apply_knowledge(t: MarkTable, bk: BackgroundKnowledge, diagnostics: list):
    for a in t.nodes:
        for b in t.adj(a):
            if bk.forbids(a, b):
                if t.directed(a, b):
                    raise InconsistencyError(f"edge {a} -> {b} contradicts background knowledge")
                if t.undirected(a, b):
                    if bk.forbids(b, a):
                        continue  # required adjacency with both directions ruled out: leave undirected
                    if not _orient(t, b, a, diagnostics, "background knowledge"):
                        raise InconsistencyError(f"background knowledge orientation {b} -> {a} closes a cycle")


def _check_required(t: MarkTable, bk: BackgroundKnowledge):
    for a, b in sorted(bk.required):
        if t.directed(b, a):
            raise InconsistencyError(f"required edge {a} -> {b} was oriented {b} -> {a}")


def meek_closure(pdag: MixedGraph | MarkTable, bk: BackgroundKnowledge | None = None,
                 diagnostics: list | None = None) -> MixedGraph:
    """Background-knowledge orientations followed by Meek's R1-R4 to fixpoint."""
    diagnostics = [] if diagnostics is None else diagnostics
    t = pdag.copy() if isinstance(pdag, MarkTable) else MarkTable.of(pdag)
    for a in t.nodes:
        for b in t.m[a]:
            if t.mark(a, b) not in (TAIL, ARROW):
                raise InputError("meek_closure needs a graph with tail/arrow marks only")
    bk = bk or BackgroundKnowledge()
    _check_required(t, bk)
    _apply_knowledge(t, bk, diagnostics)
    changed = True
    while changed:
        changed = False
        for a in t.nodes:
            for b in t.adj(a):
                if t.undirected(a, b) and _meek_orients(t, a, b):
                    if _orient(t, a, b, diagnostics, "closure"):
                        changed = True
    _check_required(t, bk)
    return t.freeze(GraphKind.CPDAG)
