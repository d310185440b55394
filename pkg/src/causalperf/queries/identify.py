"""Identification of interventional queries: Rule 2, back-door sets and the complete ID procedure."""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable

from ..errors import InputError
from ..graph import ARROW, TAIL, GraphKind, MixedGraph, NodeRole, descendants, mutilate, separated
from .estimand import ProbTerm, Product, Quotient, Sum, rename_bound, simplify

__all__ = [
    "CausalQuery",
    "Hedge",
    "IdentificationResult",
    "ADMG",
    "latent_projection",
    "rule2_applies",
    "backdoor_set",
    "id_effect",
    "IDENTIFIED",
    "NOT_IDENTIFIED",
]

IDENTIFIED = "identified"
NOT_IDENTIFIED = "not_identified"


def _set(x) -> frozenset:
    if x is None:
        return frozenset()
    if isinstance(x, str):
        return frozenset([x])
    return frozenset(x)


@dataclass(frozen=True)
class CausalQuery:
    """``P(outcome | do(treatment), conditioning)``; ``interventional=False`` drops the ``do``."""

    treatment: frozenset
    outcome: frozenset
    conditioning: frozenset = frozenset()
    interventional: bool = True

    def __post_init__(self):
        t, o, c = _set(self.treatment), _set(self.outcome), _set(self.conditioning)
        object.__setattr__(self, "treatment", t)
        object.__setattr__(self, "outcome", o)
        object.__setattr__(self, "conditioning", c)
        if not o:
            raise InputError("a query needs a nonempty outcome set")
        if self.interventional and not t:
            raise InputError("an interventional query needs a nonempty treatment set")
        if t & o or t & c or o & c:
            raise InputError("treatment, outcome and conditioning sets must be disjoint")

    def variables(self) -> frozenset:
        return self.treatment | self.outcome | self.conditioning

    def as_term(self) -> ProbTerm:
        if self.interventional:
            return ProbTerm(tuple(self.outcome), tuple(self.conditioning), tuple(self.treatment))
        return ProbTerm(tuple(self.outcome), tuple(self.conditioning | self.treatment))


@dataclass(frozen=True)
class Hedge:
    """Two nested C-forests ``f_prime`` inside ``f`` that witness non-identifiability."""

    f: frozenset
    f_prime: frozenset

    def describe(self) -> str:
        return f"hedge F={{{', '.join(sorted(self.f))}}} F'={{{', '.join(sorted(self.f_prime))}}}"


@dataclass(frozen=True)
class IdentificationResult:
    status: str
    estimand: object = None
    witness: Hedge | None = None
    method: str = ""

    def __post_init__(self):
        if (self.estimand is None) == (self.witness is None):
            raise ValueError("exactly one of estimand / witness must be present")

    @property
    def identified(self) -> bool:
        return self.status == IDENTIFIED


# ---------------------------------------------------------------------------
# ADMG allowing a directed and a bidirected edge on the same pair


class ADMG:
    """Directed parent sets plus a set of bidirected pairs over ``nodes``."""

    def __init__(self, nodes: Iterable[str], parents: dict, bidirected: Iterable):
        self.nodes = frozenset(nodes)
        self.pa = {v: frozenset(parents.get(v, ())) & self.nodes for v in self.nodes}
        self.bi = frozenset(frozenset(p) for p in bidirected if set(p) <= self.nodes and len(set(p)) == 2)
        self.ch = {v: set() for v in self.nodes}
        for v, ps in self.pa.items():
            for p in ps:
                self.ch[p].add(v)
        self.sp = {v: set() for v in self.nodes}
        for p in self.bi:
            a, b = tuple(p)
            self.sp[a].add(b)
            self.sp[b].add(a)

    @classmethod
    def from_graph(cls, g: MixedGraph) -> "ADMG":
        return latent_projection(g)

    def sub(self, keep) -> "ADMG":
        keep = frozenset(keep)
        return ADMG(keep, {v: self.pa[v] & keep for v in keep}, [p for p in self.bi if p <= keep])

    def cut_incoming(self, xs) -> "ADMG":
        xs = frozenset(xs)
        pa = {v: (frozenset() if v in xs else self.pa[v]) for v in self.nodes}
        return ADMG(self.nodes, pa, [p for p in self.bi if not p & xs])

    def cut_outgoing(self, xs) -> "ADMG":
        xs = frozenset(xs)
        pa = {v: self.pa[v] - xs for v in self.nodes}
        return ADMG(self.nodes, pa, self.bi)

    def ancestors(self, ys) -> frozenset:
        out, stack = set(ys), list(ys)
        while stack:
            v = stack.pop()
            for p in self.pa[v]:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return frozenset(out)

    def districts(self) -> list[frozenset]:
        seen, out = set(), []
        for v in sorted(self.nodes):
            if v in seen:
                continue
            comp, stack = {v}, [v]
            while stack:
                w = stack.pop()
                for u in self.sp[w]:
                    if u not in comp:
                        comp.add(u)
                        stack.append(u)
            seen |= comp
            out.append(frozenset(comp))
        return out

    def topological(self) -> list[str]:
        indeg = {v: len(self.pa[v]) for v in self.nodes}
        ready = sorted(v for v, d in indeg.items() if d == 0)
        out = []
        while ready:
            v = ready.pop(0)
            out.append(v)
            for c in sorted(self.ch[v]):
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
                    ready.sort()
        if len(out) != len(self.nodes):
            raise InputError("directed part of the graph is cyclic")
        return out

    def to_dag(self) -> MixedGraph:
        """Canonical DAG: one explicit latent parent per bidirected pair."""
        arcs = [(p, v) for v, ps in self.pa.items() for p in ps]
        roles = {}
        taken = set(self.nodes)
        for i, pair in enumerate(sorted(tuple(sorted(p)) for p in self.bi)):
            name = f"__bi{i}"
            while name in taken:
                name = "_" + name
            taken.add(name)
            roles[name] = NodeRole.LATENT
            arcs += [(name, pair[0]), (name, pair[1])]
        return MixedGraph.from_arcs(arcs, nodes=sorted(taken), roles=roles, kind=GraphKind.DAG)

    def separated(self, x, y, z=()) -> bool:
        return separated(self.to_dag(), set(x), set(y), set(z))


def latent_projection(g: MixedGraph) -> ADMG:
    """Project latent-role nodes out of a DAG/ADMG.

    Observed ``a -> b`` when a directed path from ``a`` to ``b`` has only
    latent inner nodes; ``a <-> b`` when they share a latent source (or a
    bidirected edge) reachable along latent-only directed paths.
    """
    if g.kind not in (GraphKind.DAG, GraphKind.ADMG, GraphKind.SELECTION_DIAGRAM):
        raise InputError(f"identification needs a DAG or ADMG, got {g.kind.value}")
    if any(e.mark_a is TAIL and e.mark_b is TAIL for e in g.edges):
        raise InputError("identification does not accept undirected edges")
    latent = set(g.nodes_with_role(NodeRole.LATENT))
    obs = [v for v in g.nodes if v not in latent]
    # make every bidirected edge an explicit latent so projection only walks directed edges
    parents = {v: set(g.parents(v)) for v in g.nodes}
    extra = {}
    for e in g.edges:
        if e.mark_a is ARROW and e.mark_b is ARROW:
            name = f"__bi_{e.a}_{e.b}"
            extra[name] = (e.a, e.b)
            parents[e.a].add(name)
            parents[e.b].add(name)
            parents[name] = set()
    latent |= set(extra)
    children = {v: set() for v in parents}
    for v, ps in parents.items():
        for p in ps:
            children[p].add(v)

    def reach_through_latents(src):
        """Observed nodes reached from ``src`` by directed paths whose inner nodes are latent."""
        hit, stack, seen = set(), list(children[src]), set()
        while stack:
            w = stack.pop()
            if w in seen:
                continue
            seen.add(w)
            if w in latent:
                stack.extend(children[w])
            else:
                hit.add(w)
        return hit

    pa = {v: set() for v in obs}
    for a in obs:
        for b in reach_through_latents(a):
            pa[b].add(a)
    bi = set()
    for lat in latent:
        reached = sorted(reach_through_latents(lat))
        for a, b in combinations(reached, 2):
            bi.add(frozenset((a, b)))
    return ADMG(obs, pa, bi)


# ---------------------------------------------------------------------------
# criteria


def _check_query(g: MixedGraph, q: CausalQuery):
    if g.kind not in (GraphKind.DAG, GraphKind.ADMG, GraphKind.SELECTION_DIAGRAM):
        raise InputError(f"causal queries need a DAG or ADMG, got {g.kind.value}")
    unknown = q.variables() - set(g.nodes)
    if unknown:
        raise InputError(f"unknown node(s): {', '.join(sorted(unknown))}")
    hidden = q.variables() & set(g.nodes_with_role(NodeRole.LATENT))
    if hidden:
        raise InputError(f"query mentions latent node(s): {', '.join(sorted(hidden))}")


def rule2_applies(g: MixedGraph, q: CausalQuery) -> bool:
    """Whether ``X`` and ``Y`` are separated given the conditioning set once ``X``'s outgoing edges are cut."""
    _check_query(g, q)
    return separated(mutilate(g, cut_outgoing=q.treatment), q.treatment, q.outcome, q.conditioning)


def backdoor_set(g: MixedGraph, q: CausalQuery) -> frozenset | None:
    """Smallest (then lexicographically first) back-door admissible set, or ``None``."""
    _check_query(g, q)
    x, y = q.treatment, q.outcome
    latent = set(g.nodes_with_role(NodeRole.LATENT)) | set(g.nodes_with_role(NodeRole.S_NODE))
    desc = descendants(g, x)
    if q.conditioning & desc:
        return None
    cands = sorted(set(g.nodes) - desc - latent - x - y - q.conditioning)
    cut = mutilate(g, cut_outgoing=x)
    for k in range(len(cands) + 1):
        for z in combinations(cands, k):
            if separated(cut, x, y, set(z) | q.conditioning):
                return frozenset(z)
    return None


# ---------------------------------------------------------------------------
# the ID recursion


class _NotIdentified(Exception):
    def __init__(self, hedge: Hedge):
        self.hedge = hedge


def _conditional(p, pvars: frozenset, target, given: Iterable[str]):
    """``P(target | given)`` under the current distribution ``p`` over ``pvars``."""
    given = frozenset(given)
    if isinstance(p, ProbTerm) and frozenset(p.targets) == pvars and not p.do:
        return ProbTerm((target,), tuple(given | frozenset(p.given)), (), p.world)
    num = Sum(tuple(pvars - given - {target}), p)
    den = Sum(tuple(pvars - given), p)
    return Quotient(num, den)


def _marginal(p, pvars: frozenset, keep: frozenset):
    drop = pvars - keep
    if not drop:
        return p
    if isinstance(p, ProbTerm) and frozenset(p.targets) == pvars and not p.do:
        return ProbTerm(tuple(keep), p.given, (), p.world)
    return Sum(tuple(drop), p)


def _id(y: frozenset, x: frozenset, p, pvars: frozenset, g: ADMG):
    v = g.nodes
    # line 1
    if not x:
        return _marginal(p, pvars, y)
    # line 2
    an = g.ancestors(y)
    if an != v:
        return _id(y, x & an, _marginal(p, pvars, an), an, g.sub(an))
    # line 3
    w = (v - x) - g.cut_incoming(x).ancestors(y)
    if w:
        # the inner result does not depend on w; average it out so w stays bound
        inner = _id(y, x | w, p, pvars, g)
        return Sum(tuple(w), Product((_marginal(p, pvars, w), inner)))
    # line 4
    rest = g.sub(v - x)
    comps = rest.districts()
    if len(comps) > 1:
        factors = tuple(_id(s, v - s, p, pvars, g) for s in comps)
        return Sum(tuple(v - (y | x)), Product(factors))
    s = comps[0]
    full = g.districts()
    # line 5
    if len(full) == 1 and full[0] == v:
        raise _NotIdentified(Hedge(v, s))
    order = g.topological()
    pos = {n: i for i, n in enumerate(order)}
    # line 6
    if s in full:
        factors = tuple(_conditional(p, pvars, n, [m for m in order if pos[m] < pos[n]])
                        for n in sorted(s, key=pos.__getitem__))
        return Sum(tuple(s - y), Product(factors))
    # line 7
    big = next(c for c in full if s < c)
    factors = []
    for n in sorted(big, key=pos.__getitem__):
        before = [m for m in order if pos[m] < pos[n]]
        factors.append(_conditional(p, pvars, n, before))
    # the new distribution is over `big`; values of earlier nodes outside it stay fixed
    return _id(y, x & big, Product(tuple(factors)), big, g.sub(big))


def _idc(y: frozenset, x: frozenset, z: frozenset, g: ADMG):
    for zi in sorted(z):
        mut = g.cut_incoming(x).cut_outgoing({zi})
        if mut.separated(y, {zi}, x | (z - {zi})):
            return _idc(y, x | {zi}, z - {zi}, g)
    base = ProbTerm(tuple(g.nodes))
    joint = _id(y | z, x, base, g.nodes, g)
    if not z:
        return joint
    return Quotient(joint, Sum(tuple(y), joint))


def id_effect(g: MixedGraph, q: CausalQuery) -> IdentificationResult:
    """Identify ``P(y | do(x), c)`` from the observational distribution.

    Rule 2 is tried first and, when it applies, the answer is the plain
    conditional ``P(y | x, c)``. Otherwise latent nodes are projected out
    and the ID recursion (with the conditional extension) runs; failure
    returns the hedge that blocked it.
    """
    _check_query(g, q)
    if not q.interventional:
        return IdentificationResult(IDENTIFIED, q.as_term(), method="observational")
    if g.kind is GraphKind.SELECTION_DIAGRAM:
        raise InputError("run identification on the shared graph, not on the selection diagram")
    if rule2_applies(g, q):
        return IdentificationResult(IDENTIFIED, ProbTerm(tuple(q.outcome), tuple(q.treatment | q.conditioning)),
                                    method="rule2")
    admg = latent_projection(g)
    admg.topological()
    try:
        raw = _idc(q.outcome, q.treatment, q.conditioning, admg)
    except _NotIdentified as exc:
        return IdentificationResult(NOT_IDENTIFIED, witness=exc.hedge, method="id")
    est = rename_bound(simplify(raw), q.variables())
    return IdentificationResult(IDENTIFIED, est, method="id")
