"""Mixed graphs with endpoint marks.

One representation covers DAGs, CPDAGs, ADMGs, MAGs, PAGs and selection
diagrams: every edge is an unordered node pair carrying one mark per
endpoint (tail, arrow or circle). ``g.mark(u, v)`` is the mark at ``v`` on
the edge between ``u`` and ``v``, so ``u -> v`` reads
``mark(v, u) == TAIL and mark(u, v) == ARROW``.

Graphs are immutable values. Algorithms that orient edges step by step work
on a :class:`MarkTable` and freeze the result.
"""
from __future__ import annotations

import re
from collections import deque
from enum import Enum
from itertools import combinations
from typing import Iterable, Mapping, NamedTuple

from .errors import GraphParseError, InputError

__all__ = [
    "EdgeMark",
    "NodeRole",
    "GraphKind",
    "Edge",
    "MixedGraph",
    "MarkTable",
    "TAIL",
    "ARROW",
    "CIRCLE",
    "separated",
    "anterior_set",
    "ancestors",
    "descendants",
    "topological_order",
    "mutilate",
    "cpdag_of",
    "meek_rules",
    "mag_of",
    "is_ancestral",
    "is_maximal",
    "is_chordal",
    "detect_selection_bias",
    "to_text",
    "from_text",
    "to_dot",
]

NAME_RE = re.compile(r"^[A-Za-z0-9_.\-]+$")


class EdgeMark(str, Enum):
    TAIL = "t"
    ARROW = "a"
    CIRCLE = "c"

    def __repr__(self):
        return f"EdgeMark.{self.name}"


TAIL = EdgeMark.TAIL
ARROW = EdgeMark.ARROW
CIRCLE = EdgeMark.CIRCLE


class NodeRole(str, Enum):
    OPTION = "option"
    PERFORMANCE = "performance"
    LATENT = "latent"
    S_NODE = "s_node"
    SELECTION_VAR = "selection_var"


class GraphKind(str, Enum):
    DAG = "DAG"
    CPDAG = "CPDAG"
    ADMG = "ADMG"
    MAG = "MAG"
    PAG = "PAG"
    SELECTION_DIAGRAM = "SelectionDiagram"


class Edge(NamedTuple):
    """Edge ``a *-* b`` with ``a < b``; ``mark_a`` sits at ``a``, ``mark_b`` at ``b``."""

    a: str
    b: str
    mark_a: EdgeMark
    mark_b: EdgeMark

    def __str__(self):
        return f"{self.a} {self.mark_a.value}-{self.mark_b.value} {self.b}"


def _canonical(a, b, ma, mb):
    if a < b:
        return Edge(a, b, EdgeMark(ma), EdgeMark(mb))
    return Edge(b, a, EdgeMark(mb), EdgeMark(ma))


def _check_nodes(g, nodes):
    missing = [v for v in nodes if v not in g._marks]
    if missing:
        raise InputError(f"unknown node(s): {', '.join(sorted(map(str, missing)))}")


def _as_set(x) -> frozenset:
    if x is None:
        return frozenset()
    if isinstance(x, str):
        return frozenset([x])
    return frozenset(x)


class MixedGraph:
    """Immutable mixed graph.

    Parameters
    ----------
    nodes : iterable of str
    edges : iterable of ``(a, b, mark_a, mark_b)``
        Marks may be :class:`EdgeMark` values or their one-letter codes.
    kind : GraphKind or str
    roles : mapping node -> NodeRole, optional
    """

    __slots__ = ("_nodes", "_marks", "_kind", "_roles", "_edges", "_hash")

    def __init__(self, nodes: Iterable[str] = (), edges: Iterable = (), kind="ADMG",
                 roles: Mapping[str, NodeRole] | None = None):
        node_list = sorted(set(nodes))
        for v in node_list:
            if not isinstance(v, str) or not NAME_RE.match(v):
                raise InputError(f"invalid node name {v!r}")
        marks: dict[str, dict[str, EdgeMark]] = {v: {} for v in node_list}
        for e in edges:
            a, b, ma, mb = e
            if a not in marks or b not in marks:
                raise InputError(f"edge {a!r}-{b!r} references an unknown node")
            if a == b:
                raise InputError(f"self-loop at {a!r}")
            if b in marks[a]:
                raise InputError(f"more than one edge between {a!r} and {b!r}")
            marks[a][b] = EdgeMark(mb)
            marks[b][a] = EdgeMark(ma)
        self._nodes = tuple(node_list)
        self._marks = marks
        self._kind = GraphKind(kind)
        self._roles = {v: NodeRole(r) for v, r in sorted((roles or {}).items())}
        for v in self._roles:
            if v not in marks:
                raise InputError(f"role given for unknown node {v!r}")
        self._edges = None
        self._hash = None
        _validate(self)

    # ---------------------------------------------------------------- builders
    @classmethod
    def from_arcs(cls, directed=(), bidirected=(), undirected=(), nodes=(), kind=None, roles=None):
        """Build from ``(u, v)`` pairs. Kind defaults to DAG when only arcs are given."""
        nodes = set(nodes)
        edges = []
        for u, v in directed:
            edges.append((u, v, TAIL, ARROW))
        for u, v in bidirected:
            edges.append((u, v, ARROW, ARROW))
        for u, v in undirected:
            edges.append((u, v, TAIL, TAIL))
        for u, v, *_ in edges:
            nodes.update((u, v))
        if kind is None:
            kind = GraphKind.DAG if not bidirected and not undirected else GraphKind.ADMG
            if undirected:
                kind = GraphKind.MAG
        return cls(nodes, edges, kind=kind, roles=roles)

    def replace(self, nodes=None, edges=None, kind=None, roles=None) -> "MixedGraph":
        return MixedGraph(
            self._nodes if nodes is None else nodes,
            self.edges if edges is None else edges,
            kind=self._kind if kind is None else kind,
            roles=self._roles if roles is None else roles,
        )

    # -------------------------------------------------------------- accessors
    @property
    def nodes(self) -> tuple[str, ...]:
        return self._nodes

    @property
    def kind(self) -> GraphKind:
        return self._kind

    @property
    def roles(self) -> dict[str, NodeRole]:
        return dict(self._roles)

    def role(self, v):
        return self._roles.get(v)

    def nodes_with_role(self, role) -> tuple[str, ...]:
        role = NodeRole(role)
        return tuple(v for v in self._nodes if self._roles.get(v) == role)

    @property
    def edges(self) -> tuple[Edge, ...]:
        if self._edges is None:
            out = []
            for a in self._nodes:
                for b, mb in self._marks[a].items():
                    if a < b:
                        out.append(Edge(a, b, self._marks[b][a], mb))
            self._edges = tuple(sorted(out))
        return self._edges

    def __contains__(self, v):
        return v in self._marks

    def __len__(self):
        return len(self._nodes)

    def adjacent(self, u, v) -> bool:
        return v in self._marks.get(u, ())

    def neighbors(self, v) -> tuple[str, ...]:
        return tuple(sorted(self._marks[v]))

    def mark(self, u, v) -> EdgeMark:
        """Mark at ``v`` on the edge ``u *-* v``."""
        return self._marks[u][v]

    def edge(self, u, v) -> Edge | None:
        if v not in self._marks.get(u, ()):
            return None
        return _canonical(u, v, self._marks[v][u], self._marks[u][v])

    def is_directed(self, u, v) -> bool:
        """``u -> v``."""
        m = self._marks[u]
        return v in m and m[v] is ARROW and self._marks[v][u] is TAIL

    def parents(self, v) -> set[str]:
        return {u for u, m in self._marks[v].items() if m is TAIL and self._marks[u][v] is ARROW}

    def children(self, v) -> set[str]:
        return {u for u, m in self._marks[v].items() if m is ARROW and self._marks[u][v] is TAIL}

    def spouses(self, v) -> set[str]:
        return {u for u, m in self._marks[v].items() if m is ARROW and self._marks[u][v] is ARROW}

    def undirected_neighbors(self, v) -> set[str]:
        return {u for u, m in self._marks[v].items() if m is TAIL and self._marks[u][v] is TAIL}

    def has_circles(self) -> bool:
        return any(m is CIRCLE for nb in self._marks.values() for m in nb.values())

    def subgraph(self, keep) -> "MixedGraph":
        keep = _as_set(keep)
        _check_nodes(self, keep)
        edges = [e for e in self.edges if e.a in keep and e.b in keep]
        roles = {v: r for v, r in self._roles.items() if v in keep}
        return MixedGraph(keep, edges, kind=self._kind, roles=roles)

    # ------------------------------------------------------------- value type
    def __eq__(self, other):
        if not isinstance(other, MixedGraph):
            return NotImplemented
        return (self._nodes == other._nodes and self.edges == other.edges
                and self._kind == other._kind and self._roles == other._roles)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._nodes, self.edges, self._kind, tuple(self._roles.items())))
        return self._hash

    def __repr__(self):
        body = ", ".join(str(e) for e in self.edges)
        return f"MixedGraph({self._kind.value}: nodes={list(self._nodes)}, edges=[{body}])"


# ---------------------------------------------------------------------------
# validation


def _directed_cycle(g: MixedGraph):
    indeg = {v: 0 for v in g.nodes}
    for v in g.nodes:
        for c in g.children(v):
            indeg[c] += 1
    queue = deque(v for v in g.nodes if indeg[v] == 0)
    seen = 0
    while queue:
        v = queue.popleft()
        seen += 1
        for c in g.children(v):
            indeg[c] -= 1
            if indeg[c] == 0:
                queue.append(c)
    return seen != len(g.nodes)


def _validate(g: MixedGraph):
    kind = g.kind
    marks = {m for nb in g._marks.values() for m in nb.values()}
    if CIRCLE in marks and kind is not GraphKind.PAG:
        raise InputError(f"circle marks are only allowed in a PAG, not {kind.value}")
    if NodeRole.S_NODE in g._roles.values() and kind is not GraphKind.SELECTION_DIAGRAM:
        raise InputError("s_node roles only appear in selection diagrams")
    if kind is GraphKind.DAG:
        for e in g.edges:
            if {e.mark_a, e.mark_b} != {TAIL, ARROW}:
                raise InputError(f"DAG edge {e} is not directed")
    if kind in (GraphKind.DAG, GraphKind.ADMG, GraphKind.SELECTION_DIAGRAM):
        for e in g.edges:
            if e.mark_a is TAIL and e.mark_b is TAIL:
                raise InputError(f"{kind.value} may not contain undirected edge {e}")
    if kind is GraphKind.CPDAG:
        for e in g.edges:
            if e.mark_a is ARROW and e.mark_b is ARROW:
                raise InputError(f"CPDAG may not contain bidirected edge {e}")
    if kind is not GraphKind.PAG and _directed_cycle(g):
        raise InputError(f"{kind.value} contains a directed cycle")
    if kind is GraphKind.MAG:
        problem = _ancestral_violation(g)
        if problem:
            raise InputError(problem)
    if kind is GraphKind.SELECTION_DIAGRAM:
        for s in g.nodes_with_role(NodeRole.S_NODE):
            for u in g._marks[s]:
                if not g.is_directed(s, u):
                    raise InputError(f"S-node {s!r} must only have outgoing edges")


def _ancestral_violation(g: MixedGraph):
    for v in g.nodes:
        if g.undirected_neighbors(v) and any(g._marks[u][v] is ARROW for u in g._marks[v]):
            return f"arrowhead at {v!r}, which is an endpoint of an undirected edge"
    ant = {v: anterior_set(g, v) for v in g.nodes}
    for e in g.edges:
        if e.mark_a is ARROW and e.a in ant[e.b]:
            return f"arrowhead at {e.a!r} on {e} but {e.a!r} is anterior to {e.b!r}"
        if e.mark_b is ARROW and e.b in ant[e.a]:
            return f"arrowhead at {e.b!r} on {e} but {e.b!r} is anterior to {e.a!r}"
    return None


def is_ancestral(g: MixedGraph) -> bool:
    """Ancestral conditions: no arrowhead into an anterior node, none at an undirected endpoint."""
    if g.has_circles():
        return False
    return _ancestral_violation(g) is None


def is_maximal(g: MixedGraph) -> bool:
    """True when every non-adjacent pair is m-separated by some set of the other nodes.

    Brute force over conditioning sets; meant for small graphs.
    """
    for a, b in combinations(g.nodes, 2):
        if g.adjacent(a, b):
            continue
        rest = [v for v in g.nodes if v not in (a, b)]
        if not any(separated(g, {a}, {b}, set(z))
                   for k in range(len(rest) + 1) for z in combinations(rest, k)):
            return False
    return True


# ---------------------------------------------------------------------------
# reachability


def ancestors(g: MixedGraph, nodes) -> set[str]:
    """Nodes with a directed path into ``nodes`` (inclusive)."""
    nodes = _as_set(nodes)
    _check_nodes(g, nodes)
    out = set(nodes)
    stack = list(nodes)
    while stack:
        v = stack.pop()
        for p in g.parents(v):
            if p not in out:
                out.add(p)
                stack.append(p)
    return out


def descendants(g: MixedGraph, nodes) -> set[str]:
    nodes = _as_set(nodes)
    _check_nodes(g, nodes)
    out = set(nodes)
    stack = list(nodes)
    while stack:
        v = stack.pop()
        for c in g.children(v):
            if c not in out:
                out.add(c)
                stack.append(c)
    return out


def anterior_set(g: MixedGraph, v) -> set[str]:
    """``v`` plus every node reaching it by directed-toward-``v`` and undirected edges."""
    _check_nodes(g, [v])
    out = {v}
    stack = [v]
    while stack:
        w = stack.pop()
        for u, m_at_w in g._marks[w].items():
            if u in out:
                continue
            # g._marks[w][u] is the mark at u
            if g._marks[w][u] is TAIL and g._marks[u][w] in (ARROW, TAIL):
                out.add(u)
                stack.append(u)
    return out


def topological_order(g: MixedGraph) -> list[str]:
    """Topological order of the directed part, ties broken by name."""
    import heapq

    indeg = {v: len(g.parents(v)) for v in g.nodes}
    heap = [v for v in g.nodes if indeg[v] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        v = heapq.heappop(heap)
        order.append(v)
        for c in sorted(g.children(v)):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(heap, c)
    if len(order) != len(g.nodes):
        raise InputError("graph has a directed cycle")
    return order


def separated(g: MixedGraph, x, y, z=()) -> bool:
    """m-separation of ``x`` and ``y`` given ``z`` (d-separation on DAGs).

    Reachability over walk states ``(node, arrived_with_arrowhead)``; a
    collider passes iff it is an ancestor of ``z``, any other node passes
    iff it is not in ``z``.
    """
    x, y, z = _as_set(x), _as_set(y), _as_set(z)
    _check_nodes(g, x | y | z)
    if x & y or x & z or y & z:
        raise InputError("x, y and z must be disjoint")
    if g.has_circles():
        raise InputError("separation is undefined for graphs with circle marks")
    if not x or not y:
        return True
    an_z = ancestors(g, z)
    marks = g._marks
    seen = set()
    queue = deque()
    for s in x:
        for w, m_at_w in marks[s].items():
            state = (w, m_at_w is ARROW)
            if state not in seen:
                seen.add(state)
                queue.append(state)
    while queue:
        v, into = queue.popleft()
        if v in y:
            return False
        for w, m_at_w in marks[v].items():
            collider = into and marks[w][v] is ARROW
            if collider:
                if v not in an_z:
                    continue
            elif v in z:
                continue
            state = (w, m_at_w is ARROW)
            if state not in seen:
                seen.add(state)
                queue.append(state)
    return True


# ---------------------------------------------------------------------------
# surgery


def mutilate(g: MixedGraph, cut_incoming=(), cut_outgoing=()) -> MixedGraph:
    """Remove edges with an arrowhead at ``cut_incoming`` and edges directed out of ``cut_outgoing``."""
    cin, cout = _as_set(cut_incoming), _as_set(cut_outgoing)
    _check_nodes(g, cin | cout)
    keep = []
    for e in g.edges:
        if (e.a in cin and e.mark_a is ARROW) or (e.b in cin and e.mark_b is ARROW):
            continue
        if (e.a in cout and e.mark_a is TAIL and e.mark_b is ARROW) or (
                e.b in cout and e.mark_b is TAIL and e.mark_a is ARROW):
            continue
        keep.append(e)
    return g.replace(edges=keep)




# ---------------------------------------------------------------------------
# mutable working copy used by orientation procedures


class MarkTable:
    """Mutable ``mark[u][v]`` table (mark at ``v`` on edge ``u *-* v``)."""

    def __init__(self, nodes=(), edges=()):
        self.nodes = sorted(nodes)
        self.m: dict[str, dict[str, EdgeMark]] = {v: {} for v in self.nodes}
        for a, b, ma, mb in edges:
            self.add(a, b, ma, mb)

    @classmethod
    def of(cls, g: MixedGraph) -> "MarkTable":
        return cls(g.nodes, g.edges)

    @classmethod
    def complete(cls, nodes, mark=CIRCLE) -> "MarkTable":
        t = cls(nodes)
        for a, b in combinations(t.nodes, 2):
            t.add(a, b, mark, mark)
        return t

    def copy(self) -> "MarkTable":
        t = MarkTable()
        t.nodes = list(self.nodes)
        t.m = {v: dict(nb) for v, nb in self.m.items()}
        return t

    def add(self, a, b, ma, mb):
        self.m[a][b] = EdgeMark(mb)
        self.m[b][a] = EdgeMark(ma)

    def remove(self, a, b):
        del self.m[a][b]
        del self.m[b][a]

    def adjacent(self, a, b) -> bool:
        return b in self.m[a]

    def adj(self, v) -> list[str]:
        return sorted(self.m[v])

    def mark(self, a, b) -> EdgeMark:
        return self.m[a][b]

    def set_mark(self, a, b, mark):
        """Set the mark at ``b`` on edge ``a *-* b``."""
        self.m[a][b] = EdgeMark(mark)

    def directed(self, a, b) -> bool:
        return b in self.m[a] and self.m[a][b] is ARROW and self.m[b][a] is TAIL

    def undirected(self, a, b) -> bool:
        return b in self.m[a] and self.m[a][b] is TAIL and self.m[b][a] is TAIL

    def reset(self, mark=CIRCLE):
        for a in self.m:
            for b in self.m[a]:
                self.m[a][b] = mark

    def edges(self):
        for a in self.nodes:
            for b in sorted(self.m[a]):
                if a < b:
                    yield Edge(a, b, self.m[b][a], self.m[a][b])

    def freeze(self, kind, roles=None) -> MixedGraph:
        return MixedGraph(self.nodes, list(self.edges()), kind=kind, roles=roles)


def meek_rules(t: MarkTable) -> bool:
    """Apply Meek's rules R1-R4 to a tail/arrow mark table until fixpoint.

    Undirected edges are tail-tail. Returns whether anything was oriented.
    """
    any_change = False
    changed = True
    while changed:
        changed = False
        for a in t.nodes:
            for b in t.adj(a):
                if not t.undirected(a, b):
                    continue
                if _meek_orients(t, a, b):
                    t.set_mark(a, b, ARROW)
                    changed = any_change = True
    return any_change


def _meek_orients(t: MarkTable, a, b) -> bool:
    """Whether some rule orients the undirected edge ``a - b`` as ``a -> b``."""
    adj_a = t.m[a]
    # R1: c -> a - b, c and b non-adjacent
    for c in adj_a:
        if c != b and t.directed(c, a) and not t.adjacent(c, b):
            return True
    # R2: a -> c -> b
    for c in adj_a:
        if c != b and t.directed(a, c) and t.directed(c, b):
            return True
    # R3: a - c -> b, a - d -> b, c and d non-adjacent
    cands = [c for c in adj_a if c != b and t.undirected(a, c) and t.directed(c, b)]
    for c, d in combinations(cands, 2):
        if not t.adjacent(c, d):
            return True
    # R4: a - c -> d -> b, a adjacent d, c and b non-adjacent
    for c in adj_a:
        if c == b or not t.undirected(a, c) or t.adjacent(c, b):
            continue
        for d in t.m[c]:
            if d not in (a, b) and t.directed(c, d) and t.directed(d, b) and t.adjacent(a, d):
                return True
    return False


def cpdag_of(g: MixedGraph) -> MixedGraph:
    """Completed PDAG of a DAG: v-structures directed, then Meek closure."""
    if g.kind is not GraphKind.DAG:
        raise InputError(f"cpdag_of needs a DAG, got {g.kind.value}")
    t = MarkTable(g.nodes, [(e.a, e.b, TAIL, TAIL) for e in g.edges])
    for c in g.nodes:
        pars = sorted(g.parents(c))
        for a, b in combinations(pars, 2):
            if not g.adjacent(a, b):
                t.set_mark(a, c, ARROW)
                t.set_mark(b, c, ARROW)
    meek_rules(t)
    return t.freeze(GraphKind.CPDAG, roles=g.roles)


def mag_of(g: MixedGraph, latents=(), selection=()) -> MixedGraph:
    """MAG over the observed nodes of a DAG with latent and selection variables.

    Observed ``a``, ``b`` are adjacent iff they are d-connected given
    ``(An({a, b} | S) & O) - {a, b}`` together with ``S``. The mark at ``b``
    is a tail iff ``b`` is an ancestor of ``{a} | S``.
    """
    if g.kind is not GraphKind.DAG:
        raise InputError(f"mag_of needs a DAG, got {g.kind.value}")
    lat, sel = _as_set(latents), _as_set(selection)
    _check_nodes(g, lat | sel)
    if lat & sel:
        raise InputError("latent and selection sets must be disjoint")
    obs = [v for v in g.nodes if v not in lat and v not in sel]
    if not obs:
        raise InputError("no observed nodes remain")
    anc = {v: ancestors(g, {v} | sel) for v in obs}
    edges = []
    for a, b in combinations(obs, 2):
        cond = (ancestors(g, {a, b} | sel) - lat - sel - {a, b}) | sel
        if separated(g, {a}, {b}, cond):
            continue
        ma = TAIL if a in anc[b] else ARROW
        mb = TAIL if b in anc[a] else ARROW
        edges.append((a, b, ma, mb))
    roles = {v: r for v, r in g.roles.items() if v in obs}
    return MixedGraph(obs, edges, kind=GraphKind.MAG, roles=roles)


# ---------------------------------------------------------------------------
# chordality and selection-bias detection


def _mcs_order(adj: Mapping[str, set]) -> list[str]:
    weight = {v: 0 for v in adj}
    order = []
    left = set(adj)
    while left:
        v = min(left, key=lambda u: (-weight[u], u))
        order.append(v)
        left.discard(v)
        for w in adj[v]:
            if w in left:
                weight[w] += 1
    return order


def is_chordal(adj: Mapping[str, set]) -> bool:
    """Chordality of an undirected graph given as an adjacency mapping (maximum-cardinality search)."""
    order = _mcs_order(adj)
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        earlier = [w for w in adj[v] if pos[w] < pos[v]]
        if len(earlier) < 2:
            continue
        u = max(earlier, key=pos.__getitem__)
        if any(w != u and w not in adj[u] for w in earlier):
            return False
    return True


def detect_selection_bias(g: MixedGraph) -> list[frozenset]:
    """Connected components of undirected (tail-tail) edges that are not chordal."""
    adj = {v: g.undirected_neighbors(v) for v in g.nodes}
    seen, flagged = set(), []
    for v in g.nodes:
        if v in seen or not adj[v]:
            continue
        comp, stack = {v}, [v]
        while stack:
            w = stack.pop()
            for u in adj[w]:
                if u not in comp:
                    comp.add(u)
                    stack.append(u)
        seen |= comp
        if not is_chordal({w: adj[w] & comp for w in comp}):
            flagged.append(frozenset(comp))
    return flagged


# ---------------------------------------------------------------------------
# text and DOT formats


def to_text(g: MixedGraph) -> bytes:
    lines = [f"kind: {g.kind.value}", f"nodes: {','.join(g.nodes)}"]
    for v, r in g.roles.items():
        lines.append(f"role: {v}={r.value}")
    for e in g.edges:
        lines.append(f"edge: {e.a} {e.mark_a.value}-{e.mark_b.value} {e.b}")
    return ("\n".join(lines) + "\n").encode()


_EDGE_RE = re.compile(r"^(\S+)\s+([tac])-([tac])\s+(\S+)$")


def from_text(data) -> MixedGraph:
    """Parse the line-oriented graph document written by :func:`to_text`.

    ``kind:`` is optional; without it the kind is DAG when every edge is
    directed and ADMG otherwise (PAG when circles occur, MAG when undirected
    edges occur).
    """
    text = data.decode() if isinstance(data, (bytes, bytearray)) else str(data)
    nodes = None
    kind = None
    roles, edges = {}, []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise GraphParseError("expected 'key: value'", line=lineno)
        key, _, value = line.partition(":")
        key, value = key.strip(), value.strip()
        if key == "kind":
            try:
                kind = GraphKind(value)
            except ValueError:
                raise GraphParseError(f"unknown graph kind {value!r}", line=lineno, field="kind") from None
        elif key == "nodes":
            if nodes is not None:
                raise GraphParseError("duplicate nodes header", line=lineno, field="nodes")
            nodes = [n.strip() for n in value.split(",") if n.strip()]
            for n in nodes:
                if not NAME_RE.match(n):
                    raise GraphParseError(f"invalid node name {n!r}", line=lineno, field="nodes")
        elif key == "role":
            name, eq, r = value.partition("=")
            if not eq:
                raise GraphParseError("expected 'role: node=role'", line=lineno, field="role")
            try:
                roles[name.strip()] = NodeRole(r.strip())
            except ValueError:
                raise GraphParseError(f"unknown role {r.strip()!r}", line=lineno, field="role") from None
        elif key == "edge":
            m = _EDGE_RE.match(value)
            if not m:
                raise GraphParseError(f"malformed edge {value!r}", line=lineno, field="edge")
            a, ma, mb, b = m.groups()
            edges.append((a, b, ma, mb, lineno))
        else:
            raise GraphParseError(f"unknown key {key!r}", line=lineno, field=key)
    if nodes is None:
        raise GraphParseError("missing 'nodes:' header", field="nodes")
    known = set(nodes)
    for a, b, _, _, lineno in edges:
        for v in (a, b):
            if v not in known:
                raise GraphParseError(f"edge references undeclared node {v!r}", line=lineno, field="edge")
    if kind is None:
        all_marks = {m for e in edges for m in e[2:4]}
        if "c" in all_marks:
            kind = GraphKind.PAG
        elif any(e[2] == "t" and e[3] == "t" for e in edges):
            kind = GraphKind.MAG
        elif any(e[2] == "a" and e[3] == "a" for e in edges):
            kind = GraphKind.ADMG
        elif NodeRole.S_NODE in roles.values():
            kind = GraphKind.SELECTION_DIAGRAM
        else:
            kind = GraphKind.DAG
    try:
        return MixedGraph(nodes, [e[:4] for e in edges], kind=kind, roles=roles)
    except GraphParseError:
        raise
    except InputError as exc:
        raise GraphParseError(str(exc)) from None


_DOT_HEAD = {TAIL: "none", ARROW: "normal", CIRCLE: "odot"}
_DOT_SHAPE = {
    NodeRole.OPTION: "box",
    NodeRole.PERFORMANCE: "ellipse",
    NodeRole.LATENT: "ellipse, style=dashed",
    NodeRole.S_NODE: "square, style=filled, fillcolor=lightgray",
    NodeRole.SELECTION_VAR: "doublecircle",
}


def to_dot(g: MixedGraph) -> bytes:
    lines = ["digraph G {"]
    for v in g.nodes:
        r = g.role(v)
        attr = f" [shape={_DOT_SHAPE[r]}]" if r is not None else ""
        lines.append(f'  "{v}"{attr};')
    for e in g.edges:
        lines.append(
            f'  "{e.a}" -> "{e.b}" [dir=both, arrowtail={_DOT_HEAD[e.mark_a]}, arrowhead={_DOT_HEAD[e.mark_b]}];'
        )
    lines.append("}")
    return ("\n".join(lines) + "\n").encode()
