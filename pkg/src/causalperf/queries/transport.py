"""Transport of causal and statistical relations between two environments."""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

from ..errors import InputError
from ..graph import GraphKind, MixedGraph, NodeRole, descendants, mutilate, separated
from .estimand import EXPERIMENT, TARGET, ProbTerm, Product, Sum, retag
from .identify import CausalQuery, id_effect

__all__ = [
    "SOURCE_EXPERIMENTS",
    "SOURCE_OBSERVATIONAL",
    "TARGET_OBSERVATIONAL",
    "TransportQuery",
    "build_selection_diagram",
    "s_nodes_of",
    "shared_graph",
    "trivially_transportable",
    "s_admissible_adjustment",
]

SOURCE_EXPERIMENTS = "source_experiments"
SOURCE_OBSERVATIONAL = "source_observational"
TARGET_OBSERVATIONAL = "target_observational"
_ALL = frozenset({SOURCE_EXPERIMENTS, SOURCE_OBSERVATIONAL, TARGET_OBSERVATIONAL})


def build_selection_diagram(shared: MixedGraph, suspects) -> MixedGraph:
    """Add a root S-node ``S_<v>`` pointing at every suspect ``v``."""
    suspects = sorted({suspects} if isinstance(suspects, str) else set(suspects))
    unknown = set(suspects) - set(shared.nodes)
    if unknown:
        raise InputError(f"unknown node(s): {', '.join(sorted(unknown))}")
    if shared.kind not in (GraphKind.DAG, GraphKind.ADMG):
        raise InputError(f"a selection diagram extends a DAG or ADMG, got {shared.kind.value}")
    if not suspects:
        return shared
    taken = set(shared.nodes)
    edges = list(shared.edges)
    roles = shared.roles
    nodes = list(shared.nodes)
    for v in suspects:
        name = f"S_{v}"
        while name in taken:
            name += "_"
        taken.add(name)
        nodes.append(name)
        roles[name] = NodeRole.S_NODE
        edges.append((name, v, "t", "a"))
    return MixedGraph(nodes, edges, kind=GraphKind.SELECTION_DIAGRAM, roles=roles)


def s_nodes_of(diagram: MixedGraph) -> dict[str, str]:
    """S-node -> the node it points at (several targets are comma-joined)."""
    out = {}
    for s in diagram.nodes_with_role(NodeRole.S_NODE):
        out[s] = ",".join(sorted(diagram.children(s)))
    return out


def shared_graph(diagram: MixedGraph) -> MixedGraph:
    s = set(diagram.nodes_with_role(NodeRole.S_NODE))
    if not s:
        return diagram
    keep = [v for v in diagram.nodes if v not in s]
    edges = [e for e in diagram.edges if e.a not in s and e.b not in s]
    roles = {v: r for v, r in diagram.roles.items() if v not in s}
    bidirected = any(e.mark_a.value == "a" and e.mark_b.value == "a" for e in edges)
    kind = GraphKind.ADMG if bidirected else GraphKind.DAG
    return MixedGraph(keep, edges, kind=kind, roles=roles)


@dataclass(frozen=True)
class TransportQuery:
    """A query against the target environment of a selection diagram.

    The source and target share the diagram's structure; ``available``
    lists which data are at hand.
    """

    diagram: MixedGraph
    query: CausalQuery
    available: frozenset = field(default=_ALL)

    def __post_init__(self):
        av = frozenset(self.available)
        bad = av - _ALL
        if bad:
            raise InputError(f"unknown data availability flag(s): {', '.join(sorted(bad))}")
        object.__setattr__(self, "available", av)
        unknown = self.query.variables() - set(self.diagram.nodes)
        if unknown:
            raise InputError(f"unknown node(s): {', '.join(sorted(unknown))}")
        if self.query.variables() & set(self.s_nodes):
            raise InputError("queries cannot mention S-nodes")

    @property
    def s_nodes(self) -> tuple[str, ...]:
        return self.diagram.nodes_with_role(NodeRole.S_NODE)

    @property
    def source_graph(self) -> MixedGraph:
        return shared_graph(self.diagram)

    @property
    def target_graph(self) -> MixedGraph:
        return shared_graph(self.diagram)


def trivially_transportable(tq: TransportQuery):
    """Estimand built from target observations alone, or ``None``."""
    if TARGET_OBSERVATIONAL not in tq.available:
        raise InputError("trivial transport needs target observational data")
    q = tq.query
    if not q.interventional:
        return ProbTerm(tuple(q.outcome), tuple(q.treatment | q.conditioning), (), TARGET)
    res = id_effect(tq.target_graph, q)
    if not res.identified:
        return None
    return retag(res.estimand, TARGET)


def s_admissible_adjustment(tq: TransportQuery):
    """Smallest ``Z`` making the S-nodes irrelevant to ``Y`` under ``do(X)``.

    Returns ``(Z, sum_z P(y|do(x),z) P*(z))`` or ``None``. Candidates are
    observed non-descendants of ``X``; ties go to the lexicographically
    first set of minimum size.
    """
    if SOURCE_EXPERIMENTS not in tq.available:
        raise InputError("s-admissible adjustment needs source experiments")
    q = tq.query
    if not q.interventional:
        raise InputError("s-admissible adjustment answers interventional queries")
    if q.conditioning:
        raise InputError("s-admissible adjustment does not support conditional queries")
    x, y = q.treatment, q.outcome
    s = set(tq.s_nodes)
    if not s:
        return frozenset(), ProbTerm(tuple(y), (), tuple(x), EXPERIMENT)
    if TARGET_OBSERVATIONAL not in tq.available:
        raise InputError("s-admissible adjustment needs target observational data")
    g = tq.diagram
    hidden = set(g.nodes_with_role(NodeRole.LATENT))
    cands = sorted(set(g.nodes) - s - hidden - x - y - descendants(g, x))
    cut = mutilate(g, cut_incoming=x)
    for k in range(len(cands) + 1):
        for z in combinations(cands, k):
            if separated(cut, s, y, x | set(z)):
                zs = frozenset(z)
                term = ProbTerm(tuple(y), tuple(zs), tuple(x), EXPERIMENT)
                if not zs:
                    return zs, term
                return zs, Sum(tuple(zs), Product((ProbTerm(tuple(zs), (), (), TARGET), term)))
    return None
