"""Ground-truth structural causal models of configurable systems.

Random streams
--------------
Every draw comes from ``numpy.random.PCG64`` seeded through
``numpy.random.SeedSequence([seed, stream, *index])`` where ``seed`` is a
non-negative 64-bit integer, ``stream`` names the purpose (structure,
mechanism parameters, simulation, environment shift) and ``index`` is the
node's position in the sorted node list (plus the batch number while
simulating). Outputs are therefore pure functions of their inputs and seed,
independent of call order.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from . import kernels
from .data import CONTINUOUS, DISCRETE, Dataset, VariableMeta
from .errors import CapacityError, DegenerateSelectionError, GraphParseError, InputError
from .graph import GraphKind, MixedGraph, NodeRole, from_text, to_text, topological_order
from .prob import Joint

__all__ = [
    "SCMSpec",
    "DiscreteCPT",
    "LinearGaussian",
    "SCM",
    "SelectionMechanism",
    "GaussianMoments",
    "sample_structure",
    "random_dag",
    "build_scm",
    "sample_scm",
    "simulate",
    "exact_query",
    "joint_distribution",
    "shift_environment",
    "intervene",
    "bow_witness",
]

STREAM_STRUCTURE = 0
STREAM_MECHANISM = 1
STREAM_SIMULATE = 2
STREAM_SHIFT = 3
STREAM_SELECTION = 4

CPT_FLOOR = 0.02
WEIGHT_RANGE = (0.4, 1.2)
NOISE_RANGE = (0.5, 1.0)
MAX_STATES = 2 ** 20
RETRY_FACTOR = 1000


def rng_for(seed: int, stream: int, *index: int) -> np.random.Generator:
    if not 0 <= int(seed) < 2 ** 64:
        raise InputError(f"seed must be a non-negative 64-bit integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), stream, *index])))


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class SCMSpec:
    n_options: int = 4
    n_perf: int = 1
    n_latent: int = 0
    edge_prob: float = 0.3
    mechanism: str = "discrete"
    levels: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_options < 1 or self.n_perf < 1 or self.n_latent < 0:
            raise InputError("need n_options >= 1, n_perf >= 1, n_latent >= 0")
        if not 0.0 <= self.edge_prob <= 1.0:
            raise InputError("edge_prob must lie in [0, 1]")
        if self.mechanism not in ("discrete", "linear_gaussian"):
            raise InputError(f"unknown mechanism {self.mechanism!r}")
        if self.levels < 2:
            raise InputError("discrete variables need at least 2 levels")

    @classmethod
    def from_json(cls, text) -> "SCMSpec":
        try:
            doc = json.loads(text)
            return cls(**doc)
        except json.JSONDecodeError as exc:
            raise GraphParseError(exc.msg, line=exc.lineno, field="spec") from None
        except TypeError as exc:
            raise GraphParseError(str(exc), field="spec") from None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, indent=2, sort_keys=True) + "\n"


@dataclass(frozen=True, eq=False)
class DiscreteCPT:
    """``table[parent codes..., own code]``; parents in ``parents`` order."""

    parents: tuple[str, ...]
    card: int
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if t.shape[-1] != self.card or t.ndim != len(self.parents) + 1:
            raise InputError("CPT shape does not match its parents and cardinality")
        if np.any(t < 0) or np.max(np.abs(t.sum(axis=-1) - 1.0)) > 1e-12:
            raise InputError("CPT rows must be probability vectors")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)

    def __eq__(self, other):
        return (isinstance(other, DiscreteCPT) and self.parents == other.parents and self.card == other.card
                and np.array_equal(self.table, other.table))


@dataclass(frozen=True)
class LinearGaussian:
    parents: tuple[str, ...]
    weights: tuple[float, ...]
    noise_scale: float
    intercept: float = 0.0


@dataclass(frozen=True, eq=False)
class SelectionMechanism:
    """Inclusion probability per assignment of the (discrete) input nodes."""

    inputs: tuple[str, ...]
    table: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.table, dtype=np.float64)
        if t.ndim != len(self.inputs):
            raise InputError("selection table needs one axis per input")
        if np.any(t < 0) or np.any(t > 1):
            raise InputError("inclusion probabilities must lie in [0, 1]")
        t.setflags(write=False)
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "table", t)

    def to_json(self) -> str:
        return json.dumps({"inputs": list(self.inputs), "table": self.table.tolist()}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text) -> "SelectionMechanism":
        try:
            doc = json.loads(text)
            return cls(tuple(doc["inputs"]), np.asarray(doc["table"], dtype=np.float64))
        except json.JSONDecodeError as exc:
            raise GraphParseError(exc.msg, line=exc.lineno, field="selection") from None
        except (KeyError, TypeError, ValueError) as exc:
            raise GraphParseError(f"malformed selection mechanism: {exc}", field="selection") from None


class SCM:
    """Graph (a DAG, latent nodes marked by role) plus one mechanism per node."""

    def __init__(self, graph: MixedGraph, mechanisms: Mapping[str, object], seed: int = 0):
        if graph.kind is not GraphKind.DAG:
            raise InputError("an SCM needs a DAG")
        self.graph = graph
        self.mechanisms = dict(mechanisms)
        self.seed = int(seed)
        kinds = {type(m) for m in self.mechanisms.values()}
        if set(self.mechanisms) != set(graph.nodes):
            raise InputError("every node needs exactly one mechanism")
        if len(kinds) > 1:
            raise InputError("mixed discrete / linear-Gaussian mechanisms are not supported")
        for v, m in self.mechanisms.items():
            if set(m.parents) != graph.parents(v) or len(m.parents) != len(set(m.parents)):
                raise InputError(f"mechanism of {v!r} must reference exactly its graph parents")
            if isinstance(m, DiscreteCPT):
                for p, size in zip(m.parents, m.table.shape[:-1]):
                    if size != self.mechanisms[p].card:
                        raise InputError(f"CPT of {v!r} disagrees with the cardinality of {p!r}")
        self.order = topological_order(graph)

    @property
    def discrete(self) -> bool:
        return all(isinstance(m, DiscreteCPT) for m in self.mechanisms.values())

    @property
    def latents(self) -> tuple[str, ...]:
        return self.graph.nodes_with_role(NodeRole.LATENT)

    @property
    def observed(self) -> tuple[str, ...]:
        lat = set(self.latents)
        return tuple(v for v in self.graph.nodes if v not in lat)

    def card(self, v) -> int:
        m = self.mechanisms[v]
        if not isinstance(m, DiscreteCPT):
            raise InputError(f"{v!r} is continuous")
        return m.card

    def variables(self) -> list[VariableMeta]:
        out = []
        for v in self.observed:
            role = self.graph.role(v)
            role = role if role in (NodeRole.OPTION, NodeRole.PERFORMANCE) else NodeRole.PERFORMANCE
            m = self.mechanisms[v]
            if isinstance(m, DiscreteCPT):
                out.append(VariableMeta(v, role, DISCRETE, tuple(str(i) for i in range(m.card))))
            else:
                out.append(VariableMeta(v, role, CONTINUOUS))
        return out

    def __eq__(self, other):
        return (isinstance(other, SCM) and self.graph == other.graph and self.mechanisms == other.mechanisms)

    # --------------------------------------------------------- serialisation
    def to_json(self) -> str:
        mechs = {}
        for v in self.graph.nodes:
            m = self.mechanisms[v]
            if isinstance(m, DiscreteCPT):
                mechs[v] = {"type": "discrete", "parents": list(m.parents), "card": m.card,
                            "table": m.table.tolist()}
            else:
                mechs[v] = {"type": "linear_gaussian", "parents": list(m.parents), "weights": list(m.weights),
                            "noise_scale": m.noise_scale, "intercept": m.intercept}
        doc = {"graph": to_text(self.graph).decode(), "seed": self.seed, "mechanisms": mechs}
        return json.dumps(doc, indent=2) + "\n"

    @classmethod
    def from_json(cls, text) -> "SCM":
        try:
            doc = json.loads(text)
            graph = from_text(doc["graph"])
            mechs = {}
            for v, m in doc["mechanisms"].items():
                if m["type"] == "discrete":
                    mechs[v] = DiscreteCPT(tuple(m["parents"]), int(m["card"]), np.asarray(m["table"], dtype=float))
                else:
                    mechs[v] = LinearGaussian(tuple(m["parents"]), tuple(m["weights"]), float(m["noise_scale"]),
                                              float(m.get("intercept", 0.0)))
            return cls(graph, mechs, doc.get("seed", 0))
        except json.JSONDecodeError as exc:
            raise GraphParseError(exc.msg, line=exc.lineno, field="scm") from None
        except (KeyError, TypeError) as exc:
            raise GraphParseError(f"malformed SCM document: {exc}", field="scm") from None


@dataclass(frozen=True)
class GaussianMoments:
    variables: tuple[str, ...]
    mean: np.ndarray
    cov: np.ndarray


# ---------------------------------------------------------------------------
# structure


def _names(prefix, n):
    width = len(str(n))
    return [f"{prefix}{str(i + 1).zfill(width)}" for i in range(n)]


def sample_structure(spec: SCMSpec) -> MixedGraph:
    """Configurable-system DAG: options are roots, performance nodes follow.

    Option->perf and perf->perf (forward in a fixed order) edges appear with
    probability ``edge_prob``. Each latent confounds two performance nodes
    (one when only one exists).
    """
    rng = rng_for(spec.seed, STREAM_STRUCTURE, 0)
    opts, perfs, lats = _names("O", spec.n_options), _names("P", spec.n_perf), _names("L", spec.n_latent)
    arcs = []
    for o in opts:
        for p in perfs:
            if rng.random() < spec.edge_prob:
                arcs.append((o, p))
    for i, j in combinations(range(len(perfs)), 2):
        if rng.random() < spec.edge_prob:
            arcs.append((perfs[i], perfs[j]))
    for lat in lats:
        k = min(2, len(perfs))
        for c in rng.choice(len(perfs), size=k, replace=False):
            arcs.append((lat, perfs[int(c)]))
    roles = {o: NodeRole.OPTION for o in opts}
    roles.update({p: NodeRole.PERFORMANCE for p in perfs})
    roles.update({lat: NodeRole.LATENT for lat in lats})
    return MixedGraph.from_arcs(arcs, nodes=opts + perfs + lats, roles=roles)


def random_dag(n_nodes: int, edge_prob: float, seed: int, n_latent: int = 0) -> MixedGraph:
    """Generic DAG under a random order; each latent gets two random observed children."""
    rng = rng_for(seed, STREAM_STRUCTURE, 1)
    names = _names("V", n_nodes)
    order = rng.permutation(n_nodes)
    arcs = []
    for i, j in combinations(range(n_nodes), 2):
        if rng.random() < edge_prob:
            arcs.append((names[order[i]], names[order[j]]))
    lats = _names("L", n_latent)
    for lat in lats:
        if n_nodes >= 2:
            for c in rng.choice(n_nodes, size=2, replace=False):
                arcs.append((lat, names[int(c)]))
    roles = {lat: NodeRole.LATENT for lat in lats}
    return MixedGraph.from_arcs(arcs, nodes=names + lats, roles=roles)


# ---------------------------------------------------------------------------
# mechanisms


def _draw_mechanism(rng, parents, parent_cards, family, levels):
    if family == "discrete":
        rows = int(np.prod(parent_cards, dtype=np.int64)) if parents else 1
        t = rng.dirichlet(np.ones(levels), size=rows)
        t = np.maximum(t, CPT_FLOOR)
        t = t / t.sum(axis=1, keepdims=True)
        return DiscreteCPT(tuple(parents), levels, t.reshape(tuple(parent_cards) + (levels,)))
    lo, hi = WEIGHT_RANGE
    w = rng.uniform(lo, hi, size=len(parents)) * rng.choice([-1.0, 1.0], size=len(parents))
    noise = rng.uniform(*NOISE_RANGE)
    return LinearGaussian(tuple(parents), tuple(float(x) for x in w), float(noise))


def build_scm(graph: MixedGraph, mechanism: str = "discrete", levels=2, seed: int = 0) -> SCM:
    """Draw mechanisms for every node of ``graph``.

    ``levels`` is an int or a mapping node -> cardinality.
    """
    if mechanism not in ("discrete", "linear_gaussian"):
        raise InputError(f"unknown mechanism {mechanism!r}")
    cards = {v: int(levels[v]) if isinstance(levels, Mapping) else int(levels) for v in graph.nodes}
    mechs = {}
    for i, v in enumerate(graph.nodes):
        parents = sorted(graph.parents(v))
        rng = rng_for(seed, STREAM_MECHANISM, i)
        mechs[v] = _draw_mechanism(rng, parents, [cards[p] for p in parents], mechanism, cards[v])
    return SCM(graph, mechs, seed)


def sample_scm(spec: SCMSpec) -> SCM:
    return build_scm(sample_structure(spec), spec.mechanism, spec.levels, spec.seed)


def shift_environment(m: SCM, targets, seed: int) -> SCM:
    """Redraw the mechanisms of ``targets``; every other mechanism is kept as-is."""
    targets = set([targets] if isinstance(targets, str) else targets)
    unknown = targets - set(m.graph.nodes)
    if unknown:
        raise InputError(f"unknown node(s): {', '.join(sorted(unknown))}")
    mechs = dict(m.mechanisms)
    for i, v in enumerate(m.graph.nodes):
        if v not in targets:
            continue
        old = m.mechanisms[v]
        rng = rng_for(seed, STREAM_SHIFT, i)
        if isinstance(old, DiscreteCPT):
            pc = [m.mechanisms[p].card for p in old.parents]
            mechs[v] = _draw_mechanism(rng, old.parents, pc, "discrete", old.card)
        else:
            mechs[v] = _draw_mechanism(rng, old.parents, [], "linear_gaussian", 0)
    return SCM(m.graph, mechs, m.seed)


def intervene(m: SCM, do: Mapping[str, object]) -> SCM:
    """Mutilated model: each ``do`` node loses its parents.

    A value fixes the node (point mass, or a constant for linear-Gaussian);
    ``None`` randomises it uniformly over its levels, as in a randomised
    experiment.
    """
    edges = [e for e in m.graph.edges if not (e.b in do and e.mark_b.value == "a") and
             not (e.a in do and e.mark_a.value == "a")]
    graph = m.graph.replace(edges=edges)
    mechs = dict(m.mechanisms)
    for v, val in do.items():
        old = m.mechanisms.get(v)
        if old is None:
            raise InputError(f"unknown node {v!r}")
        if isinstance(old, DiscreteCPT):
            if val is None:
                t = np.full(old.card, 1.0 / old.card)
            else:
                code = int(val)
                if not 0 <= code < old.card:
                    raise InputError(f"do({v}={val}) is outside its {old.card} levels")
                t = np.zeros(old.card)
                t[code] = 1.0
            mechs[v] = DiscreteCPT((), old.card, t)
        else:
            if val is None:
                mechs[v] = LinearGaussian((), (), 1.0, 0.0)
            else:
                mechs[v] = LinearGaussian((), (), 0.0, float(val))
    return SCM(graph, mechs, m.seed)


# ---------------------------------------------------------------------------
# simulation


def _sample_batch(m: SCM, size: int, seed: int, batch: int) -> dict[str, np.ndarray]:
    cols = {}
    index = {v: i for i, v in enumerate(m.graph.nodes)}
    for v in m.order:
        mech = m.mechanisms[v]
        rng = rng_for(seed, STREAM_SIMULATE, batch, index[v])
        if isinstance(mech, DiscreteCPT):
            if mech.parents:
                pcodes = np.column_stack([cols[p] for p in mech.parents])
                pidx = kernels.mixed_radix_index(pcodes, mech.table.shape[:-1])
            else:
                pidx = np.zeros(size, dtype=np.int64)
            cum = np.cumsum(mech.table.reshape(-1, mech.card), axis=1)
            cum[:, -1] = 1.0
            cols[v] = kernels.sample_categorical(cum, pidx, rng.random(size))
        else:
            x = mech.intercept + mech.noise_scale * rng.standard_normal(size)
            for p, w in zip(mech.parents, mech.weights):
                x = x + w * cols[p]
            cols[v] = x
    return cols


def simulate(m: SCM, n: int, seed: int, sel: SelectionMechanism | None = None) -> Dataset:
    """Ancestral sampling of ``n`` rows; latent columns are dropped.

    With ``sel`` rows are kept with their inclusion probability until ``n``
    rows are collected; more than ``1000 * n`` draws raises
    :class:`DegenerateSelectionError`.
    """
    if n < 1:
        raise InputError("n must be at least 1")
    obs = m.observed
    if sel is None:
        cols = _sample_batch(m, n, seed, 0)
        return Dataset(m.variables(), {v: cols[v] for v in obs}, check_constant=False)
    if not m.discrete:
        raise InputError("selection mechanisms need a discrete SCM")
    for v in sel.inputs:
        if v not in m.mechanisms:
            raise InputError(f"selection input {v!r} is not a node of the model")
    kept = {v: [] for v in obs}
    have, drawn, batch = 0, 0, 0
    size = max(n, 1024)
    while have < n:
        if drawn >= RETRY_FACTOR * n:
            raise DegenerateSelectionError(f"selection kept {have} of {drawn} draws; retry cap {RETRY_FACTOR * n} hit")
        cols = _sample_batch(m, size, seed, batch)
        u = rng_for(seed, STREAM_SELECTION, batch).random(size)
        if sel.inputs:
            p = sel.table[tuple(cols[v] for v in sel.inputs)]
        else:
            p = np.full(size, float(sel.table))
        keep = u < p
        for v in obs:
            kept[v].append(cols[v][keep])
        have += int(keep.sum())
        drawn += size
        batch += 1
    out = {v: np.concatenate(kept[v])[:n] for v in obs}
    return Dataset(m.variables(), out, check_constant=False)


# ---------------------------------------------------------------------------
# exact inference


def joint_distribution(m: SCM, do: Mapping[str, int] | None = None, selection: SelectionMechanism | None = None,
                       observed_only: bool = True) -> Joint:
    """Exact joint by enumerating every world of the (mutilated) discrete model.

    With ``selection`` the result is ``P(v | S=1)``.
    """
    if not m.discrete:
        raise InputError("joint enumeration needs a discrete SCM")
    model = intervene(m, do) if do else m
    nodes = list(model.graph.nodes)
    cards = [model.mechanisms[v].card for v in nodes]
    total = int(np.prod(cards, dtype=np.float64))
    if total > MAX_STATES:
        raise CapacityError(f"{total} joint states exceed the enumeration budget of {MAX_STATES}")
    pos = {v: i for i, v in enumerate(nodes)}
    parent_ptr, parent_idx, table_ptr, tables = [0], [], [0], []
    for v in nodes:
        mech = model.mechanisms[v]
        parent_idx.extend(pos[p] for p in mech.parents)
        parent_ptr.append(len(parent_idx))
        flat = mech.table.reshape(-1)
        tables.append(flat)
        table_ptr.append(table_ptr[-1] + len(flat))
    flat = kernels.joint_table(np.array(cards), np.array(parent_ptr), np.array(parent_idx, dtype=np.int64),
                               np.array(table_ptr), np.concatenate(tables))
    joint = Joint(nodes, cards, flat)
    if selection is not None:
        t = joint.table
        if selection.inputs:
            axes = [pos[v] for v in selection.inputs]
            shape = [1] * len(nodes)
            for a, v in zip(axes, selection.inputs):
                shape[a] = cards[a]
            # selection table axes follow selection.inputs; bring them into node order
            order = np.argsort(axes)
            w = np.transpose(selection.table, order).reshape(shape)
        else:
            w = float(selection.table)
        t = t * w
        z = t.sum()
        if z <= 0:
            raise DegenerateSelectionError("selection keeps no world with positive probability")
        joint = Joint(nodes, cards, t / z)
    if observed_only and m.latents:
        joint = joint.marginal([v for v in nodes if v not in set(m.latents)])
    return joint


def _gaussian_moments(m: SCM, do: Mapping[str, float] | None = None) -> GaussianMoments:
    model = intervene(m, do) if do else m
    nodes = list(model.graph.nodes)
    pos = {v: i for i, v in enumerate(nodes)}
    k = len(nodes)
    # x = B x + c + e, with B[i, j] the weight of parent j on child i
    b = np.zeros((k, k))
    c = np.zeros(k)
    s = np.zeros(k)
    for v in nodes:
        mech = model.mechanisms[v]
        for p, w in zip(mech.parents, mech.weights):
            b[pos[v], pos[p]] = w
        c[pos[v]] = mech.intercept
        s[pos[v]] = mech.noise_scale ** 2
    a = np.linalg.inv(np.eye(k) - b)
    return GaussianMoments(tuple(nodes), a @ c, a @ np.diag(s) @ a.T)


def exact_query(m: SCM, kind: str, outcome: Sequence[str], given: Mapping[str, object] | None = None,
                do: Mapping[str, object] | None = None, selection: SelectionMechanism | None = None):
    """Exact ``P(outcome | given)`` in the observational, interventional or selected model.

    ``kind`` is ``"observational"``, ``"interventional"`` (``do`` required)
    or ``"selection"`` (``selection`` required, result is
    ``P(outcome | given, S=1)``). Discrete models return a :class:`Joint`
    over ``outcome``; linear-Gaussian models return :class:`GaussianMoments`.
    """
    given = dict(given or {})
    do = dict(do or {})
    if kind == "observational":
        if do or selection is not None:
            raise InputError("observational queries take no do() or selection")
    elif kind == "interventional":
        if not do:
            raise InputError("interventional queries need do()")
    elif kind == "selection":
        if selection is None:
            raise InputError("selection-conditioned queries need a selection mechanism")
    else:
        raise InputError(f"unknown query kind {kind!r}")
    outcome = [outcome] if isinstance(outcome, str) else list(outcome)
    for v in list(outcome) + list(given) + list(do):
        if v not in m.mechanisms:
            raise InputError(f"unknown node {v!r}")
    if m.discrete:
        joint = joint_distribution(m, do=do, selection=selection, observed_only=False)
        return joint.marginal(outcome + [v for v in given if v not in outcome]).condition(
            {v: int(x) for v, x in given.items()}).reorder(outcome)
    if selection is not None:
        raise InputError("selection queries need a discrete SCM")
    mom = _gaussian_moments(m, do)
    pos = {v: i for i, v in enumerate(mom.variables)}
    io = [pos[v] for v in outcome]
    if not given:
        return GaussianMoments(tuple(outcome), mom.mean[io], mom.cov[np.ix_(io, io)])
    ig = [pos[v] for v in given]
    sgg = mom.cov[np.ix_(ig, ig)]
    sog = mom.cov[np.ix_(io, ig)]
    gain = np.linalg.solve(sgg, sog.T).T
    vals = np.array([float(given[v]) for v in given])
    mean = mom.mean[io] + gain @ (vals - mom.mean[ig])
    cov = mom.cov[np.ix_(io, io)] - gain @ sog.T
    return GaussianMoments(tuple(outcome), mean, cov)


# ---------------------------------------------------------------------------
# fixtures


def bow_witness() -> tuple[SCM, SCM]:
    """Two binary models of ``X -> Y`` with latent ``U`` confounding both.

    In the first ``Y`` copies ``X``; in the second ``Y`` copies ``U``. Both
    have ``X = U``, so their observational joints coincide while
    ``P(Y=1 | do(X=1))`` is 1 in one and 0.5 in the other.
    """
    graph = MixedGraph.from_arcs([("U", "X"), ("U", "Y"), ("X", "Y")],
                                 roles={"U": NodeRole.LATENT, "X": NodeRole.OPTION, "Y": NodeRole.PERFORMANCE})
    u = DiscreteCPT((), 2, np.array([0.5, 0.5]))
    x = DiscreteCPT(("U",), 2, np.array([[1.0, 0.0], [0.0, 1.0]]))
    copy_x = np.zeros((2, 2, 2))
    copy_u = np.zeros((2, 2, 2))
    for a in range(2):
        for b in range(2):
            copy_x[a, b, b] = 1.0  # parents (U, X): Y = X
            copy_u[a, b, a] = 1.0  # Y = U
    m1 = SCM(graph, {"U": u, "X": x, "Y": DiscreteCPT(("U", "X"), 2, copy_x)})
    m2 = SCM(graph, {"U": u, "X": x, "Y": DiscreteCPT(("U", "X"), 2, copy_u)})
    return m1, m2
