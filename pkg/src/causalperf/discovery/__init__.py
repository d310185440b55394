"""Constraint-based structure learning (PC and FCI) with background knowledge."""
from __future__ import annotations

import warnings

from ..citests import OracleTest, make_test
from ..data import Dataset
from ..errors import InputError
from ..graph import MixedGraph, NodeRole
from .fci import fci_search, pag_rules, possible_dsep
from .knowledge import BackgroundKnowledge, parse_background, tiers_from_roles
from .pc import (DiscoveryParams, DiscoveryResult, SepSetMap, meek_closure, orient_colliders, pc_skeleton,
                 skeleton_search)

__all__ = [
    "BackgroundKnowledge",
    "DiscoveryParams",
    "DiscoveryResult",
    "SepSetMap",
    "parse_background",
    "tiers_from_roles",
    "pc_skeleton",
    "orient_colliders",
    "meek_closure",
    "possible_dsep",
    "pag_rules",
    "discover",
    "pc",
    "fci",
]


def _setup(source, bk, params):
    """CI test, observed variable list, effective knowledge and node roles for a data source."""
    if isinstance(source, MixedGraph):
        hidden = {v for v, r in source.roles.items() if r in (NodeRole.LATENT, NodeRole.SELECTION_VAR)}
        nodes = [v for v in source.nodes if v not in hidden]
        test = OracleTest(source, params.alpha)
        roles = {v: r for v, r in source.roles.items() if v not in hidden}
        default_bk = BackgroundKnowledge()
    elif isinstance(source, Dataset):
        nodes = list(source.names)
        test = make_test(source, params.alpha, params.ci_test)
        roles = source.roles()
        default_bk = tiers_from_roles(roles)
    else:
        test = source
        nodes = None
        roles = None
        default_bk = BackgroundKnowledge()
    return test, nodes, default_bk if bk is None else bk, roles


def discover(source, bk: BackgroundKnowledge | None = None, params: DiscoveryParams | None = None,
             variables=None) -> DiscoveryResult:
    """Run PC or FCI (``params.algorithm``) and return graph, sepsets and diagnostics.

    ``source`` is a :class:`Dataset`, a graph (its latent / selection nodes
    are hidden from an exact separation oracle), or a bare CI-test callable
    together with ``variables``. Without explicit ``bk`` a dataset's option
    and performance roles become tiers 0 and 1.
    """
    params = params or DiscoveryParams()
    test, nodes, bk, roles = _setup(source, bk, params)
    if nodes is None:
        if variables is None:
            raise InputError("a bare CI test needs an explicit variable list")
        nodes = list(variables)
    if params.algorithm == "FCI":
        return fci_search(test, nodes, bk, params, roles=roles)
    t, sep, truncated, n_tests = skeleton_search(test, nodes, bk, params)
    diagnostics = []
    if truncated:
        diagnostics.append(f"skeleton search stopped at conditioning size {params.max_cond_size}")
    pdag = orient_colliders(t, sep, diagnostics, bk)
    graph = meek_closure(pdag, bk, diagnostics)
    if roles:
        graph = graph.replace(roles=roles)
    return DiscoveryResult(graph, sep, diagnostics, truncated, n_tests)


def _run(algorithm, source, bk, params, variables):
    params = params or DiscoveryParams()
    if params.algorithm != algorithm:
        params = DiscoveryParams(**{**params.__dict__, "algorithm": algorithm})
    res = discover(source, bk, params, variables)
    if res.truncated:
        warnings.warn("; ".join(d for d in res.diagnostics if "capped" in d or "stopped" in d), RuntimeWarning,
                      stacklevel=3)
    return res.graph


def pc(source, bk: BackgroundKnowledge | None = None, params: DiscoveryParams | None = None,
       variables=None) -> MixedGraph:
    """PC-stable; returns the CPDAG (use :func:`discover` for sepsets and diagnostics)."""
    return _run("PC", source, bk, params, variables)


def fci(source, bk: BackgroundKnowledge | None = None, params: DiscoveryParams | None = None,
        variables=None) -> MixedGraph:
    """FCI with Possible-D-SEP and the complete rule set; returns the PAG."""
    return _run("FCI", source, bk, params, variables)
