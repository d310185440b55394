"""Conditional-independence tests: Fisher-z, G^2 and a graph oracle.

Each test is a callable object ``test(x, y, z) -> CITestResult`` bound to a
dataset (or graph) and a significance level. Arguments are canonicalised
(``x``/``y`` sorted by name, ``z`` sorted) before any arithmetic, so
``test(x, y, z)`` and ``test(y, x, z)`` return identical floats.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy import stats

from . import kernels
from .data import Dataset
from .errors import DegenerateInputError, InputError
from .graph import MixedGraph, NodeRole, separated

__all__ = ["CITestResult", "FisherZ", "GSquared", "OracleTest", "fisher_z", "g_squared", "oracle_test", "make_test"]

RHO_CLAMP = 1.0 - 1e-12
DEFAULT_ALPHA = 0.01


@dataclass(frozen=True)
class CITestResult:
    statistic: float
    p_value: float
    independent: bool
    test_name: str
    conditioning_size: int


def _check_alpha(alpha):
    if not 0.0 < alpha < 1.0:
        raise InputError(f"alpha must lie in (0, 1), got {alpha}")
    return float(alpha)


class _CachedTest:
    name = "base"

    def __init__(self, alpha):
        self.alpha = _check_alpha(alpha)
        self._cache = {}
        self._lock = threading.Lock()

    def _key(self, x, y, z):
        if x == y:
            raise InputError(f"cannot test {x!r} against itself")
        z = tuple(sorted(set(z)))
        if x in z or y in z:
            raise InputError(f"conditioning set {list(z)} contains a tested variable")
        a, b = sorted((x, y))
        return a, b, z

    def __call__(self, x, y, z=()) -> CITestResult:
        key = self._key(x, y, z)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        stat, p = self._compute(*key)
        res = CITestResult(float(stat), float(p), bool(p > self.alpha), self.name, len(key[2]))
        with self._lock:
            self._cache[key] = res
        return res

    def _compute(self, x, y, z):
        raise NotImplementedError

    @property
    def n_evaluated(self) -> int:
        return len(self._cache)


def normal_scores(values: np.ndarray) -> np.ndarray:
    """Rank-based inverse-normal transform with average ranks for ties."""
    n = len(values)
    r = stats.rankdata(values, method="average")
    return stats.norm.ppf((r - 0.5) / n)


class FisherZ(_CachedTest):
    """Partial-correlation test with Fisher's z-transform.

    ``rank=True`` runs the test on normal scores of every column, which is
    the default for mixed option/performance data.
    """

    name = "fisher_z"

    def __init__(self, data: Dataset, alpha: float = DEFAULT_ALPHA, rank: bool = False):
        super().__init__(alpha)
        self.data = data
        self.rank = rank
        self._index = {k: i for i, k in enumerate(data.names)}
        cols = []
        for k in data.names:
            v = data.numeric(k)
            cols.append(normal_scores(v) if rank else v)
        mat = np.column_stack(cols)
        with np.errstate(invalid="ignore", divide="ignore"):
            corr = np.corrcoef(mat, rowvar=False) if mat.shape[1] > 1 else np.ones((1, 1))
        self._corr = np.atleast_2d(corr)
        self.n = data.n
        if rank:
            self.name = "fisher_z_rank"

    def _compute(self, x, y, z):
        idx = self._index
        for k in (x, y, *z):
            if k not in idx:
                raise InputError(f"unknown variable {k!r}")
        dof = self.n - len(z) - 3
        if dof <= 0:
            raise InputError(f"fisher_z needs N > |z| + 3 (N={self.n}, |z|={len(z)})")
        c = self._corr
        ixy = [idx[x], idx[y]]
        if z:
            iz = [idx[k] for k in z]
            szz = c[np.ix_(iz, iz)]
            if np.linalg.eigvalsh(szz).min() < 1e-10:
                raise DegenerateInputError(f"singular correlation matrix over conditioning set {{{', '.join(z)}}}")
            sxz = c[np.ix_(ixy, iz)]
            m = c[np.ix_(ixy, ixy)] - sxz @ np.linalg.solve(szz, sxz.T)
            if m[0, 0] <= 1e-12 or m[1, 1] <= 1e-12:
                bad = x if m[0, 0] <= 1e-12 else y
                raise DegenerateInputError(f"{bad!r} is collinear with {{{', '.join(z)}}}")
            rho = m[0, 1] / math.sqrt(m[0, 0] * m[1, 1])
        else:
            rho = c[ixy[0], ixy[1]]
        rho = max(-RHO_CLAMP, min(RHO_CLAMP, float(rho)))
        stat = math.sqrt(dof) * math.atanh(rho)
        p = 2.0 * stats.norm.sf(abs(stat))
        return stat, min(1.0, p)


class GSquared(_CachedTest):
    """Likelihood-ratio (G^2) test on discrete variables, stratified by ``z``."""

    name = "g_squared"

    def __init__(self, data: Dataset, alpha: float = DEFAULT_ALPHA):
        super().__init__(alpha)
        self.data = data

    def _compute(self, x, y, z):
        d = self.data
        names = list(z) + [x, y]
        codes = d.codes(names)
        cards = d.cards(names)
        n_strata = int(np.prod(cards[:-2], dtype=np.int64)) if z else 1
        idx = kernels.mixed_radix_index(codes, cards)
        counts = kernels.count_cells(idx, n_strata * cards[-2] * cards[-1])
        g2, nonempty = kernels.g2_strata(counts.reshape(n_strata, cards[-2], cards[-1]))
        dof = (cards[-2] - 1) * (cards[-1] - 1) * nonempty
        if dof <= 0:
            raise DegenerateInputError(f"zero degrees of freedom testing {x!r} vs {y!r} given {list(z)}")
        g2 = max(g2, 0.0)
        return g2, float(stats.chi2.sf(g2, dof))


class OracleTest(_CachedTest):
    """Exact independence from graph separation (faithful by construction).

    Nodes with role ``selection_var`` are always conditioned on, as if the
    data had been filtered by them.
    """

    name = "oracle"

    def __init__(self, graph: MixedGraph, alpha: float = DEFAULT_ALPHA):
        super().__init__(alpha)
        self.graph = graph
        self._selected = set(graph.nodes_with_role(NodeRole.SELECTION_VAR))

    def _compute(self, x, y, z):
        indep = separated(self.graph, {x}, {y}, set(z) | self._selected)
        return (0.0, 1.0) if indep else (1.0, 0.0)


def fisher_z(d: Dataset, x, y, z: Sequence[str] = (), alpha: float = DEFAULT_ALPHA) -> CITestResult:
    return FisherZ(d, alpha)(x, y, z)


def g_squared(d: Dataset, x, y, z: Sequence[str] = (), alpha: float = DEFAULT_ALPHA) -> CITestResult:
    for k in (x, y, *z):
        if not d.meta(k).discrete:
            raise InputError(f"g_squared needs discrete variables; {k!r} is continuous")
    return GSquared(d, alpha)(x, y, z)


def oracle_test(g: MixedGraph, x, y, z: Sequence[str] = (), alpha: float = DEFAULT_ALPHA) -> CITestResult:
    return OracleTest(g, alpha)(x, y, z)


def make_test(d: Dataset, alpha: float = DEFAULT_ALPHA, method: str = "auto"):
    """Pick the test for a dataset: G^2 when all columns are discrete, rank Fisher-z otherwise."""
    if method == "auto":
        method = "g_squared" if d.all_discrete() else "fisher_z_rank"
    if method == "g_squared":
        if not d.all_discrete():
            raise InputError("g_squared needs an all-discrete dataset")
        return GSquared(d, alpha)
    if method == "fisher_z":
        return FisherZ(d, alpha)
    if method == "fisher_z_rank":
        return FisherZ(d, alpha, rank=True)
    raise InputError(f"unknown CI test {method!r}")
