"""FCI: skeleton, Possible-D-SEP refinement and PAG orientation rules R1-R10."""
from __future__ import annotations

from collections import deque
from itertools import combinations
from typing import Callable, Sequence

from ..errors import DegenerateInputError
from ..graph import ARROW, CIRCLE, TAIL, GraphKind, MarkTable
from .knowledge import BackgroundKnowledge
from .pc import DiscoveryParams, DiscoveryResult, SepSetMap, skeleton_search

__all__ = ["fci_search", "possible_dsep", "pag_rules"]


def _collider_arrowheads(t: MarkTable, sep: SepSetMap):
    for z in t.nodes:
        for x, y in combinations(t.adj(z), 2):
            if t.adjacent(x, y):
                continue
            s = sep.get((x, y))
            if s is not None and z not in s:
                t.set_mark(x, z, ARROW)
                t.set_mark(y, z, ARROW)


def possible_dsep(t: MarkTable, x) -> set:
    """Nodes reachable from ``x`` along paths whose every inner node is a collider or in a triangle."""
    out = set()
    seen = set()
    queue = deque()
    for b in t.adj(x):
        out.add(b)
        seen.add((x, b))
        queue.append((x, b))
    while queue:
        a, b = queue.popleft()
        for c in t.adj(b):
            if c == a or c == x or (b, c) in seen:
                continue
            if (t.mark(a, b) is ARROW and t.mark(c, b) is ARROW) or t.adjacent(a, c):
                seen.add((b, c))
                out.add(c)
                queue.append((b, c))
    out.discard(x)
    return out


def _pds_phase(t: MarkTable, test, sep: SepSetMap, bk: BackgroundKnowledge, cap: int):
    pds = {v: sorted(possible_dsep(t, v)) for v in t.nodes}
    truncated = False
    n_tests = 0
    removals = []
    for x in t.nodes:
        for y in t.adj(x):
            if y < x or bk.requires_adjacency(x, y):
                continue
            found = None
            tried = set()
            for pool in ([v for v in pds[x] if v != y], [v for v in pds[y] if v != x]):
                if len(pool) > cap:
                    truncated = True
                for size in range(min(cap, len(pool)) + 1):
                    for s in combinations(pool, size):
                        key = frozenset(s)
                        if key in tried:
                            continue
                        tried.add(key)
                        try:
                            res = test(x, y, s)
                        except DegenerateInputError as exc:
                            raise DegenerateInputError(f"testing {x} _||_ {y} | {{{', '.join(s)}}}: {exc}") from None
                        if res.independent:
                            found = key
                            break
                    if found is not None:
                        break
                if found is not None:
                    break
            n_tests += len(tried)
            if found is not None:
                removals.append((x, y, found))
    for x, y, s in removals:
        t.remove(x, y)
        sep[(x, y)] = s
    return truncated, n_tests


# ---------------------------------------------------------------------------
# orientation rules; t.m[a][b] is the mark at b on the edge a *-* b


def _parent(t, a, b):
    return t.m[a][b] is ARROW and t.m[b][a] is TAIL


def _pd(t, a, b):
    """Edge a *-* b is potentially directed from a to b."""
    return t.m[a][b] is not TAIL and t.m[b][a] is not ARROW


def _r1(t) -> bool:
    changed = False
    for b in t.nodes:
        for a in t.adj(b):
            if t.m[a][b] is not ARROW:
                continue
            for c in t.adj(b):
                if c != a and t.m[c][b] is CIRCLE and not t.adjacent(a, c):
                    t.set_mark(c, b, TAIL)
                    t.set_mark(b, c, ARROW)
                    changed = True
    return changed


def _r2(t) -> bool:
    changed = False
    for a in t.nodes:
        for c in t.adj(a):
            if t.m[a][c] is not CIRCLE:
                continue
            for b in t.adj(a):
                if b == c or not t.adjacent(b, c):
                    continue
                if (_parent(t, a, b) and t.m[b][c] is ARROW) or (t.m[a][b] is ARROW and _parent(t, b, c)):
                    t.set_mark(a, c, ARROW)
                    changed = True
                    break
    return changed


def _r3(t) -> bool:
    changed = False
    for d in t.nodes:
        for b in t.adj(d):
            if t.m[d][b] is not CIRCLE:
                continue
            common = [v for v in t.adj(d) if v != b and t.adjacent(v, b)
                      and t.m[v][b] is ARROW and t.m[v][d] is CIRCLE]
            if any(not t.adjacent(a, c) for a, c in combinations(common, 2)):
                t.set_mark(d, b, ARROW)
                changed = True
    return changed


def _discriminating_start(t, alpha, beta, gamma):
    """BFS back from ``alpha`` for the far end of a discriminating path for ``beta``."""
    seen = {alpha, beta, gamma}
    queue = deque([alpha])
    while queue:
        v = queue.popleft()
        for w in t.adj(v):
            if w in seen or t.m[w][v] is not ARROW:
                continue
            if not t.adjacent(w, gamma):
                return w
            if _parent(t, w, gamma) and t.m[v][w] is ARROW:
                seen.add(w)
                queue.append(w)
    return None


def _r4(t, sep: SepSetMap) -> bool:
    changed = False
    for beta in t.nodes:
        for gamma in t.adj(beta):
            if t.m[gamma][beta] is not CIRCLE:
                continue
            for alpha in t.adj(beta):
                if alpha == gamma or not t.adjacent(alpha, gamma):
                    continue
                if t.m[beta][alpha] is not ARROW or not _parent(t, alpha, gamma):
                    continue
                theta = _discriminating_start(t, alpha, beta, gamma)
                if theta is None:
                    continue
                s = sep.get((theta, gamma))
                if s is None:
                    continue
                if beta in s:
                    t.set_mark(gamma, beta, TAIL)
                    t.set_mark(beta, gamma, ARROW)
                else:
                    t.set_mark(alpha, beta, ARROW)
                    t.set_mark(gamma, beta, ARROW)
                    t.set_mark(beta, gamma, ARROW)
                changed = True
                break
    return changed


def _circle_edge(t, a, b):
    return t.m[a][b] is CIRCLE and t.m[b][a] is CIRCLE


def _uncovered_circle_path(t, alpha, beta):
    """Uncovered circle path alpha, gamma, ..., theta, beta with alpha/theta and gamma/beta nonadjacent."""
    for gamma in t.adj(alpha):
        if gamma == beta or not _circle_edge(t, alpha, gamma) or t.adjacent(gamma, beta):
            continue
        stack = [[alpha, gamma]]
        while stack:
            path = stack.pop()
            cur, prev = path[-1], path[-2]
            for nxt in t.adj(cur):
                if nxt in path or not _circle_edge(t, cur, nxt) or t.adjacent(prev, nxt):
                    continue
                if nxt == beta:
                    if len(path) >= 3 and not t.adjacent(alpha, cur):
                        return path + [beta]
                    continue
                stack.append(path + [nxt])
    return None


def _r5(t) -> bool:
    changed = False
    for a in t.nodes:
        for b in t.adj(a):
            if b < a or not _circle_edge(t, a, b):
                continue
            path = _uncovered_circle_path(t, a, b)
            if path is None:
                continue
            t.set_mark(a, b, TAIL)
            t.set_mark(b, a, TAIL)
            for u, v in zip(path, path[1:]):
                t.set_mark(u, v, TAIL)
                t.set_mark(v, u, TAIL)
            changed = True
    return changed


def _r6_r7(t) -> bool:
    changed = False
    for beta in t.nodes:
        for gamma in t.adj(beta):
            if t.m[gamma][beta] is not CIRCLE:
                continue
            for alpha in t.adj(beta):
                if alpha == gamma or t.m[beta][alpha] is not TAIL:
                    continue
                if t.m[alpha][beta] is TAIL or (t.m[alpha][beta] is CIRCLE and not t.adjacent(alpha, gamma)):
                    t.set_mark(gamma, beta, TAIL)
                    changed = True
                    break
    return changed


def _r8(t) -> bool:
    changed = False
    for a in t.nodes:
        for g in t.adj(a):
            if not (t.m[a][g] is ARROW and t.m[g][a] is CIRCLE):
                continue
            for b in t.adj(a):
                if b == g or not t.adjacent(b, g) or not _parent(t, b, g):
                    continue
                if t.m[b][a] is TAIL and t.m[a][b] in (ARROW, CIRCLE):
                    t.set_mark(g, a, TAIL)
                    changed = True
                    break
    return changed


def _upd_path(t, start, first, target, avoid=()) -> bool:
    """Uncovered potentially directed path start, first, ..., target."""
    if not _pd(t, start, first):
        return False
    if first == target:
        return True
    stack = [[start, first]]
    while stack:
        path = stack.pop()
        cur, prev = path[-1], path[-2]
        for nxt in t.adj(cur):
            if nxt in path or nxt in avoid or t.adjacent(prev, nxt) or not _pd(t, cur, nxt):
                continue
            if nxt == target:
                return True
            stack.append(path + [nxt])
    return False


def _r9(t) -> bool:
    changed = False
    for a in t.nodes:
        for g in t.adj(a):
            if not (t.m[a][g] is ARROW and t.m[g][a] is CIRCLE):
                continue
            for b in t.adj(a):
                if b == g or t.adjacent(b, g):
                    continue
                if _upd_path(t, a, b, g):
                    t.set_mark(g, a, TAIL)
                    changed = True
                    break
    return changed


def _r10(t) -> bool:
    changed = False
    for a in t.nodes:
        for g in t.adj(a):
            if not (t.m[a][g] is ARROW and t.m[g][a] is CIRCLE):
                continue
            parents = [v for v in t.adj(g) if v != a and _parent(t, v, g)]
            if len(parents) < 2:
                continue
            firsts = {}
            for p in parents:
                firsts[p] = [m for m in t.adj(a) if m != g and _upd_path(t, a, m, p, avoid=(g,))]
            done = False
            for b, th in combinations(parents, 2):
                for mu in firsts[b]:
                    for om in firsts[th]:
                        if mu != om and not t.adjacent(mu, om):
                            done = True
                            break
                    if done:
                        break
                if done:
                    break
            if done:
                t.set_mark(g, a, TAIL)
                changed = True
    return changed


def pag_rules(t: MarkTable, sep: SepSetMap) -> None:
    """Apply R1-R10 in place until none fires."""
    while True:
        if _r1(t) or _r2(t) or _r3(t) or _r4(t, sep):
            continue
        if _r5(t) or _r6_r7(t):
            continue
        if _r8(t) or _r9(t) or _r10(t):
            continue
        return


def _tier_arrowheads(t: MarkTable, bk: BackgroundKnowledge):
    # a later-tier node cannot be an ancestor of an earlier one: arrowhead at the later end
    for a in t.nodes:
        for b in t.adj(a):
            ta, tb = bk.tier(a), bk.tier(b)
            if ta is not None and tb is not None and ta < tb:
                t.set_mark(a, b, ARROW)


def fci_search(test: Callable, nodes: Sequence[str], bk: BackgroundKnowledge | None,
               params: DiscoveryParams, roles=None) -> DiscoveryResult:
    bk = bk or BackgroundKnowledge()
    t, sep, truncated, n_tests = skeleton_search(test, nodes, bk, params)
    t.reset(CIRCLE)
    _collider_arrowheads(t, sep)
    pds_trunc, k = _pds_phase(t, test, sep, bk, params.pds_max)
    n_tests += k
    t.reset(CIRCLE)
    _collider_arrowheads(t, sep)
    _tier_arrowheads(t, bk)
    pag_rules(t, sep)
    diagnostics = []
    if truncated:
        diagnostics.append(f"skeleton search stopped at conditioning size {params.max_cond_size}")
    if pds_trunc:
        diagnostics.append(f"Possible-D-SEP subsets capped at size {params.pds_max}")
    return DiscoveryResult(t.freeze(GraphKind.PAG, roles=roles), sep, diagnostics,
                           truncated or pds_trunc, n_tests)
