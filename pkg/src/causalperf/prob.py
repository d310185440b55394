"""Discrete joint distributions over named variables (integer-coded levels)."""
from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .errors import InputError, UndefinedConditionalError

__all__ = ["Joint"]


class Joint:
    """Probability table over ``variables`` with shape ``cards``.

    Also used for empirical distributions; ``n`` then records the sample
    size the table was estimated from.
    """

    __slots__ = ("variables", "cards", "table", "n", "_pos", "_marg")

    def __init__(self, variables: Sequence[str], cards: Sequence[int], table, n: int | None = None):
        self.variables = tuple(variables)
        self.cards = tuple(int(c) for c in cards)
        t = np.asarray(table, dtype=np.float64).reshape(self.cards)
        if np.any(t < -1e-15):
            raise InputError("probabilities must be non-negative")
        self.table = t
        self.n = n
        self._pos = {v: i for i, v in enumerate(self.variables)}
        self._marg = {}

    def card(self, v) -> int:
        return self.cards[self._index(v)]

    def _index(self, v) -> int:
        try:
            return self._pos[v]
        except KeyError:
            raise InputError(f"variable {v!r} not in distribution over {list(self.variables)}") from None

    def marginal(self, keep: Sequence[str]) -> "Joint":
        keep = tuple(keep)
        key = frozenset(keep)
        hit = self._marg.get(key)
        if hit is None:
            idx = [self._index(v) for v in keep]
            drop = tuple(i for i in range(len(self.variables)) if i not in idx)
            t = self.table.sum(axis=drop) if drop else self.table
            kept = [v for v in self.variables if v in key]
            hit = Joint(kept, [self.cards[self._pos[v]] for v in kept], t, self.n)
            self._marg[key] = hit
        if hit.variables != keep:
            hit = hit.reorder(keep)
        return hit

    def reorder(self, order: Sequence[str]) -> "Joint":
        perm = [self._index(v) for v in order]
        return Joint(order, [self.cards[i] for i in perm], np.transpose(self.table, perm), self.n)

    def prob(self, assignment: Mapping[str, int]) -> float:
        """Marginal probability of a (partial) assignment of codes."""
        if not assignment:
            return float(self.table.sum())
        m = self.marginal(tuple(sorted(assignment)))
        return float(m.table[tuple(int(assignment[v]) for v in m.variables)])

    def conditional(self, targets: Mapping[str, int], given: Mapping[str, int]) -> float:
        """``P(targets | given)``; raises when ``P(given) = 0``."""
        overlap = set(targets) & set(given)
        for v in overlap:
            if targets[v] != given[v]:
                return 0.0
        den = self.prob(given)
        if den <= 0.0:
            raise UndefinedConditionalError(f"conditioning on a zero-probability assignment {dict(given)}", given)
        num = self.prob({**given, **targets})
        return num / den

    def condition(self, evidence: Mapping[str, int]) -> "Joint":
        """Renormalised distribution of the remaining variables given ``evidence``."""
        idx = []
        for v in self.variables:
            idx.append(int(evidence[v]) if v in evidence else slice(None))
        t = self.table[tuple(idx)]
        z = float(t.sum())
        if z <= 0.0:
            raise UndefinedConditionalError(f"conditioning on a zero-probability assignment {dict(evidence)}",
                                            evidence)
        rest = [v for v in self.variables if v not in evidence]
        return Joint(rest, [self.card(v) for v in rest], t / z, self.n)

    def total(self) -> float:
        return float(self.table.sum())

    def tv_distance(self, other: "Joint") -> float:
        o = other.reorder(self.variables)
        return 0.5 * float(np.abs(self.table - o.table).sum())

    @classmethod
    def from_codes(cls, variables: Sequence[str], cards: Sequence[int], codes: np.ndarray) -> "Joint":
        """Empirical distribution of integer code rows."""
        from . import kernels

        codes = np.asarray(codes, dtype=np.int64)
        n = codes.shape[0]
        if n == 0:
            raise UndefinedConditionalError("empirical distribution of zero rows")
        size = int(np.prod(cards, dtype=np.int64)) if len(cards) else 1
        counts = kernels.count_cells(kernels.mixed_radix_index(codes, cards), size)
        return cls(variables, cards, counts / n, n=n)

    def __repr__(self):
        return f"Joint({list(self.variables)}, cards={list(self.cards)})"
