"""Background knowledge: forbidden/required directed edges and temporal tiers."""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from ..errors import GraphParseError, InputError
from ..graph import NAME_RE, NodeRole

__all__ = ["BackgroundKnowledge", "parse_background", "tiers_from_roles"]

_TIER_RE = re.compile(r"^tier(\d+)$")


@dataclass(frozen=True)
class BackgroundKnowledge:
    """``forbidden``/``required`` hold ordered pairs ``(a, b)`` meaning ``a -> b``.

    ``tiers`` is an ordered partition of a subset of the variables; nothing
    in a later tier may cause anything in an earlier one.
    """

    forbidden: frozenset = frozenset()
    required: frozenset = frozenset()
    tiers: tuple = ()
    _tier_of: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "forbidden", frozenset(tuple(p) for p in self.forbidden))
        object.__setattr__(self, "required", frozenset(tuple(p) for p in self.required))
        object.__setattr__(self, "tiers", tuple(tuple(sorted(t)) for t in self.tiers))
        for a, b in self.forbidden | self.required:
            if a == b:
                raise InputError(f"background knowledge names a self-loop at {a!r}")
        both = self.forbidden & self.required
        if both:
            a, b = sorted(both)[0]
            raise InputError(f"edge {a} -> {b} is both forbidden and required")
        for a, b in sorted(self.required):
            if (b, a) in self.required:
                raise InputError(f"edges {a} -> {b} and {b} -> {a} are both required")
        tier_of = {}
        for i, tier in enumerate(self.tiers):
            for v in tier:
                if v in tier_of:
                    raise InputError(f"variable {v!r} appears in tiers {tier_of[v]} and {i}")
                tier_of[v] = i
        object.__setattr__(self, "_tier_of", tier_of)
        for a, b in sorted(self.required):
            if a in tier_of and b in tier_of and tier_of[a] > tier_of[b]:
                raise InputError(f"required edge {a} -> {b} points from tier {tier_of[a]} back to tier {tier_of[b]}")

    def tier(self, v):
        return self._tier_of.get(v)

    def forbids(self, a, b) -> bool:
        """Whether ``a -> b`` is ruled out (explicitly or by tier order)."""
        if (a, b) in self.forbidden:
            return True
        ta, tb = self._tier_of.get(a), self._tier_of.get(b)
        return ta is not None and tb is not None and ta > tb

    def requires_adjacency(self, a, b) -> bool:
        return (a, b) in self.required or (b, a) in self.required

    def excludes_adjacency(self, a, b) -> bool:
        return self.forbids(a, b) and self.forbids(b, a) and not self.requires_adjacency(a, b)

    def variables(self) -> set:
        out = set(self._tier_of)
        for a, b in self.forbidden | self.required:
            out.update((a, b))
        return out

    def check_variables(self, names: Iterable[str]):
        unknown = self.variables() - set(names)
        if unknown:
            raise InputError(f"background knowledge names unknown variable(s): {', '.join(sorted(unknown))}")

    def merged(self, other: "BackgroundKnowledge") -> "BackgroundKnowledge":
        return BackgroundKnowledge(self.forbidden | other.forbidden, self.required | other.required,
                                   self.tiers or other.tiers)

    @property
    def empty(self) -> bool:
        return not (self.forbidden or self.required or self.tiers)

    def to_text(self) -> bytes:
        lines = [f"forbid: {a} {b}" for a, b in sorted(self.forbidden)]
        lines += [f"require: {a} {b}" for a, b in sorted(self.required)]
        lines += [f"tier{i}: {','.join(t)}" for i, t in enumerate(self.tiers)]
        return ("\n".join(lines) + "\n").encode() if lines else b""


def tiers_from_roles(roles: Mapping[str, NodeRole]) -> BackgroundKnowledge:
    """Options in tier 0, performance measures in tier 1."""
    opts = [v for v, r in roles.items() if r is NodeRole.OPTION]
    perf = [v for v, r in roles.items() if r is NodeRole.PERFORMANCE]
    if not opts or not perf:
        return BackgroundKnowledge()
    return BackgroundKnowledge(tiers=(tuple(opts), tuple(perf)))


def parse_background(data) -> BackgroundKnowledge:
    """Parse ``forbid: a b`` / ``require: a b`` / ``tierK: a,b,...`` lines (``#`` comments)."""
    if isinstance(data, (bytes, bytearray)):
        data = data.decode()
    forbidden, required, tiers = set(), set(), {}
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep:
            raise GraphParseError(f"expected 'key: value', got {raw.strip()!r}", line=lineno, field=key)
        if key in ("forbid", "require"):
            parts = rest.split()
            if len(parts) != 2:
                raise GraphParseError(f"{key} takes two variable names", line=lineno, field=key)
            for p in parts:
                if not NAME_RE.match(p):
                    raise GraphParseError(f"invalid variable name {p!r}", line=lineno, field=key)
            (forbidden if key == "forbid" else required).add(tuple(parts))
            continue
        m = _TIER_RE.match(key)
        if m is None:
            raise GraphParseError(f"unknown key {key!r}", line=lineno, field=key)
        names = [p.strip() for p in rest.split(",") if p.strip()]
        bad = [p for p in names if not NAME_RE.match(p)]
        if bad or not names:
            raise GraphParseError(f"invalid tier member list {rest.strip()!r}", line=lineno, field=key)
        k = int(m.group(1))
        if k in tiers:
            raise GraphParseError(f"tier {k} declared twice", line=lineno, field=key)
        tiers[k] = names
    ordered = tuple(tuple(tiers[k]) for k in sorted(tiers))
    try:
        return BackgroundKnowledge(frozenset(forbidden), frozenset(required), ordered)
    except InputError as exc:
        raise GraphParseError(str(exc), field="background") from None
