"""Query documents: ``treatment:``, ``outcome:``, ``given:``, ``s_nodes:`` lines."""
from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import GraphParseError, InputError
from ..graph import NAME_RE
from .identify import CausalQuery

__all__ = ["QuerySpec", "parse_query", "parse_assignment"]

_KEYS = ("treatment", "outcome", "given", "s_nodes", "kind")


def parse_assignment(text: str, line=None, field_name="given") -> dict:
    """``A=1,B,C=x`` -> ``{"A": "1", "B": None, "C": "x"}`` (values stay labels)."""
    out = {}
    for part in (p.strip() for p in text.split(",")):
        if not part:
            continue
        name, eq, value = part.partition("=")
        name = name.strip()
        if not NAME_RE.match(name):
            raise GraphParseError(f"invalid variable name {name!r}", line=line, field=field_name)
        if name in out:
            raise GraphParseError(f"{name!r} listed twice", line=line, field=field_name)
        out[name] = value.strip() if eq else None
        if eq and not out[name]:
            raise GraphParseError(f"empty value for {name!r}", line=line, field=field_name)
    return out


def _names(text, line, key):
    names = [p.strip() for p in text.split(",") if p.strip()]
    for n in names:
        if not NAME_RE.match(n):
            raise GraphParseError(f"invalid variable name {n!r}", line=line, field=key)
    return names


@dataclass(frozen=True)
class QuerySpec:
    treatment: tuple = ()
    outcome: tuple = ()
    given: dict = field(default_factory=dict)
    s_nodes: tuple = ()
    interventional: bool = True

    def query(self) -> CausalQuery:
        return CausalQuery(frozenset(self.treatment), frozenset(self.outcome), frozenset(self.given),
                           self.interventional)

    def given_values(self) -> dict:
        return {k: v for k, v in self.given.items() if v is not None}


def parse_query(data) -> QuerySpec:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode()
    seen = {}
    for lineno, raw in enumerate(data.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, rest = line.partition(":")
        key = key.strip()
        if not sep or key not in _KEYS:
            raise GraphParseError(f"expected one of {', '.join(_KEYS)}", line=lineno, field=key)
        if key in seen:
            raise GraphParseError(f"{key} given twice", line=lineno, field=key)
        if key == "given":
            seen[key] = parse_assignment(rest, lineno)
        elif key == "kind":
            kind = rest.strip()
            if kind not in ("causal", "statistical"):
                raise GraphParseError("kind is causal or statistical", line=lineno, field=key)
            seen[key] = kind
        else:
            seen[key] = tuple(_names(rest, lineno, key))
    if not seen.get("outcome"):
        raise GraphParseError("missing outcome", field="outcome")
    spec = QuerySpec(seen.get("treatment", ()), seen["outcome"], seen.get("given", {}), seen.get("s_nodes", ()),
                     seen.get("kind", "causal") == "causal")
    try:
        spec.query()
    except InputError as exc:
        raise GraphParseError(str(exc), field="treatment") from None
    return spec
