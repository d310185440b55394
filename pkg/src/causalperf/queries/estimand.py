"""Symbolic estimands: sums, products and quotients of probability terms.

A *symbol* names a variable value. It is the variable name, optionally
followed by primes (``X'``) when a summation binds a fresh copy of a
variable whose plain name is already in use. Evaluation uses lexical
scoping, so an inner ``Sum`` over a symbol shadows the outer value.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Mapping

import numpy as np

from ..data import Dataset
from ..errors import InputError, UndefinedConditionalError
from ..prob import Joint

__all__ = [
    "SOURCE",
    "TARGET",
    "EXPERIMENT",
    "ProbTerm",
    "Sum",
    "Product",
    "Quotient",
    "Estimand",
    "EvalTable",
    "base_var",
    "free_symbols",
    "simplify",
    "rename_bound",
    "retag",
    "worlds",
    "has_do",
    "to_text",
    "to_json",
    "from_json",
    "evaluate_estimand",
]

SOURCE = "source"
TARGET = "target"
EXPERIMENT = "experiment"
_WORLDS = (SOURCE, TARGET, EXPERIMENT)
_PREFIX = {SOURCE: "P", TARGET: "P*", EXPERIMENT: "P"}


def base_var(symbol: str) -> str:
    return symbol.rstrip("'")


def _tup(xs) -> tuple:
    return tuple(sorted(set(xs)))


@dataclass(frozen=True)
class ProbTerm:
    """``P_world(targets | do(do), given)``."""

    targets: tuple
    given: tuple = ()
    do: tuple = ()
    world: str = SOURCE

    def __post_init__(self):
        object.__setattr__(self, "targets", _tup(self.targets))
        object.__setattr__(self, "given", _tup(self.given))
        object.__setattr__(self, "do", _tup(self.do))
        if self.world not in _WORLDS:
            raise InputError(f"unknown world {self.world!r}")
        if set(self.targets) & (set(self.given) | set(self.do)) or set(self.given) & set(self.do):
            raise InputError("a probability term lists a symbol twice")


@dataclass(frozen=True)
class Sum:
    vars: tuple
    child: "Estimand"

    def __post_init__(self):
        object.__setattr__(self, "vars", _tup(self.vars))


@dataclass(frozen=True)
class Product:
    children: tuple

    def __post_init__(self):
        object.__setattr__(self, "children", tuple(self.children))


@dataclass(frozen=True)
class Quotient:
    num: "Estimand"
    den: "Estimand"


Estimand = ProbTerm | Sum | Product | Quotient
ONE = Product(())


# ---------------------------------------------------------------------------
# structural helpers


def free_symbols(e) -> frozenset:
    if isinstance(e, ProbTerm):
        return frozenset(e.targets + e.given + e.do)
    if isinstance(e, Sum):
        return free_symbols(e.child) - frozenset(e.vars)
    if isinstance(e, Product):
        out = frozenset()
        for c in e.children:
            out |= free_symbols(c)
        return out
    return free_symbols(e.num) | free_symbols(e.den)


def _walk(e):
    yield e
    if isinstance(e, Sum):
        yield from _walk(e.child)
    elif isinstance(e, Product):
        for c in e.children:
            yield from _walk(c)
    elif isinstance(e, Quotient):
        yield from _walk(e.num)
        yield from _walk(e.den)


def worlds(e) -> set:
    return {t.world for t in _walk(e) if isinstance(t, ProbTerm)}


def has_do(e) -> bool:
    return any(isinstance(t, ProbTerm) and t.do for t in _walk(e))


def _map_terms(e, fn):
    if isinstance(e, ProbTerm):
        return fn(e)
    if isinstance(e, Sum):
        return Sum(e.vars, _map_terms(e.child, fn))
    if isinstance(e, Product):
        return Product(tuple(_map_terms(c, fn) for c in e.children))
    return Quotient(_map_terms(e.num, fn), _map_terms(e.den, fn))


def retag(e, world: str):
    """Same expression with every term moved to ``world``."""
    return _map_terms(e, lambda t: ProbTerm(t.targets, t.given, t.do, world))


def _substitute(e, mapping: Mapping[str, str]):
    """Rename free occurrences of symbols."""
    if not mapping:
        return e
    if isinstance(e, ProbTerm):
        f = lambda xs: tuple(mapping.get(x, x) for x in xs)
        return ProbTerm(f(e.targets), f(e.given), f(e.do), e.world)
    if isinstance(e, Sum):
        inner = {k: v for k, v in mapping.items() if k not in e.vars}
        return Sum(e.vars, _substitute(e.child, inner))
    if isinstance(e, Product):
        return Product(tuple(_substitute(c, mapping) for c in e.children))
    return Quotient(_substitute(e.num, mapping), _substitute(e.den, mapping))


def rename_bound(e, reserved=frozenset()):
    """Alpha-rename summation symbols that shadow a symbol already in scope.

    ``reserved`` holds symbols in scope at the top (normally the free
    symbols of the whole expression); a shadowing binder gets primes
    appended until its name is unused.
    """
    reserved = frozenset(reserved) | free_symbols(e)
    return _rename(e, reserved)


def _rename(e, scope: frozenset):
    if isinstance(e, ProbTerm):
        return e
    if isinstance(e, Product):
        return Product(tuple(_rename(c, scope) for c in e.children))
    if isinstance(e, Quotient):
        return Quotient(_rename(e.num, scope), _rename(e.den, scope))
    used = scope | _all_symbols(e.child)
    mapping = {}
    for v in e.vars:
        if v in scope:
            new = v + "'"
            while new in used or new in mapping.values():
                new += "'"
            mapping[v] = new
    child = _substitute(e.child, mapping)
    new_vars = tuple(mapping.get(v, v) for v in e.vars)
    return Sum(new_vars, _rename(child, scope | frozenset(new_vars)))


def _bound_inside(e) -> frozenset:
    return frozenset(v for t in _walk(e) if isinstance(t, Sum) for v in t.vars)


def _all_symbols(e) -> frozenset:
    out = set()
    for t in _walk(e):
        if isinstance(t, ProbTerm):
            out.update(t.targets + t.given + t.do)
        elif isinstance(t, Sum):
            out.update(t.vars)
    return frozenset(out)


# ---------------------------------------------------------------------------
# simplification


def simplify(e):
    """Flatten products, drop factors that sum to one, fold ratios into conditionals."""
    prev = None
    while prev != e:
        prev = e
        e = _simp(e)
    return e


def _flatten(children):
    out = []
    for c in children:
        if isinstance(c, Product):
            out.extend(_flatten(c.children))
        else:
            out.append(c)
    return out


def _simp(e):
    if isinstance(e, ProbTerm):
        return e
    if isinstance(e, Product):
        kids = _flatten(_simp(c) for c in e.children)
        return kids[0] if len(kids) == 1 else Product(tuple(kids))
    if isinstance(e, Quotient):
        num, den = _simp(e.num), _simp(e.den)
        if den == ONE:
            return num
        if isinstance(num, ProbTerm) and isinstance(den, ProbTerm) and num.world == den.world and num.do == den.do \
                and num.given == den.given and set(den.targets) < set(num.targets):
            rest = tuple(t for t in num.targets if t not in den.targets)
            return ProbTerm(rest, num.given + den.targets, num.do, num.world)
        return Quotient(num, den)
    child = _simp(e.child)
    vars_ = list(e.vars)
    if not vars_:
        return child
    if isinstance(child, Sum) and not set(child.vars) & set(vars_) and not set(vars_) & _bound_inside(child.child):
        return Sum(tuple(vars_) + child.vars, child.child)
    if isinstance(child, ProbTerm):
        summed = [v for v in vars_ if v in child.targets]
        if summed and not set(summed) & set(child.given + child.do):
            kept = tuple(t for t in child.targets if t not in summed)
            child = ProbTerm(kept, child.given, child.do, child.world) if kept else ONE
            vars_ = [v for v in vars_ if v not in summed]
            return Sum(tuple(vars_), child) if vars_ else child
        return Sum(tuple(vars_), child)
    if isinstance(child, Product):
        kids = list(child.children)
        changed = True
        while changed:
            changed = False
            for i, k in enumerate(kids):
                if not isinstance(k, ProbTerm):
                    continue
                tset = set(k.targets)
                if not tset <= set(vars_) or tset & set(k.given + k.do):
                    continue
                others = frozenset()
                for j, o in enumerate(kids):
                    if j != i:
                        others |= free_symbols(o)
                if tset & others:
                    continue
                del kids[i]
                vars_ = [v for v in vars_ if v not in tset]
                changed = True
                break
        body = kids[0] if len(kids) == 1 else Product(tuple(kids))
        if not vars_:
            return body
        # pull factors that do not mention any summed symbol out of the sum
        if isinstance(body, Product):
            inside = [k for k in body.children if free_symbols(k) & set(vars_)]
            outside = [k for k in body.children if not free_symbols(k) & set(vars_)]
            if outside and inside:
                inner = inside[0] if len(inside) == 1 else Product(tuple(inside))
                return Product(tuple(outside) + (Sum(tuple(vars_), inner),))
        return Sum(tuple(vars_), body)
    return Sum(tuple(vars_), child)


# ---------------------------------------------------------------------------
# text and JSON


def _sym_text(symbols):
    return ",".join(symbols)


def _term_text(t: ProbTerm) -> str:
    parts = []
    if t.do:
        parts.append(f"do({_sym_text(t.do)})")
    parts.extend(t.given)
    inner = _sym_text(t.targets)
    if parts:
        inner += "|" + ",".join(parts)
    return f"{_PREFIX[t.world]}({inner})"


def to_text(e) -> str:
    """Readable rendering, e.g. ``sum_Z P*(Z) P(Y|do(X),Z)``."""
    if isinstance(e, ProbTerm):
        return _term_text(e)
    if isinstance(e, Sum):
        sub = e.vars[0] if len(e.vars) == 1 else "{" + ",".join(e.vars) + "}"
        return f"sum_{sub} {to_text(e.child)}"
    if isinstance(e, Product):
        if not e.children:
            return "1"
        out = []
        for i, c in enumerate(e.children):
            s = to_text(c)
            if isinstance(c, (Sum, Quotient)) and i < len(e.children) - 1:
                s = f"[{s}]"
            out.append(s)
        return " ".join(out)
    return f"[{to_text(e.num)}] / [{to_text(e.den)}]"


def to_dict(e) -> dict:
    if isinstance(e, ProbTerm):
        return {"type": "prob", "world": e.world, "targets": list(e.targets), "given": list(e.given),
                "do": list(e.do)}
    if isinstance(e, Sum):
        return {"type": "sum", "vars": list(e.vars), "child": to_dict(e.child)}
    if isinstance(e, Product):
        return {"type": "product", "children": [to_dict(c) for c in e.children]}
    return {"type": "quotient", "num": to_dict(e.num), "den": to_dict(e.den)}


def from_dict(d):
    try:
        kind = d["type"]
        if kind == "prob":
            return ProbTerm(tuple(d["targets"]), tuple(d.get("given", ())), tuple(d.get("do", ())),
                            d.get("world", SOURCE))
        if kind == "sum":
            return Sum(tuple(d["vars"]), from_dict(d["child"]))
        if kind == "product":
            return Product(tuple(from_dict(c) for c in d["children"]))
        if kind == "quotient":
            return Quotient(from_dict(d["num"]), from_dict(d["den"]))
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed estimand: {exc}") from None
    raise InputError(f"unknown estimand node type {kind!r}")


def to_json(e) -> str:
    return json.dumps(to_dict(e), indent=2, sort_keys=True) + "\n"


def from_json(text):
    return from_dict(json.loads(text))


# ---------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class EvalTable:
    """Values of an estimand over every assignment of its unassigned free symbols."""

    variables: tuple
    values: np.ndarray


def _as_world(obj):
    if isinstance(obj, Dataset):
        names = list(obj.names)
        return Joint.from_codes(names, obj.cards(names), obj.codes(names))
    return obj


class _Evaluator:
    def __init__(self, joints: Mapping[str, object], cards: Mapping[str, int] | None = None):
        self.joints = {w: _as_world(j) for w, j in joints.items()}
        self.cards = dict(cards or {})
        self._exp_cache = {}

    def joint(self, world, do_assign):
        if world not in self.joints:
            raise InputError(f"estimand needs the {world!r} distribution, which was not supplied")
        j = self.joints[world]
        if do_assign:
            key = (world, tuple(sorted(do_assign.items())))
            hit = self._exp_cache.get(key)
            if hit is None:
                if isinstance(j, Mapping):
                    hit = j.get(frozenset(do_assign.items()))
                    if hit is None:
                        raise InputError(f"no {world!r} distribution for do({do_assign})")
                elif callable(j):
                    hit = j(dict(do_assign))
                else:
                    raise InputError(f"world {world!r} cannot answer interventional terms")
                hit = _as_world(hit)
                self._exp_cache[key] = hit
            return hit
        if not isinstance(j, Joint):
            raise InputError(f"world {world!r} supplies no observational distribution")
        return j

    def card(self, symbol) -> int:
        v = base_var(symbol)
        if v in self.cards:
            return self.cards[v]
        for j in self.joints.values():
            if isinstance(j, Joint) and v in j.variables:
                return j.card(v)
        raise InputError(f"no supplied distribution knows variable {v!r}")

    def ev(self, e, env) -> float:
        if isinstance(e, ProbTerm):
            do = {base_var(s): env[s] for s in e.do}
            j = self.joint(e.world, do)
            tgt = {base_var(s): env[s] for s in e.targets}
            giv = {base_var(s): env[s] for s in e.given}
            return j.conditional(tgt, giv)
        if isinstance(e, Product):
            out = 1.0
            for c in e.children:
                out *= self.ev(c, env)
            return out
        if isinstance(e, Quotient):
            num = self.ev(e.num, env)
            den = self.ev(e.den, env)
            if den <= 0.0:
                bound = {k: v for k, v in env.items()}
                raise UndefinedConditionalError(f"zero denominator at {bound}", bound)
            return num / den
        cards = [self.card(v) for v in e.vars]
        if any(c == 0 for c in cards):
            raise UndefinedConditionalError(f"empty summation domain for {list(e.vars)}", dict(env))
        total = 0.0
        inner = dict(env)
        for vals in iproduct(*[range(c) for c in cards]):
            inner.update(zip(e.vars, vals))
            total += self.ev(e.child, inner)
        return total


def evaluate_estimand(e, joints: Mapping[str, object], assignment: Mapping[str, int] | None = None,
                      cards: Mapping[str, int] | None = None):
    """Evaluate ``e`` against per-world distributions.

    ``joints`` maps a world name (``"source"``, ``"target"``,
    ``"experiment"``) to a :class:`Joint` or :class:`Dataset`; worlds that
    answer ``do`` terms map to a callable ``do_assignment -> Joint`` or to a
    dict keyed by ``frozenset(do_assignment.items())``. Returns a float when
    ``assignment`` fixes every free symbol, else an :class:`EvalTable` over
    the remaining ones (sorted). Assigned names that are not free in
    ``e`` are ignored. ``cards`` gives level counts for variables that no
    observational world covers.
    """
    assignment = dict(assignment or {})
    ev = _Evaluator(joints, cards)
    free = sorted(free_symbols(e))
    # a treatment that drops out of the estimand may still be assigned
    assignment = {k: v for k, v in assignment.items() if k in free}
    rest = [s for s in free if s not in assignment]
    if not rest:
        return ev.ev(e, assignment)
    cards = [ev.card(s) for s in rest]
    out = np.empty(cards)
    env = dict(assignment)
    for vals in iproduct(*[range(c) for c in cards]):
        env.update(zip(rest, vals))
        out[vals] = ev.ev(e, env)
    return EvalTable(tuple(rest), out)
