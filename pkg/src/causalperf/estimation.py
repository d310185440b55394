"""Plug-in estimators that bind identified estimands to measurement data."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from itertools import product as iproduct
from typing import Mapping, Sequence

import numpy as np

from .data import Dataset
from .errors import InputError, UndefinedConditionalError
from .prob import Joint
from .queries.estimand import EXPERIMENT, ProbTerm, _walk, base_var, evaluate_estimand, free_symbols
from .queries.identify import CausalQuery

__all__ = [
    "ConditionalSummary",
    "EffectTable",
    "ExperimentalData",
    "EstimateTable",
    "cond_summary",
    "adjustment_estimate",
    "estimate",
]


@dataclass(frozen=True, eq=False)
class ConditionalSummary:
    """Moments of a continuous outcome, or a level table of a discrete one.

    ``se`` is the standard error of the mean (continuous) or of each
    probability (discrete).
    """

    outcome: str
    count: int
    mean: float | None = None
    variance: float | None = None
    levels: tuple[str, ...] | None = None
    probs: np.ndarray | None = None
    se: object = None

    @property
    def discrete(self) -> bool:
        return self.probs is not None

    def to_record(self) -> dict:
        rec = {"outcome": self.outcome, "count": self.count}
        if self.discrete:
            rec["probabilities"] = {lv: float(p) for lv, p in zip(self.levels, self.probs)}
            rec["se"] = {lv: float(s) for lv, s in zip(self.levels, self.se)}
        else:
            rec.update(mean=self.mean, variance=self.variance, se=self.se)
        return rec


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _assignment_key(d: Dataset, given: Mapping[str, object]) -> dict:
    out = {}
    for k, v in given.items():
        m = d.meta(k)
        if not m.discrete:
            raise InputError(f"cannot condition on continuous variable {k!r} by value")
        out[k] = m.levels[m.code(v)]
    return out


def _summarise(d: Dataset, outcome: str, mask: np.ndarray, smoothing: float, where: Mapping) -> ConditionalSummary:
    n = int(mask.sum())
    if n == 0:
        raise UndefinedConditionalError(f"no rows match {dict(where)}", where)
    meta = d.meta(outcome)
    if meta.discrete:
        counts = np.bincount(d.column(outcome)[mask], minlength=meta.card).astype(np.float64)
        probs = (counts + smoothing) / (n + smoothing * meta.card)
        se = np.sqrt(probs * (1.0 - probs) / n)
        return ConditionalSummary(outcome, n, levels=meta.levels, probs=probs, se=se)
    vals = d.column(outcome)[mask]
    mean = float(vals.mean())
    var = float(vals.var(ddof=1)) if n > 1 else 0.0
    return ConditionalSummary(outcome, n, mean=mean, variance=var, se=math.sqrt(var / n))


def cond_summary(d: Dataset, outcome: str, given: Mapping[str, object] | None = None,
                 smoothing: float = 0.0) -> ConditionalSummary:
    """Summary of ``outcome`` over the rows matching ``given`` (level labels or codes).

    Variances are unbiased (``n - 1``); a single matching row reports 0.
    ``smoothing`` adds a pseudo-count to every level of a discrete outcome.
    """
    if smoothing < 0:
        raise InputError("smoothing must be >= 0")
    given = dict(given or {})
    if outcome in given:
        raise InputError(f"outcome {outcome!r} also appears in the conditioning assignment")
    d.meta(outcome)
    labels = _assignment_key(d, given)
    return _summarise(d, outcome, d.where(given), smoothing, labels)


# ---------------------------------------------------------------------------
# adjustment


@dataclass(frozen=True, eq=False)
class EffectTable:
    """One summary per treatment assignment (keys are tuples of level labels)."""

    treatment: tuple[str, ...]
    outcome: str
    adjustment: tuple[str, ...]
    rows: dict

    def records(self) -> list[dict]:
        out = []
        for key, s in self.rows.items():
            rec = {"treatment": dict(zip(self.treatment, key))}
            rec.update(s.to_record())
            out.append(rec)
        return out

    def to_json(self) -> str:
        return json.dumps(self.records(), indent=2) + "\n"

    def to_text(self) -> str:
        first = next(iter(self.rows.values()))
        head = list(self.treatment)
        if first.discrete:
            head += [f"P({self.outcome}={lv})" for lv in first.levels]
        else:
            head += ["mean", "variance", "se"]
        head.append("count")
        body = []
        for key, s in self.rows.items():
            cells = list(key)
            if s.discrete:
                cells += [_fmt(p) for p in s.probs]
            else:
                cells += [_fmt(s.mean), _fmt(s.variance), _fmt(s.se)]
            cells.append(str(s.count))
            body.append(cells)
        return _align([head] + body)


def _align(rows: Sequence[Sequence[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    return "".join("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() + "\n" for r in rows)


def _levels(d: Dataset, names: Sequence[str]):
    metas = [d.meta(k) for k in names]
    for m in metas:
        if not m.discrete:
            raise InputError(f"{m.name!r} must be discrete")
    return [m.levels for m in metas]


def _combine(outcome, strata, weights, n_total) -> ConditionalSummary:
    """Mix stratum summaries with weights P(z); delta-method standard errors.

    The weights are multinomial estimates from ``n_total`` rows, which adds
    ``(sum_z w_z m_z^2 - (sum_z w_z m_z)^2) / n_total`` to the variance of
    each mixed mean.
    """
    w = np.asarray(weights)
    count = sum(s.count for s in strata)
    if strata[0].discrete:
        m = np.stack([s.probs for s in strata])
        se = np.stack([np.asarray(s.se) for s in strata])
        probs = w @ m
        var = (w ** 2) @ (se ** 2) + (w @ m ** 2 - probs ** 2) / n_total
        return ConditionalSummary(outcome, count, levels=strata[0].levels, probs=probs,
                                  se=np.sqrt(np.maximum(var, 0.0)))
    means = np.array([s.mean for s in strata])
    variances = np.array([s.variance for s in strata])
    ses = np.array([s.se for s in strata])
    mean = float(w @ means)
    total_var = float(w @ (variances + means ** 2) - mean ** 2)
    var_mean = float((w ** 2) @ (ses ** 2) + (w @ means ** 2 - mean ** 2) / n_total)
    return ConditionalSummary(outcome, count, mean=mean, variance=max(total_var, 0.0),
                              se=math.sqrt(max(var_mean, 0.0)))


def adjustment_estimate(d: Dataset, q: CausalQuery, z, smoothing: float = 0.0) -> EffectTable:
    """``sum_z P(z) summary(y | x, z)`` for every treatment assignment ``x``.

    The caller is responsible for ``z`` being a valid adjustment set.
    Strata of ``z`` that never occur in the data carry zero weight; an
    observed stratum with no rows at some treatment level raises.
    """
    z = tuple(sorted([z] if isinstance(z, str) else z))
    if len(q.outcome) != 1:
        raise InputError("adjustment estimates take a single outcome")
    if q.conditioning:
        raise InputError("adjustment estimates do not take extra conditioning variables")
    (y,) = q.outcome
    x = tuple(sorted(q.treatment))
    if set(z) & (set(x) | {y}):
        raise InputError("the adjustment set overlaps treatment or outcome")
    x_levels = _levels(d, x)
    z_levels = _levels(d, z)
    d.meta(y)
    rows = {}
    n_total = d.n
    if z:
        zcodes = d.codes(list(z))
        cards = d.cards(list(z))
        flat = np.ravel_multi_index(zcodes.T, cards)
        freq = np.bincount(flat, minlength=int(np.prod(cards))) / n_total
    for xs in iproduct(*x_levels):
        given = dict(zip(x, xs))
        if not z:
            rows[xs] = cond_summary(d, y, given, smoothing)
            continue
        strata, weights = [], []
        for flat_z, w in enumerate(freq):
            if w == 0:
                continue
            zs = np.unravel_index(flat_z, cards)
            zlab = {k: z_levels[i][int(c)] for i, (k, c) in enumerate(zip(z, zs))}
            where = {**given, **zlab}
            mask = d.where(where)
            if not mask.any():
                raise UndefinedConditionalError(f"empty stratum {where}", where)
            strata.append(_summarise(d, y, mask, smoothing, where))
            weights.append(w)
        rows[xs] = _combine(y, strata, weights, n_total)
    return EffectTable(x, y, z, rows)


# ---------------------------------------------------------------------------
# estimand evaluation on data


@dataclass(frozen=True, eq=False)
class ExperimentalData:
    """Rows from an experiment in which ``randomized`` variables were set by design."""

    data: Dataset
    randomized: frozenset

    def __post_init__(self):
        r = frozenset([self.randomized] if isinstance(self.randomized, str) else self.randomized)
        for k in r:
            self.data.meta(k)
        object.__setattr__(self, "randomized", r)


@dataclass(frozen=True, eq=False)
class EstimateTable:
    """Estimand values over every assignment of its free variables."""

    variables: tuple[str, ...]
    levels: tuple[tuple[str, ...], ...]
    values: np.ndarray

    def records(self) -> list[dict]:
        out = []
        for idx in np.ndindex(*self.values.shape):
            rec = {v: self.levels[i][c] for i, (v, c) in enumerate(zip(self.variables, idx))}
            rec["value"] = float(self.values[idx])
            out.append(rec)
        return out

    def to_json(self) -> str:
        return json.dumps(self.records(), indent=2) + "\n"

    def to_text(self) -> str:
        rows = [list(self.variables) + ["value"]]
        for rec in self.records():
            rows.append([rec[v] for v in self.variables] + [f"{rec['value']:.6g}"])
        return _align(rows)


def _world_variables(e) -> dict[str, set]:
    out: dict[str, set] = {}
    for t in _walk(e):
        if isinstance(t, ProbTerm):
            s = out.setdefault(t.world, set())
            s.update(base_var(v) for v in t.targets + t.given + t.do)
    return out


def _joint_of(d: Dataset, names: Sequence[str], mask=None) -> Joint:
    names = sorted(names)
    for k in names:
        if not d.meta(k).discrete:
            raise InputError(f"estimands are evaluated on discrete variables; {k!r} is continuous")
    codes = d.codes(names)
    if mask is not None:
        codes = codes[mask]
    return Joint.from_codes(names, d.cards(names), codes)


def estimate(e, bindings: Mapping[str, object], assignment: Mapping[str, object] | None = None):
    """Evaluate ``e`` with empirical plug-in distributions.

    ``bindings`` maps each world of ``e`` to a :class:`Dataset`; terms with
    ``do`` must live in the experiment world, bound to
    :class:`ExperimentalData` whose randomized set covers the ``do``
    variables. ``assignment`` fixes free variables by level label. Returns
    a float when everything is fixed, else an :class:`EstimateTable`.
    """
    per_world = _world_variables(e)
    joints = {}
    for world, names in per_world.items():
        if world not in bindings:
            raise InputError(f"estimand needs data for world {world!r}")
        b = bindings[world]
        if any(t.do for t in _walk(e) if isinstance(t, ProbTerm) and t.world == world):
            if world != EXPERIMENT or not isinstance(b, ExperimentalData):
                raise InputError(f"interventional terms need experimental data bound to world {EXPERIMENT!r}")
            dos = {base_var(s) for t in _walk(e) if isinstance(t, ProbTerm) and t.world == world for s in t.do}
            missing = dos - b.randomized
            if missing:
                raise InputError(f"experimental data did not randomize {', '.join(sorted(missing))}")
            joints[world] = _experiment_world(b, sorted(names))
        else:
            data = b.data if isinstance(b, ExperimentalData) else b
            if not isinstance(data, Dataset):
                raise InputError(f"world {world!r} must be bound to a dataset")
            joints[world] = _joint_of(data, names)
    datasets = [b.data if isinstance(b, ExperimentalData) else b for b in bindings.values()]
    free = sorted(free_symbols(e))

    def meta(v):
        for d in datasets:
            if v in d.names:
                return d.meta(v)
        raise InputError(f"no bound dataset has variable {v!r}")

    codes = {}
    for k, val in (assignment or {}).items():
        if k in free:
            codes[k] = meta(base_var(k)).code(val)
    cards = {base_var(v): meta(base_var(v)).card for v in free}
    out = evaluate_estimand(e, joints, codes, cards)
    if isinstance(out, float):
        return out
    levels = tuple(meta(base_var(v)).levels for v in out.variables)
    return EstimateTable(out.variables, levels, out.values)


def _experiment_world(b: ExperimentalData, names):
    """``do(x) -> Joint`` over ``names`` from the rows where the randomized ``x`` took those values."""
    def at(do):
        mask = np.ones(b.data.n, dtype=bool)
        for k, c in do.items():
            mask &= b.data.column(k) == c
        if not mask.any():
            raise UndefinedConditionalError(f"experimental data has no rows with {do}", do)
        return _joint_of(b.data, names, mask)
    return at
