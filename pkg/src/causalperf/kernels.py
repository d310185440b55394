"""Numeric inner loops shared by the CI tests and the SCM simulator.

Every kernel exists twice: a numba-compiled loop (``*_nb``) and a
vectorised numpy version (``*_np``). The public names dispatch on
``causalperf._accel.USE_NUMBA``. Both versions are kept importable so the
test-suite and ``benchmarks/bench_kernels.py`` can compare them directly.
"""
import numpy as np

from ._accel import USE_NUMBA, njit

__all__ = [
    "mixed_radix_index",
    "count_cells",
    "sample_categorical",
    "joint_table",
    "g2_strata",
]


# --------------------------------------------------------------------------
# mixed-radix encoding of integer code rows


@njit(cache=True)
def mixed_radix_index_nb(codes, cards):
    n, k = codes.shape
    out = np.zeros(n, dtype=np.int64)
    for r in range(n):
        acc = 0
        for j in range(k):
            acc = acc * cards[j] + codes[r, j]
        out[r] = acc
    return out


def mixed_radix_index_np(codes, cards):
    codes = np.asarray(codes, dtype=np.int64)
    cards = np.asarray(cards, dtype=np.int64)
    if codes.shape[1] == 0:
        return np.zeros(codes.shape[0], dtype=np.int64)
    strides = np.ones(len(cards), dtype=np.int64)
    for j in range(len(cards) - 2, -1, -1):
        strides[j] = strides[j + 1] * cards[j + 1]
    return codes @ strides


# --------------------------------------------------------------------------
# histogram of flat cell indices


@njit(cache=True)
def count_cells_nb(index, size):
    out = np.zeros(size, dtype=np.int64)
    for i in range(index.shape[0]):
        out[index[i]] += 1
    return out


def count_cells_np(index, size):
    return np.bincount(np.asarray(index, dtype=np.int64), minlength=size).astype(np.int64)


# --------------------------------------------------------------------------
# inverse-CDF categorical sampling, one row of the CPT per parent config


@njit(cache=True)
def sample_categorical_nb(cum, parent_index, u):
    n = u.shape[0]
    card = cum.shape[1]
    out = np.zeros(n, dtype=np.int64)
    for i in range(n):
        row = parent_index[i]
        c = 0
        for j in range(card - 1):
            if u[i] >= cum[row, j]:
                c += 1
        out[i] = c
    return out


def sample_categorical_np(cum, parent_index, u):
    rows = cum[parent_index, :-1]
    return (u[:, None] >= rows).sum(axis=1).astype(np.int64)


# --------------------------------------------------------------------------
# full joint table of a discrete Bayesian network by enumeration
#
# cards[i]          cardinality of node i (topological order not required)
# parent_ptr        CSR offsets into parent_idx, length n+1
# parent_idx        parent node indices, in CPT axis order
# table_ptr         offsets into tables, length n+1
# tables            flattened CPTs, each of shape (*parent_cards, card) C-order


@njit(cache=True)
def joint_table_nb(cards, parent_ptr, parent_idx, table_ptr, tables):
    n = cards.shape[0]
    total = 1
    for i in range(n):
        total *= cards[i]
    out = np.empty(total, dtype=np.float64)
    codes = np.zeros(n, dtype=np.int64)
    for s in range(total):
        rem = s
        for i in range(n - 1, -1, -1):
            codes[i] = rem % cards[i]
            rem //= cards[i]
        p = 1.0
        for i in range(n):
            off = 0
            for k in range(parent_ptr[i], parent_ptr[i + 1]):
                j = parent_idx[k]
                off = off * cards[j] + codes[j]
            off = off * cards[i] + codes[i]
            p *= tables[table_ptr[i] + off]
        out[s] = p
    return out


def joint_table_np(cards, parent_ptr, parent_idx, table_ptr, tables):
    n = len(cards)
    shape = tuple(int(c) for c in cards)
    joint = np.ones(shape, dtype=np.float64)
    for i in range(n):
        pars = [int(j) for j in parent_idx[parent_ptr[i]:parent_ptr[i + 1]]]
        fshape = tuple(shape[j] for j in pars) + (shape[i],)
        factor = np.asarray(tables[table_ptr[i]:table_ptr[i + 1]]).reshape(fshape)
        axes = pars + [i]
        # move factor axes into their slots of the full joint, broadcast elsewhere
        order = np.argsort(axes)
        factor = np.transpose(factor, order)
        bshape = [1] * n
        for a in axes:
            bshape[a] = shape[a]
        joint = joint * factor.reshape(bshape)
    return joint.reshape(-1)


# --------------------------------------------------------------------------
# G^2 over a stack of x-by-y contingency tables (one per conditioning stratum)


@njit(cache=True)
def g2_strata_nb(counts):
    ns, nx, ny = counts.shape
    g2 = 0.0
    nonempty = 0
    for s in range(ns):
        tot = 0.0
        for a in range(nx):
            for b in range(ny):
                tot += counts[s, a, b]
        if tot == 0:
            continue
        nonempty += 1
        for a in range(nx):
            ra = 0.0
            for b in range(ny):
                ra += counts[s, a, b]
            for b in range(ny):
                o = counts[s, a, b]
                if o > 0:
                    cb = 0.0
                    for k in range(nx):
                        cb += counts[s, k, b]
                    g2 += o * np.log(o * tot / (ra * cb))
    return 2.0 * g2, nonempty


def g2_strata_np(counts):
    counts = np.asarray(counts, dtype=np.float64)
    tot = counts.sum(axis=(1, 2))
    rows = counts.sum(axis=2, keepdims=True)
    cols = counts.sum(axis=1, keepdims=True)
    expected = rows * cols / np.where(tot > 0, tot, 1.0)[:, None, None]
    mask = counts > 0
    g2 = 2.0 * float(np.sum(counts[mask] * np.log(counts[mask] / expected[mask])))
    return g2, int(np.count_nonzero(tot))


_IMPL = {
    name: (globals()[name + "_nb"] if USE_NUMBA else globals()[name + "_np"])
    for name in __all__
}


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def _f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def mixed_radix_index(codes, cards):
    codes = _i64(codes)
    if codes.ndim == 1:
        codes = codes.reshape(-1, 1)
    return _IMPL["mixed_radix_index"](codes, _i64(cards))


def count_cells(index, size):
    return _IMPL["count_cells"](_i64(index), int(size))


def sample_categorical(cum, parent_index, u):
    return _IMPL["sample_categorical"](_f64(cum), _i64(parent_index), _f64(u))


def joint_table(cards, parent_ptr, parent_idx, table_ptr, tables):
    return _IMPL["joint_table"](_i64(cards), _i64(parent_ptr), _i64(parent_idx), _i64(table_ptr), _f64(tables))


def g2_strata(counts):
    g2, nonempty = _IMPL["g2_strata"](_f64(counts))
    return float(g2), int(nonempty)
