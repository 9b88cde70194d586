"""Exhaustive reference computations.

Everything here is exact or refuses: inputs above the configured budget raise
:class:`BudgetExceeded` before any enumeration starts.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import BadInput, BudgetExceeded, VerificationFailure
from .famcore import Distribution, SetFamily, _check_universe, disjointness_matrix, popcount
from .matcore import SubmatrixSelection, is_exact, scaled_integer, values


@dataclass(frozen=True)
class OracleBudget:
    max_rows: int = 12
    max_cols: int = 12
    max_square: int = 20
    max_family: int = 22
    max_universe: int = 16
    max_tuples: int = 2_000_000

    @classmethod
    def from_dict(cls, obj: dict) -> "OracleBudget":
        known = {k: int(v) for k, v in obj.items() if k in cls.__dataclass_fields__}
        return cls(**known)


DEFAULT_BUDGET = OracleBudget()


def memory_cap_bytes() -> int | None:
    raw = os.environ.get("ZERORECT_BUDGET_MB")
    if not raw:
        return None
    try:
        return int(float(raw) * 2**20)
    except ValueError as exc:
        raise BadInput(f"ZERORECT_BUDGET_MB={raw!r} is not a number") from exc


def _check_memory(nbytes: int, what: str) -> None:
    cap = memory_cap_bytes()
    if cap is not None and nbytes > cap:
        raise BudgetExceeded(f"{what} needs ~{nbytes >> 20} MB, cap is {cap >> 20} MB")


def _subset_matrix(k: int) -> np.ndarray:
    """Row ``code`` is the 0/1 indicator of subset ``code`` of range(k)."""
    codes = np.arange(1 << k, dtype=np.int64)
    return ((codes[:, None] >> np.arange(k)) & 1).astype(np.int64)


def _rect_sums(arr: np.ndarray, budget: OracleBudget):
    """Enumerate row subsets of ``arr``; yield the exact column-sum table.

    Returns (column sums per nonempty row subset, scale, transposed flag,
    subset sizes). Entries are integers scaled by ``scale``.
    """
    m, n = arr.shape
    if max(m, n) > max(budget.max_rows, budget.max_cols) or min(m, n) > min(budget.max_rows,
                                                                          budget.max_cols):
        raise BudgetExceeded(f"{m}x{n} exceeds exhaustive rectangle budget "
                             f"{budget.max_rows}x{budget.max_cols}")
    transposed = m > n
    work = arr.T if transposed else arr
    k = work.shape[0]
    _check_memory((1 << k) * work.shape[1] * 8 * 2, "rectangle enumeration")
    if is_exact(work):
        ints, scale = scaled_integer(work)
    else:
        ints, scale = work.astype(np.float64), 1
    subsets = _subset_matrix(k)[1:]
    if ints.dtype == object:
        sums = subsets.astype(object) @ ints
    else:
        sums = subsets @ ints
    return sums, scale, transposed, subsets.sum(axis=1)


def _best_from_sums(sums: np.ndarray):
    pos = np.where(sums > 0, sums, 0).sum(axis=1)
    neg = -np.where(sums < 0, sums, 0).sum(axis=1)
    best_pos = int(np.argmax(pos)) if pos.dtype != object else max(range(len(pos)), key=lambda i: (pos[i], -i))
    best_neg = int(np.argmax(neg)) if neg.dtype != object else max(range(len(neg)), key=lambda i: (neg[i], -i))
    if pos[best_pos] >= neg[best_neg]:
        return pos[best_pos], best_pos, 1
    return neg[best_neg], best_neg, -1


def _witness(sums_row, code: int, sign: int, transposed: bool) -> SubmatrixSelection:
    rows = [i for i in range(64) if (code + 1) >> i & 1]
    cols = [j for j, v in enumerate(sums_row) if sign * v > 0]
    if not cols:
        cols = [0]
    return SubmatrixSelection(cols, rows) if transposed else SubmatrixSelection(rows, cols)


def _finish(value, scale, exact):
    if exact:
        return Fraction(int(value), scale)
    return float(value)


def cut_norm_exact(m, budget: OracleBudget = DEFAULT_BUDGET):
    """Largest absolute entry sum over all nonempty rectangles, with a witness."""
    arr = values(m)
    sums, scale, transposed, _ = _rect_sums(arr, budget)
    value, code, sign = _best_from_sums(sums)
    return _finish(value, scale, is_exact(arr)), _witness(sums[code], code, sign, transposed)


def disc_exact(m, budget: OracleBudget = DEFAULT_BUDGET):
    """Largest ``|sum over S x T of M - |S||T| p(M)|`` over nonempty rectangles.

    Computed from raw rectangle sums without forming the centered matrix, so
    it is an independent route from ``cut_norm_exact(M - p J)``.
    """
    arr = values(m)
    sums, scale, transposed, sizes = _rect_sums(arr, budget)
    mn = arr.size
    if is_exact(arr):
        # the last subset is every row, so its column sums add to the total
        total_scaled = sum(int(x) for x in sums[-1])
        dev = sums * mn - sizes[:, None].astype(sums.dtype) * total_scaled
        value, code, sign = _best_from_sums(dev)
        return Fraction(int(value), scale * mn), _witness(dev[code], code, sign, transposed)
    dev = sums - sizes[:, None] * (float(arr.sum()) / mn)
    value, code, sign = _best_from_sums(dev)
    return float(value), _witness(dev[code], code, sign, transposed)


def rectangle_sum(m, sel: SubmatrixSelection):
    sub = sel.apply(m)
    if is_exact(sub):
        return sum((Fraction(x) for x in sub.ravel()), Fraction(0))
    return float(sub.sum())


# -- constant squares and bicliques ----------------------------------------


def _row_masks(adj: np.ndarray) -> list[int]:
    out = []
    for row in adj:
        x = 0
        for j in np.flatnonzero(row):
            x |= 1 << int(j)
        out.append(x)
    return out


def _max_square_bits(rows: list[int], ncols: int) -> tuple[int, list[int], int]:
    """Branch and bound for max s with s rows sharing s common columns."""
    best = [0, [], 0]
    order = sorted(range(len(rows)), key=lambda i: (-popcount(rows[i]), i))
    full = (1 << ncols) - 1

    def dfs(pos: int, chosen: list[int], common: int):
        size = len(chosen)
        cnt = popcount(common)
        side = min(size, cnt)
        if side > best[0]:
            best[0], best[1], best[2] = side, list(chosen), common
        if cnt <= best[0] or size + (len(order) - pos) <= best[0]:
            return
        for idx in range(pos, len(order)):
            if size + (len(order) - idx) <= best[0]:
                return
            i = order[idx]
            nxt = common & rows[i]
            if popcount(nxt) <= best[0]:
                continue
            chosen.append(i)
            dfs(idx + 1, chosen, nxt)
            chosen.pop()

    dfs(0, [], full)
    return best[0], best[1], best[2]


def max_constant_square(m, lam=None, budget: OracleBudget = DEFAULT_BUDGET):
    """Largest s with an s x s submatrix constant (equal to ``lam`` if given).

    Returns ``(side, selection, value)``; the selection is re-checked.
    """
    arr = values(m)
    mm, nn = arr.shape
    if mm > budget.max_square or nn > budget.max_square:
        raise BudgetExceeded(f"{mm}x{nn} exceeds constant-square budget {budget.max_square}")
    candidates = [lam] if lam is not None else sorted(set(arr.ravel().tolist()))
    best = (0, SubmatrixSelection((), ()), lam)
    for val in candidates:
        rows = _row_masks(arr == val)
        side, chosen, common = _max_square_bits(rows, nn)
        if side > best[0]:
            cols = [j for j in range(nn) if common >> j & 1][:side]
            best = (side, SubmatrixSelection(sorted(chosen)[:side], cols), val)
    side, sel, val = best
    if side and not np.all(sel.apply(arr) == val):
        raise VerificationFailure("constant-square witness failed re-check")
    return side, sel, val


def max_rectangle(adj, budget: OracleBudget = DEFAULT_BUDGET):
    """All-true rectangle maximising ``|R| |S|`` (0 when no true entry)."""
    adj = np.asarray(adj, dtype=bool)
    m, n = adj.shape
    transposed = m > n
    work = adj.T if transposed else adj
    k, width = work.shape
    if k > budget.max_family or (width > 64 and k > budget.max_family):
        raise BudgetExceeded(f"{m}x{n} exceeds biclique budget {budget.max_family}")
    if width > 64:
        raise BudgetExceeded(f"biclique oracle supports at most 64 on the wide side, got {width}")
    _check_memory((1 << k) * 8 * 3, "biclique enumeration")
    masks = np.array(_row_masks(work), dtype=np.uint64)
    common = np.empty(1 << k, dtype=np.uint64)
    common[0] = np.uint64((1 << width) - 1) if width < 64 else np.uint64(2**64 - 1)
    for i in range(k):
        common[1 << i:1 << (i + 1)] = common[:1 << i] & masks[i]
    sizes = np.bitwise_count(np.arange(1 << k, dtype=np.uint64)).astype(np.int64)
    prod = sizes * np.bitwise_count(common).astype(np.int64)
    code = int(np.argmax(prod))
    best = int(prod[code])
    if best == 0:
        return 0, SubmatrixSelection((), ())
    rows = [i for i in range(k) if code >> i & 1]
    cols = [j for j in range(width) if int(common[code]) >> j & 1]
    sel = SubmatrixSelection(cols, rows) if transposed else SubmatrixSelection(rows, cols)
    if not np.all(sel.apply(adj)):
        raise VerificationFailure("biclique witness failed re-check")
    return best, sel


def _subset_counts(family: SetFamily) -> np.ndarray:
    """``out[U]`` = number of members (with repeats) contained in ``U``."""
    n = family.n
    out = np.zeros(1 << n, dtype=np.int64)
    np.add.at(out, np.array(family.masks, dtype=np.int64), 1)
    for i in range(n):
        view = out.reshape(-1, 2, 1 << i)
        view[:, 1, :] += view[:, 0, :]
    return out


def max_biclique_by_union(a: SetFamily, b: SetFamily, budget: OracleBudget = DEFAULT_BUDGET):
    """Same optimum by enumerating the union U of R: R is then 2^U within ``a``
    and S is every member of ``b`` avoiding U."""
    _check_universe(a, b)
    n = a.n
    if n > budget.max_universe:
        raise BudgetExceeded(f"universe {n} exceeds {budget.max_universe}")
    inside = _subset_counts(a)
    outside = _subset_counts(b)[::-1]
    prod = inside * outside
    u = int(np.argmax(prod))
    best = int(prod[u])
    if best == 0:
        return 0, SetFamily(n), SetFamily(n)
    full = (1 << n) - 1
    r = a.subfamily(np.flatnonzero(a.covered_by(u)))
    s = b.subfamily(np.flatnonzero(b.covered_by(full ^ u)))
    if len(r) * len(s) != best or any(x & y for x in r.masks for y in s.masks):
        raise VerificationFailure("union biclique witness failed re-check")
    return best, r, s


def max_cross_disjoint_biclique(a: SetFamily, b: SetFamily, budget: OracleBudget = DEFAULT_BUDGET):
    """Cross-disjoint subfamilies maximising ``|R| |S|``; returns (product, R, S).

    Small families go through the rectangle search on the disjointness
    matrix; larger ones over a small universe through union enumeration.
    """
    if not len(a) or not len(b):
        return 0, SetFamily(a.n), SetFamily(b.n)
    if len(a) > budget.max_family and len(b) > budget.max_family:
        if a.n <= budget.max_universe:
            return max_biclique_by_union(a, b, budget)
        raise BudgetExceeded(f"families of size {len(a)}, {len(b)} exceed {budget.max_family}")
    best, sel = max_rectangle(disjointness_matrix(a, b), budget)
    r, s = a.subfamily(sel.rows), b.subfamily(sel.cols)
    if any(x & y for x in r.masks for y in s.masks):
        raise VerificationFailure("biclique families are not cross-disjoint")
    return best, r, s


# -- covering probability --------------------------------------------------


def covering_probability_bruteforce(mu: Distribution, r: int, budget: OracleBudget = DEFAULT_BUDGET):
    """``P[A0 within A1 | ... | Ar]`` by summing over every (r+1)-tuple of support."""
    if not mu.explicit:
        raise BudgetExceeded("distribution has no explicit support")
    k = len(mu.support)
    if k ** (r + 1) > budget.max_tuples:
        raise BudgetExceeded(f"{k}^{r + 1} tuples exceed {budget.max_tuples}")
    pairs = list(zip(mu.support, mu.weights))
    # collapse the r covering sets to a distribution over unions first
    unions: dict[int, Fraction] = {0: Fraction(1)}
    for _ in range(r):
        nxt: dict[int, Fraction] = {}
        for u, wu in unions.items():
            for x, wx in pairs:
                key = u | x
                nxt[key] = nxt.get(key, Fraction(0)) + wu * wx
        unions = nxt
    total = Fraction(0)
    for x0, w0 in pairs:
        for u, wu in unions.items():
            if not x0 & ~u:
                total += w0 * wu
    return total


def covering_probability_transform(mu: Distribution, r: int, budget: OracleBudget = DEFAULT_BUDGET):
    """Same probability via subset-sum and Moebius transforms over 2^[n].

    With ``g(U) = mu(2^U)``, ``P[union of r draws = U]`` is the Moebius
    inverse of ``g^r``, and the answer is ``sum_U P[union = U] g(U)``.
    """
    if not mu.explicit:
        raise BudgetExceeded("distribution has no explicit support")
    n = mu.n
    if n > budget.max_universe:
        raise BudgetExceeded(f"universe {n} exceeds {budget.max_universe}")
    _check_memory((1 << n) * 64, "covering transform")
    denom = 1
    for w in mu.weights:
        denom = denom * w.denominator // math.gcd(denom, w.denominator)
    g = [0] * (1 << n)
    for x, w in zip(mu.support, mu.weights):
        g[x] += int(w * denom)
    for i in range(n):
        bit = 1 << i
        for u in range(1 << n):
            if u & bit:
                g[u] += g[u ^ bit]
    h = [v ** r for v in g]
    for i in range(n):
        bit = 1 << i
        for u in range(1 << n):
            if u & bit:
                h[u] -= h[u ^ bit]
    num = sum(hu * gu for hu, gu in zip(h, g))
    return Fraction(num, denom ** (r + 1))


def covering_probability_exact(mu: Distribution, r: int, budget: OracleBudget = DEFAULT_BUDGET):
    """Exact covering probability; both routes run and must agree when both fit."""
    if r < 1:
        raise BadInput("r must be at least 1")
    results = []
    for route in (covering_probability_transform, covering_probability_bruteforce):
        try:
            results.append(route(mu, r, budget))
        except BudgetExceeded:
            continue
    if not results:
        raise BudgetExceeded("covering probability exceeds every exact route's budget")
    if len(results) == 2 and results[0] != results[1]:
        raise VerificationFailure(f"covering routes disagree: {results[0]} vs {results[1]}")
    return results[0]


def covering_lower_bound(n: int, r: int) -> float:
    return 2.0 ** (-n / r - 2)


def all_subfamilies(n: int):
    """Every subfamily of 2^[n] (as SetFamily), including the empty one."""
    universe = list(range(1 << n))
    for code in range(1 << len(universe)):
        yield SetFamily(n, tuple(x for x in universe if code >> x & 1))
