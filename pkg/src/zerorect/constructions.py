"""Extremal example families and matrices, with measured-versus-claimed reports.

Index conventions: k-subsets and all subsets of [r] are listed in colex order
(increasing bitmask value); grid vectors for the inner-product matrix are
listed in odometer order (last coordinate fastest).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import BudgetExceeded, InvalidParams, InvalidProbability, ZeroRectError
from .famcore import Distribution, SetFamily, disjoint_pairs, popcount
from .matcore import DenseMatrix, SubmatrixSelection, integer_rank, p_of
from .oracles import (OracleBudget, covering_probability_exact, max_constant_square,
                      max_rectangle)

MAX_ORDER = 4096
EXPLICIT_UNIVERSE = 16


def intersection_matrix(a: SetFamily, b: SetFamily) -> np.ndarray:
    """``M(i, j) = |A_i & B_j|`` as an int64 matrix."""
    x = a.as_array()
    y = b.as_array()
    if x.dtype == object or y.dtype == object:
        return np.array([[popcount(s & t) for t in b.masks] for s in a.masks], dtype=np.int64)
    return np.bitwise_count(x[:, None] & y[None, :]).astype(np.int64)


def k_subsets(r: int, k: int) -> SetFamily:
    """All k-subsets of [r] in colex order."""
    masks = sorted(sum(1 << i for i in c) for c in itertools.combinations(range(r), k))
    return SetFamily(r, tuple(masks))


def gen_c1(n: int, d: int) -> tuple[SetFamily, SetFamily]:
    """Sets meeting the first half of [n] in at most d points, and the mirror family."""
    if n % 2 or n < 2:
        raise InvalidParams("n must be even and positive")
    if not 0 <= d <= n // 2:
        raise InvalidParams("d must lie in [0, n/2]")
    if n > EXPLICIT_UNIVERSE:
        raise BudgetExceeded(f"n={n} too large to list 2^n sets")
    low = (1 << (n // 2)) - 1
    high = low << (n // 2)
    a = tuple(x for x in range(1 << n) if popcount(x & low) <= d)
    b = tuple(x for x in range(1 << n) if popcount(x & high) <= d)
    return SetFamily(n, a), SetFamily(n, b)


def c1_size(n: int, d: int) -> int:
    return 2 ** (n // 2) * sum(math.comb(n // 2, i) for i in range(d + 1))


def gen_c2(r: int, k: int, rational: bool = False) -> tuple[SetFamily, DenseMatrix]:
    if not 1 <= k <= r:
        raise InvalidParams("need 1 <= k <= r")
    if math.comb(r, k) > MAX_ORDER:
        raise BudgetExceeded(f"C({r},{k}) rows exceed {MAX_ORDER}")
    fam = k_subsets(r, k)
    mat = intersection_matrix(fam, fam)
    return fam, DenseMatrix(mat, "rational" if rational else "float")


def c2_structural_square(r: int, k: int) -> tuple[int, int]:
    """``(side, u)`` maximising ``min(C(u,k), C(r-u,k))`` over splits of [r]."""
    best = max(range(r + 1), key=lambda u: (min(math.comb(u, k), math.comb(r - u, k)), -u))
    return min(math.comb(best, k), math.comb(r - best, k)), best


def c2_zero_witness(r: int, k: int) -> SubmatrixSelection:
    """All k-subsets of the first u elements against all k-subsets of the rest."""
    side, u = c2_structural_square(r, k)
    fam = k_subsets(r, k)
    first = (1 << u) - 1
    rows = [i for i, x in enumerate(fam.masks) if not x & ~first][:side]
    cols = [j for j, x in enumerate(fam.masks) if not x & first][:side]
    return SubmatrixSelection(rows, cols)


def gen_c3(r: int) -> DenseMatrix:
    if r <= 0 or r % 4:
        raise InvalidParams("r must be a positive multiple of 4")
    if 1 << r > MAX_ORDER:
        raise BudgetExceeded(f"2^{r} rows exceed {MAX_ORDER}")
    fam = SetFamily.power_set(r)
    return DenseMatrix(intersection_matrix(fam, fam) - r // 4)


def c3_zero_count(r: int) -> int:
    return math.comb(r, r // 4) * 3 ** (3 * r // 4)


def grid_vectors(r: int, k: int) -> np.ndarray:
    return np.array(list(itertools.product(range(-k, k + 1), repeat=r)), dtype=np.int64)


def gen_c4(r: int, k: int) -> DenseMatrix:
    if r < 1 or k < 1:
        raise InvalidParams("need r >= 1 and k >= 1")
    if (2 * k + 1) ** r > MAX_ORDER:
        raise BudgetExceeded(f"(2k+1)^r = {(2 * k + 1) ** r} rows exceed {MAX_ORDER}")
    v = grid_vectors(r, k)
    return DenseMatrix(v @ v.T)


def gen_pbiased(n: int, p) -> Distribution:
    """Product distribution; explicit support when ``n`` is small, else a sampler."""
    p = Fraction(p)
    if not 0 <= p <= 1:
        raise InvalidProbability("p must lie in [0, 1]")
    if n > EXPLICIT_UNIVERSE:
        return Distribution(n, bias=p)
    support, weights = [], []
    for x in range(1 << n):
        w = p ** popcount(x) * (1 - p) ** (n - popcount(x))
        if w:
            support.append(x)
            weights.append(w)
    return Distribution(n, tuple(support), tuple(weights), bias=p)


def pbiased_covering_formula(n: int, p, r: int) -> Fraction:
    p = Fraction(p)
    return (1 - p * (1 - p) ** r) ** n


# -- verification reports ----------------------------------------------------


@dataclass(frozen=True)
class ConstructionSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("C1", "C2", "C3", "C4", "p-biased"):
            raise InvalidParams(f"unknown construction {self.kind!r}")


@dataclass
class ClaimCheck:
    name: str
    claimed: object
    measured: object
    status: str

    def to_json_obj(self) -> dict:
        def fmt(x):
            if isinstance(x, Fraction):
                return str(x)
            if isinstance(x, (np.integer, np.floating)):
                return x.item()
            return x
        return {"name": self.name, "claimed": fmt(self.claimed), "measured": fmt(self.measured),
                "status": self.status}


@dataclass
class ConstructionReport:
    spec: ConstructionSpec
    checks: list[ClaimCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.status == "pass" for c in self.checks)

    def get(self, name: str) -> ClaimCheck:
        return next(c for c in self.checks if c.name == name)

    def to_json_obj(self) -> dict:
        return {"construction": self.spec.kind, "params": dict(self.spec.params),
                "passed": self.passed, "checks": [c.to_json_obj() for c in self.checks]}


def _run(report: ConstructionReport, name: str, claimed, fn, compare=lambda c, m: c == m):
    try:
        measured = fn()
    except BudgetExceeded as exc:
        report.checks.append(ClaimCheck(name, claimed, str(exc), "budget"))
        return
    except ZeroRectError as exc:
        report.checks.append(ClaimCheck(name, claimed, str(exc), "fail"))
        return
    report.checks.append(ClaimCheck(name, claimed, measured,
                                    "pass" if compare(claimed, measured) else "fail"))


def verify_construction(spec: ConstructionSpec, budget: OracleBudget | None = None) -> ConstructionReport:
    budget = budget or OracleBudget(max_square=64, max_family=24)
    report = ConstructionReport(spec)
    at_most = lambda c, m: m <= c  # noqa: E731
    prm = spec.params
    if spec.kind == "C1":
        n, d = int(prm["n"]), int(prm["d"])
        a, b = gen_c1(n, d)
        _run(report, "size_A", c1_size(n, d), lambda: len(a))
        _run(report, "size_B", c1_size(n, d), lambda: len(b))
        _run(report, "size_union", None, lambda: len(set(a.masks) | set(b.masks)),
             lambda c, m: True)
        _run(report, "disjoint_pairs", None, lambda: disjoint_pairs(a, b).count, lambda c, m: True)
    elif spec.kind == "C2":
        r, k = int(prm["r"]), int(prm["k"])
        fam, mat = gen_c2(r, k)
        arr = mat.data.astype(np.int64)
        _run(report, "average", Fraction(k * k, r), lambda: p_of(arr))
        zeros = (arr == 0).sum(axis=1)
        _run(report, "row_zeros", math.comb(r - k, k),
             lambda: int(zeros[0]) if np.all(zeros == zeros[0]) else -1)
        _run(report, "nonzero_fraction", 1 - Fraction(math.comb(r - k, k), math.comb(r, k)),
             lambda: Fraction(int(np.count_nonzero(arr)), arr.size))
        _run(report, "rank_at_most", r, lambda: integer_rank(arr), at_most)
        side, _ = c2_structural_square(r, k)

        def witness_side():
            sel = c2_zero_witness(r, k)
            if np.any(sel.apply(arr)):
                raise ZeroRectError("structural witness is not all-zero")
            return sel.side
        _run(report, "structural_zero_square", side, witness_side)
        if arr.shape[0] <= budget.max_square:
            _run(report, "oracle_zero_square", side,
                 lambda: max_constant_square(arr, 0, budget)[0])
    elif spec.kind == "C3":
        r = int(prm["r"])
        arr = gen_c3(r).data.astype(np.int64)
        _run(report, "zero_count", c3_zero_count(r), lambda: int((arr == 0).sum()))
        _run(report, "rank_at_most", r + 1, lambda: integer_rank(arr), at_most)
        _run(report, "max_zero_rectangle_at_most", 1 << r,
             lambda: max_rectangle(arr == 0, budget)[0], at_most)
    elif spec.kind == "C4":
        r, k = int(prm["r"]), int(prm["k"])
        arr = gen_c4(r, k).data.astype(np.int64)
        cap = math.floor((2 * k + 1) ** (r / 2) + 1e-9)
        _run(report, "symmetric", True, lambda: bool(np.array_equal(arr, arr.T)))
        _run(report, "rank_at_most", r, lambda: integer_rank(arr), at_most)
        _run(report, "entry_bound", k * k * r, lambda: int(np.abs(arr).max()), at_most)
        _run(report, "constant_square_at_most", cap,
             lambda: max_constant_square(arr, None, budget)[0], at_most)
    else:
        n, p, r = int(prm["n"]), Fraction(prm["p"]), int(prm.get("r", 2))
        mu = gen_pbiased(n, p)
        _run(report, "covering_probability", pbiased_covering_formula(n, p, r),
             lambda: covering_probability_exact(mu, r, budget))
    return report
