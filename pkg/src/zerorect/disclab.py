"""Discrepancy machinery: SVD witnesses, halving, variance floors, and the two-outcome step.

Half-sized always means ``ceil(m/2) x ceil(n/2)``. Certificates are searched in
floating point and then re-verified in exact rational arithmetic, so a
returned :class:`StepOutcome` with ``certified=True`` is exact.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (BadInput, BudgetExceeded, ConstantsFalsified, PreconditionFailed,
                     VerificationFailure, ZeroVariance)
from .matcore import (SubmatrixSelection, as_int_matrix, half, is_separated, p_of, q_of,
                      rational_rank, scaled_integer, svd, values)
from .oracles import DEFAULT_BUDGET, OracleBudget, disc_exact

GROTHENDIECK_BOUND = 1.7822139781913718
WITNESS_TOL = 1e-6


@dataclass(frozen=True)
class Constants:
    """One place for every absolute constant used by the halving steps."""

    tag: str
    c: Fraction
    alpha: Fraction
    alpha_appendix: Fraction
    c0: float
    half_divisor: int = 3
    grothendieck_slack: float = 1.8

    @classmethod
    def paper(cls) -> "Constants":
        return cls("paper", Fraction(1, 10**4), Fraction(1, 2**100), Fraction(1, 2**200),
                   1 / (32 * GROTHENDIECK_BOUND))

    @classmethod
    def practical(cls) -> "Constants":
        return cls("practical", Fraction(1, 10), Fraction(1, 2), Fraction(1, 2),
                   1 / (32 * GROTHENDIECK_BOUND))

    @classmethod
    def named(cls, tag: str) -> "Constants":
        if tag == "paper":
            return cls.paper()
        if tag == "practical":
            return cls.practical()
        raise BadInput(f"unknown constant set {tag!r}")

    def to_json_obj(self) -> dict:
        return {"tag": self.tag, "c": str(self.c), "alpha": str(self.alpha),
                "alpha_appendix": str(self.alpha_appendix), "c0": self.c0,
                "half_divisor": self.half_divisor}


# -- gamma2* witness ---------------------------------------------------------


@dataclass(frozen=True)
class Gamma2Witness:
    rows: tuple[int, ...]
    cols: tuple[int, ...]
    x: np.ndarray
    y: np.ndarray
    nuclear: float
    rank: int
    value: float
    identity_value: float

    @property
    def selection(self) -> SubmatrixSelection:
        return SubmatrixSelection(self.rows, self.cols)


def _keep_small(norms: np.ndarray, keep: int) -> list[int]:
    """Indices of the ``keep`` smallest norms, ties resolved toward lower index."""
    rounded = np.round(norms, 9)
    order = sorted(range(len(norms)), key=lambda i: (rounded[i], i))
    return sorted(order[:keep])


def gamma2_witness(m) -> Gamma2Witness:
    """Unit-ball vectors from the SVD certifying a lower bound on the gamma2* norm.

    With ``u_i(k) = sqrt(s_k) U(i,k)`` (and ``v_j`` alike) the half I keeps the
    rows of smallest ``|u_i|^2``; scaling by ``sqrt(m / 2 sigma)`` makes every
    kept vector fit in the unit ball.
    """
    arr = np.asarray(values(m), dtype=np.float64)
    mm, nn = arr.shape
    if not np.any(arr):
        raise BadInput("gamma2 witness needs a nonzero matrix")
    dec = svd(arr)
    sigma = dec.nuclear
    root = np.sqrt(dec.s)
    u = dec.u * root
    v = dec.v * root
    un = np.sum(u * u, axis=1)
    vn = np.sum(v * v, axis=1)
    rows = _keep_small(un, half(mm))
    cols = _keep_small(vn, half(nn))
    slack = 1e-9 * max(1.0, sigma)
    if np.any(un[rows] > 2 * sigma / mm + slack) or np.any(vn[cols] > 2 * sigma / nn + slack):
        raise VerificationFailure("kept SVD rows exceed the Markov threshold")
    fro = float(np.linalg.norm(arr))
    if sigma > math.sqrt(dec.rank) * fro * (1 + 1e-9):
        raise VerificationFailure("nuclear norm exceeds sqrt(rank) * Frobenius norm")
    x = np.zeros_like(u)
    y = np.zeros_like(v)
    x[rows] = u[rows] * math.sqrt(mm / (2 * sigma))
    y[cols] = v[cols] * math.sqrt(nn / (2 * sigma))
    if np.any(np.sum(x * x, axis=1) > 1 + 1e-9) or np.any(np.sum(y * y, axis=1) > 1 + 1e-9):
        raise VerificationFailure("witness vectors leave the unit ball")
    value = float(np.sum(arr * (x @ y.T)))
    sub = arr[np.ix_(rows, cols)]
    identity = math.sqrt(mm * nn) / (2 * sigma) * float(np.sum(sub * sub))
    if abs(value - identity) > WITNESS_TOL * max(1.0, abs(identity)):
        raise VerificationFailure(f"witness value {value} != identity value {identity}")
    return Gamma2Witness(tuple(rows), tuple(cols), x, y, sigma, dec.rank, value, identity)


# -- discrepancy lower bound -------------------------------------------------


@dataclass(frozen=True)
class DiscLowerWitness:
    selection: SubmatrixSelection
    bound: float
    q_sub: float
    q: float
    rank: int
    witness: Gamma2Witness


def centered_float(m) -> np.ndarray:
    arr = np.asarray(values(m), dtype=np.float64)
    return arr - arr.mean()


def disc_lower_witness(m, c0: float | None = None) -> DiscLowerWitness:
    """Half-sized M' and the value ``c0 mn q(M') / sqrt(r q(M))``.

    The witness is built on the centred matrix, and r is its numerical rank.
    """
    arr = np.asarray(values(m), dtype=np.float64)
    if np.all(arr == arr.flat[0]):
        raise ZeroVariance("constant matrix has zero variance")
    c0 = Constants.paper().c0 if c0 is None else c0
    cen = centered_float(arr)
    q = float(np.mean(cen * cen))
    if q <= 0:
        raise ZeroVariance("matrix variance vanished numerically")
    w = gamma2_witness(cen)
    sub = arr[np.ix_(w.rows, w.cols)]
    q_sub = float(np.var(sub))
    mm, nn = arr.shape
    bound = c0 * mm * nn * q_sub / math.sqrt(w.rank * q)
    return DiscLowerWitness(w.selection, bound, q_sub, q, w.rank, w)


def rounding_rectangles(m, samples: int = 256, seed: int = 0):
    """Random-hyperplane rounding of the gamma2* vectors of the centred matrix.

    Returns ``(best_abs, best_neg)``: each a (value, SubmatrixSelection) pair,
    the first maximising ``|sum of centred entries|`` and the second the most
    negative sum. Either may be None if every sample gave an empty side.
    """
    arr = np.asarray(values(m), dtype=np.float64)
    cen = centered_float(arr)
    if not np.any(np.abs(cen) > 0):
        return None, None
    w = gamma2_witness(cen)
    rng = np.random.Generator(np.random.Philox(key=seed))
    g = rng.standard_normal((samples, w.x.shape[1]))
    sx = (w.x @ g.T) > 0
    sy = (w.y @ g.T) > 0
    best_abs, best_neg = None, None
    for s in range(samples):
        for rs in (sx[:, s], ~sx[:, s]):
            if not rs.any():
                continue
            colsum = cen[rs].sum(axis=0)
            for cs in (sy[:, s], ~sy[:, s]):
                if not cs.any():
                    continue
                val = float(colsum[cs].sum())
                sel = None
                if best_abs is None or abs(val) > best_abs[0]:
                    sel = SubmatrixSelection(np.flatnonzero(rs), np.flatnonzero(cs))
                    best_abs = (abs(val), sel)
                if best_neg is None or val < best_neg[0]:
                    sel = sel or SubmatrixSelection(np.flatnonzero(rs), np.flatnonzero(cs))
                    best_neg = (val, sel)
    return best_abs, best_neg


# -- halving -----------------------------------------------------------------


def _combos(k: int, size: int, limit: int) -> np.ndarray:
    count = math.comb(k, size)
    if count > limit:
        raise BudgetExceeded(f"C({k},{size}) = {count} subsets exceeds {limit}")
    out = np.zeros((count, k), dtype=np.int64)
    for i, c in enumerate(itertools.combinations(range(k), size)):
        out[i, list(c)] = 1
    return out


def _exact_ints(arr: np.ndarray) -> tuple[np.ndarray, int]:
    return scaled_integer(np.asarray(arr))


def _sel_p(arr: np.ndarray, rows, cols):
    sub = arr[np.ix_(list(rows), list(cols))]
    return float(sub.mean())


def _descend(arr: np.ndarray, rows: list[int], cols: list[int], rounds: int = 8):
    """Alternate: best rows for the current columns, then best columns for those rows."""
    mm, nn = arr.shape
    hm, hn = half(mm), half(nn)
    for _ in range(rounds):
        rsum = arr[:, cols].sum(axis=1)
        new_rows = sorted(np.argsort(rsum, kind="stable")[:hm].tolist())
        csum = arr[new_rows, :].sum(axis=0)
        new_cols = sorted(np.argsort(csum, kind="stable")[:hn].tolist())
        if new_rows == rows and new_cols == cols:
            break
        rows, cols = new_rows, new_cols
    return rows, cols


def _fit_to_half(arr: np.ndarray, sel: SubmatrixSelection) -> SubmatrixSelection:
    """Pad or trim a rectangle to exact half sizes, preferring low averages."""
    mm, nn = arr.shape
    hm, hn = half(mm), half(nn)
    cols = list(sel.cols) or list(range(nn))
    ravg = arr[:, cols].mean(axis=1)
    inside = sorted(sel.rows, key=lambda i: (ravg[i], i))
    outside = sorted(set(range(mm)) - set(sel.rows), key=lambda i: (ravg[i], i))
    rows = (inside + outside)[:hm] if len(inside) < hm else inside[:hm]
    cavg = arr[rows, :].mean(axis=0)
    cin = sorted(sel.cols, key=lambda j: (cavg[j], j))
    cout = sorted(set(range(nn)) - set(sel.cols), key=lambda j: (cavg[j], j))
    cols = (cin + cout)[:hn] if len(cin) < hn else cin[:hn]
    return SubmatrixSelection(rows, cols)


@dataclass(frozen=True)
class HalveResult:
    selection: SubmatrixSelection
    p_before: object
    p_after: object
    mode: str
    disc: object = None
    target: object = None

    @property
    def meets_target(self) -> bool | None:
        if self.target is None:
            return None
        return self.p_after <= self.target


def min_average_half(m, limit: int = 200_000):
    """Exact minimum of ``p(M')`` over all halves, by row-subset enumeration."""
    arr = values(m)
    mm, nn = arr.shape
    ints, scale = _exact_ints(arr)
    rows_ind = _combos(mm, half(mm), limit)
    sums = rows_ind @ ints if ints.dtype != object else rows_ind.astype(object) @ ints
    hn = half(nn)
    best = None
    for idx in range(sums.shape[0]):
        row = sums[idx]
        order = sorted(range(nn), key=lambda j: (row[j], j))[:hn]
        total = sum(int(row[j]) for j in order)
        if best is None or total < best[0]:
            best = (total, idx, order)
    total, idx, order = best
    rows = np.flatnonzero(rows_ind[idx]).tolist()
    return SubmatrixSelection(rows, order), Fraction(total, scale * half(mm) * hn)


def halve_reduce_average(m, witness: SubmatrixSelection | None = None, mode: str = "auto",
                         budget: OracleBudget = DEFAULT_BUDGET, limit: int = 200_000) -> HalveResult:
    """A half-sized selection with small average entry.

    ``exact`` searches every half (and, within the oracle budget, compares with
    ``p - disc/(3mn)``); ``heuristic`` grows or trims a seed rectangle to half
    size and then alternates row and column improvements.
    """
    arr = values(m)
    mm, nn = arr.shape
    p = p_of(arr)
    if mode in ("auto", "exact"):
        try:
            sel, p_after = min_average_half(arr, limit)
            disc = target = None
            try:
                disc, _ = disc_exact(arr, budget)
                target = p - Fraction(disc) / (3 * mm * nn) if isinstance(p, Fraction) \
                    else p - float(disc) / (3 * mm * nn)
            except BudgetExceeded:
                pass
            if not isinstance(p, Fraction):
                p_after = float(p_after)
            return HalveResult(sel, p, p_after, "exact", disc, target)
        except BudgetExceeded:
            if mode == "exact":
                raise
    farr = np.asarray(arr, dtype=np.float64)
    seeds = []
    if witness is not None:
        seeds.append(_fit_to_half(farr, witness))
    rs = farr.sum(axis=1)
    rows0 = sorted(np.argsort(rs, kind="stable")[:half(mm)].tolist())
    cs = farr[rows0].sum(axis=0)
    seeds.append(SubmatrixSelection(rows0, np.argsort(cs, kind="stable")[:half(nn)]))
    best = None
    for seed in seeds:
        rows, cols = _descend(farr, list(seed.rows), list(seed.cols))
        val = _sel_p(farr, rows, cols)
        if best is None or val < best[0]:
            best = (val, SubmatrixSelection(rows, cols))
    sel = best[1]
    p_after = p_of(sel.apply(arr))
    return HalveResult(sel, p, p_after, "heuristic")


def half_average_deviation_check(m, budget: OracleBudget = DEFAULT_BUDGET, limit: int = 200_000):
    """Exact ``max |p(M') - p(M)|`` over halves, with the bound ``4 disc / mn``.

    Returns ``(max_deviation, bound, holds)``.
    """
    arr = values(m)
    mm, nn = arr.shape
    ints, scale = _exact_ints(arr)
    rows_ind = _combos(mm, half(mm), limit)
    sums = rows_ind @ ints if ints.dtype != object else rows_ind.astype(object) @ ints
    hn = half(nn)
    total = sum(int(x) for x in np.asarray(ints).ravel())
    # compare sums over the half against p * |half|, scaled to integers
    size = half(mm) * hn
    best = 0
    for row in sums:
        srt = sorted(int(x) for x in row)
        lo, hi = sum(srt[:hn]), sum(srt[-hn:])
        for s in (lo, hi):
            dev = abs(s * mm * nn - total * size)
            best = max(best, dev)
    max_dev = Fraction(best, scale * mm * nn * size)
    disc, _ = disc_exact(arr, budget)
    bound = 4 * Fraction(disc) / (mm * nn)
    return max_dev, bound, max_dev <= bound


def claim_half_check(m, budget: OracleBudget = DEFAULT_BUDGET) -> dict:
    """Both halving inequalities, exactly, for a small matrix."""
    arr = values(m)
    mm, nn = arr.shape
    sel, p_after = min_average_half(arr)
    disc, _ = disc_exact(arr, budget)
    p, _ = exact_stats(arr)
    target = p - Fraction(disc) / (3 * mm * nn)
    max_dev, bound, holds = half_average_deviation_check(arr, budget)
    return {"exists_low_half": p_after <= target, "every_half_close": holds, "p": p,
            "best_half_p": p_after, "target": target, "max_dev": max_dev, "dev_bound": bound,
            "disc": Fraction(disc), "selection": sel}


# -- variance floors ---------------------------------------------------------


def find_constant_block(m, rows_needed: int, cols_needed: int, node_limit: int = 200_000):
    """A constant submatrix with at least the requested numbers of rows and columns.

    Depth-first search over rows per value, pruning when fewer than
    ``cols_needed`` common columns remain. Returns (selection, value) or None;
    raises BudgetExceeded when the node limit is reached first.
    """
    arr = values(m)
    mm, nn = arr.shape
    if rows_needed > mm or cols_needed > nn:
        return None
    nodes = [0]
    for val in sorted(set(arr.ravel().tolist())):
        eq = arr == val
        masks = []
        for row in eq:
            x = 0
            for j in np.flatnonzero(row):
                x |= 1 << int(j)
            masks.append(x)
        cand = [i for i in range(mm) if bin(masks[i]).count("1") >= cols_needed]
        if len(cand) < rows_needed:
            continue
        found = _block_dfs(masks, cand, rows_needed, cols_needed, nodes, node_limit)
        if found is not None:
            chosen, common = found
            cols = [j for j in range(nn) if common >> j & 1]
            return SubmatrixSelection(chosen, cols), val
    return None


def _block_dfs(masks, cand, need_rows, need_cols, nodes, limit):
    stack = [(0, [], 0)]
    while stack:
        pos, chosen, common = stack.pop()
        nodes[0] += 1
        if nodes[0] > limit:
            raise BudgetExceeded(f"constant-block search exceeded {limit} nodes")
        if len(chosen) == need_rows:
            return chosen, common
        remaining = len(cand) - pos
        if len(chosen) + remaining < need_rows:
            continue
        for idx in range(len(cand) - 1, pos - 1, -1):
            i = cand[idx]
            nxt = common & masks[i] if chosen else masks[i]
            if bin(nxt).count("1") >= need_cols:
                stack.append((idx + 1, chosen + [i], nxt))
    return None


@dataclass(frozen=True)
class VarianceFloor:
    mode: str
    p: object
    q: object
    floor: object
    holds: bool


def variance_floor(m, mode: str = "large_F", rank: int | None = None,
                   node_limit: int = 200_000) -> VarianceFloor:
    """Variance against the floor that applies in ``mode``.

    ``large_F``: separated with ``0 <= p <= 0.9``, floor ``p/100``.
    ``appendix``: separated, floor ``p(1-p)/100``.
    ``small_variance``: integer with no half-sized constant block, floor
    ``1/(128 r)``.
    """
    arr = values(m)
    p, q = p_of(arr), q_of(arr)
    if mode == "large_F":
        if not is_separated(arr):
            raise PreconditionFailed("matrix is not separated")
        if not 0 <= p <= Fraction(9, 10):
            raise PreconditionFailed(f"p={p} outside [0, 0.9]")
        floor = p / 100
    elif mode == "appendix":
        if not is_separated(arr):
            raise PreconditionFailed("matrix is not separated")
        floor = p * (1 - p) / 100
    elif mode == "small_variance":
        ints = as_int_matrix(arr)
        if ints is None:
            raise PreconditionFailed("matrix is not integer")
        mm, nn = ints.shape
        if find_constant_block(ints, half(mm), half(nn), node_limit) is not None:
            raise PreconditionFailed("matrix has a half-sized constant submatrix")
        r = rational_rank(ints) if rank is None else rank
        floor = Fraction(1, 128 * r)
    else:
        raise BadInput(f"unknown variance mode {mode!r}")
    return VarianceFloor(mode, p, q, floor, q >= floor)


# -- the two-outcome step ----------------------------------------------------

STEP_RULES = ("sqrt-p-over-r", "p-one-minus-p", "one-over-r")


@dataclass(frozen=True)
class StepConfig:
    rank: int
    constants: Constants = field(default_factory=Constants.practical)
    rule: str = "sqrt-p-over-r"
    exhaustive_limit: int = 400_000
    rounding_samples: int = 64
    seed: int = 0
    check_preconditions: bool = True
    node_limit: int = 100_000

    def __post_init__(self):
        if self.rule not in STEP_RULES:
            raise BadInput(f"unknown step rule {self.rule!r}")
        if self.rank < 1:
            raise BadInput("rank must be at least 1")

    @property
    def alpha(self) -> Fraction:
        return self.constants.alpha if self.rule == "sqrt-p-over-r" else self.constants.alpha_appendix

    def step_squared(self, p: Fraction) -> Fraction:
        c, r = self.constants.c, self.rank
        if self.rule == "sqrt-p-over-r":
            return c * c * p / r
        if self.rule == "p-one-minus-p":
            return c * c * p * (1 - p) / r
        return (c / r) ** 2

    def step(self, p: float) -> float:
        return math.sqrt(float(self.step_squared(Fraction(p))))


@dataclass(frozen=True)
class StepOutcome:
    selection: SubmatrixSelection
    case: str | None
    p_before: Fraction
    q_before: Fraction
    p_after: Fraction
    q_after: Fraction
    step: float
    alpha: Fraction
    search: str
    candidates: int

    @property
    def certified(self) -> bool:
        return self.case is not None


def exact_stats(m, sel: SubmatrixSelection | None = None) -> tuple[Fraction, Fraction]:
    arr = values(m) if sel is None else sel.apply(m)
    ints, scale = _exact_ints(np.asarray(arr))
    flat = [int(x) for x in np.asarray(ints).ravel()]
    k = len(flat)
    s1 = sum(flat)
    s2 = sum(x * x for x in flat)
    p = Fraction(s1, k * scale)
    q = Fraction(k * s2 - s1 * s1, k * k * scale * scale)
    return p, q


def certify_case(p: Fraction, q: Fraction, p2: Fraction, q2: Fraction, cfg: StepConfig) -> str | None:
    """Which outcome (if any) the pair (p2, q2) certifies, decided exactly."""
    step2 = cfg.step_squared(p)
    drop = p - p2
    if drop >= 0 and drop * drop >= step2 and q2 <= 4 * q:
        return "DensityDrop"
    rise = p2 - p
    if (rise <= 0 or rise * rise <= 144 * step2) and q2 <= cfg.alpha * q:
        return "VarianceDrop"
    return None


def _check_step_preconditions(arr: np.ndarray, p, cfg: StepConfig) -> None:
    if cfg.rule == "sqrt-p-over-r":
        if not is_separated(arr):
            raise PreconditionFailed("matrix is not separated")
        if not 0 < p < Fraction(9, 10):
            raise PreconditionFailed(f"p={p} outside (0, 0.9)")
    elif cfg.rule == "p-one-minus-p":
        if not is_separated(arr):
            raise PreconditionFailed("matrix is not separated")
        if not 0 < p < 1:
            raise PreconditionFailed(f"p={p} outside (0, 1)")
    else:
        ints = as_int_matrix(arr)
        if ints is None:
            raise PreconditionFailed("matrix is not integer")
        mm, nn = ints.shape
        try:
            block = find_constant_block(ints, -(-mm // 4), -(-nn // 4), cfg.node_limit)
        except BudgetExceeded:
            block = None
        if block is not None:
            raise PreconditionFailed("matrix has a quarter-sized constant submatrix")


def _all_half_stats(farr: np.ndarray, limit: int):
    mm, nn = farr.shape
    hm, hn = half(mm), half(nn)
    if math.comb(mm, hm) * math.comb(nn, hn) > limit:
        raise BudgetExceeded("too many halves for exhaustive search")
    rind = _combos(mm, hm, limit).astype(np.float64)
    cind = _combos(nn, hn, limit).astype(np.float64)
    s1 = rind @ farr @ cind.T
    s2 = rind @ (farr * farr) @ cind.T
    k = hm * hn
    p2 = s1 / k
    q2 = np.maximum(s2 / k - p2 * p2, 0.0)
    return rind, cind, p2, q2


def progress_main(p: float, q: float, rank: int, c: float) -> float:
    if q <= 0:
        return -math.inf
    return math.sqrt(rank * max(p, 0.0)) + c / 10 * math.log2(400 * rank * rank * q)


def two_cases_step(m, cfg: StepConfig) -> StepOutcome:
    """Find a half certifying a large drop in average or a large drop in variance.

    Small inputs are searched exhaustively; when nothing certifies there,
    :class:`ConstantsFalsified` is raised. Larger inputs use witness-guided
    candidates and may return an uncertified outcome (``case=None``).
    Among certified halves the one of smallest average wins.
    """
    arr = values(m)
    farr = np.asarray(arr, dtype=np.float64)
    mm, nn = farr.shape
    p, q = exact_stats(arr)
    if cfg.check_preconditions:
        _check_step_preconditions(arr, p, cfg)
    pf, qf = float(p), float(q)
    step = cfg.step(p)
    tol = 1e-9 * max(1.0, abs(pf), abs(qf))
    candidates: list[SubmatrixSelection] = []
    search = "exhaustive"
    try:
        rind, cind, p2, q2 = _all_half_stats(farr, cfg.exhaustive_limit)
        ok1 = (p2 <= pf - step + tol) & (q2 <= 4 * qf + tol)
        ok2 = (p2 <= pf + 12 * step + tol) & (q2 <= float(cfg.alpha) * qf + tol)
        idx = np.argwhere(ok1 | ok2)
        order = sorted(map(tuple, idx), key=lambda t: (p2[t], q2[t], t))
        for ri, ci in order[:64]:
            candidates.append(SubmatrixSelection(np.flatnonzero(rind[ri]), np.flatnonzero(cind[ci])))
    except BudgetExceeded:
        search = "heuristic"
        candidates = _heuristic_halves(arr, farr, cfg)
    scored = []
    for sel in candidates:
        p2e, q2e = exact_stats(arr, sel)
        case = certify_case(p, q, p2e, q2e, cfg)
        scored.append((case is None, p2e, q2e, sel.rows, sel.cols, case, sel))
    scored.sort(key=lambda t: t[:5])
    if scored and scored[0][5] is not None:
        _, p2e, q2e, _, _, case, sel = scored[0]
        return StepOutcome(sel, case, p, q, p2e, q2e, step, cfg.alpha, search, len(candidates))
    if search == "exhaustive":
        raise ConstantsFalsified(
            f"no half of this {mm}x{nn} matrix certifies either outcome", p=p, q=q, shape=(mm, nn))
    if not scored:
        raise VerificationFailure("heuristic produced no candidate halves")
    _, p2e, q2e, _, _, _, sel = min(scored, key=lambda t: (t[1], t[2], t[3], t[4]))
    return StepOutcome(sel, None, p, q, p2e, q2e, step, cfg.alpha, search, len(candidates))


def _heuristic_halves(arr, farr: np.ndarray, cfg: StepConfig) -> list[SubmatrixSelection]:
    out = []
    hres = halve_reduce_average(farr, mode="heuristic")
    out.append(hres.selection)
    if np.any(farr != farr.flat[0]):
        try:
            w = gamma2_witness(centered_float(farr))
            out.append(w.selection)
            rows, cols = _descend(farr, list(w.rows), list(w.cols))
            out.append(SubmatrixSelection(rows, cols))
            _, neg = rounding_rectangles(farr, cfg.rounding_samples, cfg.seed)
            if neg is not None:
                seeded = halve_reduce_average(farr, witness=neg[1], mode="heuristic")
                out.append(seeded.selection)
        except (VerificationFailure, BadInput):
            pass
    uniq = []
    seen = set()
    for sel in out:
        key = (sel.rows, sel.cols)
        if key not in seen:
            seen.add(key)
            uniq.append(sel)
    return uniq
