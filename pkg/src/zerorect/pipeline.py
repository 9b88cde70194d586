"""End-to-end searches for all-zero and constant submatrices of low-rank matrices.

Both pipelines repeatedly halve the matrix with :func:`two_cases_step`,
tracking a progress function, and finish with the sparse extraction below.
Every returned selection is re-checked entry by entry against the input.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .disclab import (Constants, StepConfig, exact_stats, find_constant_block, two_cases_step)
from .errors import (BadInput, BudgetExceeded, EmptyResult, PreconditionFailed, ProgressViolation,
                     RankContradiction, TooDense, VerificationFailure)
from .matcore import (SubmatrixSelection, as_int_matrix, half, is_separated, numerical_rank,
                      rational_rank, values)

EXACT_RANK_LIMIT = 64
SMALL_RANK = 16


# -- greedy regularization and sparse extraction --------------------------


def _induced_matching(edges: np.ndarray, allowed: np.ndarray) -> list[tuple[int, int]]:
    """Greedy maximal induced matching of ``edges`` restricted to ``allowed`` pairs.

    A pair (i, j) joins only if neither endpoint touches (through ``edges``)
    an endpoint already in the matching.
    """
    blocked_rows = np.zeros(edges.shape[0], dtype=bool)
    blocked_cols = np.zeros(edges.shape[1], dtype=bool)
    matching = []
    for i, j in zip(*np.nonzero(allowed)):
        if blocked_rows[i] or blocked_cols[j]:
            continue
        matching.append((int(i), int(j)))
        blocked_rows |= edges[:, j]
        blocked_cols |= edges[i, :]
        blocked_rows[i] = True
        blocked_cols[j] = True
    return matching


def _neighbourhood(edges: np.ndarray, matching) -> tuple[np.ndarray, np.ndarray]:
    rows = np.zeros(edges.shape[0], dtype=bool)
    cols = np.zeros(edges.shape[1], dtype=bool)
    for i, j in matching:
        rows |= edges[:, j]
        cols |= edges[i, :]
    return rows, cols


@dataclass(frozen=True)
class GreedyResult:
    selection: SubmatrixSelection
    matching: tuple[tuple[int, int], ...]
    trimmed_rows: int
    trimmed_cols: int


def regularize_bounded(m, rank: int) -> GreedyResult:
    """A large submatrix with every entry below ``400 r^2 p``.

    Rows and columns of high degree in the graph of entries ``>= 400 r p`` are
    dropped, a maximal induced matching of entries ``>= 400 r^2 p`` is built,
    and the neighbourhood of the matching is removed.
    """
    arr = np.asarray(values(m), dtype=np.float64)
    if np.any(arr < 0):
        raise PreconditionFailed("regularization needs nonnegative entries")
    mm, nn = arr.shape
    p = float(arr.mean())
    if p == 0:
        return GreedyResult(SubmatrixSelection.full(arr.shape), (), 0, 0)
    graph = arr >= 400 * rank * p
    keep_rows = graph.sum(axis=1) <= nn / (20 * rank)
    keep_cols = graph.sum(axis=0) <= mm / (20 * rank)
    inner = graph & keep_rows[:, None] & keep_cols[None, :]
    red = inner & (arr >= 400 * rank * rank * p)
    matching = _induced_matching(inner, red)
    if len(matching) > rank:
        raise RankContradiction(f"induced matching of size {len(matching)} exceeds rank {rank}")
    nr, nc = _neighbourhood(inner, matching)
    rows = np.flatnonzero(keep_rows & ~nr)
    cols = np.flatnonzero(keep_cols & ~nc)
    sel = SubmatrixSelection(rows, cols)
    if sel.empty or np.any(sel.apply(arr) >= 400 * rank * rank * p):
        raise VerificationFailure("regularized submatrix still has a large entry")
    if len(rows) < 0.9 * mm or len(cols) < 0.9 * nn:
        raise VerificationFailure("regularization removed more than a tenth of a side")
    return GreedyResult(sel, tuple(matching), int((~keep_rows).sum()), int((~keep_cols).sum()))


def sparse_zero_extract(m, rank: int | None = None) -> GreedyResult:
    """An all-zero submatrix with at least half the rows and half the columns.

    Requires at most ``mn/(16r)`` nonzero entries. Rows and columns of more
    than ``n/(4r)`` (resp. ``m/(4r)``) nonzeros are trimmed, then the
    neighbourhood of a maximal induced matching of nonzeros is removed.
    """
    arr = values(m)
    mm, nn = arr.shape
    nz = np.asarray(arr != 0)
    if rank is None:
        rank = max(1, exact_or_numerical_rank(arr))
    if rank < 1:
        raise BadInput("rank must be at least 1")
    nnz = int(nz.sum())
    if nnz * 16 * rank > mm * nn:
        raise TooDense(f"{nnz} nonzeros exceed mn/(16r) = {mm * nn / (16 * rank):.3f}")
    keep_rows = nz.sum(axis=1) * 4 * rank <= nn
    keep_cols = nz.sum(axis=0) * 4 * rank <= mm
    inner = nz & keep_rows[:, None] & keep_cols[None, :]
    matching = _induced_matching(inner, inner)
    if len(matching) > rank:
        raise RankContradiction(f"induced matching of size {len(matching)} exceeds rank {rank}")
    nr, nc = _neighbourhood(inner, matching)
    sel = SubmatrixSelection(np.flatnonzero(keep_rows & ~nr), np.flatnonzero(keep_cols & ~nc))
    if sel.shape[0] < half(mm) or sel.shape[1] < half(nn):
        raise VerificationFailure(f"sparse extraction returned {sel.shape} from {arr.shape}")
    if np.any(sel.apply(arr) != 0):
        raise VerificationFailure("sparse extraction returned a nonzero entry")
    return GreedyResult(sel, tuple(matching), int((~keep_rows).sum()), int((~keep_cols).sum()))


def exact_or_numerical_rank(m) -> int:
    arr = values(m)
    ints = as_int_matrix(arr)
    if ints is not None and max(arr.shape) <= EXACT_RANK_LIMIT:
        return rational_rank(ints)
    return numerical_rank(arr)


# -- progress functions ------------------------------------------------------


@dataclass(frozen=True)
class Progress:
    main: float
    density: float
    variance: float


def progress_values(p: float, q: float, rank: int, c: float, delta: float | None = None) -> Progress:
    """Progress functionals.

    ``main`` is ``sqrt(rp) + (c/10) log2(delta q)`` with ``delta = 400 r^2``;
    ``density`` is ``sqrt(rp) + sqrt(r) - sqrt(r(1-p))`` and ``variance`` is
    ``(c/10) log2(10^4 r q)``. A zero variance gives ``-inf``.
    """
    if not 0 <= p <= 1 and not math.isclose(p, 1):
        raise BadInput(f"p={p} outside [0, 1]")
    if q < 0:
        raise BadInput("variance must be nonnegative")
    delta = 400 * rank * rank if delta is None else delta
    p = min(max(p, 0.0), 1.0)
    root = math.sqrt(rank * p)
    log_q = math.log2(delta * q) if q > 0 else -math.inf
    main = root + c / 10 * log_q
    density = root + math.sqrt(rank) - math.sqrt(rank * (1 - p))
    variance = c / 10 * math.log2(10**4 * rank * q) if q > 0 else -math.inf
    return Progress(main, density, variance)


# -- configuration and traces ------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    constants: Constants = field(default_factory=Constants.practical)
    rank: int | None = None
    max_steps: int = 64
    seed: int = 0
    exhaustive_limit: int = 400_000
    node_limit: int = 20_000
    density_ceiling: float = 0.8
    delta_scale: int = 400

    def __post_init__(self):
        if self.max_steps < 1:
            raise BadInput("max_steps must be at least 1")
        if self.constants.tag == "paper" and not 0 < self.constants.c <= Fraction(1, 10**4):
            raise BadInput("paper constants need c in (0, 1e-4]")

    @property
    def audit(self) -> bool:
        return self.constants.tag == "paper"

    @property
    def c(self) -> float:
        return float(self.constants.c)

    def to_json_obj(self) -> dict:
        return {"constants": self.constants.to_json_obj(), "rank": self.rank,
                "max_steps": self.max_steps, "seed": self.seed,
                "exhaustive_limit": self.exhaustive_limit, "node_limit": self.node_limit,
                "density_ceiling": self.density_ceiling}


@dataclass(frozen=True)
class StepRecord:
    rows: int
    cols: int
    p: float
    q: float
    case: str | None
    f: float
    search: str = ""
    level: int | None = None
    rule: str = ""

    def to_json_obj(self) -> dict:
        f = self.f if math.isfinite(self.f) else None
        return {"m": self.rows, "n": self.cols, "p": self.p, "q": self.q, "case": self.case,
                "f": f, "search": self.search, "level": self.level, "rule": self.rule}


@dataclass
class PipelineTrace:
    rank: int
    steps: list[StepRecord] = field(default_factory=list)
    selection: SubmatrixSelection | None = None
    reason: str = ""
    flags: list[str] = field(default_factory=list)

    def to_json_obj(self) -> dict:
        return {"rank": self.rank, "steps": [s.to_json_obj() for s in self.steps],
                "selection": self.selection.to_json_obj() if self.selection else None,
                "reason": self.reason, "flags": list(self.flags)}


def _working_rank(arr: np.ndarray, cfg: PipelineConfig, trace_flags: list[str]) -> int:
    r = cfg.rank if cfg.rank is not None else exact_or_numerical_rank(arr)
    r = max(r, 1)
    if r < SMALL_RANK:
        trace_flags.append("SmallRankFallback")
        r = SMALL_RANK
    return r


def _verify_constant(arr: np.ndarray, sel: SubmatrixSelection, value) -> None:
    sub = sel.apply(arr)
    if sel.empty or np.any(sub != value):
        raise VerificationFailure(f"selection is not constant {value}")


# -- all-zero pipeline -------------------------------------------------------


def find_zero_submatrix(m, cfg: PipelineConfig | None = None):
    """Large all-zero submatrix of a separated nonnegative matrix with ``p <= 1/2``.

    Returns ``(selection, trace)``.
    """
    cfg = cfg or PipelineConfig()
    arr = values(m)
    if np.any(arr < 0) or not is_separated(arr):
        raise PreconditionFailed("input must be separated and nonnegative")
    p0, _ = exact_stats(arr)
    if p0 > Fraction(1, 2):
        raise EmptyResult(f"average entry {p0} exceeds 1/2")
    flags: list[str] = []
    if not np.any(arr):
        trace = PipelineTrace(0, selection=SubmatrixSelection.full(arr.shape), reason="all-zero")
        return trace.selection, trace
    r = _working_rank(arr, cfg, flags)
    trace = PipelineTrace(r, flags=flags)
    reg = regularize_bounded(arr, r)
    cur = reg.selection
    step_cfg = StepConfig(rank=r, constants=cfg.constants, rule="sqrt-p-over-r",
                          exhaustive_limit=cfg.exhaustive_limit, seed=cfg.seed,
                          check_preconditions=False)
    c = cfg.c
    delta = cfg.delta_scale * r * r
    low = Fraction(1, 16 * r)
    budget = None
    prev_f = None
    while True:
        sub = cur.apply(arr)
        p, q = exact_stats(sub)
        f = progress_values(float(p), float(q), r, c, delta).main
        if budget is None:
            budget = 4 / c * max(f, 0.0) + 2
        if prev_f is not None and cfg.audit and trace.steps[-1].case is not None \
                and trace.steps[-1].search == "exhaustive" and f > prev_f - c / 4 + 1e-12:
            raise ProgressViolation(f"progress fell by {prev_f - f:.3g} < c/4 at step {len(trace.steps)}")
        if not np.any(sub):
            trace.reason = "all-zero"
            break
        nnz = int(np.count_nonzero(sub))
        if nnz * 16 * r <= sub.size:
            inner = sparse_zero_extract(sub, r)
            cur = cur.compose(inner.selection)
            trace.reason = "sparse"
            break
        if p <= low:
            raise VerificationFailure("density below 1/(16r) but too many nonzeros")
        if p >= cfg.density_ceiling:
            trace.reason = "density-ceiling"
            raise EmptyResult(f"average rose to {float(p):.4f}; no sparse finish available")
        if len(trace.steps) >= cfg.max_steps:
            raise BudgetExceeded(f"pipeline exceeded {cfg.max_steps} steps")
        if cfg.audit and len(trace.steps) > budget:
            raise ProgressViolation(f"{len(trace.steps)} steps exceed the progress budget {budget:.1f}")
        out = two_cases_step(sub, step_cfg)
        trace.steps.append(StepRecord(sub.shape[0], sub.shape[1], float(p), float(q), out.case, f,
                                      out.search, rule=step_cfg.rule))
        if out.case is None:
            flags.append(f"uncertified-step-{len(trace.steps)}")
        prev_f = f
        cur = cur.compose(out.selection)
    trace.steps.append(StepRecord(len(cur.rows), len(cur.cols), 0.0, 0.0, None, -math.inf))
    cur = grow_constant_block(arr, cur, 0)
    _verify_constant(arr, cur, 0)
    trace.selection = cur
    return cur, trace


# -- constant-submatrix pipeline for integer matrices -------------------------


def _level(p: Fraction, r: int) -> int:
    """The integer l with ``l - 2/sqrt(r) <= p < l + 1 - 2/sqrt(r)``."""
    return math.floor(float(p) + 2 / math.sqrt(r))


def find_constant_submatrix_int(m, cfg: PipelineConfig | None = None, bound: int | None = None):
    """Large constant submatrix of a nonnegative integer matrix.

    Returns ``(selection, value, trace)``.
    """
    cfg = cfg or PipelineConfig()
    arr = values(m)
    ints = as_int_matrix(arr)
    if ints is None or np.any(ints < 0):
        raise PreconditionFailed("input must be a nonnegative integer matrix")
    p0, _ = exact_stats(ints)
    if bound is not None and p0 > bound:
        raise PreconditionFailed(f"average {p0} exceeds the bound {bound}")
    flags: list[str] = []
    if np.all(ints == ints.flat[0]):
        sel = SubmatrixSelection.full(ints.shape)
        trace = PipelineTrace(0, selection=sel, reason="constant")
        return sel, int(ints.flat[0]), trace
    r = _working_rank(ints, cfg, flags)
    trace = PipelineTrace(r, flags=flags)
    cur = SubmatrixSelection.full(ints.shape)
    shifted_rank = r + 1
    value = None
    while True:
        sub = cur.apply(ints)
        mm, nn = sub.shape
        if np.all(sub == sub.flat[0]):
            value = int(sub.flat[0])
            trace.reason = "constant"
            break
        vals, counts = np.unique(sub, return_counts=True)
        top = int(vals[np.argmax(counts)])
        if (sub.size - counts.max()) * 16 * shifted_rank <= sub.size:
            inner = sparse_zero_extract(sub - top, shifted_rank)
            cur, value = cur.compose(inner.selection), top
            trace.reason = "sparse"
            break
        p, q = exact_stats(sub)
        if q < Fraction(1, 128 * r):
            found = _try_block(sub, half(mm), half(nn), cfg.node_limit)
            if found is not None:
                cur, value = cur.compose(found[0]), int(found[1])
                trace.reason = "half-constant"
                break
        level = _level(p, r)
        shifted_p = p - level
        if Fraction(1, 16 * r) < shifted_p and float(shifted_p) < 1 - 1 / math.sqrt(r):
            rule = "p-one-minus-p"
        else:
            rule = "one-over-r"
            found = _try_block(sub, -(-mm // 4), -(-nn // 4), cfg.node_limit)
            if found is not None:
                cur, value = cur.compose(found[0]), int(found[1])
                trace.reason = "quarter-constant"
                break
        if len(trace.steps) >= cfg.max_steps:
            raise BudgetExceeded(f"pipeline exceeded {cfg.max_steps} steps")
        step_cfg = StepConfig(rank=shifted_rank, constants=cfg.constants, rule=rule,
                              exhaustive_limit=cfg.exhaustive_limit, seed=cfg.seed,
                              check_preconditions=False)
        out = two_cases_step(sub - level, step_cfg)
        prog = progress_values(min(max(float(shifted_p), 0.0), 1.0), float(q), r, cfg.c)
        f = prog.density + prog.variance if rule == "p-one-minus-p" else \
            r * float(shifted_p) + prog.variance
        trace.steps.append(StepRecord(mm, nn, float(p), float(q), out.case, f, out.search,
                                      level=level, rule=rule))
        if out.case is None:
            flags.append(f"uncertified-step-{len(trace.steps)}")
        cur = cur.compose(out.selection)
    grown = grow_constant_block(ints, cur, value)
    if grown.shape != cur.shape:
        flags.append("grown")
    cur = grown
    _verify_constant(ints, cur, value)
    trace.selection = cur
    return cur, value, trace


def grow_constant_block(m, sel: SubmatrixSelection, value) -> SubmatrixSelection:
    """Add every row, then every column, that keeps the block constant."""
    arr = values(m)
    rows = np.flatnonzero(np.all(arr[:, list(sel.cols)] == value, axis=1))
    cols = np.flatnonzero(np.all(arr[rows, :] == value, axis=0))
    return SubmatrixSelection(rows, cols)


def _try_block(sub: np.ndarray, rows: int, cols: int, node_limit: int):
    try:
        return find_constant_block(sub, rows, cols, node_limit)
    except BudgetExceeded:
        return None
