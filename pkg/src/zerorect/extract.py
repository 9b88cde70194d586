"""Constructive extraction of cross-disjoint subfamilies from disjointness graphs.

Randomised routines draw from ``rng_for(seed, i)``: trial ``i`` always sees the
same stream whether trials run serially or in parallel.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import BadInput, DensityTooLow, Exhausted, NoDisjointPairs, VerificationFailure
from .famcore import (BitSet, DisjointnessGraph, Distribution, SetFamily, bits_to_indices,
                      build_graph, disjoint_pairs, popcount)

WILSON_Z = 1.959963984540054


def rng_for(seed: int, stream: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(int(seed) ^ int(stream)) & (2**64 - 1)))


# -- random-union extraction -------------------------------------------------


@dataclass(frozen=True)
class ExtractionParams:
    delta: float | None = None
    trials: int = 64
    seed: int = 0
    k: int | None = None

    def __post_init__(self):
        if self.delta is not None and not 0 < self.delta < 1:
            raise BadInput("delta must lie in (0, 1)")
        if self.trials < 1:
            raise BadInput("trials must be at least 1")
        if self.k is not None and self.k < 1:
            raise BadInput("k must be at least 1")


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    k: int
    union: int
    r_size: int
    s_size: int
    bad: bool

    @property
    def product(self) -> int:
        return self.r_size * self.s_size


@dataclass(frozen=True)
class ExtractionResult:
    r: SetFamily
    s: SetFamily
    k: int
    delta: float
    best_trial: int
    trace: tuple[TrialRecord, ...]
    fallback: str | None = None

    @property
    def product(self) -> int:
        return len(self.r) * len(self.s)


def choose_k(n: int, delta: float) -> int:
    """``floor(sqrt(n / log2(1/delta)))`` with delta capped at ``1 - 1/n`` and k >= 1."""
    cap = 1 - 1 / max(n, 2)
    d = min(delta, cap)
    return max(1, math.floor(math.sqrt(n / math.log2(1 / d))))


def bad_threshold(n: int, k: int) -> float:
    return 2.0 ** (-2 * n / k)


def is_bad_set(u, family: SetFamily, threshold: float) -> tuple[bool, int]:
    """Whether ``u`` covers fewer than ``threshold * |family|`` members; also the count."""
    if not 0 <= threshold <= 1:
        raise BadInput("threshold must lie in [0, 1]")
    bits = u.bits if isinstance(u, BitSet) else int(u)
    covered = int(np.count_nonzero(family.covered_by(bits))) if len(family) else 0
    return covered < threshold * len(family), covered


def _run_trial(a: SetFamily, b: SetFamily, k: int, seed: int, trial: int) -> TrialRecord:
    rng = rng_for(seed, trial)
    picks = rng.integers(0, len(a), size=k)
    union = 0
    for i in picks:
        union |= a.masks[int(i)]
    full = (1 << a.n) - 1
    r_size = int(np.count_nonzero(a.covered_by(union)))
    s_size = int(np.count_nonzero(b.covered_by(full ^ union)))
    bad = r_size < bad_threshold(a.n, k) * len(a)
    return TrialRecord(trial, k, union, r_size, s_size, bad)


def random_union_extract(a: SetFamily, b: SetFamily, params: ExtractionParams = ExtractionParams(),
                         jobs: int = 1) -> ExtractionResult:
    """Cross-disjoint (R, S) from the union of k random members of ``a``.

    R is every member of ``a`` inside the union and S every member of ``b``
    inside its complement. The best trial by ``|R| |S|`` wins, ties going
    to the lowest trial index. When every trial leaves S empty the max-degree
    star (one member of ``b`` and all its neighbours) is returned instead.
    """
    pc = disjoint_pairs(a, b)
    if pc.count == 0:
        raise NoDisjointPairs("the disjointness graph has no edges")
    delta = pc.density
    k = params.k or choose_k(a.n, delta)
    run = lambda i: _run_trial(a, b, k, params.seed, i)  # noqa: E731
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            trace = tuple(pool.map(run, range(params.trials)))
    else:
        trace = tuple(run(i) for i in range(params.trials))
    best = max(trace, key=lambda t: (t.product, -t.trial))
    full = (1 << a.n) - 1
    fallback = None
    if best.product:
        r = a.subfamily(np.flatnonzero(a.covered_by(best.union)))
        s = b.subfamily(np.flatnonzero(b.covered_by(full ^ best.union)))
        best_trial = best.trial
    else:
        graph = build_graph(b, a)
        j = max(range(len(b)), key=lambda i: (graph.degree_left(i), -i))
        s = b.subfamily([j])
        r = a.subfamily(bits_to_indices(graph.rows[j]))
        best_trial, fallback = -1, "max-degree-star"
    if any(x & y for x in set(r.masks) for y in set(s.masks)):
        raise VerificationFailure("extracted families are not cross-disjoint")
    return ExtractionResult(r, s, k, delta, best_trial, trace, fallback)


# -- covering probability by sampling ----------------------------------------


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    low: float
    high: float
    hits: int
    trials: int

    def contains(self, value: float) -> bool:
        return self.low <= value <= self.high


def wilson_interval(hits: int, trials: int, z: float = WILSON_Z) -> tuple[float, float]:
    phat = hits / trials
    denom = 1 + z * z / trials
    centre = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def covering_probability_mc(mu: Distribution, r: int, trials: int, seed: int = 0,
                            block: int = 1 << 15) -> MCEstimate:
    """Sample ``A0, ..., Ar`` from ``mu`` and count ``A0`` inside the union of the rest."""
    if trials < 1:
        raise BadInput("trials must be at least 1")
    if r < 1:
        raise BadInput("r must be at least 1")
    hits = 0
    done = 0
    stream = 0
    while done < trials:
        size = min(block, trials - done)
        rng = rng_for(seed, stream)
        draws = mu.sample(rng, size * (r + 1))
        if mu.n <= 64:
            arr = np.array(draws, dtype=np.uint64).reshape(size, r + 1)
            union = np.bitwise_or.reduce(arr[:, 1:], axis=1)
            hits += int(np.count_nonzero((arr[:, 0] & ~union) == 0))
        else:
            for t in range(size):
                row = draws[t * (r + 1):(t + 1) * (r + 1)]
                u = 0
                for x in row[1:]:
                    u |= x
                hits += not row[0] & ~u
        done += size
        stream += 1
    est = hits / trials
    if mu.explicit and len(mu.support) == 1:
        # a point mass makes the event deterministic
        return MCEstimate(est, est, est, hits, trials)
    lo, hi = wilson_interval(hits, trials)
    return MCEstimate(est, lo, hi, hits, trials)


# -- min-degree cleaning -----------------------------------------------------


@dataclass(frozen=True)
class CleanResult:
    left: tuple[int, ...]
    right: tuple[int, ...]
    passes: int

    @property
    def product(self) -> int:
        return len(self.left) * len(self.right)


def clean_min_degree(graph: DisjointnessGraph, eps: float) -> CleanResult:
    """Strip vertices of low degree until both sides meet their floors.

    Left vertices need ``eps |Y| / 4`` neighbours among the survivors and right
    vertices ``eps |X| / 4``. All deficient vertices go in the same pass, so
    the result does not depend on any vertex order.
    """
    adj = graph.adj
    nx, ny = adj.shape
    if not 0 < eps <= 1:
        raise BadInput("eps must lie in (0, 1]")
    if nx == 0 or ny == 0 or graph.edges < eps * nx * ny:
        raise DensityTooLow(f"edge density below {eps}")
    left_floor, right_floor = eps * ny / 4, eps * nx / 4
    keep_x = np.ones(nx, dtype=bool)
    keep_y = np.ones(ny, dtype=bool)
    passes = 0
    while True:
        passes += 1
        deg_x = adj[:, keep_y].sum(axis=1)
        deg_y = adj[keep_x, :].sum(axis=0)
        drop_x = keep_x & (deg_x < left_floor)
        drop_y = keep_y & (deg_y < right_floor)
        if not drop_x.any() and not drop_y.any():
            break
        keep_x &= ~drop_x
        keep_y &= ~drop_y
    res = CleanResult(tuple(np.flatnonzero(keep_x).tolist()), tuple(np.flatnonzero(keep_y).tolist()),
                      passes)
    sub = adj[np.ix_(res.left, res.right)]
    if res.product < eps / 2 * nx * ny:
        raise VerificationFailure("cleaning lost more than half the edge mass")
    if res.product and (sub.sum(axis=1).min() < left_floor or sub.sum(axis=0).min() < right_floor):
        raise VerificationFailure("cleaned graph violates a degree floor")
    return res


# -- greedy tuple growth -----------------------------------------------------


@dataclass(frozen=True)
class TupleWitness:
    """Chosen indices with per-prefix common-neighbourhood and union sizes."""

    side: str
    indices: tuple[int, ...]
    neighborhood_sizes: tuple[int, ...]
    union_sizes: tuple[int, ...]
    neighborhood_floors: tuple[float, ...]
    union_floors: tuple[float, ...]
    satisfied: tuple[bool, ...]

    @property
    def t(self) -> int:
        return len(self.indices)


def _floors(i: int, eps: float, rho: float, other_size: int, n: int) -> tuple[float, float]:
    return (eps / 64) ** i * other_size, (0.5 - rho ** i) * n


def grow_tuple(graph: DisjointnessGraph, side: str = "left", eps: float | None = None,
               rho: float = 0.9) -> TupleWitness:
    """Greedily extend a tuple while every prefix keeps both floors.

    The extension chosen is the one with the largest (neighbourhood, union),
    lowest index on ties. The first member is always taken; if even it misses
    a floor, ``satisfied[0]`` records that.
    """
    if side not in ("left", "right"):
        raise BadInput("side must be 'left' or 'right'")
    g = graph if side == "left" else graph.transpose()
    nl, nr = g.shape
    if nl == 0 or nr == 0:
        raise BadInput("graph has an empty side")
    if eps is None:
        eps = g.edges / (nl * nr)
    masks = g.left.masks
    n = g.left.n
    full_right = (1 << nr) - 1
    chosen: list[int] = []
    nbhd_sizes: list[int] = []
    union_sizes: list[int] = []
    nb_floors: list[float] = []
    un_floors: list[float] = []
    flags: list[bool] = []
    common, union = full_right, 0
    while len(chosen) < nl:
        i = len(chosen) + 1
        nb_floor, un_floor = _floors(i, eps, rho, nr, n)
        best = None
        for j in range(nl):
            if j in chosen:
                continue
            nb = popcount(common & g.rows[j])
            un = popcount(union | masks[j])
            ok = nb >= nb_floor and un >= un_floor
            if not ok and chosen:
                continue
            key = (ok, nb, un, -j)
            if best is None or key > best[0]:
                best = (key, j, nb, un, ok)
        if best is None:
            break
        _, j, nb, un, ok = best
        chosen.append(j)
        common &= g.rows[j]
        union |= masks[j]
        nbhd_sizes.append(nb)
        union_sizes.append(un)
        nb_floors.append(nb_floor)
        un_floors.append(un_floor)
        flags.append(ok)
        if not ok:
            break
    return TupleWitness(side, tuple(chosen), tuple(nbhd_sizes), tuple(union_sizes),
                        tuple(nb_floors), tuple(un_floors), tuple(flags))


def verify_tuple(graph: DisjointnessGraph, witness: TupleWitness) -> bool:
    """Recompute every prefix from scratch and compare with the recorded sizes."""
    g = graph if witness.side == "left" else graph.transpose()
    common = (1 << g.shape[1]) - 1
    union = 0
    for pos, j in enumerate(witness.indices):
        common &= g.rows[j]
        union |= g.left.masks[j]
        if popcount(common) != witness.neighborhood_sizes[pos]:
            return False
        if popcount(union) != witness.union_sizes[pos]:
            return False
        holds = (witness.neighborhood_sizes[pos] >= witness.neighborhood_floors[pos]
                 and witness.union_sizes[pos] >= witness.union_floors[pos])
        if holds != witness.satisfied[pos]:
            return False
    return True


# -- dependent random choice witness search ---------------------------------

ENTROPY_CONSTANT_LOG2 = 40 / math.log(2)


@dataclass(frozen=True)
class DrcParams:
    n: int
    theta: float
    big_m: float
    t: int
    k: int
    s: float

    @classmethod
    def derive(cls, n: int, family_size: int, theta: float, c: float) -> "DrcParams":
        if not 0 < theta < 1:
            raise BadInput("theta must lie in (0, 1)")
        log_n = math.log2(n) if n > 1 else 0.0
        big_m = max(theta * n, math.sqrt(theta * n * log_n))
        t = math.ceil(max(math.sqrt(log_n / (theta * n)), 1.0))
        k = math.ceil(math.log2(1 / theta) + c)
        s = n - math.log2(family_size) + 5 * big_m
        return cls(n, theta, big_m, t, k, s)


@dataclass(frozen=True)
class DrcWitness:
    params: DrcParams
    tuple_indices: tuple[int, ...]
    pivot_indices: tuple[int, ...]
    neighborhood: int
    union_size: int
    attempt: int

    @property
    def friendly(self) -> bool:
        return self.neighborhood >= 2.0 ** self.params.s

    @property
    def wide(self) -> bool:
        return self.union_size >= self.params.n - self.params.s + 1


def check_tuple(a: SetFamily, b: SetFamily, indices, s: float) -> dict:
    """Friendly/wide status of a tuple from ``a`` measured against ``b``."""
    union = 0
    for i in indices:
        union |= a.masks[i]
    nbhd = int(np.count_nonzero(b.covered_by(((1 << a.n) - 1) ^ union)))
    size = popcount(union)
    return {"neighborhood": nbhd, "union": size, "friendly": nbhd >= 2.0 ** s,
            "wide": size >= a.n - s + 1}


def drc_witness_search(a: SetFamily, b: SetFamily, theta: float, seed: int = 0,
                       attempts: int = 2000, c_run: float = 8.0,
                       faithful: bool = False) -> DrcWitness:
    """Look for a k-tuple of ``a`` that is both friendly and wide.

    Each attempt draws t pivots from ``b``, restricts ``a`` to their common
    neighbourhood, and samples one k-tuple from it. For families of distinct
    sets both properties together are impossible, so a hit signals repeated
    members (or a parameter regime outside the counting argument).
    """
    if len(a) == 0 or len(b) == 0:
        raise Exhausted("empty family", {"attempts": 0})
    c = ENTROPY_CONSTANT_LOG2 if faithful else c_run
    params = DrcParams.derive(a.n, len(a), theta, c)
    stats = {"attempts": 0, "empty_pivot_neighbourhoods": 0, "friendly": 0, "wide": 0,
             "params": params.__dict__}
    if disjoint_pairs(a, b).count == 0:
        raise Exhausted("no disjoint pairs; no friendly tuple can exist", stats)
    graph = build_graph(b, a)
    for attempt in range(attempts):
        stats["attempts"] += 1
        rng = rng_for(seed, attempt)
        pivots = tuple(int(x) for x in rng.integers(0, len(b), size=params.t))
        pool = bits_to_indices(graph.common_neighborhood(pivots))
        if not pool:
            stats["empty_pivot_neighbourhoods"] += 1
            continue
        picks = tuple(pool[int(x)] for x in rng.integers(0, len(pool), size=params.k))
        status = check_tuple(a, b, picks, params.s)
        stats["friendly"] += status["friendly"]
        stats["wide"] += status["wide"]
        if status["friendly"] and status["wide"]:
            w = DrcWitness(params, picks, pivots, status["neighborhood"], status["union"], attempt)
            recheck = check_tuple(a, b, picks, params.s)
            if not (recheck["friendly"] and recheck["wide"]):
                raise VerificationFailure("DRC witness failed its re-check")
            return w
    raise Exhausted(f"no friendly and wide tuple in {attempts} attempts", stats)

