"""Set families over the universe [n], stored as integer bitmasks.

Element ``i`` (1-based in files and user-facing APIs) lives at bit ``i - 1``.
Python integers are used as the word array, so there is no width limit; for
``n <= 64`` the vectorised paths pack the masks into ``uint64`` arrays.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import BadInput, InvalidLambda, UniverseMismatch


def popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class BitSet:
    """A subset of [n]."""

    n: int
    bits: int = 0

    def __post_init__(self):
        if self.n < 0:
            raise BadInput("universe size must be nonnegative")
        if self.bits < 0 or self.bits >> self.n:
            raise BadInput(f"bits outside universe of size {self.n}")

    @classmethod
    def from_elements(cls, n: int, elements: Iterable[int]) -> "BitSet":
        bits = 0
        for e in elements:
            if not 1 <= e <= n:
                raise BadInput(f"element {e} not in [1, {n}]")
            bits |= 1 << (e - 1)
        return cls(n, bits)

    def __contains__(self, element: int) -> bool:
        return 1 <= element <= self.n and bool(self.bits >> (element - 1) & 1)

    def __len__(self) -> int:
        return popcount(self.bits)

    def __iter__(self) -> Iterator[int]:
        return iter(self.elements())

    def elements(self) -> list[int]:
        return [i + 1 for i in range(self.n) if self.bits >> i & 1]

    def complement(self) -> "BitSet":
        return BitSet(self.n, ((1 << self.n) - 1) ^ self.bits)

    def isdisjoint(self, other: "BitSet") -> bool:
        return not self.bits & other.bits

    def issubset(self, other: "BitSet") -> bool:
        return not self.bits & ~other.bits


def _full(n: int) -> int:
    return (1 << n) - 1


@dataclass(frozen=True)
class SetFamily:
    """Ordered multiset of subsets of [n].

    Order is significant (it defines row/column indices) and duplicates are
    kept; call :meth:`dedup` to drop them.
    """

    n: int
    masks: tuple[int, ...] = ()
    _arr: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        masks = tuple(int(x) for x in self.masks)
        full = _full(self.n)
        for x in masks:
            if x < 0 or x & ~full:
                raise BadInput(f"set {x:#x} outside universe of size {self.n}")
        object.__setattr__(self, "masks", masks)

    @classmethod
    def from_lists(cls, n: int, sets: Iterable[Iterable[int]]) -> "SetFamily":
        return cls(n, tuple(BitSet.from_elements(n, s).bits for s in sets))

    @classmethod
    def power_set(cls, n: int, ground: Sequence[int] | None = None) -> "SetFamily":
        """All subsets of ``ground`` (default [n]) in increasing mask order."""
        if ground is None:
            return cls(n, tuple(range(1 << n)))
        base = [1 << (e - 1) for e in ground]
        masks = []
        for code in range(1 << len(base)):
            m = 0
            for i, b in enumerate(base):
                if code >> i & 1:
                    m |= b
            masks.append(m)
        return cls(n, tuple(sorted(masks)))

    def __len__(self) -> int:
        return len(self.masks)

    def __iter__(self) -> Iterator[BitSet]:
        return (BitSet(self.n, x) for x in self.masks)

    def __getitem__(self, i: int) -> BitSet:
        return BitSet(self.n, self.masks[i])

    def subfamily(self, indices: Iterable[int]) -> "SetFamily":
        return SetFamily(self.n, tuple(self.masks[i] for i in indices))

    def dedup(self) -> "SetFamily":
        return SetFamily(self.n, tuple(dict.fromkeys(self.masks)))

    def permuted(self, perm: Sequence[int]) -> "SetFamily":
        """Relabel element ``i`` as ``perm[i]`` (both 0-based)."""
        out = []
        for x in self.masks:
            y = 0
            for i in range(self.n):
                if x >> i & 1:
                    y |= 1 << perm[i]
            out.append(y)
        return SetFamily(self.n, tuple(out))

    def as_array(self) -> np.ndarray:
        """``uint64`` array when n <= 64, else an object array of Python ints."""
        if self._arr is None:
            dtype = np.uint64 if self.n <= 64 else object
            arr = np.array(self.masks, dtype=dtype) if self.masks else np.zeros(0, dtype=dtype)
            arr.setflags(write=False)
            object.__setattr__(self, "_arr", arr)
        return self._arr

    def covered_by(self, u: int) -> np.ndarray:
        """Boolean mask of members contained in ``u``."""
        arr = self.as_array()
        comp = _full(self.n) ^ u
        if arr.dtype == object:
            return np.array([not (x & comp) for x in self.masks], dtype=bool)
        return (arr & np.uint64(comp)) == 0

    def marginals(self) -> list[int]:
        """Per-element membership counts."""
        return [sum(x >> i & 1 for x in self.masks) for i in range(self.n)]

    # -- serialization ---------------------------------------------------

    def to_json_obj(self) -> dict:
        return {"n": self.n, "sets": [BitSet(self.n, x).elements() for x in self.masks]}

    def dumps(self) -> str:
        return json.dumps(self.to_json_obj()) + "\n"

    @classmethod
    def loads(cls, text: str) -> "SetFamily":
        try:
            obj = json.loads(text)
            n = int(obj["n"])
            sets = obj["sets"]
        except (ValueError, KeyError, TypeError) as exc:
            raise BadInput(f"malformed family JSON: {exc}") from exc
        return cls.from_lists(n, sets)

    @classmethod
    def load(cls, path) -> "SetFamily":
        with open(path) as fh:
            return cls.loads(fh.read())


def _check_universe(a: SetFamily, b: SetFamily) -> None:
    if a.n != b.n:
        raise UniverseMismatch(f"universe sizes differ: {a.n} vs {b.n}")


def _pair_blocks(a: SetFamily, b: SetFamily, rows: int = 2048):
    """Yield ``a_block & b`` products chunk by chunk to bound memory."""
    arr_a, arr_b = a.as_array(), b.as_array()
    for start in range(0, len(arr_a), rows):
        yield arr_a[start:start + rows, None] & arr_b[None, :]


@dataclass(frozen=True)
class PairCount:
    count: int
    total: int

    @property
    def density(self) -> float:
        return self.count / self.total if self.total else 0.0


def disjoint_pairs(a: SetFamily, b: SetFamily) -> PairCount:
    """Number of ordered pairs (x, y) in a x b with x and y disjoint."""
    _check_universe(a, b)
    count = 0
    if len(a) and len(b):
        if a.as_array().dtype == object:
            count = sum(1 for x in a.masks for y in b.masks if not x & y)
        else:
            for block in _pair_blocks(a, b):
                count += int(np.count_nonzero(block == 0))
    return PairCount(count, len(a) * len(b))


def intersection_histogram(a: SetFamily, b: SetFamily) -> list[int]:
    """``hist[s]`` = number of ordered pairs with intersection size s."""
    _check_universe(a, b)
    hist = [0] * (a.n + 1)
    if not len(a) or not len(b):
        return hist
    if a.as_array().dtype == object:
        for x in a.masks:
            for y in b.masks:
                hist[popcount(x & y)] += 1
        return hist
    for block in _pair_blocks(a, b):
        sizes = np.bitwise_count(block).ravel()
        for s, c in enumerate(np.bincount(sizes, minlength=a.n + 1)):
            hist[s] += int(c)
    return hist


def lambda_pairs(a: SetFamily, b: SetFamily, lam: int) -> int:
    """Number of ordered pairs whose intersection has exactly ``lam`` elements."""
    _check_universe(a, b)
    if lam < 0 or lam > a.n:
        raise InvalidLambda(f"lambda={lam} outside [0, {a.n}]")
    return intersection_histogram(a, b)[lam]


def _bool_to_int(row: np.ndarray) -> int:
    packed = np.packbits(row.astype(bool), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def disjointness_matrix(a: SetFamily, b: SetFamily) -> np.ndarray:
    _check_universe(a, b)
    if not len(a) or not len(b):
        return np.zeros((len(a), len(b)), dtype=bool)
    if a.as_array().dtype == object:
        return np.array([[not (x & y) for y in b.masks] for x in a.masks], dtype=bool)
    return np.concatenate([blk == 0 for blk in _pair_blocks(a, b)], axis=0)


@dataclass(frozen=True)
class DisjointnessGraph:
    """Bipartite graph on (left, right) with an edge exactly at disjoint pairs.

    ``rows[i]`` is a bitmask over right indices; ``adj`` is the same data as a
    boolean matrix.
    """

    left: SetFamily
    right: SetFamily
    adj: np.ndarray
    rows: tuple[int, ...]

    @property
    def edges(self) -> int:
        return int(self.adj.sum())

    @property
    def shape(self) -> tuple[int, int]:
        return self.adj.shape

    def degree_left(self, i: int) -> int:
        return popcount(self.rows[i])

    def degree_right(self, j: int) -> int:
        return int(self.adj[:, j].sum())

    def common_neighborhood(self, left_indices: Iterable[int]) -> int:
        """Bitmask over right indices adjacent to every listed left vertex."""
        acc = (1 << len(self.right)) - 1
        for i in left_indices:
            acc &= self.rows[i]
        return acc

    def common_neighborhood_right(self, right_indices: Iterable[int]) -> np.ndarray:
        mask = np.ones(len(self.left), dtype=bool)
        for j in right_indices:
            mask &= self.adj[:, j]
        return mask

    def transpose(self) -> "DisjointnessGraph":
        adj = self.adj.T.copy()
        return DisjointnessGraph(self.right, self.left, adj, tuple(_bool_to_int(r) for r in adj))

    def induced(self, left_idx: Sequence[int], right_idx: Sequence[int]) -> "DisjointnessGraph":
        left_idx, right_idx = list(left_idx), list(right_idx)
        adj = self.adj[np.ix_(left_idx, right_idx)] if left_idx and right_idx else np.zeros(
            (len(left_idx), len(right_idx)), dtype=bool)
        return DisjointnessGraph(self.left.subfamily(left_idx), self.right.subfamily(right_idx),
                                 adj, tuple(_bool_to_int(r) for r in adj))


def build_graph(a: SetFamily, b: SetFamily) -> DisjointnessGraph:
    adj = disjointness_matrix(a, b)
    adj.setflags(write=False)
    return DisjointnessGraph(a, b, adj, tuple(_bool_to_int(r) for r in adj))


def graph_from_adjacency(adj) -> DisjointnessGraph:
    """Wrap an arbitrary bipartite adjacency matrix (families left empty-universe)."""
    adj = np.asarray(adj, dtype=bool)
    m, n = adj.shape
    return DisjointnessGraph(SetFamily(0, (0,) * m), SetFamily(0, (0,) * n), adj,
                             tuple(_bool_to_int(r) for r in adj))


def bits_to_indices(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return out


@dataclass(frozen=True)
class Distribution:
    """Finite-support probability distribution on subsets of [n].

    ``support``/``weights`` hold the explicit form. A product (p-biased)
    distribution on a universe too large to list keeps ``bias`` instead and
    leaves the support empty; it can still be sampled.
    """

    n: int
    support: tuple[int, ...] = ()
    weights: tuple = ()
    bias: object = None

    def __post_init__(self):
        weights = tuple(Fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "support", tuple(int(x) for x in self.support))
        if len(weights) != len(self.support):
            raise BadInput("support and weights differ in length")
        if self.bias is not None:
            object.__setattr__(self, "bias", Fraction(self.bias))
            if not 0 <= self.bias <= 1:
                raise BadInput("bias must lie in [0, 1]")
        if not self.support and self.bias is None:
            raise BadInput("distribution needs a support or a bias")
        if self.support:
            full = _full(self.n)
            if any(w < 0 for w in weights) or sum(weights) != 1:
                raise BadInput("weights must be nonnegative and sum to 1")
            if any(x & ~full for x in self.support):
                raise BadInput("support set outside universe")

    @classmethod
    def uniform(cls, family: SetFamily) -> "Distribution":
        """Uniform over the members of ``family`` (duplicates add weight)."""
        counts: dict[int, int] = {}
        for x in family.masks:
            counts[x] = counts.get(x, 0) + 1
        total = len(family)
        if not total:
            raise BadInput("cannot build a uniform distribution on an empty family")
        return cls(family.n, tuple(counts), tuple(Fraction(c, total) for c in counts.values()))

    @property
    def explicit(self) -> bool:
        return bool(self.support)

    def mass_below(self, u: int) -> object:
        """Probability of the down-set of ``u``."""
        return sum((w for x, w in zip(self.support, self.weights) if not x & ~u), Fraction(0))

    def sample(self, rng: np.random.Generator, size: int) -> list[int]:
        if self.support:
            probs = np.array([float(w) for w in self.weights])
            probs /= probs.sum()
            idx = rng.choice(len(self.support), size=size, p=probs)
            return [self.support[i] for i in idx]
        bits = rng.random((size, self.n)) < float(self.bias)
        weights = [1 << i for i in range(self.n)]
        return [sum(w for w, b in zip(weights, row) if b) for row in bits]
