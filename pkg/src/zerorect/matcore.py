"""Dense matrices, their average/variance statistics, and an SVD contract.

Two entry modes exist: ``"float"`` (``float64`` arrays, used by pipelines) and
``"rational"`` (object arrays of :class:`fractions.Fraction`, used by
oracles). Most functions accept either a :class:`DenseMatrix` or anything
``numpy.asarray`` understands.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .errors import BadInput, NumericalFailure

DEFAULT_TOL = 1e-10


@dataclass(frozen=True)
class DenseMatrix:
    data: np.ndarray
    mode: str = "float"

    def __post_init__(self):
        if self.mode not in ("float", "rational"):
            raise BadInput(f"unknown entry mode {self.mode!r}")
        arr = np.asarray(self.data)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise BadInput(f"matrix must be 2-D and nonempty, got shape {arr.shape}")
        if self.mode == "float":
            arr = arr.astype(np.float64)
        else:
            arr = np.vectorize(Fraction, otypes=[object])(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def shape(self) -> tuple[int, int]:
        return self.data.shape

    def to_float(self) -> "DenseMatrix":
        return self if self.mode == "float" else DenseMatrix(self.data.astype(np.float64), "float")

    def to_rational(self) -> "DenseMatrix":
        return self if self.mode == "rational" else DenseMatrix(self.data, "rational")

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    @classmethod
    def from_csv(cls, text: str, rational: bool = False) -> "DenseMatrix":
        rows = [r for r in csv.reader(io.StringIO(text)) if r and any(c.strip() for c in r)]
        if not rows:
            raise BadInput("empty matrix CSV")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise BadInput("ragged matrix CSV")
        try:
            if rational:
                return cls(np.array([[Fraction(c.strip()) for c in r] for r in rows], dtype=object),
                           "rational")
            return cls(np.array([[float(c) for c in r] for r in rows]), "float")
        except (ValueError, ZeroDivisionError) as exc:
            raise BadInput(f"unparseable matrix entry: {exc}") from exc

    @classmethod
    def load(cls, path, rational: bool = False) -> "DenseMatrix":
        with open(path) as fh:
            return cls.from_csv(fh.read(), rational=rational)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        for row in self.data:
            writer.writerow([_fmt(x) for x in row])
        return buf.getvalue()


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else str(x)
    x = float(x)
    return str(int(x)) if x.is_integer() and abs(x) < 2**53 else repr(x)


def values(m) -> np.ndarray:
    if isinstance(m, DenseMatrix):
        return m.data
    arr = np.asarray(m)
    if arr.ndim != 2:
        raise BadInput(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def is_exact(arr: np.ndarray) -> bool:
    return arr.dtype == object or np.issubdtype(arr.dtype, np.integer)


@dataclass(frozen=True)
class SubmatrixSelection:
    """Row and column index sets (0-based, sorted) picking out ``M[rows x cols]``."""

    rows: tuple[int, ...]
    cols: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(sorted(int(i) for i in self.rows)))
        object.__setattr__(self, "cols", tuple(sorted(int(j) for j in self.cols)))

    @classmethod
    def full(cls, shape) -> "SubmatrixSelection":
        return cls(tuple(range(shape[0])), tuple(range(shape[1])))

    @property
    def shape(self) -> tuple[int, int]:
        return len(self.rows), len(self.cols)

    @property
    def side(self) -> int:
        return min(self.shape)

    @property
    def empty(self) -> bool:
        return not self.rows or not self.cols

    def apply(self, m) -> np.ndarray:
        return values(m)[np.ix_(self.rows, self.cols)]

    def compose(self, inner: "SubmatrixSelection") -> "SubmatrixSelection":
        """Map a selection made inside ``self`` back to the parent's indices."""
        return SubmatrixSelection(tuple(self.rows[i] for i in inner.rows),
                                  tuple(self.cols[j] for j in inner.cols))

    def validate(self, shape) -> None:
        m, n = shape
        if any(not 0 <= i < m for i in self.rows) or any(not 0 <= j < n for j in self.cols):
            raise BadInput(f"selection indices out of range for shape {shape}")
        if len(set(self.rows)) != len(self.rows) or len(set(self.cols)) != len(self.cols):
            raise BadInput("selection has repeated indices")

    def to_json_obj(self) -> dict:
        """1-based indices, matching the family file convention."""
        return {"rows": [i + 1 for i in self.rows], "cols": [j + 1 for j in self.cols]}


def p_of(m):
    """Average entry. Exact (a Fraction) on integer or rational input."""
    arr = values(m)
    total = arr.sum()
    if is_exact(arr):
        return Fraction(total) / arr.size if not isinstance(total, Fraction) else total / arr.size
    return float(total) / arr.size


def q_of(m):
    """Mean squared deviation of the entries from their average."""
    arr = values(m)
    p = p_of(arr)
    if is_exact(arr):
        dev = arr.astype(object) - p
        return Fraction(sum((x * x for x in dev.ravel()), Fraction(0))) / arr.size
    return float(np.mean((arr - p) ** 2))


def frobenius_sq(m):
    arr = values(m)
    if is_exact(arr):
        return sum((Fraction(x) ** 2 for x in arr.ravel()), Fraction(0))
    return float(np.sum(arr.astype(np.float64) ** 2))


def is_separated(m) -> bool:
    """True iff no entry lies strictly between 0 and 1."""
    arr = values(m)
    if arr.dtype == object:
        return all(x <= 0 or x >= 1 for x in arr.ravel())
    return bool(np.all((arr <= 0) | (arr >= 1)))


def is_constant(m) -> bool:
    arr = values(m)
    first = arr.flat[0]
    return bool(np.all(arr == first))


def centered(m) -> np.ndarray:
    """``M - p(M) J``, exact when the input is exact."""
    arr = values(m)
    p = p_of(arr)
    if is_exact(arr):
        return arr.astype(object) - p
    return arr - p


@dataclass(frozen=True)
class SvdResult:
    u: np.ndarray
    s: np.ndarray
    v: np.ndarray
    tol: float

    @property
    def rank(self) -> int:
        return len(self.s)

    @property
    def nuclear(self) -> float:
        return float(self.s.sum())

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.s) @ self.v.T


def svd(m, tol: float = DEFAULT_TOL) -> SvdResult:
    """Thin SVD truncated at ``sigma_k > tol * sigma_1``.

    The reconstruction error and the Frobenius identity are checked before
    returning; a violation raises :class:`NumericalFailure`.
    """
    if tol <= 0:
        raise BadInput("svd tolerance must be positive")
    arr = np.asarray(values(m), dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise NumericalFailure("matrix has non-finite entries", {"shape": arr.shape})
    try:
        u, s, vt = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalFailure(f"SVD did not converge: {exc}", {"shape": arr.shape}) from exc
    keep = s > tol * s[0] if s.size and s[0] > 0 else np.zeros_like(s, dtype=bool)
    res = SvdResult(u[:, keep], s[keep], vt[keep].T, tol)
    fro = float(np.linalg.norm(arr))
    err = float(np.linalg.norm(arr - res.reconstruct())) if res.rank else fro
    # truncation discards at most min(m,n) singular values below tol*sigma_1
    allowed = max(tol * fro * max(1.0, math.sqrt(min(arr.shape))), 1e-12 * max(fro, 1.0))
    if fro > 0 and err > allowed:
        raise NumericalFailure("SVD reconstruction error above tolerance",
                               {"error": err, "allowed": allowed, "shape": arr.shape})
    return res


def integer_rank(m) -> int:
    """Exact rank of an integer matrix by fraction-free (Bareiss) elimination.

    Zero and repeated rows and columns are dropped first; they never change
    the rank and sparse inputs shrink a lot.
    """
    arr = np.asarray(values(m))
    if arr.size == 0:
        return 0
    if arr.dtype != object:
        arr = np.unique(arr[np.any(arr != 0, axis=1)], axis=0)
        if arr.size == 0:
            return 0
        arr = np.unique(arr.T, axis=0)
    rows = [[int(x) for x in r] for r in arr.tolist()]
    rows = [r for r in rows if any(r)]
    if not rows:
        return 0
    if len(rows) > len(rows[0]):
        rows = [list(c) for c in zip(*rows)]
    rank, prev = 0, 1
    ncols = len(rows[0])
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if rows[i][col]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pr = rows[rank]
        pv = pr[col]
        for i in range(rank + 1, len(rows)):
            ri = rows[i]
            f = ri[col]
            rows[i] = [(pv * ri[j] - f * pr[j]) // prev for j in range(ncols)]
        prev = pv
        rank += 1
        if rank == len(rows):
            break
    return rank


def rational_rank(m) -> int:
    """Exact rank by Gaussian elimination over the rationals."""
    arr = values(m)
    if np.issubdtype(arr.dtype, np.integer):
        return integer_rank(arr)
    rows = [[Fraction(x) for x in r] for r in arr.tolist()]
    rank = 0
    ncols = len(rows[0]) if rows else 0
    for col in range(ncols):
        pivot = next((i for i in range(rank, len(rows)) if rows[i][col] != 0), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        pr = rows[rank]
        inv = 1 / pr[col]
        for i in range(rank + 1, len(rows)):
            f = rows[i][col]
            if f:
                f *= inv
                ri = rows[i]
                for j in range(col, ncols):
                    if pr[j]:
                        ri[j] -= f * pr[j]
        rank += 1
        if rank == len(rows):
            break
    return rank


def numerical_rank(m, tol: float = DEFAULT_TOL) -> int:
    arr = np.asarray(values(m), dtype=np.float64)
    if not np.any(arr):
        return 0
    return svd(arr, tol).rank


def as_int_matrix(m) -> np.ndarray | None:
    """Return an int64 copy when every entry is an integer, else None."""
    arr = values(m)
    if np.issubdtype(arr.dtype, np.integer):
        return arr.astype(np.int64)
    if arr.dtype == object:
        if all(Fraction(x).denominator == 1 for x in arr.ravel()):
            return np.array([[int(x) for x in r] for r in arr], dtype=np.int64)
        return None
    if np.all(np.isfinite(arr)) and np.all(arr == np.round(arr)) and np.all(np.abs(arr) < 2**53):
        return arr.astype(np.int64)
    return None


def scaled_integer(arr: np.ndarray) -> tuple[np.ndarray, int]:
    """Write a rational matrix as ``Z / d`` with ``Z`` an integer matrix.

    ``Z`` is an int64 array when it fits, otherwise an object array of ints.
    """
    fr = [Fraction(x) for x in arr.ravel()]
    d = 1
    for x in fr:
        d = d * x.denominator // math.gcd(d, x.denominator)
    ints = [int(x * d) for x in fr]
    bound = max((abs(x) for x in ints), default=0) * arr.size
    dtype = np.int64 if bound < 2**62 else object
    return np.array(ints, dtype=dtype).reshape(arr.shape), d


def identity(n: int) -> np.ndarray:
    return np.eye(n, dtype=np.int64)


def ones(m: int, n: int | None = None) -> np.ndarray:
    return np.ones((m, n if n is not None else m), dtype=np.int64)


def select(m, rows: Sequence[int], cols: Sequence[int]) -> np.ndarray:
    return values(m)[np.ix_(list(rows), list(cols))]


def half(k: int) -> int:
    return (k + 1) // 2


def is_nonneg_integer(m) -> bool:
    ints = as_int_matrix(m)
    return ints is not None and bool(np.all(ints >= 0))


def iter_rows(m) -> Iterable[np.ndarray]:
    return iter(values(m))
