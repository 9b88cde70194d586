"""Entropy bounds and Fourier analysis of intersection sizes.

Residues of ``|a & b|`` modulo a small prime are handled as exact rationals.
Squared Fourier magnitudes are computed in the cyclotomic field, where an
element is a coefficient vector over powers of a primitive root ``w`` reduced
by ``1 + w + ... + w^(p-1) = 0``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (BudgetExceeded, EmptyFamily, InvalidFrequency, InvalidPrime,
                     InvalidProbability, VerificationFailure)
from .famcore import SetFamily, intersection_histogram
from .oracles import DEFAULT_BUDGET, OracleBudget, max_rectangle

ENTROPY_CONSTANT = math.exp(40)


# -- entropy -----------------------------------------------------------------


def binary_entropy(p) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0 or math.isnan(p):
        raise InvalidProbability(f"p={p} outside [0, 1]")
    if p in (0.0, 1.0):
        return 0.0
    return -p * math.log2(p) - (1 - p) * math.log2(1 - p)


def entropy_gap(p, k: int, c: float = ENTROPY_CONSTANT) -> float:
    """``1 - (1-p)^k + c / 2^k - H(p)``."""
    if k < 1:
        raise InvalidProbability("k must be at least 1")
    h = binary_entropy(p)
    return 1 - (1 - float(p)) ** k + c / 2.0 ** k - h


@dataclass(frozen=True)
class GridScan:
    min_gap: float
    argmin_p: float
    argmin_k: int
    points: int


def entropy_grid_scan(step: float = 1e-4, k_max: int = 80, c: float = ENTROPY_CONSTANT,
                      k_min: int = 1) -> GridScan:
    """Minimum of :func:`entropy_gap` over ``p in {0, step, ..., 1}`` and ``k_min..k_max``.

    Evaluated in ``numpy.longdouble`` (80-bit on x86) so that the tiny
    differences near ``p = 0`` are not rounded away.
    """
    ld = np.longdouble
    count = int(round(1 / step))
    p = np.arange(count + 1, dtype=ld) / ld(count)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -p * np.log2(p) - (1 - p) * np.log2(1 - p)
    h = np.where((p == 0) | (p == 1), ld(0), h)
    best = (np.inf, 0.0, 0)
    for k in range(k_min, k_max + 1):
        gap = 1 - (1 - p) ** k + ld(c) / ld(2) ** k - h
        i = int(np.argmin(gap))
        if gap[i] < best[0]:
            best = (gap[i], float(p[i]), k)
    return GridScan(float(best[0]), best[1], best[2], (count + 1) * (k_max - k_min + 1))


def marginals(family: SetFamily) -> list[Fraction]:
    if not len(family):
        raise EmptyFamily("family is empty")
    m = len(family)
    return [Fraction(c, m) for c in family.marginals()]


def expected_union_exact(family: SetFamily, k: int) -> Fraction:
    """Expected size of the union of k independent uniform members."""
    if k < 1:
        raise InvalidProbability("k must be at least 1")
    return sum((1 - (1 - p) ** k for p in marginals(family)), Fraction(0))


def subadditivity_bound(family: SetFamily) -> tuple[float, float]:
    """``(sum_i H(p_i), log2 |F|)`` over the distinct members of ``family``."""
    distinct = family.dedup()
    total = sum(binary_entropy(p) for p in marginals(distinct))
    return total, math.log2(len(distinct))


# -- intersection distributions and bias -------------------------------------


def is_prime(p: int) -> bool:
    if p < 2:
        return False
    return all(p % d for d in range(2, math.isqrt(p) + 1))


def choose_prime(c: float) -> int:
    """Smallest prime in ``[2/c^2, 4/c^2]``, never below 2."""
    if not 0 < c <= 1:
        raise InvalidProbability("c must lie in (0, 1]")
    lo = max(2, math.ceil(2 / c ** 2))
    p = lo
    while not is_prime(p):
        p += 1
    return p


@dataclass(frozen=True)
class IntersectionDistribution:
    prime: int
    f: tuple[Fraction, ...]

    def fourier(self, j: int) -> complex:
        w = cmath.exp(2j * math.pi * j / self.prime)
        return sum(float(fx) * w ** x for x, fx in enumerate(self.f))

    def cyclotomic(self, j: int) -> "Cyclotomic":
        coeffs = [Fraction(0)] * self.prime
        for x, fx in enumerate(self.f):
            coeffs[(j * x) % self.prime] += fx
        return Cyclotomic(self.prime, tuple(coeffs))


def _check_prime(p: int) -> None:
    if not is_prime(p):
        raise InvalidPrime(f"{p} is not prime")


def intersection_distribution(a: SetFamily, b: SetFamily, p: int) -> IntersectionDistribution:
    """``f(x) = P[|a & b| = x mod p]`` for uniform a in ``a``, b in ``b``."""
    _check_prime(p)
    if not len(a) or not len(b):
        raise EmptyFamily("families must be nonempty")
    hist = intersection_histogram(a, b)
    total = len(a) * len(b)
    counts = [0] * p
    for s, c in enumerate(hist):
        counts[s % p] += c
    return IntersectionDistribution(p, tuple(Fraction(c, total) for c in counts))


@dataclass(frozen=True)
class Cyclotomic:
    """Element ``sum_a coeffs[a] w^a`` of Q(w), w a primitive p-th root of unity."""

    prime: int
    coeffs: tuple[Fraction, ...]

    def __mul__(self, other: "Cyclotomic") -> "Cyclotomic":
        p = self.prime
        out = [Fraction(0)] * p
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(other.coeffs):
                    if y:
                        out[(i + j) % p] += x * y
        return Cyclotomic(p, tuple(out))

    def __add__(self, other: "Cyclotomic") -> "Cyclotomic":
        return Cyclotomic(self.prime, tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))

    def conj(self) -> "Cyclotomic":
        p = self.prime
        return Cyclotomic(p, tuple(self.coeffs[(-a) % p] for a in range(p)))

    def canonical(self) -> tuple[Fraction, ...]:
        """Coordinates in the basis ``1, w, ..., w^(p-2)``."""
        top = self.coeffs[-1]
        return tuple(x - top for x in self.coeffs[:-1])

    def to_complex(self) -> complex:
        w = cmath.exp(2j * math.pi / self.prime)
        return sum(float(x) * w ** a for a, x in enumerate(self.coeffs))

    def rational_value(self) -> Fraction | None:
        """The value when the element is rational, else None."""
        can = self.canonical()
        if any(can[1:]):
            return None
        return can[0]


def bias(a: SetFamily, b: SetFamily, p: int, j: int) -> float:
    """``|f^(j)|``, the magnitude of the j-th Fourier coefficient of the residue distribution."""
    _check_prime(p)
    if j % p == 0 or not 1 <= j <= p - 1:
        raise InvalidFrequency(f"frequency {j} must lie in [1, {p - 1}]")
    return abs(intersection_distribution(a, b, p).fourier(j))


def bias_exact(a: SetFamily, b: SetFamily, j: int = 1) -> Fraction:
    """Exact bias for p = 2: ``|P[even] - P[odd]|``."""
    if j % 2 == 0:
        raise InvalidFrequency("frequency must be odd for p = 2")
    f = intersection_distribution(a, b, 2).f
    return abs(f[0] - f[1])


def squared_bias_exact(dist: IntersectionDistribution, j: int) -> Cyclotomic:
    """``|f^(j)|^2`` as an exact element of Q(w); rational only for p = 2 in general."""
    z = dist.cyclotomic(j)
    return z * z.conj()


def parseval_exact(dist: IntersectionDistribution) -> tuple[Fraction, Fraction]:
    """Both sides of ``sum_j |f^(j)|^2 = p * sum_x f(x)^2``, each exact.

    The left side is summed in the cyclotomic field and must collapse to a
    rational; no root-of-unity orthogonality is assumed.
    """
    p = dist.prime
    acc = Cyclotomic(p, tuple(Fraction(0) for _ in range(p)))
    for j in range(p):
        z = dist.cyclotomic(j)
        acc = acc + z * z.conj()
    left = acc.rational_value()
    if left is None:
        raise VerificationFailure("Fourier energy did not reduce to a rational")
    right = p * sum((fx * fx for fx in dist.f), Fraction(0))
    return left, right


# -- even / odd intersections -----------------------------------------------


def walsh_hadamard(vec: np.ndarray) -> np.ndarray:
    """Unnormalised fast Walsh-Hadamard transform over integers (length 2^n)."""
    out = np.array(vec, dtype=np.int64)
    h = 1
    while h < len(out):
        out = out.reshape(-1, 2 * h)
        lo, hi = out[:, :h].copy(), out[:, h:].copy()
        out[:, :h] = lo + hi
        out[:, h:] = lo - hi
        out = out.reshape(-1)
        h *= 2
    return out


@dataclass(frozen=True)
class EvenOddResult:
    parity: str
    even: int
    odd: int
    delta: Fraction
    bound: Fraction | None
    product: int
    holds: bool
    fourier_correlation: int | None

    @property
    def bound_float(self) -> float:
        return math.inf if self.bound is None else float(self.bound)


def even_odd_check(a: SetFamily, b: SetFamily, fourier_limit: int = 20) -> EvenOddResult:
    """Check ``|A||B| <= 2^n / (4 delta^2)`` for the majority parity.

    Families are deduplicated first since the bound concerns sets, not
    multisets. When odd intersections are the majority, delta is measured
    for odd instead. For ``n <= fourier_limit`` the even-minus-odd count is
    recomputed through the Walsh-Hadamard transform of the indicator.
    """
    a, b = a.dedup(), b.dedup()
    n = a.n
    if not len(a) or not len(b):
        return EvenOddResult("even", 0, 0, Fraction(0), None, 0, True, None)
    hist = intersection_histogram(a, b)
    even = sum(hist[0::2])
    odd = sum(hist[1::2])
    total = even + odd
    parity = "even" if even >= odd else "odd"
    diff = abs(even - odd)
    delta = Fraction(diff, 2 * total)
    corr = None
    if n <= fourier_limit:
        fa = np.zeros(1 << n, dtype=np.int64)
        fa[list(a.masks)] = 1
        fb = np.zeros(1 << n, dtype=np.int64)
        fb[list(b.masks)] = 1
        corr = int(np.dot(walsh_hadamard(fa), fb))
        if corr != even - odd:
            raise VerificationFailure(f"Walsh-Hadamard correlation {corr} != {even - odd}")
    if diff == 0:
        return EvenOddResult(parity, even, odd, delta, None, total, True, corr)
    bound = Fraction(2 ** n) / (4 * delta * delta)
    # |A||B| <= 2^n / (4 delta^2)  <=>  (even - odd)^2 <= 2^n |A||B|
    holds = diff * diff <= (1 << n) * total
    return EvenOddResult(parity, even, odd, delta, bound, total, holds, corr)


# -- constant-residue bicliques ----------------------------------------------


@dataclass(frozen=True)
class ConstantModBiclique:
    residue: int
    product: int
    left: SetFamily
    right: SetFamily
    sgall_holds: bool


def constant_mod_biclique_search(a: SetFamily, b: SetFamily, p: int,
                                 budget: OracleBudget = DEFAULT_BUDGET) -> ConstantModBiclique | None:
    """Largest ``|A'||B'|`` with ``|a & b| mod p`` constant on ``A' x B'``.

    Works on distinct members; returns None when a family is empty.
    """
    _check_prime(p)
    a, b = a.dedup(), b.dedup()
    if not len(a) or not len(b):
        return None
    if min(len(a), len(b)) > budget.max_family:
        raise BudgetExceeded(f"families of size {len(a)}, {len(b)} exceed {budget.max_family}")
    arr_a = np.array(a.masks, dtype=np.uint64)
    arr_b = np.array(b.masks, dtype=np.uint64)
    residues = np.bitwise_count(arr_a[:, None] & arr_b[None, :]).astype(np.int64) % p
    best = None
    for x in range(p):
        prod, sel = max_rectangle(residues == x, budget)
        if prod and (best is None or prod > best[0]):
            best = (prod, x, sel)
    if best is None:
        return None
    prod, x, sel = best
    left, right = a.subfamily(sel.rows), b.subfamily(sel.cols)
    return ConstantModBiclique(x, prod, left, right, prod <= 2 ** a.n)
