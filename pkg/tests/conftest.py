from __future__ import annotations

import numpy as np
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from zerorect.famcore import SetFamily

settings.register_profile("repo", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@st.composite
def families(draw, n=None, min_size=1, max_size=12, max_n=8):
    n = draw(st.integers(1, max_n)) if n is None else n
    masks = draw(st.lists(st.integers(0, (1 << n) - 1), min_size=min_size, max_size=max_size))
    return SetFamily(n, tuple(masks))


@st.composite
def family_pairs(draw, max_n=8, max_size=12, min_size=1):
    n = draw(st.integers(1, max_n))
    a = draw(families(n=n, min_size=min_size, max_size=max_size))
    b = draw(families(n=n, min_size=min_size, max_size=max_size))
    return a, b


@st.composite
def int_matrices(draw, max_rows=6, max_cols=6, lo=-3, hi=3, min_rows=1, min_cols=1):
    m = draw(st.integers(min_rows, max_rows))
    n = draw(st.integers(min_cols, max_cols))
    flat = draw(st.lists(st.integers(lo, hi), min_size=m * n, max_size=m * n))
    return np.array(flat, dtype=np.int64).reshape(m, n)


def brute_disjoint(a: SetFamily, b: SetFamily) -> int:
    return sum(1 for x in a.masks for y in b.masks if not x & y)
