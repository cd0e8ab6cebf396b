from fractions import Fraction

from hypothesis import strategies as st

from dqgroupoid.algebra import NuSeries, Polynomial
from dqgroupoid.diffop import FormalDiffOp

coeffs = st.fractions(min_value=-4, max_value=4, max_denominator=3)


def exps(n, max_deg):
    return st.lists(st.integers(0, max_deg), min_size=n, max_size=n).map(tuple)


def polys(n=2, max_deg=3, max_terms=4):
    return st.dictionaries(exps(n, max_deg), coeffs, max_size=max_terms).map(
        lambda t: Polynomial(n, t)
    )


def series(n=2, N=3):
    return st.lists(polys(n), min_size=N + 1, max_size=N + 1).map(lambda cs: NuSeries(cs, N))


def unit_series(n=2, N=3):
    nonzero = coeffs.filter(lambda c: c != 0)
    return st.tuples(nonzero, series(n, N)).map(
        lambda t: NuSeries([Polynomial.const(n, t[0])] + list(t[1].coeffs[1:]), N)
    )


@st.composite
def natural_ops(draw, n=2, N=3, start=0):
    triples = []
    for r in range(start, N + 1):
        for _ in range(draw(st.integers(0, 2))):
            k = draw(st.integers(0, r))
            alpha = [0] * n
            for _ in range(k):
                alpha[draw(st.integers(0, n - 1))] += 1
            triples.append((r, tuple(alpha), draw(polys(n, 2, 2))))
    return FormalDiffOp.from_terms(n, N, triples)


@st.composite
def ops(draw, n=2, N=3, max_order=3):
    triples = []
    for r in range(N + 1):
        for _ in range(draw(st.integers(0, 2))):
            triples.append((r, draw(exps(n, max_order)), draw(polys(n, 2, 2))))
    return FormalDiffOp.from_terms(n, N, triples)
