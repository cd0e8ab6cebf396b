from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from dqgroupoid.algebra import Polynomial
from dqgroupoid.phase import (
    PhaseFunction,
    epsilon_pullback,
    ham_flow,
    tstar_bracket,
    unit_restrict,
)

from .strategies import coeffs

D = 4
xi1, xi2 = PhaseFunction.xi(2, D, 0), PhaseFunction.xi(2, D, 1)
X1, X2 = PhaseFunction.x(2, D, 0), PhaseFunction.x(2, D, 1)


@st.composite
def phases(draw, min_xi=0, max_terms=4):
    terms = {}
    for _ in range(draw(st.integers(0, max_terms))):
        x = draw(st.lists(st.integers(0, 2), min_size=2, max_size=2))
        k = draw(st.integers(min_xi, D))
        a = draw(st.integers(0, k))
        terms[tuple(x) + (a, k - a)] = draw(coeffs)
    return PhaseFunction(2, D, terms)


def test_coordinate_bracket():
    assert tstar_bracket(xi1, X1) == PhaseFunction.from_base(Polynomial.const(2, 1), D)
    assert tstar_bracket(X1, X2).is_zero()


def test_bracket_raises_filtration():
    F = xi1 * xi1 * X1
    G = xi2 * X1
    assert tstar_bracket(F, G) == (X1 * xi1 * xi2).scale(2)
    assert tstar_bracket(F, G).min_xi_degree() == 2


def test_epsilon():
    assert epsilon_pullback(xi1) == -xi1
    assert epsilon_pullback(X1) == X1


def test_unit_restriction():
    assert unit_restrict(X1 + xi2.scale(Fraction(1, 2))) == Polynomial.var(2, 0)
    assert unit_restrict(xi1 * xi2).is_zero()


def test_flow_single_correction():
    G = X1 * xi2 * xi2
    assert ham_flow(G, xi1, 1) == xi1 - xi2 * xi2


def test_flow_rejects_low_degree_generator():
    with pytest.raises(ValueError):
        ham_flow(xi1, X1, 1)


@given(phases(), phases())
def test_bracket_antisymmetric(F, G):
    assert tstar_bracket(F, G) == -tstar_bracket(G, F)
    assert tstar_bracket(F, F).is_zero()


@given(phases(max_terms=3), phases(max_terms=3), phases(max_terms=3))
def test_jacobi(F, G, H):
    total = (
        tstar_bracket(F, tstar_bracket(G, H))
        + tstar_bracket(G, tstar_bracket(H, F))
        + tstar_bracket(H, tstar_bracket(F, G))
    )
    # each nested bracket can lose two degrees to truncation
    assert total.truncate(D - 2).is_zero()


@given(phases(), phases())
def test_epsilon_anti_poisson_and_involutive(F, G):
    assert epsilon_pullback(epsilon_pullback(F)) == F
    assert epsilon_pullback(tstar_bracket(F, G)) == -tstar_bracket(epsilon_pullback(F), epsilon_pullback(G))


@given(phases(min_xi=2, max_terms=2), phases(), phases())
def test_flow_is_a_poisson_automorphism(G, F1, F2):
    lhs = ham_flow(G, tstar_bracket(F1, F2), 1)
    rhs = tstar_bracket(ham_flow(G, F1, 1), ham_flow(G, F2, 1))
    assert lhs.agrees_with(rhs, D - 1)


@given(phases(min_xi=2, max_terms=2), phases())
def test_flow_inverse(G, F):
    assert ham_flow(G, ham_flow(G, F, -1), 1) == F


def test_zero_generator_is_identity():
    F = X1 * xi2 + xi1
    assert ham_flow(PhaseFunction.zero(2, D), F, 1) == F
