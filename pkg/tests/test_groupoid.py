import random
from fractions import Fraction

import pytest

from dqgroupoid.algebra import Polynomial, monomial_basis
from dqgroupoid.diffop import FormalDiffOp, LogDensity
from dqgroupoid.groupoid import (
    InverseMap,
    check_anti_poisson,
    check_involutive,
    check_reconstruction,
    check_source_poisson,
    check_source_target_commute,
    check_swaps,
    check_target_anti_poisson,
    check_uniqueness,
    check_unit,
    groupoid_verify,
    inverse_map,
    random_phase,
    reconstruct_commutant,
    source_target,
)
from dqgroupoid.phase import PhaseFunction
from dqgroupoid.starprod import PoissonStructure, gauge_twist, moyal_star

SYMPLECTIC = PoissonStructure([[0, 1], [-1, 0]])
MOYAL = moyal_star(SYMPLECTIC, 4)
TWISTED = gauge_twist(MOYAL, FormalDiffOp.from_terms(2, 5, [(2, (0, 2), Polynomial.var(2, 0))]))
x1 = Polynomial.var(2, 0)
D = 4


def ph(terms):
    return PhaseFunction(2, D, terms)


def test_source_and_target_of_x1():
    S, T = source_target(MOYAL, x1)
    assert S == ph({(1, 0, 0, 0): 1, (0, 0, 0, 1): Fraction(1, 2)})
    assert T == ph({(1, 0, 0, 0): 1, (0, 0, 0, 1): Fraction(-1, 2)})


def test_reconstruction_reproduces_source_and_target():
    S, T = source_target(MOYAL, x1)
    assert reconstruct_commutant(MOYAL, x1, "S") == S
    assert reconstruct_commutant(MOYAL, x1, "T") == T
    assert check_reconstruction(TWISTED, monomial_basis(2, 3)).ok


def test_reconstruction_from_zero_is_zero():
    assert check_uniqueness(MOYAL).ok
    assert check_uniqueness(TWISTED).ok
    assert reconstruct_commutant(MOYAL, Polynomial.zero(2), "S").is_zero()


def test_pointwise_product_has_trivial_symbols():
    star = moyal_star(PoissonStructure.zero(2), 3)
    f = x1**2 * Polynomial.var(2, 1)
    S, T = source_target(star, f)
    assert S == T == PhaseFunction.from_base(f, 3)
    assert reconstruct_commutant(star, f, "S") == S


@pytest.mark.parametrize("star", [MOYAL, TWISTED], ids=["moyal", "twisted"])
def test_source_target_morphisms(star):
    basis = monomial_basis(2, 3)
    assert check_unit(star, basis).ok
    assert check_source_poisson(star, basis).ok
    assert check_target_anti_poisson(star, basis).ok
    assert check_source_target_commute(star, basis).ok


def test_inverse_map_is_epsilon_for_moyal():
    I = inverse_map(MOYAL, LogDensity.lebesgue(2, 4))
    assert I.sigma_x.is_zero()
    S, T = source_target(MOYAL, x1)
    assert I(T) == S


def test_inverse_map_of_twisted_moyal():
    # with B = exp(nu x1 d2^2) and Lebesgue measure, B^t 1 = 1 and
    # (B^-1)^t = B^-1, so J = B^-2 = exp(-2 nu x1 d2^2) and sigma(X) = -2 x1 xi2^2
    expected = ph({(1, 0, 0, 2): -2})
    for phi in (Polynomial.zero(2), x1):
        I = inverse_map(TWISTED, LogDensity.from_poly(phi, 4))
        assert I.sigma_x == expected


def test_epsilon_alone_fails_for_the_twisted_product():
    eps_only = InverseMap(PhaseFunction.zero(2, D), D)
    out = check_swaps(eps_only, TWISTED, monomial_basis(2, 3))
    assert not out.ok


def test_inverse_map_identities_on_random_phases():
    rng = random.Random(5)
    I = inverse_map(TWISTED, LogDensity.from_poly(x1 * x1, 4))
    phases = [random_phase(rng, 2, D) for _ in range(6)]
    assert check_involutive(I, phases).ok
    assert check_anti_poisson(I, list(zip(phases[::2], phases[1::2]))).ok


@pytest.mark.parametrize("star", [MOYAL, TWISTED], ids=["moyal", "twisted"])
def test_groupoid_verify(star):
    out = groupoid_verify(
        star, LogDensity.lebesgue(2, 4), LogDensity.from_poly(x1, 4), 3, random.Random(0)
    )
    assert all(o.ok for o in out.values()), out
