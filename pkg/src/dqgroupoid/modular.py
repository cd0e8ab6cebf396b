"""Transposition calculus of a star product against a formal density.

``J`` is characterised by ``integral u * v rho = integral u (J v) rho``; it is
built here without integrals, by transposing each bidifferential term of the
product in its first slot and evaluating that slot at ``u = 1``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, Sequence

from .algebra import MultiIndex, NuSeries, Polynomial, monomial_basis
from .diffop import (
    DiffOp,
    FormalDiffOp,
    LogDensity,
    apply,
    naturality_violation,
    op_invert,
    op_log,
    random_natural,
    transpose,
)
from .outcome import Outcome, first_failure
from .starprod import (
    PoissonStructure,
    StarProduct,
    conjugate_star,
    left_op,
    natural_verify,
    right_op,
)


def j_operator(star: StarProduct, rho: LogDensity) -> FormalDiffOp:
    """``J`` as the sum of slot transposes ``(-1)^|a| D^a o (c d^b)``."""
    if rho.n != star.n:
        raise ValueError("dimension mismatch between star product and density")
    n, N = star.n, star.N
    rho = LogDensity(rho.phi.truncate(N)) if rho.N > N else rho
    if rho.N < N:
        raise ValueError("density known to lower order than the star product")
    # group the table by the right multi-index: J = sum_b (A_b)^t o d^b
    by_right: Dict[MultiIndex, list] = {}
    for r, lv in enumerate(star.levels):
        for (a, b), c in lv.terms.items():
            by_right.setdefault(b, []).append((r, a, c))
    J = FormalDiffOp.zero(n, N)
    for b, triples in by_right.items():
        A_b = FormalDiffOp.from_terms(n, N, triples)
        J = J + transpose(A_b, rho) * FormalDiffOp.from_terms(n, N, [(0, b, 1)])
    return J


def j_apply_via_right(star: StarProduct, rho: LogDensity, f) -> NuSeries:
    """Independent route to ``J f``: transpose ``R_f`` and apply it to 1."""
    Rt = transpose(right_op(star, f), rho)
    return apply(Rt, NuSeries.const(star.n, star.N, 1))


@dataclass(frozen=True)
class ModularData:
    star: StarProduct
    rho: LogDensity
    j: FormalDiffOp
    j_inv: FormalDiffOp
    q: FormalDiffOp
    x_log: FormalDiffOp

    @classmethod
    def build(cls, star: StarProduct, rho: LogDensity) -> "ModularData":
        j = j_operator(star, rho)
        j_inv = op_invert(j)
        q = transpose(j_inv, rho) * j
        return cls(star, rho, j, j_inv, q, op_log(j))

    @property
    def n(self) -> int:
        return self.star.n

    @property
    def N(self) -> int:
        return self.star.N

    def transpose(self, A: FormalDiffOp) -> FormalDiffOp:
        return transpose(A, self.rho)

    def identity(self) -> FormalDiffOp:
        return FormalDiffOp.identity(self.n, self.N)


def q_operator(data: ModularData) -> FormalDiffOp:
    """Modular automorphism ``(J^-1)^t J``."""
    return data.transpose(data.j_inv) * data.j


def k_transform(data: ModularData, A: FormalDiffOp) -> FormalDiffOp:
    """Transposition against ``(u, v) -> integral u * v rho``: ``J^-1 A^t J``."""
    return data.j_inv * data.transpose(A) * data.j


def modular_vector_field(pi: PoissonStructure, phi0: Polynomial, f: Polynomial) -> Polynomial:
    """``div_{rho_0} H_f = sum_j d_j (H_f)^j + (H_f)^j d_j phi0``."""
    H = pi.hamiltonian_components(f)
    out = Polynomial.zero(pi.n)
    for j, h in enumerate(H):
        out = out + h.diff(j) + h * phi0.diff(j)
    return out


def modular_vector_field_op(pi: PoissonStructure, phi0: Polynomial) -> DiffOp:
    """The operator ``f -> div_{rho_0} H_f``."""
    n = pi.n
    op = DiffOp.zero(n)
    for k in range(n):
        for j in range(n):
            c = pi[k, j]
            if not c:
                continue
            e = [0] * n
            e[k] += 1
            e[j] += 1
            op = op + DiffOp.partial(n, tuple(e), c)
            dk = tuple(1 if i == k else 0 for i in range(n))
            op = op + DiffOp.partial(n, dk, phi0.diff(j).scale(c))
    return op


def modular_field_verify(data: ModularData, degree: int) -> Outcome:
    """``log Q = nu * div_{rho_0} H mod nu^2`` as operators and on monomials."""
    if data.N < 1:
        return Outcome.passed("nothing to compare at N = 0")
    phi0 = data.rho.phi[0]
    log_q = op_log(data.q)
    first = log_q.levels[2] if log_q.N >= 2 else DiffOp.zero(data.n)
    expected = modular_vector_field_op(data.star.poisson, phi0)
    if first != expected:
        return Outcome.failed(f"nu-coefficient of log Q is {first}, expected {expected}")
    for f in monomial_basis(data.n, degree):
        got = first.apply(f)
        want = modular_vector_field(data.star.poisson, phi0, f)
        if got != want:
            return Outcome.failed(f"f={f}: log Q gives {got}, divergence formula {want}")
    return Outcome.passed()


# -- trace densities ------------------------------------------------------------

@dataclass(frozen=True)
class DensityFactor:
    """``rho~ = phi_fun rho`` together with ``psi = J^-1 phi_fun``."""

    phi_fun: NuSeries
    psi: NuSeries

    @classmethod
    def build(cls, data: ModularData, phi_fun: NuSeries | Polynomial) -> "DensityFactor":
        if isinstance(phi_fun, Polynomial):
            phi_fun = NuSeries.from_poly(phi_fun, data.N)
        return cls(phi_fun, apply(data.j_inv, phi_fun))


def is_casimir(star: StarProduct, psi) -> bool:
    return left_op(star, psi) == right_op(star, psi)


def trace_test(data: ModularData, factor: DensityFactor | None = None) -> bool:
    """Is ``rho`` (or ``phi_fun rho``) a trace density of the product?

    Without a factor this is symmetry of ``J``.  With a factor, ``rho`` must
    itself be a trace density; then ``phi_fun rho`` is one exactly when
    ``psi = J^-1 phi_fun`` is a Casimir element.
    """
    symmetric = data.transpose(data.j) == data.j
    if factor is None:
        return symmetric
    if not symmetric:
        raise ValueError("the Casimir criterion needs rho to be a trace density")
    if apply(data.j_inv, factor.phi_fun) != factor.psi:
        raise ValueError("inconsistent density factor: psi != J^-1 phi")
    return is_casimir(data.star, factor.psi)


def trace_density_from_casimir(data: ModularData, psi) -> NuSeries:
    """The factor ``J psi`` producing the trace density ``(J psi) rho``."""
    if isinstance(psi, Polynomial):
        psi = NuSeries.from_poly(psi, data.N)
    return apply(data.j, psi)


# -- change of density ------------------------------------------------------------

def tilde_density(rho: LogDensity, phi_fun: NuSeries) -> LogDensity:
    """``phi_fun * rho`` as a log-density (up to a constant factor)."""
    return LogDensity(rho.phi.truncate(phi_fun.N) + phi_fun.log())


def density_change_verify(
    star: StarProduct,
    rho: LogDensity,
    phi_fun: NuSeries,
    samples: Sequence[FormalDiffOp],
    data: ModularData | None = None,
) -> Dict[str, Outcome]:
    """The four change-of-density identities for ``rho~ = phi_fun rho``.

    Both sides of every identity are computed independently: the left side
    from scratch with ``rho~``, the right side from ``rho`` data.
    """
    data = data or ModularData.build(star, rho)
    n, N = data.n, data.N
    rho_t = tilde_density(rho, phi_fun)
    data_t = ModularData.build(star, rho_t)
    phi = FormalDiffOp.mult(phi_fun)
    phi_inv = FormalDiffOp.mult(phi_fun.invert())
    psi = apply(data.j_inv, phi_fun)
    R_psi = right_op(star, psi)
    L_psi = left_op(star, psi)
    R_psi_inv = op_invert(R_psi)

    def compare(lhs, rhs, what):
        if lhs == rhs:
            return Outcome.passed()
        return Outcome.failed(f"{what}: residual {lhs - rhs}")

    out = {}
    out["E:tilderho"] = first_failure(
        compare(transpose(A, rho_t), phi_inv * transpose(A, rho) * phi, f"A={A}")
        for A in samples
    )
    out["E:jtilderho"] = compare(data_t.j, phi_inv * data.j * R_psi, "J~ vs phi^-1 J R_psi")
    out["E:ktilderho"] = first_failure(
        compare(k_transform(data_t, A), R_psi_inv * k_transform(data, A) * R_psi, f"A={A}")
        for A in samples
    )
    out["E:qtilderho"] = compare(data.q, data_t.q * R_psi_inv * L_psi, "Q vs Q~ Ad(psi)")
    return out


# -- the equivalent product defined by J ------------------------------------------

def tilde_star(star: StarProduct, rho: LogDensity, data: ModularData | None = None) -> StarProduct:
    """``f *~ g = J(J^-1 f * J^-1 g)``."""
    data = data or ModularData.build(star, rho)
    out = conjugate_star(star, data.j, data.j_inv)
    return StarProduct(out.levels, star.poisson, star.N, label=f"tilde {star.label}".strip())


def ltransr_verify(data: ModularData, tilde: StarProduct, degree: int) -> Outcome:
    """``L~_f = (R_{J^-1 f})^t`` on monomials, and naturality of ``*~``."""
    for f in monomial_basis(data.n, degree):
        lhs = left_op(tilde, f)
        rhs = data.transpose(right_op(data.star, apply(data.j_inv, f)))
        if lhs != rhs:
            return Outcome.failed(f"f={f}: residual {lhs - rhs}")
    return Outcome.passed()


def sample_operators(rng: random.Random, n: int, N: int, count: int = 3) -> list:
    return [random_natural(rng, n, N) for _ in range(count)]
