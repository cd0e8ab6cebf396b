"""Source/target maps and the inverse mapping on ``C^inf(T*M, Z)``.

Truncation bookkeeping: with operators known mod nu^(N+1), sigma-symbols are
exact through xi-degree ``N``.  A single bracket with an unknown degree-(N+1)
term can reach degree ``N``, so identities that involve brackets or flows are
compared through xi-degree ``N - 1`` (``sound_degree``).
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, Sequence

from .algebra import NuSeries, Polynomial, monomial_basis
from .diffop import (
    FormalDiffOp,
    LogDensity,
    NotNaturalError,
    commutator_over_nu,
    naturality_violation,
    op_exp,
    op_invert,
    op_log,
    random_natural,
    sigma,
)
from .modular import ModularData, k_transform
from .outcome import Outcome, first_failure
from .phase import (
    PhaseFunction,
    epsilon_pullback,
    ham_flow,
    tstar_bracket,
    unit_restrict,
)
from .starprod import StarProduct, left_op, right_op


class GroupoidInconsistency(RuntimeError):
    """A structural expectation (e.g. naturality of nu log J) failed outright."""


class IntegrabilityError(ArithmeticError):
    pass


def sound_degree(N: int) -> int:
    return N - 1


def source_target(star: StarProduct, f) -> tuple:
    """``(S f, T f) = (sigma(L_f), sigma(R_f))``."""
    try:
        return sigma(left_op(star, f)), sigma(right_op(star, f))
    except NotNaturalError as exc:
        raise NotNaturalError(f"star product is not natural: {exc}") from None


def source(star: StarProduct, f) -> PhaseFunction:
    return sigma(left_op(star, f))


def target(star: StarProduct, f) -> PhaseFunction:
    return sigma(right_op(star, f))


def reconstruct_commutant(
    star: StarProduct, f: Polynomial, side: str = "S", partners: Sequence[PhaseFunction] | None = None
) -> PhaseFunction:
    """Solve ``E(F) = f`` and ``{F, T x^k} = 0`` (side "S") degree by degree.

    At xi-degree ``m - 1`` the commutation condition reads
    ``dF_m/dxi_k = -sum_{i<m} {F_i, P^k_{m-i}}`` where ``P^k`` are the partner
    images of the coordinates; ``F_m`` is recovered from its xi-gradient by the
    Euler identity ``F_m = (1/m) xi_k dF_m/dxi_k``.  With side "T" the
    partners are ``S x^k`` and the solution is ``T f``.
    """
    if side not in ("S", "T"):
        raise ValueError("side must be 'S' or 'T'")
    n, N = star.n, star.N
    if partners is None:
        image = target if side == "S" else source
        partners = [image(star, Polynomial.var(n, k)) for k in range(n)]
    P = [[p.component(m) for m in range(N + 1)] for p in partners]
    F = [PhaseFunction.from_base(f, N)]
    xis = [PhaseFunction.xi(n, N, k) for k in range(n)]
    for m in range(1, N + 1):
        grad = []
        for k in range(n):
            g = PhaseFunction.zero(n, N)
            for i in range(m):
                g = g - tstar_bracket(F[i], P[k][m - i])
            grad.append(g.component(m - 1))
        Fm = PhaseFunction.zero(n, N)
        for k in range(n):
            Fm = Fm + xis[k] * grad[k]
        Fm = Fm.scale(Fraction(1, m))
        for k in range(n):
            if Fm.d_xi(k) != grad[k]:
                raise IntegrabilityError(
                    f"prescribed xi-gradient at degree {m} is not integrable (component {k + 1})"
                )
        F.append(Fm)
    out = PhaseFunction.zero(n, N)
    for c in F:
        out = out + c
    return out


@dataclass(frozen=True)
class InverseMap:
    """``I = exp(-H_{sigma(X)}) o eps*`` with ``J = exp(X / nu)``."""

    sigma_x: PhaseFunction
    N: int
    provenance: str = ""

    def __call__(self, F: PhaseFunction) -> PhaseFunction:
        return ham_flow(self.sigma_x, epsilon_pullback(F), -1)

    @property
    def n(self) -> int:
        return self.sigma_x.n


def inverse_map(star: StarProduct, rho: LogDensity, data: ModularData | None = None) -> InverseMap:
    data = data or ModularData.build(star, rho)
    X = data.x_log
    bad = naturality_violation(X)
    if bad is not None:
        raise GroupoidInconsistency(f"nu log J is not natural at nu^{bad}: {X}")
    if not X.vanishes_mod_nu(2):
        raise GroupoidInconsistency("nu log J does not vanish mod nu^2")
    sx = sigma(X).truncate(star.N)
    low = sx.min_xi_degree()
    if low is not None and low < 2:
        raise GroupoidInconsistency("sigma(X) does not vanish to second order on Z")
    return InverseMap(sx, star.N, provenance=f"{star.label} / {rho}")


# -- random phase functions ---------------------------------------------------------

def random_phase(rng: random.Random, n: int, D: int, nterms: int = 4, max_x: int = 2) -> PhaseFunction:
    terms = {}
    for _ in range(nterms):
        e = [0] * (2 * n)
        for _ in range(rng.randint(0, max_x)):
            e[rng.randrange(n)] += 1
        for _ in range(rng.randint(0, D)):
            e[n + rng.randrange(n)] += 1
        terms[tuple(e)] = Fraction(rng.randint(-3, 3), rng.randint(1, 2))
    return PhaseFunction(n, D, terms)


# -- checks ---------------------------------------------------------------------------

class _Memo:
    def __init__(self, fn):
        self.fn, self.cache = fn, {}

    def __call__(self, f):
        if f not in self.cache:
            self.cache[f] = self.fn(f)
        return self.cache[f]


def _agree(lhs: PhaseFunction, rhs: PhaseFunction, degree: int, what: str) -> Outcome:
    if lhs.agrees_with(rhs, degree):
        return Outcome.passed()
    return Outcome.failed(f"{what}: residual {(lhs - rhs).truncate(degree)}")


def check_involutive(I: InverseMap, samples: Iterable[PhaseFunction]) -> Outcome:
    k = sound_degree(I.N)
    return first_failure(_agree(I(I(F)), F, k, f"I(I(F)) != F for F={F}") for F in samples)


def check_anti_poisson(I: InverseMap, pairs) -> Outcome:
    k = sound_degree(I.N)
    return first_failure(
        _agree(I(tstar_bracket(F, G)), -tstar_bracket(I(F), I(G)), k, f"F={F}, G={G}")
        for F, G in pairs
    )


def check_swaps(I: InverseMap, star: StarProduct, basis) -> Outcome:
    k = sound_degree(I.N)
    outs = []
    for f in basis:
        S, T = source_target(star, f)
        outs.append(_agree(I(T), S, k, f"I(T {f}) != S {f}"))
        outs.append(_agree(I(S), T, k, f"I(S {f}) != T {f}"))
    return first_failure(outs)


def check_ik(I: InverseMap, data: ModularData, samples: Iterable[FormalDiffOp]) -> Outcome:
    k = sound_degree(I.N)
    return first_failure(
        _agree(sigma(k_transform(data, A)), I(sigma(A)), k, f"A={A}") for A in samples
    )


def check_rho_independence(maps: Sequence[InverseMap], samples: Sequence[PhaseFunction]) -> Outcome:
    if len(maps) < 2:
        return Outcome.passed("single density: nothing to compare")
    k = sound_degree(maps[0].N)
    first = maps[0]
    outs = []
    for other in maps[1:]:
        outs.append(_agree(first.sigma_x, other.sigma_x, k, "sigma(nu log J) differs"))
        outs.extend(_agree(first(F), other(F), k, f"I differs on F={F}") for F in samples)
    return first_failure(outs)


def check_symbaut(data: ModularData) -> Outcome:
    """``sigma(nu log Q) = 0`` for the modular automorphism."""
    X = op_log(data.q)
    bad = naturality_violation(X)
    if bad is not None:
        return Outcome.failed(f"nu log Q not natural at nu^{bad}: {X}")
    sx = sigma(X).truncate(data.N)
    if not sx.is_zero():
        return Outcome.failed(f"sigma(nu log Q) = {sx}")
    return Outcome.passed()


def check_source_poisson(star: StarProduct, basis) -> Outcome:
    k = sound_degree(star.N)
    pi = star.poisson
    S = _Memo(lambda f: source(star, f))
    return first_failure(
        _agree(tstar_bracket(S(f), S(g)), S(pi.bracket(f, g)), k, f"{{Sf,Sg}} f={f}, g={g}")
        for f in basis
        for g in basis
    )


def check_target_anti_poisson(star: StarProduct, basis) -> Outcome:
    k = sound_degree(star.N)
    pi = star.poisson
    T = _Memo(lambda f: target(star, f))
    return first_failure(
        _agree(tstar_bracket(T(f), T(g)), -T(pi.bracket(f, g)), k, f"{{Tf,Tg}} f={f}, g={g}")
        for f in basis
        for g in basis
    )


def check_source_target_commute(star: StarProduct, basis) -> Outcome:
    k = sound_degree(star.N)
    zero = PhaseFunction.zero(star.n, star.N)
    S = [source(star, f) for f in basis]
    T = [target(star, g) for g in basis]
    return first_failure(
        _agree(tstar_bracket(s, t), zero, k, f"{{S {f}, T {g}}}")
        for s, f in zip(S, basis)
        for t, g in zip(T, basis)
    )


def check_unit(star: StarProduct, basis) -> Outcome:
    for f in basis:
        S, T = source_target(star, f)
        if unit_restrict(S) != f or unit_restrict(T) != f:
            return Outcome.failed(f"E(S f)={unit_restrict(S)}, E(T f)={unit_restrict(T)} for f={f}")
    return Outcome.passed()


def check_reconstruction(star: StarProduct, basis) -> Outcome:
    n = star.n
    Tx = [target(star, Polynomial.var(n, k)) for k in range(n)]
    Sx = [source(star, Polynomial.var(n, k)) for k in range(n)]
    outs = []
    for f in basis:
        S, T = source_target(star, f)
        got_s = reconstruct_commutant(star, f, "S", Tx)
        got_t = reconstruct_commutant(star, f, "T", Sx)
        outs.append(Outcome.passed() if got_s == S else Outcome.failed(f"f={f}: rebuilt {got_s} vs S f = {S}"))
        outs.append(Outcome.passed() if got_t == T else Outcome.failed(f"f={f}: rebuilt {got_t} vs T f = {T}"))
    return first_failure(outs)


def check_uniqueness(star: StarProduct) -> Outcome:
    zero = Polynomial.zero(star.n)
    outs = []
    for side in ("S", "T"):
        F = reconstruct_commutant(star, zero, side)
        outs.append(Outcome.passed() if F.is_zero() else Outcome.failed(f"side {side}: F = {F}"))
    return first_failure(outs)


def check_sigma_homomorphism(samples) -> Outcome:
    outs = []
    for A, B in samples:
        lhs, rhs = sigma(A * B), sigma(A) * sigma(B)
        outs.append(Outcome.passed() if lhs == rhs else Outcome.failed(f"A={A}, B={B}: {lhs - rhs}"))
    return first_failure(outs)


def check_commab(samples) -> Outcome:
    outs = []
    for A, B in samples:
        C = commutator_over_nu(A, B)
        lhs = sigma(C)
        rhs = tstar_bracket(sigma(A), sigma(B))
        outs.append(_agree(lhs, rhs, C.N, f"A={A}, B={B}"))
    return first_failure(outs)


def check_sigma_conjugation(X: FormalDiffOp, samples) -> Outcome:
    """Conjugation by ``exp(X/nu)`` acts on symbols as ``exp(H_{sigma(X)})``."""
    B = op_exp(X)
    B_inv = op_exp(-X)
    N = B.N
    k = sound_degree(N)
    sx = sigma(X).truncate(N)
    return first_failure(
        _agree(sigma(B * A * B_inv), ham_flow(sx, sigma(A), 1), k, f"A={A}") for A in samples
    )


def check_natural_conjugation(B: FormalDiffOp, samples) -> Outcome:
    """Conjugation by an invertible natural operator fixes sigma-symbols."""
    B_inv = op_invert(B)
    outs = []
    for A in samples:
        C = B * A * B_inv
        bad = naturality_violation(C)
        if bad is not None:
            outs.append(Outcome.failed(f"B A B^-1 not natural at nu^{bad} for A={A}"))
            continue
        outs.append(Outcome.passed() if sigma(C) == sigma(A) else Outcome.failed(f"A={A}: {sigma(C) - sigma(A)}"))
    return first_failure(outs)


def groupoid_verify(
    star: StarProduct,
    rho: LogDensity,
    rho2: LogDensity | None,
    degree: int,
    rng: random.Random,
    samples: int = 3,
) -> Dict[str, Outcome]:
    """Inverse-map identities (a)-(f) for one star product and two densities."""
    n, N = star.n, star.N
    data = ModularData.build(star, rho)
    I = inverse_map(star, rho, data)
    maps = [I]
    if rho2 is not None:
        maps.append(inverse_map(star, rho2))
    phases = [random_phase(rng, n, N) for _ in range(samples)]
    pairs = [(random_phase(rng, n, N), random_phase(rng, n, N)) for _ in range(samples)]
    ops = [random_natural(rng, n, N) for _ in range(samples)]
    basis = monomial_basis(n, degree)
    return {
        "T:last.a": check_involutive(I, phases),
        "T:last.b": check_anti_poisson(I, pairs),
        "T:last.c": check_swaps(I, star, basis),
        "E:ik": check_ik(I, data, ops),
        "I:rho-independence": check_rho_independence(maps, phases),
        "P:symbaut": check_symbaut(data),
    }
