"""Formal differential operators with polynomial coefficients on R^n.

A :class:`DiffOp` is ``sum_alpha a_alpha(x) d^alpha`` stored in normal form
(coefficients to the left), which is unique, so operator equality is plain
table equality.  A :class:`FormalDiffOp` is a nu-truncated series of those.
"""
from __future__ import annotations

import random
from fractions import Fraction
from math import factorial
from typing import Dict, Iterable, Mapping, Sequence

from .algebra import (
    DimensionError,
    MultiIndex,
    NotInvertibleError,
    NuSeries,
    Polynomial,
    Scalar,
    as_rational,
    mi_add,
    mi_below,
    mi_binom,
    mi_factorial,
    mi_sub,
    mi_unit,
    multi_indices,
)
from .phase import PhaseFunction


class NotNaturalError(ValueError):
    """An operator violates ``order(A_r) <= r`` where naturality is required."""


class NuDivisionError(ArithmeticError):
    pass


_Acc = Dict[MultiIndex, Dict[MultiIndex, Fraction]]


def _acc_add(acc: _Acc, key: MultiIndex, p: Polynomial, q: Polynomial | None, c) -> None:
    # acc[key] += c * p * q, term by term
    slot = acc.setdefault(key, {})
    if q is None:
        for e, v in p.terms.items():
            slot[e] = slot.get(e, 0) + c * v
        return
    for e1, v1 in p.terms.items():
        cv = c * v1
        for e2, v2 in q.terms.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            slot[e] = slot.get(e, 0) + cv * v2


def _acc_finish(n: int, acc: _Acc) -> "DiffOp":
    terms = {}
    for key, slot in acc.items():
        clean = {e: v for e, v in slot.items() if v}
        if clean:
            terms[key] = Polynomial._raw(n, clean)
    return DiffOp._raw(n, terms)


class DiffOp:
    """A single differential operator ``sum a_alpha(x) d^alpha``."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[MultiIndex, Polynomial] | None = None):
        clean = {}
        for alpha, a in (terms or {}).items():
            if len(alpha) != n or a.n != n:
                raise DimensionError("operator term has the wrong dimension")
            if not a.is_zero():
                clean[tuple(alpha)] = a
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", clean)

    @classmethod
    def _raw(cls, n, terms):
        op = object.__new__(cls)
        object.__setattr__(op, "n", n)
        object.__setattr__(op, "terms", terms)
        return op

    def __setattr__(self, key, value):
        raise AttributeError("DiffOp is immutable")

    @classmethod
    def zero(cls, n: int) -> "DiffOp":
        return cls._raw(n, {})

    @classmethod
    def mult(cls, p: Polynomial) -> "DiffOp":
        return cls(p.n, {(0,) * p.n: p})

    @classmethod
    def identity(cls, n: int) -> "DiffOp":
        return cls.mult(Polynomial.const(n, 1))

    @classmethod
    def partial(cls, n: int, alpha: MultiIndex, coeff: Polynomial | Scalar = 1) -> "DiffOp":
        if not isinstance(coeff, Polynomial):
            coeff = Polynomial.const(n, coeff)
        return cls(n, {tuple(alpha): coeff})

    def order(self) -> int:
        """Highest derivative order present; -1 for the zero operator."""
        return max((sum(a) for a in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if isinstance(other, DiffOp):
            return self.n == other.n and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def __add__(self, other: "DiffOp") -> "DiffOp":
        if other.n != self.n:
            raise DimensionError("dimension mismatch")
        out = dict(self.terms)
        for alpha, b in other.terms.items():
            s = out[alpha] + b if alpha in out else b
            if s.is_zero():
                out.pop(alpha, None)
            else:
                out[alpha] = s
        return DiffOp._raw(self.n, out)

    def __neg__(self) -> "DiffOp":
        return DiffOp._raw(self.n, {a: -p for a, p in self.terms.items()})

    def __sub__(self, other: "DiffOp") -> "DiffOp":
        return self + (-other)

    def scale(self, c: Scalar) -> "DiffOp":
        c = as_rational(c)
        if not c:
            return DiffOp.zero(self.n)
        return DiffOp._raw(self.n, {a: p.scale(c) for a, p in self.terms.items()})

    def left_mul(self, p: Polynomial) -> "DiffOp":
        """The operator ``p * self`` (multiplication applied after ``self``)."""
        return DiffOp(self.n, {a: p * q for a, q in self.terms.items()})

    def compose(self, other: "DiffOp") -> "DiffOp":
        acc: _Acc = {}
        _compose_into(acc, self, other, 1)
        return _acc_finish(self.n, acc)

    def apply(self, f: Polynomial) -> Polynomial:
        out: Dict[MultiIndex, Fraction] = {}
        for alpha, a in self.terms.items():
            df = f.deriv(alpha)
            for e1, v1 in a.terms.items():
                for e2, v2 in df.terms.items():
                    e = tuple(i + j for i, j in zip(e1, e2))
                    out[e] = out.get(e, 0) + v1 * v2
        return Polynomial(self.n, out)

    def principal_symbol(self, r: int) -> PhaseFunction:
        """Degree-``r`` symbol ``sum_{|alpha|=r} a_alpha xi^alpha``; needs order <= r."""
        if self.order() > r:
            raise NotNaturalError(f"operator of order {self.order()} has no {r}-symbol")
        n = self.n
        out = {}
        for alpha, a in self.terms.items():
            if sum(alpha) == r:
                for e, c in a.terms.items():
                    out[e + alpha] = c
        return PhaseFunction(n, r, out)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        parts = []
        for alpha in sorted(self.terms, key=lambda a: (sum(a), tuple(-i for i in a))):
            a = self.terms[alpha]
            d = "*".join(
                f"d{i + 1}" if k == 1 else f"d{i + 1}^{k}" for i, k in enumerate(alpha) if k
            )
            coeff = str(a)
            if not d:
                parts.append(coeff)
            elif coeff == "1":
                parts.append(d)
            elif coeff == "-1":
                parts.append("-" + d)
            elif len(a.terms) == 1:
                parts.append(f"{coeff}*{d}")
            else:
                parts.append(f"({coeff})*{d}")
        return " + ".join(parts).replace("+ -", "- ")

    def __repr__(self) -> str:
        return f"DiffOp('{self}')"


def _compose_into(acc: _Acc, A: DiffOp, B: DiffOp, c) -> None:
    """``acc += c * (A o B)`` via the Leibniz rule."""
    for alpha, a in A.terms.items():
        below = list(mi_below(alpha))
        for beta, b in B.terms.items():
            for g in below:
                db = b.deriv(g)
                if not db.terms:
                    continue
                key = mi_add(mi_sub(alpha, g), beta)
                _acc_add(acc, key, a, db, c * mi_binom(alpha, g))


class FormalDiffOp:
    """``A_0 + nu A_1 + ... + nu^N A_N``, composition truncated mod nu^(N+1)."""

    __slots__ = ("n", "N", "levels")

    def __init__(self, levels: Sequence[DiffOp], N: int | None = None, n: int | None = None):
        levels = list(levels)
        if n is None:
            if not levels:
                raise ValueError("dimension required for an empty level list")
            n = levels[0].n
        if N is None:
            N = len(levels) - 1
        for lv in levels:
            if lv.n != n:
                raise DimensionError("levels of mixed dimension")
        levels = levels[: N + 1] + [DiffOp.zero(n)] * (N + 1 - len(levels))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "levels", tuple(levels))

    def __setattr__(self, key, value):
        raise AttributeError("FormalDiffOp is immutable")

    # constructors
    @classmethod
    def zero(cls, n: int, N: int) -> "FormalDiffOp":
        return cls([], N, n)

    @classmethod
    def identity(cls, n: int, N: int) -> "FormalDiffOp":
        return cls([DiffOp.identity(n)], N)

    @classmethod
    def const(cls, n: int, N: int, c: Scalar) -> "FormalDiffOp":
        return cls([DiffOp.mult(Polynomial.const(n, c))], N)

    @classmethod
    def mult(cls, f: NuSeries | Polynomial, N: int | None = None) -> "FormalDiffOp":
        """Multiplication operator by a (formal) function."""
        if isinstance(f, Polynomial):
            if N is None:
                raise ValueError("truncation required for a polynomial multiplier")
            f = NuSeries.from_poly(f, N)
        return cls([DiffOp.mult(c) for c in f.coeffs], f.N, f.n)

    @classmethod
    def from_terms(cls, n: int, N: int, terms: Iterable[tuple]) -> "FormalDiffOp":
        """Build from ``(nu_power, alpha, coefficient)`` triples; powers > N are dropped."""
        acc: Dict[int, DiffOp] = {}
        for r, alpha, coeff in terms:
            if r > N:
                continue
            if not isinstance(coeff, Polynomial):
                coeff = Polynomial.const(n, coeff)
            acc[r] = acc.get(r, DiffOp.zero(n)) + DiffOp.partial(n, alpha, coeff)
        return cls([acc.get(r, DiffOp.zero(n)) for r in range(N + 1)], N, n)

    # inspection
    def __getitem__(self, r: int) -> DiffOp:
        return self.levels[r]

    def is_zero(self) -> bool:
        return all(lv.is_zero() for lv in self.levels)

    def order_profile(self) -> list:
        return [lv.order() for lv in self.levels]

    def is_identity_mod_nu(self) -> bool:
        return self.levels[0] == DiffOp.identity(self.n)

    def vanishes_mod_nu(self, k: int) -> bool:
        """True iff the operator is ``0 mod nu^k``."""
        return all(lv.is_zero() for lv in self.levels[:k])

    def __eq__(self, other) -> bool:
        if isinstance(other, FormalDiffOp):
            return self.n == other.n and self.N == other.N and self.levels == other.levels
        return NotImplemented

    def __hash__(self):
        return hash((self.n, self.N, self.levels))

    def truncate(self, N: int) -> "FormalDiffOp":
        if N > self.N:
            raise ValueError(f"cannot raise truncation from {self.N} to {N}")
        return FormalDiffOp(self.levels[: N + 1], N, self.n)

    # linear structure
    def _same(self, other: "FormalDiffOp") -> None:
        if not isinstance(other, FormalDiffOp):
            raise TypeError("expected a FormalDiffOp")
        if other.n != self.n:
            raise DimensionError("dimension mismatch")
        if other.N != self.N:
            raise ValueError(f"truncation mismatch: {self.N} vs {other.N}")

    def __add__(self, other: "FormalDiffOp") -> "FormalDiffOp":
        self._same(other)
        return FormalDiffOp([a + b for a, b in zip(self.levels, other.levels)], self.N, self.n)

    def __neg__(self) -> "FormalDiffOp":
        return FormalDiffOp([-a for a in self.levels], self.N, self.n)

    def __sub__(self, other: "FormalDiffOp") -> "FormalDiffOp":
        return self + (-other)

    def scale(self, c: Scalar) -> "FormalDiffOp":
        return FormalDiffOp([a.scale(c) for a in self.levels], self.N, self.n)

    def shift(self, k: int) -> "FormalDiffOp":
        """Multiply by ``nu^k``."""
        return FormalDiffOp([DiffOp.zero(self.n)] * k + list(self.levels), self.N, self.n)

    def divide_nu(self) -> "FormalDiffOp":
        """Exact division by nu; the result is known one order less precisely."""
        if not self.levels[0].is_zero():
            raise NuDivisionError(f"nu^0 coefficient is nonzero: {self.levels[0]}")
        if self.N == 0:
            raise NuDivisionError("nothing left after dividing a nu^0-truncated operator")
        return FormalDiffOp(self.levels[1:], self.N - 1, self.n)

    # products
    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if isinstance(other, FormalDiffOp):
            return compose(self, other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int) -> "FormalDiffOp":
        out = FormalDiffOp.identity(self.n, self.N)
        for _ in range(k):
            out = out * self
        return out

    def __call__(self, f):
        return apply(self, f)

    def __str__(self) -> str:
        parts = []
        for r, lv in enumerate(self.levels):
            if lv.is_zero():
                continue
            nu = "" if r == 0 else ("nu" if r == 1 else f"nu^{r}")
            parts.append(str(lv) if not nu else f"{nu}*[{lv}]")
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"FormalDiffOp('{self}', N={self.N})"


# -- operations ---------------------------------------------------------------

def apply(A: FormalDiffOp, f: NuSeries | Polynomial) -> NuSeries:
    """``A f`` modulo nu^(N+1)."""
    if isinstance(f, Polynomial):
        f = NuSeries.from_poly(f, A.N)
    if f.n != A.n:
        raise DimensionError("dimension mismatch")
    N = min(A.N, f.N)
    out = [Polynomial.zero(A.n) for _ in range(N + 1)]
    for r in range(N + 1):
        lv = A.levels[r]
        if lv.is_zero():
            continue
        for s in range(N + 1 - r):
            if f.coeffs[s].terms:
                out[r + s] = out[r + s] + lv.apply(f.coeffs[s])
    return NuSeries(out, N)


def compose(A: FormalDiffOp, B: FormalDiffOp) -> FormalDiffOp:
    A._same(B)
    n, N = A.n, A.N
    accs = [dict() for _ in range(N + 1)]
    for i, a in enumerate(A.levels):
        if a.is_zero():
            continue
        for j in range(N + 1 - i):
            b = B.levels[j]
            if b.terms:
                _compose_into(accs[i + j], a, b, 1)
    return FormalDiffOp([_acc_finish(n, acc) for acc in accs], N, n)


def commutator(A: FormalDiffOp, B: FormalDiffOp) -> FormalDiffOp:
    return A * B - B * A


def commutator_over_nu(A: FormalDiffOp, B: FormalDiffOp) -> FormalDiffOp:
    """``(1/nu)[A, B]``, truncated one order lower than the inputs.

    Raises :class:`NuDivisionError` when ``[A, B]`` has a nonzero nu^0 term,
    which cannot happen for natural ``A`` and ``B``.
    """
    return commutator(A, B).divide_nu()


def naturality_violation(A: FormalDiffOp) -> int | None:
    """First level ``r`` with ``order(A_r) > r``, or ``None``."""
    for r, lv in enumerate(A.levels):
        if lv.order() > r:
            return r
    return None


def is_natural(A: FormalDiffOp) -> bool:
    return naturality_violation(A) is None


def sigma(A: FormalDiffOp) -> PhaseFunction:
    """The sigma-symbol ``sum_r Symb_r(A_r)`` of a natural operator."""
    bad = naturality_violation(A)
    if bad is not None:
        raise NotNaturalError(
            f"level nu^{bad} has order {A.levels[bad].order()} > {bad}"
        )
    n = A.n
    out: Dict[MultiIndex, Fraction] = {}
    for r, lv in enumerate(A.levels):
        for alpha, a in lv.terms.items():
            if sum(alpha) == r:
                for e, c in a.terms.items():
                    out[e + alpha] = c
    return PhaseFunction(n, A.N, out)


# -- densities and transposition ---------------------------------------------

class LogDensity:
    """The formal density ``exp(phi) dx`` with ``phi`` a nu-series of polynomials."""

    __slots__ = ("phi", "_conj")

    def __init__(self, phi: NuSeries):
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "_conj", {})

    def __setattr__(self, key, value):
        raise AttributeError("LogDensity is immutable")

    @classmethod
    def lebesgue(cls, n: int, N: int) -> "LogDensity":
        return cls(NuSeries.zero(n, N))

    @classmethod
    def from_poly(cls, phi0: Polynomial, N: int) -> "LogDensity":
        return cls(NuSeries.from_poly(phi0, N))

    @property
    def n(self) -> int:
        return self.phi.n

    @property
    def N(self) -> int:
        return self.phi.N

    def __eq__(self, other):
        if isinstance(other, LogDensity):
            return self.phi == other.phi
        return NotImplemented

    def __hash__(self):
        return hash(self.phi)

    def __str__(self) -> str:
        return f"exp({self.phi}) dx"

    def __repr__(self) -> str:
        return f"LogDensity({self.phi!r})"

    def conjugated_unit(self, gamma: MultiIndex) -> NuSeries:
        """``exp(-phi) d^gamma exp(phi)``, i.e. ``D^gamma 1`` with ``D_i = d_i + d_i phi``."""
        cache = self._conj
        gamma = tuple(gamma)
        hit = cache.get(gamma)
        if hit is not None:
            return hit
        if not any(gamma):
            val = NuSeries.const(self.n, self.N, 1)
        else:
            i = next(k for k, g in enumerate(gamma) if g)
            prev = self.conjugated_unit(mi_sub(gamma, mi_unit(self.n, i)))
            val = prev.diff(i) + self.phi.diff(i) * prev
        cache[gamma] = val
        return val

    def conjugated_derivative(self, alpha: MultiIndex) -> FormalDiffOp:
        """The operator ``D^alpha = exp(-phi) d^alpha exp(phi)``."""
        n, N = self.n, self.N
        terms = []
        for g in mi_below(alpha):
            P = self.conjugated_unit(g)
            c = mi_binom(alpha, g)
            for s, p in enumerate(P.coeffs):
                if p.terms:
                    terms.append((s, mi_sub(alpha, g), p.scale(c)))
        return FormalDiffOp.from_terms(n, N, terms)


def transpose(A: FormalDiffOp, rho: LogDensity) -> FormalDiffOp:
    """Formal transpose with respect to ``(u, v) -> integral of u v rho``.

    Integration by parts against ``exp(phi)`` turns ``a d^alpha`` into
    ``(-1)^|alpha| D^alpha o a`` with ``D_i = d_i + d_i phi``; the conjugated
    derivatives commute, and the Leibniz expansion is done in one pass.
    """
    if rho.n != A.n:
        raise DimensionError("dimension mismatch")
    if rho.N < A.N:
        raise ValueError("density known to lower nu-order than the operator")
    n, N = A.n, A.N
    accs = [dict() for _ in range(N + 1)]
    for r, lv in enumerate(A.levels):
        for alpha, a in lv.terms.items():
            sign = -1 if sum(alpha) % 2 else 1
            fa = mi_factorial(alpha)
            for g in mi_below(alpha):
                P = rho.conjugated_unit(g)
                rest = mi_sub(alpha, g)
                fg = mi_factorial(g)
                for d in mi_below(rest):
                    da = a.deriv(d)
                    if not da.terms:
                        continue
                    eps = mi_sub(rest, d)
                    c = Fraction(sign * fa, fg * mi_factorial(d) * mi_factorial(eps))
                    for s in range(N + 1 - r):
                        p = P.coeffs[s]
                        if p.terms:
                            _acc_add(accs[r + s], eps, p, da, c)
    return FormalDiffOp([_acc_finish(n, acc) for acc in accs], N, n)


# -- inversion, logarithm and exponential --------------------------------------

def op_invert(A: FormalDiffOp) -> FormalDiffOp:
    """Two-sided inverse of ``A`` when ``A_0`` is a nonzero constant."""
    a0 = A.levels[0]
    zero_idx = (0,) * A.n
    if set(a0.terms) != {zero_idx} or not a0.terms[zero_idx].is_constant():
        raise NotInvertibleError(f"nu^0 term {a0} is not a nonzero constant")
    inv0 = 1 / a0.terms[zero_idx].constant_term()
    n, N = A.n, A.N
    out = [DiffOp.identity(n).scale(inv0)]
    for k in range(1, N + 1):
        acc: _Acc = {}
        for i in range(1, k + 1):
            if A.levels[i].terms and out[k - i].terms:
                _compose_into(acc, A.levels[i], out[k - i], -inv0)
        out.append(_acc_finish(n, acc))
    return FormalDiffOp(out, N, n)


def op_log(A: FormalDiffOp) -> FormalDiffOp:
    """``X = nu * log(A)`` for ``A = 1 mod nu``.

    ``log A`` is known modulo nu^(N+1), so ``X`` is returned with truncation
    ``N + 1``; ``op_exp`` consumes that extra order.
    """
    if not A.is_identity_mod_nu():
        raise ValueError(f"op_log needs A = 1 mod nu, got nu^0 term {A.levels[0]}")
    n, N = A.n, A.N
    Y = A - FormalDiffOp.identity(n, N)
    log = FormalDiffOp.zero(n, N)
    power = FormalDiffOp.identity(n, N)
    for k in range(1, N + 1):
        power = power * Y
        if power.is_zero():
            break
        log = log + power.scale(Fraction((-1) ** (k + 1), k))
    return FormalDiffOp([DiffOp.zero(n)] + list(log.levels), N + 1, n)


def op_exp(X: FormalDiffOp, strict: bool = True, max_terms: int = 64) -> FormalDiffOp:
    """``exp(X / nu)``, returned with truncation ``X.N - 1``.

    ``strict`` demands ``X = 0 mod nu^2`` so the series is nu-adically finite.
    With ``strict=False`` a nonzero ``nu^1`` part is allowed as long as the
    powers of ``X / nu`` eventually vanish.
    """
    if not X.levels[0].is_zero():
        raise ValueError("op_exp needs X = 0 mod nu")
    Y = X.divide_nu()
    if strict and not Y.levels[0].is_zero():
        raise ValueError("op_exp needs X = 0 mod nu^2 (pass strict=False to relax)")
    n, N = Y.n, Y.N
    out = FormalDiffOp.identity(n, N)
    power = FormalDiffOp.identity(n, N)
    for k in range(1, max_terms + 1):
        power = (power * Y).scale(Fraction(1, k))
        if power.is_zero():
            return out
        out = out + power
    raise ArithmeticError("exponential series did not terminate")


# -- random natural operators ----------------------------------------------------

def random_polynomial(
    rng: random.Random, n: int, max_degree: int = 2, nterms: int = 3, bound: int = 3
) -> Polynomial:
    terms = {}
    for _ in range(nterms):
        d = rng.randint(0, max_degree)
        e = [0] * n
        for _ in range(d):
            e[rng.randrange(n)] += 1
        terms[tuple(e)] = Fraction(rng.randint(-bound, bound), rng.randint(1, 2))
    return Polynomial(n, terms)


def random_natural(
    rng: random.Random,
    n: int,
    N: int,
    start: int = 0,
    terms_per_level: int = 2,
    max_coeff_degree: int = 2,
) -> FormalDiffOp:
    """A random natural operator, zero below ``nu^start``."""
    triples = []
    for r in range(start, N + 1):
        for _ in range(terms_per_level):
            k = rng.randint(0, r)
            alpha = [0] * n
            for _ in range(k):
                alpha[rng.randrange(n)] += 1
            triples.append(
                (r, tuple(alpha), random_polynomial(rng, n, max_coeff_degree))
            )
    return FormalDiffOp.from_terms(n, N, triples)


def random_series(rng: random.Random, n: int, N: int, max_degree: int = 3) -> NuSeries:
    return NuSeries([random_polynomial(rng, n, max_degree) for _ in range(N + 1)], N)
