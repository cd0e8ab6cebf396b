"""Exact arithmetic: sparse multivariate polynomials over Q and nu-truncated series.

Variables are indexed from 0 internally; ``Polynomial.var(n, 0)`` is printed as
``x1``.  Coefficients are :class:`fractions.Fraction`, so every identity the
engine checks has an exactly-zero residual or a concrete nonzero witness.
"""
from __future__ import annotations

from fractions import Fraction
from itertools import product
from math import comb, factorial
from typing import Dict, Iterable, Iterator, Mapping, Sequence, Tuple, Union

Rational = Fraction
MultiIndex = Tuple[int, ...]
Scalar = Union[int, Fraction]


class DimensionError(ValueError):
    pass


class NotInvertibleError(ArithmeticError):
    pass


def as_rational(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, str)):
        return Fraction(c)
    raise TypeError(f"cannot use {type(c).__name__} as an exact coefficient")


# -- multi-index helpers ------------------------------------------------------

def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(i + j for i, j in zip(a, b))


def mi_sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(i - j for i, j in zip(a, b))


def mi_le(a: MultiIndex, b: MultiIndex) -> bool:
    return all(i <= j for i, j in zip(a, b))


def mi_binom(a: MultiIndex, b: MultiIndex) -> int:
    r = 1
    for i, j in zip(a, b):
        r *= comb(i, j)
    return r


def mi_factorial(a: MultiIndex) -> int:
    r = 1
    for i in a:
        r *= factorial(i)
    return r


def mi_below(a: MultiIndex) -> Iterator[MultiIndex]:
    """All multi-indices ``b <= a`` componentwise."""
    return product(*(range(i + 1) for i in a))


def mi_unit(n: int, i: int) -> MultiIndex:
    return tuple(1 if k == i else 0 for k in range(n))


def multi_indices(n: int, degree: int) -> Iterator[MultiIndex]:
    """Multi-indices of length ``n`` and total degree exactly ``degree``."""
    if n == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in multi_indices(n - 1, degree - first):
            yield (first,) + rest


def _falling(e: int, k: int) -> int:
    r = 1
    for j in range(k):
        r *= e - j
    return r


# -- polynomials --------------------------------------------------------------

class Polynomial:
    """Sparse polynomial in ``x1..xn`` with exact rational coefficients."""

    __slots__ = ("n", "terms", "_hash")

    def __init__(self, n: int, terms: Mapping[MultiIndex, Scalar] | None = None):
        if n < 1:
            raise DimensionError("dimension must be positive")
        clean: Dict[MultiIndex, Fraction] = {}
        if terms:
            for e, c in terms.items():
                if len(e) != n:
                    raise DimensionError(f"exponent {e} has length != {n}")
                c = as_rational(c)
                if c:
                    clean[tuple(e)] = c
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", clean)
        object.__setattr__(self, "_hash", None)

    @classmethod
    def _raw(cls, n: int, terms: Dict[MultiIndex, Fraction]) -> "Polynomial":
        # trusted constructor: terms already clean
        p = object.__new__(cls)
        object.__setattr__(p, "n", n)
        object.__setattr__(p, "terms", terms)
        object.__setattr__(p, "_hash", None)
        return p

    def __setattr__(self, key, value):
        raise AttributeError("Polynomial is immutable")

    # constructors
    @classmethod
    def zero(cls, n: int) -> "Polynomial":
        return cls._raw(n, {})

    @classmethod
    def const(cls, n: int, c: Scalar) -> "Polynomial":
        return cls(n, {(0,) * n: c})

    @classmethod
    def var(cls, n: int, i: int) -> "Polynomial":
        if not 0 <= i < n:
            raise IndexError(f"variable index {i} out of range for n={n}")
        return cls._raw(n, {mi_unit(n, i): Fraction(1)})

    @classmethod
    def monomial(cls, exps: Sequence[int], c: Scalar = 1) -> "Polynomial":
        return cls(len(exps), {tuple(exps): c})

    # inspection
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self) -> bool:
        return bool(self.terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(e) for e in self.terms), default=-1)

    def is_constant(self) -> bool:
        return all(not any(e) for e in self.terms)

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.n, Fraction(0))

    def __eq__(self, other) -> bool:
        if isinstance(other, Polynomial):
            return self.n == other.n and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self.terms == ({(0,) * self.n: Fraction(other)} if other else {})
        return NotImplemented

    def __hash__(self) -> int:
        h = self._hash
        if h is None:
            h = hash((self.n, frozenset(self.terms.items())))
            object.__setattr__(self, "_hash", h)
        return h

    # arithmetic
    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.n != self.n:
                raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")
            return other
        return Polynomial.const(self.n, as_rational(other))

    def __add__(self, other) -> "Polynomial":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        if not other.terms:
            return self
        out = dict(self.terms)
        for e, c in other.terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return Polynomial._raw(self.n, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.n, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "Polynomial":
        try:
            other = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def scale(self, c: Scalar) -> "Polynomial":
        c = as_rational(c)
        if not c:
            return Polynomial.zero(self.n)
        return Polynomial._raw(self.n, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        if other.n != self.n:
            raise DimensionError(f"dimension mismatch: {self.n} vs {other.n}")
        out: Dict[MultiIndex, Fraction] = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return Polynomial._raw(self.n, {e: c for e, c in out.items() if c})

    def __rmul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __pow__(self, k: int) -> "Polynomial":
        if not isinstance(k, int) or k < 0:
            raise ValueError("only non-negative integer powers")
        result = Polynomial.const(self.n, 1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    # calculus
    def diff(self, i: int) -> "Polynomial":
        """Partial derivative with respect to the variable of (0-based) index ``i``."""
        if not 0 <= i < self.n:
            raise IndexError(f"variable index {i} out of range for n={self.n}")
        out = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                out[tuple(f)] = c * e[i]
        return Polynomial._raw(self.n, out)

    def deriv(self, alpha: MultiIndex) -> "Polynomial":
        """Mixed partial derivative ``d^alpha``."""
        if not any(alpha):
            return self
        out = {}
        for e, c in self.terms.items():
            k = 1
            for ei, ai in zip(e, alpha):
                if ei < ai:
                    k = 0
                    break
                k *= _falling(ei, ai)
            if k:
                out[tuple(ei - ai for ei, ai in zip(e, alpha))] = c * k
        return Polynomial._raw(self.n, out)

    def __call__(self, *point: Scalar) -> Fraction:
        if len(point) != self.n:
            raise DimensionError("wrong number of coordinates")
        pt = [as_rational(v) for v in point]
        total = Fraction(0)
        for e, c in self.terms.items():
            t = c
            for v, k in zip(pt, e):
                t *= v ** k
            total += t
        return total

    # printing
    def __str__(self) -> str:
        return format_poly(self.terms, [f"x{i + 1}" for i in range(self.n)])

    def __repr__(self) -> str:
        return f"Polynomial({self.n}, '{self}')"


def format_poly(terms: Mapping[MultiIndex, Fraction], names: Sequence[str]) -> str:
    if not terms:
        return "0"
    parts = []
    for e in sorted(terms, key=lambda e: (-sum(e), tuple(-i for i in e))):
        c = terms[e]
        mono = "*".join(
            name if k == 1 else f"{name}^{k}" for name, k in zip(names, e) if k
        )
        mag = abs(c)
        if mono:
            body = mono if mag == 1 else f"{mag}*{mono}"
        else:
            body = str(mag)
        parts.append(("-" if c < 0 else "+", body))
    sign, body = parts[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def monomial_basis(n: int, max_degree: int) -> list[Polynomial]:
    """All monic monomials of total degree ``<= max_degree``, lowest degree first."""
    return [
        Polynomial.monomial(e)
        for d in range(max_degree + 1)
        for e in multi_indices(n, d)
    ]


# -- formal series in nu ------------------------------------------------------

class NuSeries:
    """``c_0 + nu c_1 + ... + nu^N c_N`` with polynomial coefficients, mod nu^(N+1)."""

    __slots__ = ("n", "N", "coeffs")

    def __init__(self, coeffs: Sequence[Polynomial], N: int | None = None):
        coeffs = list(coeffs)
        if not coeffs:
            raise ValueError("need at least one coefficient (use NuSeries.zero)")
        n = coeffs[0].n
        if N is None:
            N = len(coeffs) - 1
        if N < 0:
            raise ValueError("truncation order must be non-negative")
        for c in coeffs:
            if c.n != n:
                raise DimensionError("coefficients of mixed dimension")
        coeffs = coeffs[: N + 1] + [Polynomial.zero(n)] * (N + 1 - len(coeffs))
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "coeffs", tuple(coeffs))

    def __setattr__(self, key, value):
        raise AttributeError("NuSeries is immutable")

    @classmethod
    def zero(cls, n: int, N: int) -> "NuSeries":
        return cls([Polynomial.zero(n)], N)

    @classmethod
    def const(cls, n: int, N: int, c: Scalar) -> "NuSeries":
        return cls([Polynomial.const(n, c)], N)

    @classmethod
    def from_poly(cls, p: Polynomial, N: int) -> "NuSeries":
        return cls([p], N)

    @classmethod
    def nu(cls, n: int, N: int) -> "NuSeries":
        return cls([Polynomial.zero(n), Polynomial.const(n, 1)], N)

    def __getitem__(self, r: int) -> Polynomial:
        return self.coeffs[r]

    def __iter__(self):
        return iter(self.coeffs)

    def truncate(self, N: int) -> "NuSeries":
        if N > self.N:
            raise ValueError(f"cannot raise truncation from {self.N} to {N}")
        return NuSeries(self.coeffs[: N + 1], N)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, NuSeries):
            return self.n == other.n and self.N == other.N and self.coeffs == other.coeffs
        return NotImplemented

    def __hash__(self) -> int:
        return hash((self.N, self.coeffs))

    def _coerce(self, other) -> "NuSeries":
        if isinstance(other, NuSeries):
            if other.n != self.n:
                raise DimensionError("dimension mismatch")
            if other.N != self.N:
                raise ValueError(f"truncation mismatch: {self.N} vs {other.N}")
            return other
        if isinstance(other, Polynomial):
            return NuSeries.from_poly(other, self.N)
        return NuSeries.const(self.n, self.N, as_rational(other))

    def __add__(self, other) -> "NuSeries":
        other = self._coerce(other)
        return NuSeries([a + b for a, b in zip(self.coeffs, other.coeffs)], self.N)

    __radd__ = __add__

    def __neg__(self) -> "NuSeries":
        return NuSeries([-a for a in self.coeffs], self.N)

    def __sub__(self, other) -> "NuSeries":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "NuSeries":
        return (-self) + other

    def __mul__(self, other) -> "NuSeries":
        if isinstance(other, (int, Fraction)):
            return NuSeries([a.scale(other) for a in self.coeffs], self.N)
        other = self._coerce(other)
        N = self.N
        out = [Polynomial.zero(self.n) for _ in range(N + 1)]
        for i, a in enumerate(self.coeffs):
            if a.is_zero():
                continue
            for j in range(N + 1 - i):
                b = other.coeffs[j]
                if b.terms:
                    out[i + j] = out[i + j] + a * b
        return NuSeries(out, N)

    __rmul__ = __mul__

    def shift(self, k: int) -> "NuSeries":
        """Multiply by ``nu^k`` (k >= 0), keeping the truncation."""
        if k < 0:
            raise ValueError("use divide_nu for negative shifts")
        zeros = [Polynomial.zero(self.n)] * k
        return NuSeries(zeros + list(self.coeffs), self.N)

    def diff(self, i: int) -> "NuSeries":
        return NuSeries([c.diff(i) for c in self.coeffs], self.N)

    def invert(self) -> "NuSeries":
        return series_invert(self)

    def log(self) -> "NuSeries":
        return series_log(self)

    def __str__(self) -> str:
        parts = []
        for r, c in enumerate(self.coeffs):
            if c.is_zero():
                continue
            nu = "" if r == 0 else ("nu" if r == 1 else f"nu^{r}")
            if not nu:
                parts.append(str(c))
            elif len(c.terms) == 1 and c == 1:
                parts.append(nu)
            else:
                parts.append(f"{nu}*({c})")
        return " + ".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"NuSeries('{self}', N={self.N})"


def poly_mul(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def poly_diff(p: Polynomial, i: int) -> Polynomial:
    return p.diff(i)


def series_invert(s: NuSeries) -> NuSeries:
    """Inverse of a series whose nu^0 coefficient is a nonzero constant."""
    c0 = s.coeffs[0]
    if not c0.is_constant() or c0.is_zero():
        raise NotInvertibleError(
            "only series with a nonzero constant nu^0 term are invertible here"
        )
    inv0 = 1 / c0.constant_term()
    n, N = s.n, s.N
    out = [Polynomial.const(n, inv0)]
    for k in range(1, N + 1):
        acc = Polynomial.zero(n)
        for i in range(1, k + 1):
            if s.coeffs[i].terms:
                acc = acc + s.coeffs[i] * out[k - i]
        out.append(acc.scale(-inv0))
    return NuSeries(out, N)


def series_log(s: NuSeries) -> NuSeries:
    """``log(s / c)`` where ``c`` is the constant nu^0 term of ``s``.

    The additive constant ``log c`` is dropped: it is irrational in general and
    only ever shifts a density by a constant factor.
    """
    c0 = s.coeffs[0]
    if not c0.is_constant() or c0.is_zero():
        raise NotInvertibleError("logarithm needs a nonzero constant nu^0 term")
    w = s * (1 / c0.constant_term()) - 1
    out = NuSeries.zero(s.n, s.N)
    power = NuSeries.const(s.n, s.N, 1)
    for k in range(1, s.N + 1):
        power = power * w
        if power.is_zero():
            break
        out = out + power * Fraction((-1) ** (k + 1), k)
    return out
