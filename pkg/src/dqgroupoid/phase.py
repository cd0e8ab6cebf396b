"""Functions on the formal neighbourhood of the zero section of T*R^n.

A :class:`PhaseFunction` is a polynomial in ``(x, xi)`` kept modulo terms of
xi-degree greater than ``D``.  The ideal of functions vanishing to order ``k``
on the zero section is "minimum xi-degree >= k".
"""
from __future__ import annotations

from fractions import Fraction
from typing import Dict, Mapping

from .algebra import (
    DimensionError,
    MultiIndex,
    Polynomial,
    Scalar,
    as_rational,
    format_poly,
)


class PhaseFunction:
    __slots__ = ("n", "D", "terms")

    def __init__(self, n: int, D: int, terms: Mapping[MultiIndex, Scalar] | None = None):
        clean: Dict[MultiIndex, Fraction] = {}
        for e, c in (terms or {}).items():
            if len(e) != 2 * n:
                raise DimensionError(f"phase exponent {e} must have length {2 * n}")
            c = as_rational(c)
            if c and sum(e[n:]) <= D:
                clean[tuple(e)] = c
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "D", D)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, key, value):
        raise AttributeError("PhaseFunction is immutable")

    @classmethod
    def _raw(cls, n, D, terms):
        f = object.__new__(cls)
        object.__setattr__(f, "n", n)
        object.__setattr__(f, "D", D)
        object.__setattr__(f, "terms", terms)
        return f

    @classmethod
    def zero(cls, n: int, D: int) -> "PhaseFunction":
        return cls._raw(n, D, {})

    @classmethod
    def from_base(cls, p: Polynomial, D: int) -> "PhaseFunction":
        zeros = (0,) * p.n
        return cls._raw(p.n, D, {e + zeros: c for e, c in p.terms.items()})

    @classmethod
    def xi(cls, n: int, D: int, i: int) -> "PhaseFunction":
        e = [0] * (2 * n)
        e[n + i] = 1
        return cls(n, D, {tuple(e): 1})

    @classmethod
    def x(cls, n: int, D: int, i: int) -> "PhaseFunction":
        e = [0] * (2 * n)
        e[i] = 1
        return cls(n, D, {tuple(e): 1})

    # inspection
    def xi_degrees(self) -> set:
        return {sum(e[self.n:]) for e in self.terms}

    def min_xi_degree(self) -> int | None:
        """Vanishing order along the zero section; ``None`` for zero."""
        return min(self.xi_degrees(), default=None)

    def component(self, r: int) -> "PhaseFunction":
        n = self.n
        return PhaseFunction._raw(
            n, self.D, {e: c for e, c in self.terms.items() if sum(e[n:]) == r}
        )

    def components(self) -> list:
        return [self.component(r) for r in range(self.D + 1)]

    def truncate(self, D: int) -> "PhaseFunction":
        n = self.n
        return PhaseFunction._raw(
            n, D, {e: c for e, c in self.terms.items() if sum(e[n:]) <= D}
        )

    def is_zero(self) -> bool:
        return not self.terms

    def agrees_with(self, other: "PhaseFunction", degree: int) -> bool:
        """Equality of all components of xi-degree ``<= degree``."""
        return (self - other).truncate(degree).is_zero()

    def __eq__(self, other) -> bool:
        if isinstance(other, PhaseFunction):
            return self.n == other.n and self.D == other.D and self.terms == other.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.n, self.D, frozenset(self.terms.items())))

    # ring structure
    def _check(self, other: "PhaseFunction") -> int:
        if not isinstance(other, PhaseFunction):
            raise TypeError("expected a PhaseFunction")
        if other.n != self.n:
            raise DimensionError("dimension mismatch")
        return min(self.D, other.D)

    def __add__(self, other) -> "PhaseFunction":
        D = self._check(other)
        out = dict(self.truncate(D).terms)
        for e, c in other.truncate(D).terms.items():
            v = out.get(e, 0) + c
            if v:
                out[e] = v
            else:
                out.pop(e, None)
        return PhaseFunction._raw(self.n, D, out)

    def __neg__(self) -> "PhaseFunction":
        return PhaseFunction._raw(self.n, self.D, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other) -> "PhaseFunction":
        return self + (-other)

    def scale(self, c: Scalar) -> "PhaseFunction":
        c = as_rational(c)
        if not c:
            return PhaseFunction.zero(self.n, self.D)
        return PhaseFunction._raw(self.n, self.D, {e: c * v for e, v in self.terms.items()})

    def __mul__(self, other) -> "PhaseFunction":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        D = self._check(other)
        n = self.n
        out: Dict[MultiIndex, Fraction] = {}
        for e1, c1 in self.terms.items():
            d1 = sum(e1[n:])
            for e2, c2 in other.terms.items():
                if d1 + sum(e2[n:]) > D:
                    continue
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0) + c1 * c2
        return PhaseFunction._raw(n, D, {e: c for e, c in out.items() if c})

    __rmul__ = __mul__

    def _partial(self, k: int) -> "PhaseFunction":
        # k indexes the 2n coordinates (x then xi)
        out = {}
        for e, c in self.terms.items():
            if e[k]:
                f = list(e)
                f[k] -= 1
                out[tuple(f)] = c * e[k]
        return PhaseFunction._raw(self.n, self.D, out)

    def d_x(self, k: int) -> "PhaseFunction":
        return self._partial(k)

    def d_xi(self, k: int) -> "PhaseFunction":
        return self._partial(self.n + k)

    def __str__(self) -> str:
        names = [f"x{i + 1}" for i in range(self.n)] + [f"xi{i + 1}" for i in range(self.n)]
        return format_poly(self.terms, names)

    def __repr__(self) -> str:
        return f"PhaseFunction(n={self.n}, D={self.D}, '{self}')"


def tstar_bracket(F: PhaseFunction, G: PhaseFunction) -> PhaseFunction:
    """Canonical bracket ``sum_k dF/dxi_k dG/dx^k - dG/dxi_k dF/dx^k``."""
    F._check(G)
    D = min(F.D, G.D)
    out = PhaseFunction.zero(F.n, D)
    for k in range(F.n):
        a, b = F.d_xi(k), G.d_xi(k)
        if a.terms:
            out = out + a * G.d_x(k)
        if b.terms:
            out = out - b * F.d_x(k)
    return out


def epsilon_pullback(F: PhaseFunction) -> PhaseFunction:
    """Pullback by the fibrewise sign flip ``(x, xi) -> (x, -xi)``."""
    n = F.n
    return PhaseFunction._raw(
        n, F.D, {e: (-c if sum(e[n:]) % 2 else c) for e, c in F.terms.items()}
    )


def unit_restrict(F: PhaseFunction) -> Polynomial:
    """Restriction to the zero section, as a function on the base."""
    n = F.n
    return Polynomial(n, {e[:n]: c for e, c in F.terms.items() if not any(e[n:])})


def ham_flow(G: PhaseFunction, F: PhaseFunction, sign: int = 1) -> PhaseFunction:
    """``exp(sign * H_G) F`` where ``H_G F = {G, F}``.

    ``G`` must vanish to second order on the zero section; each application of
    ``H_G`` then raises the xi-degree by at least one, so the series is finite.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    low = G.min_xi_degree()
    if low is not None and low < 2:
        raise ValueError("flow generator must vanish to second order on the zero section")
    D = min(F.D, G.D)
    result = F.truncate(D)
    term = result
    k = 0
    while True:
        k += 1
        term = tstar_bracket(G, term).scale(Fraction(sign, k))
        if term.is_zero():
            return result
        result = result + term
