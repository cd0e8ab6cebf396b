"""Star products as tables of bidifferential operators."""
from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Dict, Iterable, Mapping, Sequence, Tuple

from .algebra import (
    DimensionError,
    MultiIndex,
    NuSeries,
    Polynomial,
    Scalar,
    as_rational,
    mi_add,
    mi_below,
    mi_factorial,
    mi_sub,
    mi_unit,
    monomial_basis,
)
from .diffop import (
    DiffOp,
    FormalDiffOp,
    NotNaturalError,
    _acc_add,
    _acc_finish,
    apply,
    commutator,
    is_natural,
    naturality_violation,
    op_exp,
)
from .outcome import Outcome

BiIndex = Tuple[MultiIndex, MultiIndex]


class InvariantError(ValueError):
    """Input violates a structural invariant (e.g. a non-antisymmetric bivector)."""


class PoissonStructure:
    """Constant Poisson bivector ``{f, g} = Pi^{ij} d_i f d_j g`` (possibly degenerate)."""

    __slots__ = ("matrix",)

    def __init__(self, matrix: Sequence[Sequence[Scalar]]):
        m = tuple(tuple(as_rational(v) for v in row) for row in matrix)
        n = len(m)
        if n == 0 or any(len(row) != n for row in m):
            raise InvariantError("Poisson matrix must be square and non-empty")
        for i in range(n):
            for j in range(n):
                if m[i][j] != -m[j][i]:
                    raise InvariantError(
                        f"Poisson matrix is not antisymmetric at ({i + 1},{j + 1})"
                    )
        object.__setattr__(self, "matrix", m)

    def __setattr__(self, key, value):
        raise AttributeError("PoissonStructure is immutable")

    @classmethod
    def symplectic(cls, pairs: int) -> "PoissonStructure":
        """Standard ``{x_i, x_{i+pairs}} = 1`` structure on R^(2 pairs)."""
        n = 2 * pairs
        m = [[0] * n for _ in range(n)]
        for i in range(pairs):
            m[i][i + pairs] = 1
            m[i + pairs][i] = -1
        return cls(m)

    @classmethod
    def zero(cls, n: int) -> "PoissonStructure":
        return cls([[0] * n for _ in range(n)])

    @property
    def n(self) -> int:
        return len(self.matrix)

    def rank(self) -> int:
        from sympy import Matrix

        return Matrix(self.matrix).rank()

    def __getitem__(self, ij):
        i, j = ij
        return self.matrix[i][j]

    def __eq__(self, other):
        return isinstance(other, PoissonStructure) and self.matrix == other.matrix

    def __hash__(self):
        return hash(self.matrix)

    def bracket(self, f: Polynomial, g: Polynomial) -> Polynomial:
        out = Polynomial.zero(self.n)
        dg = [g.diff(j) for j in range(self.n)]
        for i in range(self.n):
            dfi = f.diff(i)
            if dfi.is_zero():
                continue
            for j in range(self.n):
                if self.matrix[i][j]:
                    out = out + (dfi * dg[j]).scale(self.matrix[i][j])
        return out

    def hamiltonian_components(self, f: Polynomial) -> list:
        """Components ``(H_f)^j = Pi^{kj} d_k f`` of ``H_f g = {f, g}``."""
        n = self.n
        out = []
        for j in range(n):
            c = Polynomial.zero(n)
            for k in range(n):
                if self.matrix[k][j]:
                    c = c + f.diff(k).scale(self.matrix[k][j])
            out.append(c)
        return out


class BiDiffOp:
    """``C(f, g) = sum c_{alpha beta}(x) d^alpha f d^beta g``."""

    __slots__ = ("n", "terms")

    def __init__(self, n: int, terms: Mapping[BiIndex, Polynomial] | None = None):
        clean = {}
        for (a, b), c in (terms or {}).items():
            if len(a) != n or len(b) != n or c.n != n:
                raise DimensionError("bidifferential term has the wrong dimension")
            if not c.is_zero():
                clean[(tuple(a), tuple(b))] = c
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, key, value):
        raise AttributeError("BiDiffOp is immutable")

    @classmethod
    def zero(cls, n: int) -> "BiDiffOp":
        return cls(n)

    @classmethod
    def pointwise(cls, n: int) -> "BiDiffOp":
        z = (0,) * n
        return cls(n, {(z, z): Polynomial.const(n, 1)})

    def left_order(self) -> int:
        return max((sum(a) for a, _ in self.terms), default=-1)

    def right_order(self) -> int:
        return max((sum(b) for _, b in self.terms), default=-1)

    def is_zero(self) -> bool:
        return not self.terms

    def swap(self) -> "BiDiffOp":
        """``(f, g) -> C(g, f)``."""
        return BiDiffOp(self.n, {(b, a): c for (a, b), c in self.terms.items()})

    def __add__(self, other: "BiDiffOp") -> "BiDiffOp":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out[k] + c if k in out else c
        return BiDiffOp(self.n, out)

    def __neg__(self) -> "BiDiffOp":
        return BiDiffOp(self.n, {k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "BiDiffOp") -> "BiDiffOp":
        return self + (-other)

    def scale(self, s: Scalar) -> "BiDiffOp":
        return BiDiffOp(self.n, {k: c.scale(s) for k, c in self.terms.items()})

    def __eq__(self, other):
        return isinstance(other, BiDiffOp) and self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, frozenset(self.terms.items())))

    def apply(self, f: Polynomial, g: Polynomial) -> Polynomial:
        out = Polynomial.zero(self.n)
        for (a, b), c in self.terms.items():
            da = f.deriv(a)
            if da.is_zero():
                continue
            db = g.deriv(b)
            if db.is_zero():
                continue
            out = out + c * da * db
        return out

    def __str__(self) -> str:
        if not self.terms:
            return "0"

        def d(alpha):
            s = "*".join(
                f"d{i + 1}" if k == 1 else f"d{i + 1}^{k}" for i, k in enumerate(alpha) if k
            )
            return s or "1"

        return " + ".join(
            f"({c})*{d(a)}(x){d(b)}" for (a, b), c in sorted(self.terms.items())
        )


def _finish_bi(n: int, acc) -> BiDiffOp:
    terms = {}
    for key, slot in acc.items():
        clean = {e: v for e, v in slot.items() if v}
        if clean:
            terms[key] = Polynomial._raw(n, clean)
    return BiDiffOp(n, terms)


class StarProduct:
    """``f * g = sum_r nu^r C_r(f, g)`` truncated at ``nu^N``."""

    __slots__ = ("levels", "poisson", "N", "label")

    def __init__(
        self,
        levels: Sequence[BiDiffOp],
        poisson: PoissonStructure,
        N: int | None = None,
        label: str = "",
    ):
        levels = list(levels)
        n = poisson.n
        if N is None:
            N = len(levels) - 1
        for lv in levels:
            if lv.n != n:
                raise DimensionError("star product levels must match the Poisson dimension")
        levels = levels[: N + 1] + [BiDiffOp.zero(n)] * (N + 1 - len(levels))
        object.__setattr__(self, "levels", tuple(levels))
        object.__setattr__(self, "poisson", poisson)
        object.__setattr__(self, "N", N)
        object.__setattr__(self, "label", label)

    def __setattr__(self, key, value):
        raise AttributeError("StarProduct is immutable")

    @property
    def n(self) -> int:
        return self.poisson.n

    def __getitem__(self, r: int) -> BiDiffOp:
        return self.levels[r]

    def __eq__(self, other):
        return (
            isinstance(other, StarProduct)
            and self.N == other.N
            and self.poisson == other.poisson
            and self.levels == other.levels
        )

    def __hash__(self):
        return hash((self.N, self.poisson, self.levels))

    def __call__(self, f, g) -> NuSeries:
        return star_apply(self, f, g)

    def to_table(self) -> list:
        """Serializable rows ``{nu, left, right, coeff}``."""
        rows = []
        for r, lv in enumerate(self.levels):
            for (a, b), c in sorted(lv.terms.items()):
                rows.append({"nu": r, "left": list(a), "right": list(b), "coeff": str(c)})
        return rows

    @classmethod
    def from_table(cls, rows: Iterable[tuple], poisson: PoissonStructure, N: int, label=""):
        """Build from ``(r, alpha, beta, coeff)`` rows; rows beyond ``N`` are dropped."""
        n = poisson.n
        levels = [dict() for _ in range(N + 1)]
        for r, a, b, c in rows:
            if r > N:
                continue
            if not isinstance(c, Polynomial):
                c = Polynomial.const(n, c)
            key = (tuple(a), tuple(b))
            levels[r][key] = levels[r][key] + c if key in levels[r] else c
        return cls([BiDiffOp(n, lv) for lv in levels], poisson, N, label)


# -- construction -------------------------------------------------------------

def moyal_star(pi: PoissonStructure, N: int) -> StarProduct:
    """Moyal product ``C_r = (1 / (2^r r!)) (Pi^{ij} d_i (x) d_j)^r``."""
    n = pi.n
    z = (0,) * n
    base = {
        (mi_unit(n, i), mi_unit(n, j)): pi[i, j]
        for i in range(n)
        for j in range(n)
        if pi[i, j]
    }
    power: Dict[BiIndex, Fraction] = {(z, z): Fraction(1)}
    levels = [BiDiffOp.pointwise(n)]
    for r in range(1, N + 1):
        nxt: Dict[BiIndex, Fraction] = {}
        for (a1, b1), c1 in power.items():
            for (a2, b2), c2 in base.items():
                key = (mi_add(a1, a2), mi_add(b1, b2))
                nxt[key] = nxt.get(key, 0) + c1 * c2
        power = {k: v for k, v in nxt.items() if v}
        norm = Fraction(1, 2 ** r * factorial(r))
        levels.append(
            BiDiffOp(n, {k: Polynomial.const(n, v * norm) for k, v in power.items()})
        )
    return StarProduct(levels, pi, N, label="moyal")


def conjugate_star(star: StarProduct, B: FormalDiffOp, B_inv: FormalDiffOp) -> StarProduct:
    """The equivalent product ``f *' g = B(B^{-1} f * B^{-1} g)``.

    Slot-wise precomposition with ``B^{-1}`` and outer application of ``B``
    are both expanded symbolically by the Leibniz rule.
    """
    n, N = star.n, star.N
    if B.N < N or B_inv.N < N:
        raise ValueError("equivalence operators known to lower order than the product")
    B, B_inv = B.truncate(N), B_inv.truncate(N)

    cache: Dict[tuple, DiffOp] = {}

    def d_then(alpha: MultiIndex, i: int) -> DiffOp:
        key = (alpha, i)
        if key not in cache:
            cache[key] = DiffOp.partial(n, alpha).compose(B_inv.levels[i])
        return cache[key]

    # inner[k] = sum_{r+i+j=k} C_r o (P_i (x) P_j)
    inner = [dict() for _ in range(N + 1)]
    for r, lv in enumerate(star.levels):
        for (a, b), c in lv.terms.items():
            for i in range(N + 1 - r):
                left = d_then(a, i)
                if left.is_zero():
                    continue
                for j in range(N + 1 - r - i):
                    right = d_then(b, j)
                    if right.is_zero():
                        continue
                    acc = inner[r + i + j]
                    for mu, e in left.terms.items():
                        ce = c * e
                        for kap, h in right.terms.items():
                            _acc_add(acc, (mu, kap), ce, h, 1)
    inner = [_finish_bi(n, acc) for acc in inner]

    # outer application of B: d^g (c F G) = sum multinomial d^g1 c d^g2 F d^g3 G
    out = [dict() for _ in range(N + 1)]
    for s, bl in enumerate(B.levels):
        for g, bg in bl.terms.items():
            fg = mi_factorial(g)
            splits = []
            for g1 in mi_below(g):
                rest = mi_sub(g, g1)
                for g2 in mi_below(rest):
                    g3 = mi_sub(rest, g2)
                    m = Fraction(fg, mi_factorial(g1) * mi_factorial(g2) * mi_factorial(g3))
                    splits.append((g1, g2, g3, m))
            for k in range(N + 1 - s):
                for (mu, kap), c in inner[k].terms.items():
                    for g1, g2, g3, m in splits:
                        dc = c.deriv(g1)
                        if dc.terms:
                            _acc_add(out[s + k], (mi_add(mu, g2), mi_add(kap, g3)), bg, dc, m)
    return StarProduct([_finish_bi(n, acc) for acc in out], star.poisson, N, star.label)


def gauge_twist(star: StarProduct, X: FormalDiffOp) -> StarProduct:
    """Twist by ``B = exp(X / nu)`` for natural ``X = 0 mod nu^2``.

    ``X`` must be known through ``nu^(N+1)`` because ``X / nu`` loses an order.
    """
    N = star.N
    if X.N < N + 1:
        raise ValueError(f"twist generator must be given through nu^{N + 1}")
    X = X.truncate(N + 1)
    bad = naturality_violation(X)
    if bad is not None:
        raise NotNaturalError(f"twist generator is not natural at nu^{bad}")
    if not X.vanishes_mod_nu(2):
        raise ValueError("twist generator must vanish mod nu^2")
    B = op_exp(X)
    one = NuSeries.const(star.n, N, 1)
    if apply(B, one) != one:
        raise InvariantError("twist does not fix the unit: exp(X/nu) 1 != 1")
    twisted = conjugate_star(star, B, op_exp(-X))
    return StarProduct(twisted.levels, star.poisson, N, label=f"twisted {star.label}".strip())


# -- products and multiplication operators ------------------------------------

def star_apply(star: StarProduct, f, g) -> NuSeries:
    n, N = star.n, star.N
    if isinstance(f, Polynomial):
        f = NuSeries.from_poly(f, N)
    if isinstance(g, Polynomial):
        g = NuSeries.from_poly(g, N)
    if f.n != n or g.n != n:
        raise DimensionError("dimension mismatch")
    N = min(N, f.N, g.N)
    out = [Polynomial.zero(n) for _ in range(N + 1)]
    for r in range(N + 1):
        C = star.levels[r]
        if C.is_zero():
            continue
        for s in range(N + 1 - r):
            if f.coeffs[s].is_zero():
                continue
            for t in range(N + 1 - r - s):
                if g.coeffs[t].terms:
                    out[r + s + t] = out[r + s + t] + C.apply(f.coeffs[s], g.coeffs[t])
    return NuSeries(out, N)


def side_op(star: StarProduct, f, side: str = "left") -> FormalDiffOp:
    """``L_f g = f * g`` (side="left") or ``R_f g = g * f`` (side="right")."""
    if side not in ("left", "right"):
        raise ValueError("side must be 'left' or 'right'")
    n, N = star.n, star.N
    if isinstance(f, Polynomial):
        f = NuSeries.from_poly(f, N)
    accs = [dict() for _ in range(N + 1)]
    for r, lv in enumerate(star.levels):
        for (a, b), c in lv.terms.items():
            hit, free = (a, b) if side == "left" else (b, a)
            for s in range(N + 1 - r):
                df = f.coeffs[s].deriv(hit)
                if df.terms:
                    _acc_add(accs[r + s], free, c, df, 1)
    return FormalDiffOp([_acc_finish(n, acc) for acc in accs], N, n)


def left_op(star: StarProduct, f) -> FormalDiffOp:
    return side_op(star, f, "left")


def right_op(star: StarProduct, f) -> FormalDiffOp:
    return side_op(star, f, "right")


# -- verifiers ----------------------------------------------------------------

def axioms_verify(star: StarProduct) -> Outcome:
    """``C_0 = fg``, antisymmetrized ``C_1`` is the bracket, and 1 is the unit."""
    n = star.n
    z = (0,) * n
    if star.levels[0] != BiDiffOp.pointwise(n):
        return Outcome.failed(f"C_0 = {star.levels[0]} is not the pointwise product")
    if star.N >= 1:
        pi = star.poisson
        target = BiDiffOp(
            n,
            {
                (mi_unit(n, i), mi_unit(n, j)): Polynomial.const(n, pi[i, j])
                for i in range(n)
                for j in range(n)
            },
        )
        diff = star.levels[1] - star.levels[1].swap() - target
        if not diff.is_zero():
            return Outcome.failed(f"C_1(f,g) - C_1(g,f) - {{f,g}} = {diff}")
    for r in range(1, star.N + 1):
        for (a, b), c in star.levels[r].terms.items():
            if a == z or b == z:
                return Outcome.failed(
                    f"unit axiom broken at nu^{r}: term ({c}) d^{list(a)} (x) d^{list(b)}"
                )
    return Outcome.passed()


def assoc_verify(star: StarProduct, degree: int | None = None) -> Outcome:
    """Associativity on the monomial basis of degree ``<= degree`` (default N+1).

    ``(f*g)*h - f*(g*h) = -[L_f, R_h] g``, so each pair ``(f, h)`` is settled
    for every ``g`` at once by one operator commutator; a failing pair is
    turned into a concrete witness triple.
    """
    n, N = star.n, star.N
    d = N + 1 if degree is None else degree
    basis = monomial_basis(n, d)
    L = [left_op(star, f) for f in basis]
    R = [right_op(star, h) for h in basis]
    for i, f in enumerate(basis):
        for k, h in enumerate(basis):
            comm = commutator(L[i], R[k])
            if comm.is_zero():
                continue
            reach = max(d, max(comm.order_profile()))
            for g in monomial_basis(n, reach):
                res = star_apply(star, star_apply(star, f, g), h) - star_apply(
                    star, f, star_apply(star, g, h)
                )
                if not res.is_zero():
                    return Outcome.failed(
                        f"f={f}, g={g}, h={h}: (f*g)*h - f*(g*h) = {res}"
                    )
    return Outcome.passed(f"monomial basis of degree <= {d} ({len(basis)} elements)")


def natural_verify(star: StarProduct, degree: int | None = None) -> Outcome:
    """Every ``C_r`` has order ``<= r`` in each slot; also checks ``L_f``, ``R_f``."""
    for r, lv in enumerate(star.levels):
        if lv.left_order() > r or lv.right_order() > r:
            return Outcome.failed(
                f"C_{r} has slot orders ({lv.left_order()}, {lv.right_order()}) > {r}"
            )
    d = star.N + 1 if degree is None else degree
    for f in monomial_basis(star.n, d):
        for side in ("left", "right"):
            op = side_op(star, f, side)
            bad = naturality_violation(op)
            if bad is not None:
                return Outcome.failed(f"{side} multiplication by {f} not natural at nu^{bad}")
    return Outcome.passed()


def one_sided_natural(star: StarProduct, degree: int | None = None, side: str = "left") -> bool:
    """All ``L_f`` (or ``R_f``) natural on the monomial basis."""
    d = star.N + 1 if degree is None else degree
    return all(is_natural(side_op(star, f, side)) for f in monomial_basis(star.n, d))
