"""Independent reference computations written directly in sympy.

Nothing here calls the engine's arithmetic: star products, operators and
integrals are evaluated from their defining formulas.
"""
from __future__ import annotations

import itertools
from math import factorial

import sympy

NU = sympy.Symbol("nu")


def xs(n):
    return sympy.symbols(f"x1:{n + 1}")


def poly_to_sympy(p, n=None):
    v = xs(p.n if n is None else n)
    return sympy.Add(*[
        sympy.Rational(c.numerator, c.denominator) * sympy.Mul(*[x**e for x, e in zip(v, exps)])
        for exps, c in p.terms.items()
    ])


def series_to_sympy(s):
    return sympy.expand(sum(NU**k * poly_to_sympy(c, s.n) for k, c in enumerate(s.coeffs)))


def op_to_callable(A):
    """A formal operator as a function on sympy expressions."""
    v = xs(A.n)

    def run(f):
        out = 0
        for r, lv in enumerate(A.levels):
            for alpha, c in lv.terms.items():
                d = f
                for x, k in zip(v, alpha):
                    if k:
                        d = sympy.diff(d, x, k)
                out += NU**r * poly_to_sympy(c, A.n) * d
        return truncate(out, A.N)

    return run


def truncate(expr, N):
    expr = sympy.expand(expr)
    return sum(expr.coeff(NU, k) * NU**k for k in range(N + 1))


def moyal(f, g, pi, N):
    """Moyal product from ``C_r = (Pi^{ij} d_i (x) d_j)^r / (2^r r!)``."""
    n = len(pi)
    v = xs(n)
    total = f * g
    pairs = [(f, g)]
    for r in range(1, N + 1):
        nxt = []
        for a, b in pairs:
            for i, j in itertools.product(range(n), repeat=2):
                if pi[i][j]:
                    nxt.append((sympy.Rational(pi[i][j]) * sympy.diff(a, v[i]), sympy.diff(b, v[j])))
        pairs = nxt
        total += NU**r * sympy.Rational(1, 2**r * factorial(r)) * sum(a * b for a, b in pairs)
    return truncate(total, N)


def exp_operator(gen, f, N):
    """``sum_k gen^k f / k!`` for a nilpotent-in-nu generator."""
    out, term = f, f
    for k in range(1, N + 1):
        term = truncate(gen(term), N) / k
        if term == 0:
            break
        out += term
    return truncate(out, N)


def gaussian_integral(expr, n):
    """``integral expr * exp(-|x|^2) dx / pi^(n/2)`` for ``expr`` polynomial in x and nu."""
    v = xs(n)
    poly = sympy.Poly(sympy.expand(expr), *v)
    total = 0
    for monom, c in poly.terms():
        w = sympy.Integer(1)
        for k in monom:
            if k % 2:
                w = 0
                break
            w *= sympy.Rational(sympy.factorial2(k - 1), 2 ** (k // 2))
        total += c * w
    return sympy.expand(total)
