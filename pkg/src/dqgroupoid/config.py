"""Scenario configuration files (JSON) and the objects they describe."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, List, Optional

import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .algebra import NuSeries, Polynomial
from .diffop import FormalDiffOp, LogDensity, op_exp, op_invert
from .starprod import (
    PoissonStructure,
    StarProduct,
    assoc_verify,
    axioms_verify,
    conjugate_star,
    gauge_twist,
    moyal_star,
    natural_verify,
)


class ConfigError(ValueError):
    """Malformed configuration (bad JSON, missing field, unparsable polynomial)."""


class GateError(RuntimeError):
    """A user-supplied star product failed an admission check."""

    def __init__(self, gate: str, witness: str):
        super().__init__(f"{gate} gate failed: {witness}")
        self.gate = gate
        self.witness = witness


_TRANSFORMS = standard_transformations + (convert_xor,)


def parse_nu_polynomial(text: Any, n: int, where: str = "") -> dict:
    """Parse ``text`` into ``{nu_power: Polynomial}``; variables ``x1..xn`` and ``nu``."""
    xs = sympy.symbols(f"x1:{n + 1}")
    nu = sympy.Symbol("nu")
    local = {str(s): s for s in xs}
    local["nu"] = nu
    try:
        expr = parse_expr(str(text), local_dict=local, transformations=_TRANSFORMS)
    except Exception as exc:  # sympy raises a zoo of types here
        raise ConfigError(f"{where}: cannot parse {text!r}: {exc}") from None
    extra = expr.free_symbols - set(xs) - {nu}
    if extra:
        raise ConfigError(f"{where}: unknown symbols {sorted(map(str, extra))} in {text!r}")
    try:
        poly = sympy.Poly(expr, *xs, nu)
    except sympy.PolynomialError:
        raise ConfigError(f"{where}: {text!r} is not a polynomial") from None
    out: dict = {}
    for monom, coeff in poly.terms():
        if not coeff.is_Rational:
            raise ConfigError(f"{where}: coefficient {coeff} is not rational")
        k = monom[n]
        terms = out.setdefault(k, {})
        terms[tuple(monom[:n])] = Fraction(int(coeff.p), int(coeff.q))
    return {k: Polynomial(n, t) for k, t in out.items()}


def parse_series(text: Any, n: int, N: int, where: str = "") -> NuSeries:
    parts = parse_nu_polynomial(text, n, where)
    coeffs = [parts.get(k, Polynomial.zero(n)) for k in range(N + 1)]
    return NuSeries(coeffs, N)


def parse_rational(text: Any, where: str = "") -> Fraction:
    try:
        return Fraction(str(text))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{where}: {text!r} is not a rational 'p/q'") from None


def _multi_index(value: Any, n: int, where: str) -> tuple:
    if not isinstance(value, list) or len(value) != n or not all(
        isinstance(v, int) and v >= 0 for v in value
    ):
        raise ConfigError(f"{where}: expected a list of {n} non-negative integers, got {value!r}")
    return tuple(value)


@dataclass
class ScenarioConfig:
    name: str
    dimension: int
    truncation: int
    poisson: List[List[Fraction]]
    density_log: str = "0"
    density2: Optional[str] = None
    density_factor: Optional[str] = None
    casimir_factor: Optional[str] = None
    gauge_twist: Optional[list] = None
    star_table: Optional[list] = None
    basis_degree: Optional[int] = None
    seed: int = 0
    samples: int = 3
    checks: Any = "all"
    raw: dict = field(default_factory=dict, repr=False)

    @property
    def degree(self) -> int:
        return self.basis_degree if self.basis_degree is not None else self.truncation + 1

    def echo(self) -> dict:
        return self.raw


_KNOWN = {
    "name", "dimension", "truncation", "poisson", "density_log", "density2",
    "density_factor", "casimir_factor", "gauge_twist", "star_table",
    "basis_degree", "seed", "samples", "checks", "description",
}


def config_from_dict(raw: dict, source: str = "<config>") -> ScenarioConfig:
    if not isinstance(raw, dict):
        raise ConfigError(f"{source}: top level must be an object")
    unknown = set(raw) - _KNOWN
    if unknown:
        raise ConfigError(f"{source}: unknown fields {sorted(unknown)}")
    for key in ("dimension", "truncation", "poisson"):
        if key not in raw:
            raise ConfigError(f"{source}: missing field '{key}'")
    n, N = raw["dimension"], raw["truncation"]
    if not isinstance(n, int) or n < 1:
        raise ConfigError(f"{source}: field 'dimension' must be a positive integer")
    if not isinstance(N, int) or N < 2:
        raise ConfigError(f"{source}: field 'truncation' must be an integer >= 2")
    pi = raw["poisson"]
    if not isinstance(pi, list) or len(pi) != n or any(
        not isinstance(row, list) or len(row) != n for row in pi
    ):
        raise ConfigError(f"{source}: field 'poisson' must be a {n}x{n} matrix")
    matrix = [
        [parse_rational(v, f"{source}: poisson[{i + 1}][{j + 1}]") for j, v in enumerate(row)]
        for i, row in enumerate(pi)
    ]
    d = raw.get("basis_degree")
    if d is not None and (not isinstance(d, int) or d < 1):
        raise ConfigError(f"{source}: field 'basis_degree' must be an integer >= 1")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int):
        raise ConfigError(f"{source}: field 'seed' must be an integer")
    checks = raw.get("checks", "all")
    if checks != "all" and not (
        isinstance(checks, list) and all(isinstance(c, str) for c in checks)
    ):
        raise ConfigError(f"{source}: field 'checks' must be \"all\" or a list of ids")
    return ScenarioConfig(
        name=str(raw.get("name", Path(source).stem)),
        dimension=n,
        truncation=N,
        poisson=matrix,
        density_log=raw.get("density_log", "0"),
        density2=raw.get("density2"),
        density_factor=raw.get("density_factor"),
        casimir_factor=raw.get("casimir_factor"),
        gauge_twist=raw.get("gauge_twist"),
        star_table=raw.get("star_table"),
        basis_degree=d,
        seed=seed,
        samples=int(raw.get("samples", 3)),
        checks=checks,
        raw=raw,
    )


def bundled_scenarios() -> list:
    root = resources.files("dqgroupoid") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".json"))


def load_config(path_or_name: str | Path) -> ScenarioConfig:
    """Load a config file, or a bundled scenario by name (e.g. ``moyal-r2``)."""
    path = Path(path_or_name)
    if path.exists():
        text, source = path.read_text(), str(path)
    else:
        res = resources.files("dqgroupoid") / "scenarios" / f"{path_or_name}.json"
        if not res.is_file():
            raise ConfigError(f"no such config file or bundled scenario: {path_or_name}")
        text, source = res.read_text(), f"{path_or_name}.json"
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(raw, source)


# -- building the objects ------------------------------------------------------------

def build_twist(rows: list, n: int, N: int) -> FormalDiffOp:
    """Twist generator ``X`` from rows ``{"coeff": "...nu...", "d": [...]}``, exact through nu^(N+1)."""
    triples = []
    for i, row in enumerate(rows):
        where = f"gauge_twist[{i}]"
        if not isinstance(row, dict) or "coeff" not in row or "d" not in row:
            raise ConfigError(f"{where}: expected an object with 'coeff' and 'd'")
        alpha = _multi_index(row["d"], n, where)
        shift = row.get("nu", 0)
        for k, p in parse_nu_polynomial(row["coeff"], n, where).items():
            triples.append((k + shift, alpha, p))
    return FormalDiffOp.from_terms(n, N + 1, triples)


def build_star_table(rows: list, pi: PoissonStructure, N: int) -> StarProduct:
    n = pi.n
    out = []
    for i, row in enumerate(rows):
        where = f"star_table[{i}]"
        if not isinstance(row, dict) or not {"coeff", "left", "right"} <= set(row):
            raise ConfigError(f"{where}: expected an object with 'coeff', 'left', 'right'")
        a = _multi_index(row["left"], n, where)
        b = _multi_index(row["right"], n, where)
        shift = row.get("nu", 0)
        for k, p in parse_nu_polynomial(row["coeff"], n, where).items():
            out.append((k + shift, a, b, p))
    return StarProduct.from_table(out, pi, N, label="user table")


def build_star(cfg: ScenarioConfig) -> StarProduct:
    """Moyal, a twist of Moyal, or a user table admitted through the gates."""
    pi = PoissonStructure(cfg.poisson)
    n, N = cfg.dimension, cfg.truncation
    if cfg.star_table is not None:
        star = build_star_table(cfg.star_table, pi, N)
        for gate, check in (
            ("axioms", axioms_verify),
            ("natural", natural_verify),
            ("associativity", lambda s: assoc_verify(s, cfg.degree)),
        ):
            outcome = check(star)
            if not outcome.ok:
                raise GateError(gate, outcome.witness)
    else:
        star = moyal_star(pi, N)
    if cfg.gauge_twist:
        star = gauge_twist(star, build_twist(cfg.gauge_twist, n, N))
    return star


def build_densities(cfg: ScenarioConfig) -> list:
    n, N = cfg.dimension, cfg.truncation
    out = [LogDensity(parse_series(cfg.density_log, n, N, "density_log"))]
    if cfg.density2 is not None:
        out.append(LogDensity(parse_series(cfg.density2, n, N, "density2")))
    return out


def twisted_table(star: StarProduct, X: FormalDiffOp, strict: bool = False) -> StarProduct:
    """Conjugate ``star`` by ``exp(X/nu)`` without naturality requirements.

    Used to manufacture associative but non-natural products for negative
    controls.
    """
    B = op_exp(X, strict=strict)
    return conjugate_star(star, B, op_invert(B))
