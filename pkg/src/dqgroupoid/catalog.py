"""The identity catalogue and the campaign runner.

Every check has a stable id, the label of the identity it certifies, and a
function ``(scenario, rng) -> Outcome``.  Density-dependent checks run once per
configured density; the first failing density wins.
"""
from __future__ import annotations

import os
import random
import threading
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from .algebra import NuSeries, Polynomial, monomial_basis
from .config import ScenarioConfig, build_densities, build_star, build_twist, parse_series
from .diffop import (
    FormalDiffOp,
    apply,
    naturality_violation,
    op_invert,
    random_natural,
    random_polynomial,
    sigma,
)
from .groupoid import (
    check_anti_poisson,
    check_commab,
    check_ik,
    check_involutive,
    check_natural_conjugation,
    check_reconstruction,
    check_rho_independence,
    check_sigma_conjugation,
    check_sigma_homomorphism,
    check_source_poisson,
    check_source_target_commute,
    check_swaps,
    check_symbaut,
    check_target_anti_poisson,
    check_uniqueness,
    check_unit,
    inverse_map,
    random_phase,
)
from .modular import (
    DensityFactor,
    ModularData,
    density_change_verify,
    is_casimir,
    j_apply_via_right,
    k_transform,
    ltransr_verify,
    modular_field_verify,
    tilde_star,
    trace_density_from_casimir,
    trace_test,
)
from .outcome import Outcome, first_failure
from .phase import epsilon_pullback
from .report import FAIL, PASS, SKIPPED, CheckRecord, VerificationReport
from .starprod import (
    assoc_verify,
    axioms_verify,
    left_op,
    natural_verify,
    right_op,
    star_apply,
)

THREADS_ENV = "DQGROUPOID_THREADS"


class Skip(Exception):
    """Raised by a check that does not apply to the scenario."""


class UnknownCheckError(KeyError):
    pass


class Scenario:
    """Everything built from a config, with lazily shared intermediate results."""

    def __init__(self, cfg: ScenarioConfig, seed: Optional[int] = None):
        self.cfg = cfg
        self.seed = cfg.seed if seed is None else seed
        self.star = build_star(cfg)
        self.rhos = build_densities(cfg)
        self.n, self.N = cfg.dimension, cfg.truncation
        self.degree = cfg.degree
        self.basis = monomial_basis(self.n, self.degree)
        self.samples = cfg.samples
        self._lock = threading.Lock()
        self._memo: Dict[object, object] = {}
        self._locks: Dict[object, threading.Lock] = {}

    def memo(self, key, fn):
        with self._lock:
            if key in self._memo:
                return self._memo[key]
            lock = self._locks.setdefault(key, threading.Lock())
        with lock:
            with self._lock:
                if key in self._memo:
                    return self._memo[key]
            value = fn()
            with self._lock:
                self._memo[key] = value
            return value

    def rng(self, tag: str) -> random.Random:
        return random.Random(self.seed * 1_000_003 + zlib.crc32(tag.encode()))

    def data(self, i: int) -> ModularData:
        return self.memo(("data", i), lambda: ModularData.build(self.star, self.rhos[i]))

    def inverse(self, i: int):
        return self.memo(("I", i), lambda: inverse_map(self.star, self.rhos[i], self.data(i)))

    def density_label(self, i: int) -> str:
        return f"phi={self.rhos[i].phi}"

    def factor(self) -> NuSeries:
        if self.cfg.density_factor is None:
            raise Skip("no density_factor configured")
        return parse_series(self.cfg.density_factor, self.n, self.N, "density_factor")

    def natural_ops(self, rng: random.Random, count: Optional[int] = None, start: int = 0) -> list:
        return [
            random_natural(rng, self.n, self.N, start=start)
            for _ in range(self.samples if count is None else count)
        ]

    def density_change(self, i: int) -> dict:
        def run():
            ops = self.natural_ops(self.rng(f"density-change:{i}"))
            return density_change_verify(self.star, self.rhos[i], self.factor(), ops, self.data(i))

        return self.memo(("density-change", i), run)

    def tilde(self, i: int):
        return self.memo(("tilde", i), lambda: tilde_star(self.star, self.rhos[i], self.data(i)))


@dataclass(frozen=True)
class Check:
    id: str
    paper_tag: str
    statement: str
    fn: Callable
    per_density: bool = False

    def run(self, sc: Scenario) -> Outcome:
        if not self.per_density:
            return self.fn(sc, sc.rng(self.id))
        outs = []
        for i in range(len(sc.rhos)):
            o = self.fn(sc, i, sc.rng(f"{self.id}:{i}"))
            if not o.ok:
                return Outcome.failed(f"[{sc.density_label(i)}] {o.witness}", o.note)
            outs.append(o)
        return first_failure(outs)


def _eq(lhs, rhs, what: str) -> Outcome:
    if lhs == rhs:
        return Outcome.passed()
    return Outcome.failed(f"{what}: residual {lhs - rhs}")


# -- star product -----------------------------------------------------------------

def _axioms(sc, rng):
    return axioms_verify(sc.star)


def _assoc(sc, rng):
    return assoc_verify(sc.star, sc.degree)


def _natural(sc, rng):
    return natural_verify(sc.star, sc.degree)


# -- J, Q, K ------------------------------------------------------------------------

def _j_construction(sc, i, rng):
    data = sc.data(i)
    return first_failure(
        _eq(apply(data.j, f), j_apply_via_right(sc.star, sc.rhos[i], f), f"J f vs (R_f)^t 1 at f={f}")
        for f in sc.basis
    )


def _j_unit(sc, i, rng):
    data = sc.data(i)
    one = NuSeries.const(sc.n, sc.N, 1)
    if not data.j.is_identity_mod_nu():
        return Outcome.failed(f"J != 1 mod nu: {data.j}")
    if data.j_inv * data.j != data.identity():
        return Outcome.failed("J^-1 J != 1")
    return first_failure([
        _eq(apply(data.j, one), one, "J 1"),
        _eq(apply(data.q, one), one, "Q 1"),
    ])


def _krl(sc, i, rng):
    data = sc.data(i)
    return first_failure(
        _eq(k_transform(data, right_op(sc.star, f)), left_op(sc.star, f), f"K[R_f] vs L_f at f={f}")
        for f in sc.basis
    )


def _jlr(sc, i, rng):
    data = sc.data(i)
    return first_failure(
        _eq(data.j * left_op(sc.star, f) * data.j_inv, data.transpose(right_op(sc.star, f)), f"f={f}")
        for f in sc.basis
    )


def _square(sc, i, rng):
    data = sc.data(i)
    q_inv = op_invert(data.q)
    return first_failure(
        _eq(k_transform(data, k_transform(data, A)), q_inv * A * data.q, f"A={A}")
        for A in sc.natural_ops(rng)
    )


def _qtrace(sc, i, rng):
    data = sc.data(i)
    return _eq(data.transpose(data.q) * data.j, data.transpose(data.j), "Q^t J vs J^t")


def _q_automorphism(sc, i, rng):
    data = sc.data(i)
    q, q_inv = data.q, op_invert(data.q)
    outs = [
        _eq(q * left_op(sc.star, f) * q_inv, left_op(sc.star, apply(q, f)), f"Q L_f Q^-1 vs L_Qf at f={f}")
        for f in sc.basis
    ]
    for _ in range(sc.samples):
        f = random_polynomial(rng, sc.n, 3)
        g = random_polynomial(rng, sc.n, 3)
        lhs = apply(q, star_apply(sc.star, f, g))
        rhs = star_apply(sc.star, apply(q, f), apply(q, g))
        outs.append(_eq(lhs, rhs, f"Q(f*g) vs Qf*Qg at f={f}, g={g}"))
    return first_failure(outs)


def _trace_criterion(sc, i, rng):
    data = sc.data(i)
    symmetric = trace_test(data)
    trivial = data.q == data.identity()
    if symmetric != trivial:
        return Outcome.failed(f"J^t = J is {symmetric} but Q = 1 is {trivial}")
    return Outcome.passed(f"{sc.density_label(i)}: trace density {symmetric}")


def _trace_casimir(sc, i, rng):
    if sc.cfg.casimir_factor is None:
        raise Skip("no casimir_factor configured")
    data = sc.data(i)
    if not trace_test(data):
        return Outcome.passed(f"{sc.density_label(i)} is not a trace density; criterion not applicable")
    phi = parse_series(sc.cfg.casimir_factor, sc.n, sc.N, "casimir_factor")
    factor = DensityFactor.build(data, phi)
    if not trace_test(data, factor):
        return Outcome.failed(f"psi = J^-1 phi = {factor.psi} is not a Casimir element")
    # round trip: the Casimir psi gives back a trace density factor
    back = trace_density_from_casimir(data, factor.psi)
    if back != phi:
        return Outcome.failed(f"J psi = {back} differs from phi = {phi}")
    if not is_casimir(sc.star, apply(data.j_inv, back)):
        return Outcome.failed("round trip factor does not pass the Casimir test")
    return Outcome.passed()


def _vector_field(sc, i, rng):
    return modular_field_verify(sc.data(i), sc.degree)


def _gr(sc, i, rng):
    X = sc.data(i).x_log
    bad = naturality_violation(X)
    if bad is not None:
        return Outcome.failed(f"nu log J not natural at nu^{bad}: {X}")
    if not X.vanishes_mod_nu(2):
        return Outcome.failed(f"nu log J != 0 mod nu^2: {X}")
    return Outcome.passed()


# -- density change and the equivalent product --------------------------------------

def _density_change(key):
    def fn(sc, i, rng):
        return sc.density_change(i)[key]

    return fn


def _ltransr(sc, i, rng):
    return ltransr_verify(sc.data(i), sc.tilde(i), sc.degree)


def _tilde_natural(sc, i, rng):
    return natural_verify(sc.tilde(i), sc.degree)


# -- symbols ----------------------------------------------------------------------

def _product(sc, rng):
    ops = sc.natural_ops(rng, 2 * sc.samples)
    return check_sigma_homomorphism(list(zip(ops[::2], ops[1::2])))


def _commab(sc, rng):
    ops = sc.natural_ops(rng, 2 * sc.samples)
    return check_commab(list(zip(ops[::2], ops[1::2])))


def _sigmaconj(sc, rng):
    X = random_natural(rng, sc.n, sc.N + 1, start=2)
    return check_sigma_conjugation(X, sc.natural_ops(rng))


def _lconj(sc, rng):
    B = FormalDiffOp.identity(sc.n, sc.N) + random_natural(rng, sc.n, sc.N, start=1)
    return check_natural_conjugation(B, sc.natural_ops(rng))


def _transpose_symbol(sc, i, rng):
    rho = sc.rhos[i]
    data = sc.data(i)
    outs = []
    ops = sc.natural_ops(rng, 2 * sc.samples)
    for A, B in zip(ops[::2], ops[1::2]):
        At = data.transpose(A)
        outs.append(_eq(sigma(At), epsilon_pullback(sigma(A)), f"sigma(A^t) vs eps* sigma(A), A={A}"))
        outs.append(_eq(data.transpose(A * B), data.transpose(B) * At, f"(AB)^t, A={A}, B={B}"))
        outs.append(_eq(data.transpose(At), A, f"A^tt, A={A}"))
    return first_failure(outs)


# -- source, target, inverse map ---------------------------------------------------

def _s_poisson(sc, rng):
    return check_source_poisson(sc.star, sc.basis)


def _t_anti(sc, rng):
    return check_target_anti_poisson(sc.star, sc.basis)


def _st_commute(sc, rng):
    return check_source_target_commute(sc.star, sc.basis)


def _unit(sc, rng):
    return check_unit(sc.star, sc.basis)


def _ftn(sc, rng):
    return check_reconstruction(sc.star, sc.basis)


def _poisscomm(sc, rng):
    return check_uniqueness(sc.star)


def _symbaut(sc, i, rng):
    return check_symbaut(sc.data(i))


def _phases(sc, rng, count=None):
    return [random_phase(rng, sc.n, sc.N) for _ in range(count or sc.samples)]


def _last_a(sc, i, rng):
    return check_involutive(sc.inverse(i), _phases(sc, rng))


def _last_b(sc, i, rng):
    ph = _phases(sc, rng, 2 * sc.samples)
    return check_anti_poisson(sc.inverse(i), list(zip(ph[::2], ph[1::2])))


def _last_c(sc, i, rng):
    return check_swaps(sc.inverse(i), sc.star, sc.basis)


def _ik(sc, i, rng):
    return check_ik(sc.inverse(i), sc.data(i), sc.natural_ops(rng))


def _rho_independence(sc, rng):
    if len(sc.rhos) < 2:
        raise Skip("only one density configured")
    maps = [sc.inverse(i) for i in range(len(sc.rhos))]
    return check_rho_independence(maps, _phases(sc, rng))


CATALOG: List[Check] = [
    Check("star:axioms", "E:star", "C_0 = fg, C_1 - C_1^op = {f,g}, 1 is the unit", _axioms),
    Check("star:assoc", "E:star", "(f*g)*h = f*(g*h) on the monomial basis", _assoc),
    Check("P:nat", "P:nat", "ord C_r <= r in each slot; L_f and R_f natural", _natural),
    Check("E:product", "E:product", "sigma(AB) = sigma(A) sigma(B)", _product),
    Check("E:commab", "E:commab", "sigma((1/nu)[A,B]) = {sigma A, sigma B}", _commab),
    Check("E:sigmaconj", "E:sigmaconj", "sigma(e^(X/nu) A e^(-X/nu)) = exp(H_sigma(X)) sigma(A)", _sigmaconj),
    Check("L:conj", "L:conj", "B A B^-1 natural with sigma(BAB^-1) = sigma(A)", _lconj),
    Check("transpose:symbol", "S:natural", "sigma(A^t) = eps* sigma(A); (AB)^t = B^t A^t; A^tt = A", _transpose_symbol, True),
    Check("J:construction", "E:trans", "J f = (R_f)^t 1 (two constructions of J)", _j_construction, True),
    Check("J:unit", "E:trans", "J = 1 mod nu, J 1 = 1, Q 1 = 1", _j_unit, True),
    Check("E:krl", "E:krl", "K[R_f] = L_f", _krl, True),
    Check("E:jlr", "E:jlr", "J L_f J^-1 = (R_f)^t", _jlr, True),
    Check("E:square", "E:square", "K[K[A]] = Q^-1 A Q", _square, True),
    Check("E:qtrace", "E:qtrace", "Q^t J = J^t", _qtrace, True),
    Check("Q:automorphism", "E:lft", "Q(f*g) = Qf * Qg; Q L_f Q^-1 = L_Qf", _q_automorphism, True),
    Check("trace:criterion", "E:pair", "J^t = J iff Q = 1", _trace_criterion, True),
    Check("trace:casimir", "E:pair", "phi rho trace density iff J^-1 phi Casimir; round trip via J psi", _trace_casimir, True),
    Check("modular:vector-field", "E:lft", "log Q = nu div_rho0 H mod nu^2", _vector_field, True),
    Check("T:GR", "T:GR", "nu log J natural and 0 mod nu^2", _gr, True),
    Check("E:tilderho", "E:tilderho", "A^t(phi rho) = phi^-1 A^t(rho) phi", _density_change("E:tilderho"), True),
    Check("E:jtilderho", "E:jtilderho", "J(phi rho) = phi^-1 J R_psi", _density_change("E:jtilderho"), True),
    Check("E:ktilderho", "E:ktilderho", "K(phi rho)[A] = R_psi^-1 K[A] R_psi", _density_change("E:ktilderho"), True),
    Check("E:qtilderho", "E:qtilderho", "Q = Q(phi rho) R_psi^-1 L_psi", _density_change("E:qtilderho"), True),
    Check("E:ltransr", "E:ltransr", "L~_f = (R_{J^-1 f})^t", _ltransr, True),
    Check("tilde:natural", "E:ltransr", "f *~ g = J(J^-1 f * J^-1 g) is natural", _tilde_natural, True),
    Check("E:unit", "T:last", "E(Sf) = E(Tf) = f", _unit),
    Check("S:poisson", "T:last", "{Sf, Sg} = S{f,g}", _s_poisson),
    Check("T:anti-poisson", "T:last", "{Tf, Tg} = -T{f,g}", _t_anti),
    Check("ST:commute", "T:last", "{Sf, Tg} = 0", _st_commute),
    Check("E:ftn", "E:ftn", "commutant reconstruction gives Sf and Tf", _ftn),
    Check("P:poisscomm", "P:poisscomm", "E(F) = 0 and {F, T u} = 0 force F = 0", _poisscomm),
    Check("P:symbaut", "P:symbaut", "sigma(nu log Q) = 0", _symbaut, True),
    Check("T:last.a", "T:last", "I o I = id", _last_a, True),
    Check("T:last.b", "T:last", "I{F,G} = -{IF, IG}", _last_b, True),
    Check("T:last.c", "T:last", "I o T = S and I o S = T", _last_c, True),
    Check("E:ik", "E:ik", "sigma(K[A]) = I sigma(A)", _ik, True),
    Check("I:rho-independence", "T:last", "I does not depend on the density", _rho_independence),
]

BY_ID: Dict[str, Check] = {c.id: c for c in CATALOG}


def select(ids) -> List[Check]:
    if ids is None or ids == "all":
        return list(CATALOG)
    out = []
    for cid in ids:
        if cid not in BY_ID:
            raise UnknownCheckError(cid)
        if BY_ID[cid] not in out:
            out.append(BY_ID[cid])
    return out


def _run_one(check: Check, sc: Scenario) -> CheckRecord:
    t0 = time.perf_counter()
    try:
        o = check.run(sc)
        status, witness, note = (PASS, None, o.note) if o.ok else (FAIL, o.witness, o.note)
    except Skip as exc:
        status, witness, note = SKIPPED, None, str(exc)
    except Exception as exc:  # an engine error is a failed check, not a crash
        status, witness, note = FAIL, f"{type(exc).__name__}: {exc}", "raised"
    ms = (time.perf_counter() - t0) * 1000
    return CheckRecord(check.id, check.paper_tag, check.statement, status, witness, note, round(ms, 1))


def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_scenario(cfg: ScenarioConfig, checks=None, seed: Optional[int] = None) -> VerificationReport:
    """Build the scenario and run the requested checks (config list if ``checks`` is None)."""
    selected = select(cfg.checks if checks is None else checks)
    sc = Scenario(cfg, seed)
    threads = thread_count()
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(lambda c: _run_one(c, sc), selected))
    else:
        records = [_run_one(c, sc) for c in selected]
    order = {c.id: k for k, c in enumerate(CATALOG)}
    records.sort(key=lambda r: order[r.id])
    return VerificationReport(cfg.name, sc.seed, records, cfg.echo())
