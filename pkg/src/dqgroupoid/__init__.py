"""Exact verification engine for natural star products on R^n and their inverse maps."""

__version__ = "0.1.0"

from .algebra import NuSeries, Polynomial, series_invert
from .diffop import (
    DiffOp,
    FormalDiffOp,
    LogDensity,
    apply,
    commutator_over_nu,
    compose,
    is_natural,
    op_exp,
    op_invert,
    op_log,
    sigma,
    transpose,
)
from .groupoid import InverseMap, inverse_map, reconstruct_commutant, source_target
from .modular import (
    DensityFactor,
    ModularData,
    j_operator,
    k_transform,
    modular_vector_field,
    q_operator,
    tilde_star,
    trace_test,
)
from .phase import PhaseFunction, epsilon_pullback, ham_flow, tstar_bracket, unit_restrict
from .starprod import (
    BiDiffOp,
    PoissonStructure,
    StarProduct,
    assoc_verify,
    gauge_twist,
    moyal_star,
    natural_verify,
    side_op,
    star_apply,
)
