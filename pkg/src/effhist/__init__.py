"""Consistent effect histories for finite-dimensional quantum systems."""

from .decoherence import (
    DecoherenceContext,
    DecoherenceMatrix,
    Kind,
    check_axioms,
    decoherence_matrix,
    lattice_consistency_functional,
    normalisation,
    trace_form,
    weight_extended,
    weight_first_kind,
)
from .errors import EffectHistoryError, NumericalError, ValidationError
from .histories import (
    HomogeneousEffectHistory,
    TensorHistory,
    build_order_k,
    class_operator_extension,
    class_operator_first_kind,
    complement,
    compose,
    dposet_ominus,
    dposet_oplus,
    embed_support,
    history_effect,
    leq,
    meet_join,
    order_reduce,
    shift_translate,
    sigma_fin,
)
from .logic import (
    AdmissibilityReport,
    BooleanLattice,
    ConsistencyReport,
    check_admissible,
    check_consistent,
    equivalent,
    implies,
    implies_lower_bound,
    lattice_from_atoms,
    probability,
)
from .quantum import POVMeasure, Scenario, heisenberg_translate, propagator, validate_povm

__version__ = "0.1.0"
