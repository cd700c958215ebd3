"""Decoherence functionals on effect histories.

``first_kind`` evaluates ``tr(C(u) rho C(v)^dagger)`` with square-root class
operators on homogeneous histories. ``extended`` uses the linear class
operator of tensor histories, which gives the bi-additive functional on the
canonical D-poset; both agree on projector histories.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ValidationError
from .histories import (
    HomogeneousEffectHistory,
    TensorHistory,
    class_operator_extension,
    class_operator_first_kind,
)
from .quantum import Scenario


class Kind(str, enum.Enum):
    FIRST_KIND = "first"
    EXTENDED = "extended"


@dataclass(frozen=True)
class DecoherenceContext:
    scenario: Scenario
    kind: Kind = Kind.EXTENDED

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))


def _scenario(ctx) -> Scenario:
    return ctx.scenario if isinstance(ctx, DecoherenceContext) else ctx


def trace_form(c_left: np.ndarray, rho: np.ndarray, c_right: np.ndarray) -> complex:
    """``tr(c_left rho c_right^dagger)`` without forming the full product."""
    return complex(np.sum((c_left @ rho) * c_right.conj()))


def weight_first_kind(ctx, u: HomogeneousEffectHistory, v: HomogeneousEffectHistory) -> complex:
    """Decoherence weight of two homogeneous effect histories."""
    s = _scenario(ctx)
    return trace_form(
        class_operator_first_kind(s, u), s.initial_state, class_operator_first_kind(s, v)
    )


def weight_extended(ctx, a: TensorHistory, b: TensorHistory) -> complex:
    """Extended functional on tensor histories.

    Equals the weight of both histories embedded in the union support; the
    linear class operator is unchanged by identity factors, so each one is
    evaluated on its own support.
    """
    s = _scenario(ctx)
    return trace_form(
        class_operator_extension(s, a), s.initial_state, class_operator_extension(s, b)
    )


@dataclass(frozen=True)
class DecoherenceMatrix:
    labels: tuple
    values: np.ndarray

    def hermiticity_residual(self) -> float:
        return float(np.max(np.abs(self.values - self.values.conj().T), initial=0.0))

    def min_diagonal(self) -> float:
        return float(np.min(self.values.diagonal().real))


def decoherence_matrix(
    ctx: DecoherenceContext, family: Sequence, labels: Sequence | None = None
) -> DecoherenceMatrix:
    """Tabulate ``d(h_i, h_j)`` over a family of histories of a single kind."""
    s = _scenario(ctx)
    kind = ctx.kind if isinstance(ctx, DecoherenceContext) else Kind.EXTENDED
    family = list(family)
    labels = tuple(labels) if labels is not None else tuple(range(len(family)))
    if len(labels) != len(family):
        raise ValidationError("one label per history required")
    types = {type(h) for h in family}
    if len(types) > 1:
        raise ValidationError("mixed history kinds")
    if kind is Kind.FIRST_KIND:
        if types and types != {HomogeneousEffectHistory}:
            raise ValidationError("first-kind weights need homogeneous histories")
        ops = [class_operator_first_kind(s, h) for h in family]
    else:
        if types == {HomogeneousEffectHistory}:
            raise ValidationError("extended weights need tensor histories")
        ops = [class_operator_extension(s, h) for h in family]
    n = len(ops)
    values = np.zeros((n, n), dtype=complex)
    left = [c @ s.initial_state for c in ops]
    for i in range(n):
        for j in range(n):
            values[i, j] = np.sum(left[i] * ops[j].conj())
    return DecoherenceMatrix(labels, values)


def lattice_consistency_functional(ctx, lattice, p1, p2) -> complex:
    """Consistency functional induced on a Boolean lattice by its valuation."""
    return weight_extended(ctx, lattice.image(p1), lattice.image(p2))


def check_axioms(ctx, histories: Sequence, weight) -> dict:
    """Residuals of Hermiticity and diagonal positivity over a set of histories.

    ``weight`` is :func:`weight_first_kind` or :func:`weight_extended`.
    Returns the worst residual of each kind; the caller applies tolerances.
    """
    herm = 0.0
    neg = 0.0
    for i, a in enumerate(histories):
        daa = weight(ctx, a, a)
        herm = max(herm, abs(daa.imag))
        neg = max(neg, -daa.real)
        for b in histories[i + 1:]:
            herm = max(herm, abs(weight(ctx, a, b) - weight(ctx, b, a).conjugate()))
    return {"hermiticity": herm, "negativity": neg}


def normalisation(ctx) -> tuple[complex, complex]:
    """``d(1, 1)`` for both functionals."""
    s = _scenario(ctx)
    unit = HomogeneousEffectHistory.unit(s.dim)
    one = TensorHistory.identity((s.t0,), s.dim)
    return weight_first_kind(ctx, unit, unit), weight_extended(ctx, one, one)

