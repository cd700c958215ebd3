"""Closed-system scenarios: Hamiltonian dynamics, states and POV measures."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import numerics as nm
from .errors import ValidationError


@dataclass(frozen=True)
class Scenario:
    """A finite-dimensional closed quantum system.

    Parameters
    ----------
    hamiltonian : array_like
        Hermitian generator of the dynamics (energy units, ``hbar`` below).
    initial_state : array_like
        Density operator at the fiducial time ``t0``.
    t0 : float
        Fiducial time at which the state is given and class operators are
        anchored.
    hbar : float
        Positive reduced Planck constant, default 1.
    """

    hamiltonian: np.ndarray
    initial_state: np.ndarray
    t0: float = 0.0
    hbar: float = 1.0
    _h_eig: nm.HermitianEigen = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        h = nm.as_matrix(self.hamiltonian, "hamiltonian")
        rho = nm.as_matrix(self.initial_state, "initial_state")
        if h.shape != rho.shape:
            raise ValidationError("hamiltonian and initial_state dimensions differ")
        if not nm.is_hermitian(h):
            raise ValidationError("hamiltonian: not hermitian")
        if not nm.classify(rho).is_density:
            raise ValidationError("initial_state: not a density operator")
        if not self.hbar > 0:
            raise ValidationError("hbar must be positive")
        h.flags.writeable = False
        rho.flags.writeable = False
        object.__setattr__(self, "hamiltonian", h)
        object.__setattr__(self, "initial_state", rho)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "hbar", float(self.hbar))
        object.__setattr__(self, "_h_eig", nm.hermitian_eig(h))

    @property
    def dim(self) -> int:
        return self.hamiltonian.shape[0]

    @classmethod
    def free(cls, initial_state, t0: float = 0.0) -> "Scenario":
        """Scenario with vanishing Hamiltonian."""
        rho = nm.as_matrix(initial_state, "initial_state")
        return cls(np.zeros_like(rho), rho, t0)


def propagator(s: Scenario, t_to: float, t_from: float) -> np.ndarray:
    """``U(t_to, t_from) = exp(-i (t_to - t_from) H / hbar)``."""
    if t_to == t_from:
        return np.eye(s.dim, dtype=complex)
    return nm.unitary_from_eig(s._h_eig, (t_to - t_from) / s.hbar)


def heisenberg_translate(s: Scenario, e, t: float, t_ref: float) -> np.ndarray:
    """Move effect ``e`` from ``t_ref`` to ``t``: ``U(t, t_ref) e U(t, t_ref)^dagger``."""
    e = nm.as_matrix(e, "effect")
    if not nm.is_effect(e):
        raise ValidationError("not an effect")
    u = propagator(s, t, t_ref)
    return u @ e @ nm.dagger(u)


@dataclass(frozen=True)
class POVMeasure:
    outcomes: tuple
    effects: tuple

    def __post_init__(self):
        if len(self.outcomes) != len(self.effects):
            raise ValidationError("one effect per outcome required")
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        object.__setattr__(self, "effects", tuple(nm.as_matrix(e) for e in self.effects))


@dataclass(frozen=True)
class POVMReport:
    passed: bool
    classes: dict
    deviation: float
    failures: list


def validate_povm(p: POVMeasure, tol: float = 1e-10) -> POVMReport:
    """Check every element is an effect and the elements sum to the identity."""
    classes = {}
    failures = []
    for label, e in zip(p.outcomes, p.effects):
        cls = nm.classify(e)
        classes[label] = cls
        if not cls.is_effect:
            failures.append(f"not an effect: {label}")
    dims = {e.shape for e in p.effects}
    if len(dims) != 1:
        return POVMReport(False, classes, float("inf"), failures + ["dimension mismatch"])
    total = sum(p.effects)
    deviation = nm.frobenius(total - np.eye(total.shape[0]))
    if deviation > tol:
        failures.append(f"effects do not sum to identity (deviation {deviation:.3e})")
    return POVMReport(not failures, classes, deviation, failures)
