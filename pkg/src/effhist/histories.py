"""Effect histories of both kinds and their class operators.

A homogeneous effect history (first kind) is a time-ordered list of effects
on the single-time Hilbert space. A tensor history (second kind) is an
effect on the tensor product of copies of that space, one copy per support
time, earliest time as the leftmost Kronecker factor.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from . import numerics as nm
from .errors import NumericalError, ValidationError
from .quantum import Scenario, heisenberg_translate, propagator

# Frobenius distance below which an event counts as exactly 1 or 0.
EVENT_TOL = 1e-12
# Eigenvalue tolerance for the effect / order checks of the D-poset.
ORDER_TOL = 1e-10


def _check_times(times: Sequence[float], what: str = "times") -> tuple:
    times = tuple(float(t) for t in times)
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValidationError(f"{what} must be strictly increasing")
    return times


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


class HomogeneousEffectHistory:
    """Finite homogeneous effect history of the first kind.

    Events equal to the identity are dropped (they are outside the support).
    A history with any zero event collapses to the zero history, which keeps
    no events and has ``is_zero`` set.
    """

    __slots__ = ("events", "dim", "is_zero")

    def __init__(self, events: Iterable = (), dim: int | None = None, *, zero: bool = False):
        raw = [(float(t), nm.as_matrix(e, f"effect at t={t}")) for t, e in events]
        if dim is None:
            if not raw:
                raise ValidationError("dim is required for a history without events")
            dim = raw[0][1].shape[0]
        _check_times([t for t, _ in raw])
        eye = np.eye(dim)
        kept = []
        for t, e in raw:
            if e.shape != (dim, dim):
                raise ValidationError(f"effect at t={t} has wrong dimension")
            if not nm.is_effect(e):
                raise ValidationError(f"not an effect: event at t={t}")
            if nm.frobenius(e) <= EVENT_TOL:
                zero = True
            elif nm.frobenius(e - eye) > EVENT_TOL:
                kept.append((t, _frozen(e)))
        self.dim = int(dim)
        self.is_zero = bool(zero)
        self.events = () if zero else tuple(kept)

    @classmethod
    def unit(cls, dim: int) -> "HomogeneousEffectHistory":
        return cls((), dim)

    @classmethod
    def zero(cls, dim: int) -> "HomogeneousEffectHistory":
        return cls((), dim, zero=True)

    @property
    def times(self) -> tuple:
        return tuple(t for t, _ in self.events)

    @property
    def effects(self) -> tuple:
        return tuple(e for _, e in self.events)

    support = times

    @property
    def is_unit(self) -> bool:
        return not self.is_zero and not self.events

    @property
    def t_initial(self) -> float | None:
        return self.events[0][0] if self.events else None

    @property
    def t_final(self) -> float | None:
        return self.events[-1][0] if self.events else None

    def __len__(self):
        return len(self.events)

    def __repr__(self):
        if self.is_zero:
            return f"HomogeneousEffectHistory.zero({self.dim})"
        return f"HomogeneousEffectHistory(times={self.times}, dim={self.dim})"


class TensorHistory:
    """Effect on the tensor product of one Hilbert space copy per support time."""

    __slots__ = ("support", "op", "dim")

    def __init__(self, support: Sequence[float], op, dim: int, *, validate: bool = True):
        support = _check_times(support, "support")
        op = nm.as_matrix(op, "tensor history operator")
        expected = dim ** len(support)
        if op.shape[0] != expected:
            raise ValidationError(
                f"operator dimension {op.shape[0]} does not match dim**|support| = {expected}"
            )
        if validate and not nm.is_effect(op, ORDER_TOL):
            raise ValidationError("not an effect: tensor history operator")
        self.support = support
        self.op = _frozen(op)
        self.dim = int(dim)

    @classmethod
    def identity(cls, support: Sequence[float], dim: int) -> "TensorHistory":
        return cls(support, np.eye(dim ** len(support)), dim, validate=False)

    @classmethod
    def zero(cls, support: Sequence[float], dim: int) -> "TensorHistory":
        n = dim ** len(support)
        return cls(support, np.zeros((n, n)), dim, validate=False)

    def __repr__(self):
        return f"TensorHistory(support={self.support}, dim={self.dim})"


def sigma_fin(u: HomogeneousEffectHistory) -> TensorHistory:
    """Tensor product of the events of ``u`` over its support.

    The unit history maps to ``[[1]]`` and the zero history to ``[[0]]`` on
    the empty support.
    """
    if u.is_zero:
        return TensorHistory.zero((), u.dim)
    return TensorHistory(u.times, nm.kron_all(u.effects), u.dim, validate=False)


def embed_support(h: TensorHistory, bigger: Sequence[float]) -> TensorHistory:
    """Re-express ``h`` on a larger support by inserting identity factors."""
    bigger = _check_times(bigger, "support")
    if not set(h.support) <= set(bigger):
        raise ValidationError("support not superset")
    if bigger == h.support:
        return h
    d = h.dim
    m = len(bigger) - len(h.support)
    total = d ** len(bigger)
    if total > nm.MAX_TENSOR_DIM:
        raise NumericalError(f"tensor dimension overflow: {total} > {nm.MAX_TENSOR_DIM}")
    # factor order before the permutation: old slots, then new slots
    full = np.kron(h.op, np.eye(d**m))
    new_times = [t for t in bigger if t not in h.support]
    current = list(h.support) + new_times
    perm = [current.index(t) for t in bigger]
    k = len(bigger)
    tensor = full.reshape([d] * (2 * k))
    tensor = tensor.transpose(perm + [k + p for p in perm])
    return TensorHistory(bigger, tensor.reshape(total, total), d, validate=False)


def align(a: TensorHistory, b: TensorHistory) -> tuple[TensorHistory, TensorHistory]:
    """Embed both histories into the union of their supports."""
    if a.dim != b.dim:
        raise ValidationError("histories have different single-time dimensions")
    union = tuple(sorted(set(a.support) | set(b.support)))
    return embed_support(a, union), embed_support(b, union)


def leq(a: TensorHistory, b: TensorHistory) -> bool:
    """D-poset order ``a <= b``, which is exactly when ``b ⊖ a`` is defined."""
    a, b = align(a, b)
    return nm.leq(a.op, b.op, ORDER_TOL)


def dposet_oplus(a: TensorHistory, b: TensorHistory) -> TensorHistory:
    """Partial sum; defined when ``a + b <= 1`` (up to ``1e-10``)."""
    a, b = align(a, b)
    total = a.op + b.op
    if nm.eigvalsh(total)[-1] > 1.0 + ORDER_TOL:
        raise NumericalError("oplus undefined: sum exceeds the identity")
    return TensorHistory(a.support, total, a.dim, validate=False)


def dposet_ominus(a: TensorHistory, b: TensorHistory) -> TensorHistory:
    """Partial difference ``a ⊖ b``; defined when ``b <= a``."""
    a, b = align(a, b)
    if not nm.leq(b.op, a.op, ORDER_TOL):
        raise NumericalError("ominus undefined (not below)")
    return TensorHistory(a.support, a.op - b.op, a.dim, validate=False)


def complement(e: TensorHistory) -> TensorHistory:
    """``e' = 1 ⊖ e``, the unique element with ``e ⊕ e' = 1``."""
    return dposet_ominus(TensorHistory.identity(e.support, e.dim), e)


def _range_projector(eig: nm.HermitianEigen, keep) -> np.ndarray:
    v = eig.vectors[:, keep]
    return v @ nm.dagger(v)


def meet_join(a: TensorHistory, b: TensorHistory, tol: float = 1e-9):
    """Infimum and supremum where they can be determined exactly.

    Covers two projectors (range intersection / range sum) and comparable
    pairs. Returns ``None`` otherwise: effect-poset infima have no spectral
    formula in general.
    """
    a, b = align(a, b)
    if nm.classify(a.op).is_projector and nm.classify(b.op).is_projector:
        eig = nm.hermitian_eig(a.op + b.op)
        meet = _range_projector(eig, eig.values >= 2.0 - tol)
        join = _range_projector(eig, eig.values > tol)
        return (
            TensorHistory(a.support, meet, a.dim, validate=False),
            TensorHistory(a.support, join, a.dim, validate=False),
        )
    if nm.leq(a.op, b.op, ORDER_TOL):
        return a, b
    if nm.leq(b.op, a.op, ORDER_TOL):
        return b, a
    return None


def compose(a: HomogeneousEffectHistory, b: HomogeneousEffectHistory) -> HomogeneousEffectHistory:
    """Temporal concatenation ``a ∘ b``, defined when ``a`` ends before ``b`` starts."""
    if a.dim != b.dim:
        raise ValidationError("histories have different dimensions")
    if a.is_zero or b.is_zero:
        return HomogeneousEffectHistory.zero(a.dim)
    if a.is_unit:
        return b
    if b.is_unit:
        return a
    if not a.t_final < b.t_initial:
        raise ValidationError("temporal overlap")
    return HomogeneousEffectHistory(a.events + b.events, a.dim)


def class_operator_first_kind(s: Scenario, u: HomogeneousEffectHistory) -> np.ndarray:
    """``U(t0, t_n) sqrt(u_n) U(t_n, t_{n-1}) ... sqrt(u_1) U(t_1, t0)``."""
    _check_dim(s, u.dim)
    if u.is_zero:
        return np.zeros((s.dim, s.dim), dtype=complex)
    c = np.eye(s.dim, dtype=complex)
    t_prev = s.t0
    for t, e in u.events:
        c = nm.psd_sqrt(e) @ propagator(s, t, t_prev) @ c
        t_prev = t
    return propagator(s, s.t0, t_prev) @ c


def history_effect(s: Scenario, u: HomogeneousEffectHistory) -> np.ndarray:
    """The effect ``C(u)^dagger C(u)`` carried by a first-kind history."""
    c = class_operator_first_kind(s, u)
    return nm.dagger(c) @ c


def class_operator_extension(s: Scenario, h: TensorHistory) -> np.ndarray:
    """Linear class operator of a tensor history.

    On product operators ``A_1 ⊗ ... ⊗ A_n`` this is
    ``U(t0, t_n) A_n U(t_n, t_{n-1}) ... A_1 U(t_1, t0)``; general operators
    are handled by contracting one time slot at a time.
    """
    _check_dim(s, h.dim)
    if h.op.shape[0] > nm.MAX_TENSOR_DIM:
        raise NumericalError("tensor dimension overflow")
    return _extend(s, h.support, h.op)


def _extend(s: Scenario, support: Sequence[float], op: np.ndarray) -> np.ndarray:
    d = s.dim
    n = len(support)
    if n == 0:
        return op[0, 0] * np.eye(d, dtype=complex)
    # rows (i_1..i_n), columns (j_1..j_n); i_1, j_1 most significant
    t = op.reshape(d**n, d, d ** (n - 1))
    t = np.einsum("ijr,jc->irc", t, propagator(s, support[0], s.t0))
    for k in range(1, n):
        w = propagator(s, support[k], support[k - 1])
        t = t.reshape(d, d ** (n - k), d, d ** (n - k - 1), d)
        t = np.einsum("ba,aibjc->ijc", w, t)
    return propagator(s, s.t0, support[-1]) @ t.reshape(d, d)


def _check_dim(s: Scenario, dim: int):
    if s.dim != dim:
        raise ValidationError(f"history dimension {dim} does not match scenario dimension {s.dim}")


def shift_translate(
    s: Scenario, u: HomogeneousEffectHistory, new_times: Sequence[float]
) -> HomogeneousEffectHistory:
    """Move each event to a new time, Heisenberg-translating its effect."""
    new_times = _check_times(new_times, "new_times")
    if len(new_times) != len(u.events):
        raise ValidationError("arity mismatch")
    if u.is_zero:
        return u
    events = [
        (t_new, heisenberg_translate(s, e, t_new, t_old))
        for t_new, (t_old, e) in zip(new_times, u.events)
    ]
    return HomogeneousEffectHistory(events, u.dim)


def _micro_spacing(times: Sequence[float]) -> float:
    gaps = [b - a for a, b in zip(times, times[1:])]
    return 1e-3 * (min(gaps) if gaps else 1.0)


def build_order_k(
    s: Scenario,
    effects: Sequence,
    k: int,
    times: Sequence[float],
    anchor: str = "history",
) -> HomogeneousEffectHistory:
    """History in which effect ``E_j`` is realised at ``k`` successive times.

    Block ``j`` occupies ``times[j] + m * delta`` for ``m = 0..k-1`` with
    ``delta = 1e-3`` times the smallest gap between block times. Every
    occurrence is Heisenberg-translated to its slot from the reference time:
    the first time of the whole history (``anchor="history"``) or the first
    time of its own block (``anchor="block"``).
    """
    if k < 1:
        raise ValidationError("k must be a positive integer")
    times = _check_times(times)
    if len(times) != len(effects):
        raise ValidationError("arity mismatch")
    if anchor not in ("history", "block"):
        raise ValidationError(f"unknown anchor {anchor!r}")
    delta = _micro_spacing(times)
    events = []
    for e, base in zip(effects, times):
        ref = times[0] if anchor == "history" else base
        for m in range(k):
            slot = base + m * delta
            events.append((slot, heisenberg_translate(s, e, slot, ref)))
    return HomogeneousEffectHistory(events, s.dim)


def order_reduce(
    s: Scenario,
    effects: Sequence,
    k: int,
    times: Sequence[float],
    anchor: str = "history",
) -> tuple[list, HomogeneousEffectHistory]:
    """Map an order-``k`` history to order 2 via ``F_j = E_j ** (k / 2)``.

    Returns the reduced effects and the order-2 history built from them on
    the same block times.
    """
    if k < 1:
        raise ValidationError("k must be a positive integer")
    reduced = [nm.psd_power(e, k / 2) for e in effects]
    return reduced, build_order_k(s, reduced, 2, times, anchor)
