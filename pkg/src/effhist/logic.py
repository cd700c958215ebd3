"""Admissible Boolean lattices of effect histories and the reasoning they license.

A lattice is generated by a finite list of atoms; its elements are subsets
of atom indices (``frozenset``), with union, intersection and complement as
the Boolean operations. Each element ``S`` stands for the effect history

    z + sum_{a in S} (a - z)

where ``z`` is the image of the bottom element (the zero operator unless
given). The valuation sends elements to effect histories; by default it is
this identity-style embedding, and individual elements may be overridden.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import numerics as nm
from .decoherence import trace_form
from .errors import NumericalError, ValidationError
from .histories import ORDER_TOL, TensorHistory, class_operator_extension, embed_support

INJECTIVITY_TOL = 1e-9
PROBABILITY_WINDOW = 1e-9
NORMALISATION_FLOOR = 1e-12
RESIDUAL_TOL = 1e-10


class BooleanLattice:
    """Atom-generated Boolean lattice with a valuation into tensor histories.

    Use :func:`lattice_from_atoms` to build one; it checks the invariants.
    """

    def __init__(self, atoms, zero_image=None, valuation=None, labels=None):
        atoms = list(atoms)
        if not atoms:
            raise ValidationError("a lattice needs at least one atom")
        dim = atoms[0].dim
        if zero_image is None:
            zero_image = TensorHistory.zero(atoms[0].support, dim)
        valuation = dict(valuation or {})
        if labels is None:
            labels = [f"a{i}" for i in range(len(atoms))]
        labels = [str(x) for x in labels]
        if len(labels) != len(atoms) or len(set(labels)) != len(labels):
            raise ValidationError("atom labels must be unique, one per atom")
        self.labels = tuple(labels)
        self.n = len(atoms)
        self.dim = dim

        members = atoms + [zero_image] + list(valuation.values())
        if any(h.dim != dim for h in members):
            raise ValidationError("all histories of a lattice need the same dimension")
        self.support = tuple(sorted({t for h in members for t in h.support}))
        self.atoms = tuple(embed_support(a, self.support) for a in atoms)
        self.zero_image = embed_support(zero_image, self.support)
        self.valuation = {
            self.element(k): embed_support(v, self.support) for k, v in valuation.items()
        }

    # -- elements -------------------------------------------------------
    @property
    def top(self) -> frozenset:
        return frozenset(range(self.n))

    @property
    def bottom(self) -> frozenset:
        return frozenset()

    def elements(self) -> list:
        """All ``2**n`` elements, ordered by bitmask."""
        return [
            frozenset(i for i in range(self.n) if mask >> i & 1) for mask in range(1 << self.n)
        ]

    def element(self, spec) -> frozenset:
        """Normalise an element given as index set, label list or text.

        Text is comma-separated labels, or ``+``-joined labels when no comma
        is present and the text is not itself a label. Labels may contain
        ``+``; a ``+``-joined text must split into labels in exactly one way.
        ``"0"`` and ``"1"`` denote bottom and top unless they are labels.
        """
        if isinstance(spec, str):
            text = spec.strip()
            if text in self.labels:
                parts = [text]
            elif text in ("0", "", "{}"):
                return self.bottom
            elif text == "1":
                return self.top
            elif "," in text:
                parts = [p.strip() for p in text.split(",") if p.strip()]
            else:
                parts = self._split_plus(text)
            spec = parts
        out = set()
        for x in spec:
            if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
                if not 0 <= x < self.n:
                    raise ValidationError(f"atom index out of range: {x}")
                out.add(int(x))
            elif isinstance(x, str) and x in self.labels:
                out.add(self.labels.index(x))
            else:
                raise ValidationError(f"unknown atom: {x!r}")
        return frozenset(out)

    def _split_plus(self, text: str) -> list:
        # all ways of writing text as label + label + ...
        ways = {len(text): [[]]}
        for i in range(len(text) - 1, -1, -1):
            found = []
            for label in self.labels:
                j = i + len(label)
                if text.startswith(label, i) and (j == len(text) or text[j] == "+"):
                    rest = ways.get(j if j == len(text) else j + 1, [])
                    found += [[label] + r for r in rest]
            if found:
                ways[i] = found[:2]
        splits = ways.get(0, [])
        if len(splits) == 1:
            return splits[0]
        if len(splits) > 1:
            raise ValidationError(f"ambiguous element: {text!r}; separate labels with commas")
        return [p.strip() for p in text.split("+") if p.strip()]

    def name(self, element) -> str:
        element = self.element(element)
        if not element:
            return "0"
        return ",".join(self.labels[i] for i in sorted(element))

    def join(self, a, b) -> frozenset:
        return self.element(a) | self.element(b)

    def meet(self, a, b) -> frozenset:
        return self.element(a) & self.element(b)

    def neg(self, a) -> frozenset:
        return self.top - self.element(a)

    # -- images ---------------------------------------------------------
    def default_image(self, element) -> TensorHistory:
        """The effect history the element itself stands for."""
        element = self.element(element)
        z = self.zero_image.op
        op = z + sum((self.atoms[i].op - z for i in sorted(element)), np.zeros_like(z))
        return TensorHistory(self.support, op, self.dim, validate=False)

    def image(self, element) -> TensorHistory:
        """Valuation of an element (override if present, else the default)."""
        element = self.element(element)
        if element in self.valuation:
            return self.valuation[element]
        return self.default_image(element)

    def with_valuation(self, valuation: Mapping) -> "BooleanLattice":
        atoms = list(self.atoms)
        return BooleanLattice(atoms, self.zero_image, valuation, self.labels)


def _stack(images) -> np.ndarray:
    return np.stack([h.op for h in list(images)])


def _min_pairwise_distance(ops: np.ndarray):
    flat = ops.reshape(len(ops), -1)
    best, pair = np.inf, None
    for i in range(len(flat) - 1):
        dist = np.linalg.norm(flat[i + 1:] - flat[i], axis=1)
        j = int(np.argmin(dist))
        if dist[j] < best:
            best, pair = float(dist[j]), (i, i + 1 + j)
    return best, pair


def _valuation_residuals(lattice: BooleanLattice, ops: np.ndarray):
    """Residual ``||M(b1 v b2) - M(b1) - M(b2) + M(b1 ^ b2)||_F`` for every pair."""
    masks = np.arange(1 << lattice.n)
    b1, b2 = np.meshgrid(masks, masks, indexing="ij")
    b1, b2 = b1.ravel(), b2.ravel()
    worst, pair = 0.0, (0, 0)
    chunk = 4096
    for start in range(0, len(b1), chunk):
        x, y = b1[start:start + chunk], b2[start:start + chunk]
        r = ops[x | y] - ops[x] - ops[y] + ops[x & y]
        norms = np.linalg.norm(r.reshape(len(r), -1), axis=1)
        k = int(np.argmax(norms))
        if norms[k] > worst:
            worst, pair = float(norms[k]), (int(x[k]), int(y[k]))
    return worst, pair


def _monotonicity_violations(lattice: BooleanLattice, ops: np.ndarray) -> list:
    """Covering pairs ``S < S + {a}`` whose images are not ordered."""
    bad = []
    for mask in range(1 << lattice.n):
        for i in range(lattice.n):
            if not mask >> i & 1:
                if not nm.leq(ops[mask], ops[mask | 1 << i], ORDER_TOL):
                    bad.append((mask, mask | 1 << i))
    return bad


def _mask_element(lattice: BooleanLattice, mask: int) -> frozenset:
    return frozenset(i for i in range(lattice.n) if mask >> i & 1)


def lattice_from_atoms(
    atoms: Sequence[TensorHistory],
    zero_image: TensorHistory | None = None,
    labels: Sequence[str] | None = None,
    valuation: Mapping | None = None,
) -> BooleanLattice:
    """Build a lattice and verify its structural invariants.

    Raises ``ValidationError("atoms not summable")`` if some element's default
    image is not an effect lying above the zero image, and
    ``ValidationError("valuation not injective")`` if two elements coincide.
    A custom ``valuation`` is stored as given; audit it with
    :func:`check_admissible`.
    """
    lattice = BooleanLattice(atoms, zero_image, valuation, labels)
    z = lattice.zero_image.op
    if not nm.is_effect(z, ORDER_TOL):
        raise ValidationError("zero image is not an effect")
    for a in lattice.atoms:
        if not nm.leq(z, a.op, ORDER_TOL):
            raise ValidationError("atoms not summable: atom not above the zero image")
    if not nm.is_effect(lattice.default_image(lattice.top).op, ORDER_TOL):
        raise ValidationError("atoms not summable")
    ops = _stack(lattice.default_image(e) for e in lattice.elements())
    dist, _ = _min_pairwise_distance(ops)
    if dist <= INJECTIVITY_TOL:
        raise ValidationError("valuation not injective")
    residual, _ = _valuation_residuals(lattice, ops)
    if residual > RESIDUAL_TOL * nm.scale(ops[-1]):
        raise ValidationError(f"valuation condition violated (residual {residual:.3e})")
    return lattice


@dataclass
class AdmissibilityReport:
    passed: bool
    valuation_residual: float
    valuation_pair: tuple
    undefined_differences: list
    injective: bool
    min_distance: float
    weight_residual: float
    weight_pair: tuple
    violations: list = field(default_factory=list)


def check_admissible(ctx, lattice: BooleanLattice, valuation: Mapping | None = None) -> AdmissibilityReport:
    """Audit a valuation: valuation condition, injectivity, weight preservation.

    Weight preservation compares the extended weight of every element pair
    with that of their images (all pairs, not only atoms).
    """
    if valuation is not None:
        lattice = lattice.with_valuation(valuation)
    s = getattr(ctx, "scenario", ctx)
    elements = lattice.elements()
    images = _stack(lattice.image(e) for e in elements)
    plain = _stack(lattice.default_image(e) for e in elements)
    violations = []

    residual, rpair = _valuation_residuals(lattice, images)
    vpair = tuple(lattice.name(_mask_element(lattice, m)) for m in rpair)
    if residual > RESIDUAL_TOL * nm.scale(images[-1]):
        violations.append(f"valuation condition fails at {vpair}: residual {residual:.3e}")
    undefined = [
        tuple(lattice.name(_mask_element(lattice, m)) for m in pair)
        for pair in _monotonicity_violations(lattice, images)
    ]
    if undefined:
        violations.append(f"partial differences undefined for {len(undefined)} covering pairs")
    effects_ok = all(nm.is_effect(op, ORDER_TOL) for op in images)
    if not effects_ok:
        violations.append("valuation leaves the effects")

    dist, dpair = _min_pairwise_distance(images)
    injective = dist > INJECTIVITY_TOL
    if not injective:
        names = tuple(lattice.name(_mask_element(lattice, m)) for m in dpair)
        violations.append(f"valuation not injective: {names}")

    rho = s.initial_state
    c_img = [class_operator_extension(s, TensorHistory(lattice.support, op, lattice.dim, validate=False)) for op in images]
    c_el = [class_operator_extension(s, TensorHistory(lattice.support, op, lattice.dim, validate=False)) for op in plain]
    wres, wpair = 0.0, ("0", "0")
    for i, j in itertools.product(range(len(elements)), repeat=2):
        r = abs(trace_form(c_img[i], rho, c_img[j]) - trace_form(c_el[i], rho, c_el[j]))
        if r > wres:
            wres, wpair = r, (lattice.name(elements[i]), lattice.name(elements[j]))
    if wres > RESIDUAL_TOL:
        violations.append(f"decoherence weights not preserved at {wpair}: residual {wres:.3e}")

    return AdmissibilityReport(
        passed=not violations,
        valuation_residual=residual,
        valuation_pair=vpair,
        undefined_differences=undefined,
        injective=injective,
        min_distance=dist,
        weight_residual=wres,
        weight_pair=wpair,
        violations=violations,
    )


@dataclass(frozen=True)
class ConsistencyReport:
    """``consistent`` iff ``worst_value <= threshold`` (``tol`` scaled by the norm)."""

    consistent: bool
    worst_pair: tuple | None
    worst_value: float
    tol: float
    threshold: float


def _class_operators(s, lattice: BooleanLattice, elements) -> dict:
    return {e: class_operator_extension(s, lattice.image(e)) for e in elements}


def _functional(ctx, lattice, elements) -> tuple:
    s = getattr(ctx, "scenario", ctx)
    ops = _class_operators(s, lattice, set(elements))
    rho = s.initial_state

    def d(a, b):
        return trace_form(ops[a], rho, ops[b])

    return d


def check_consistent(ctx, lattice: BooleanLattice, tol: float = 1e-9, strict: bool = False) -> ConsistencyReport:
    """Consistency test on atom pairs (and the bottom element).

    By bi-additivity the real part on any pair of disjoint elements is a sum
    of these terms. ``strict`` requires the full complex value to vanish
    instead of the real part only.
    """
    atoms = [frozenset([i]) for i in range(lattice.n)]
    bottom, top = lattice.bottom, lattice.top
    d = _functional(ctx, lattice, atoms + [bottom, top])
    pairs = [(atoms[i], atoms[j]) for i, j in itertools.combinations(range(lattice.n), 2)]
    pairs += [(bottom, bottom)] + [(bottom, a) for a in atoms]
    measure = abs if strict else (lambda z: abs(z.real))
    worst_value, worst_pair = -1.0, None
    for a, b in pairs:
        v = measure(d(a, b))
        if v > worst_value:
            worst_value = v
            worst_pair = tuple(min(x) if x else None for x in (a, b))
    threshold = tol * max(1.0, abs(d(top, top)))
    return ConsistencyReport(
        consistent=worst_value <= threshold,
        worst_pair=worst_pair,
        worst_value=worst_value,
        tol=tol,
        threshold=threshold,
    )


def probability(ctx, lattice: BooleanLattice, element, tol: float = 1e-9) -> float:
    """``d(M b, M b) / d(M 1, M 1)`` on a consistent lattice."""
    return _probabilities(ctx, lattice, [element], tol)[0]


def _probabilities(ctx, lattice, elements, tol) -> list:
    if not check_consistent(ctx, lattice, tol).consistent:
        raise NumericalError("inconsistent lattice")
    elements = [lattice.element(e) for e in elements]
    d = _functional(ctx, lattice, elements + [lattice.top])
    norm = d(lattice.top, lattice.top).real
    if norm <= NORMALISATION_FLOOR:
        raise NumericalError("degenerate normalization")
    return [d(e, e).real / norm for e in elements]


def implies(ctx, lattice: BooleanLattice, e1, e2, tol: float = 1e-9) -> bool:
    """Whether ``p(e1 ^ e2) / p(e1)`` equals one within ``1e-9``."""
    e1, e2 = lattice.element(e1), lattice.element(e2)
    p1, p12 = _probabilities(ctx, lattice, [e1, e1 & e2], tol)
    if p1 <= NORMALISATION_FLOOR:
        raise NumericalError("conditional undefined")
    return abs(p12 / p1 - 1.0) <= PROBABILITY_WINDOW


def equivalent(ctx, lattice: BooleanLattice, e1, e2, tol: float = 1e-9) -> bool:
    return implies(ctx, lattice, e1, e2, tol) and implies(ctx, lattice, e2, e1, tol)


def implies_lower_bound(ctx, lattice: BooleanLattice, e1, e2, e3, tol: float = 1e-9) -> bool:
    """Implication through a common lower bound ``e3`` of ``e1`` and ``e2``."""
    e1, e2, e3 = (lattice.element(e) for e in (e1, e2, e3))
    if not (e3 <= e1 and e3 <= e2):
        raise ValidationError("e3 not a common lower bound")
    p1, p3 = _probabilities(ctx, lattice, [e1, e3], tol)
    if p1 <= NORMALISATION_FLOOR:
        raise NumericalError("conditional undefined")
    return abs(p3 / p1 - 1.0) <= PROBABILITY_WINDOW
