"""Scenario files (JSON) and deterministic report serialisation.

Complex scalars are ``[re, im]`` pairs (a bare real number is accepted on
input); matrices are row-major nested lists of scalars.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics as nm
from .errors import ValidationError
from .histories import HomogeneousEffectHistory, TensorHistory, sigma_fin
from .logic import BooleanLattice, lattice_from_atoms
from .quantum import Scenario


class ScenarioError(ValidationError):
    """Validation failure pinned to a field path such as ``operators.E``."""

    def __init__(self, field_path: str, message: str):
        super().__init__(f"{field_path}: {message}")
        self.field = field_path
        self.message = message


def _scalar(x, where: str) -> complex:
    if isinstance(x, bool):
        raise ScenarioError(where, "expected a number or [re, im] pair")
    if isinstance(x, (int, float)):
        return complex(x)
    if isinstance(x, list) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise ScenarioError(where, "expected a number or [re, im] pair")


def parse_matrix(data, where: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise ScenarioError(where, "expected a matrix (list of rows)")
    n = len(data)
    if any(len(r) != n for r in data):
        raise ScenarioError(where, "matrix must be square")
    if dim is not None and n != dim:
        raise ScenarioError(where, f"expected dimension {dim}, got {n}")
    m = np.array([[_scalar(x, f"{where}[{i}][{j}]") for j, x in enumerate(r)] for i, r in enumerate(data)])
    if not np.all(np.isfinite(m)):
        raise ScenarioError(where, "non-finite entry")
    return m


def parse_vector(data, where: str, dim: int) -> np.ndarray:
    if not isinstance(data, list) or len(data) != dim:
        raise ScenarioError(where, f"expected a vector of length {dim}")
    return np.array([_scalar(x, f"{where}[{i}]") for i, x in enumerate(data)])


def encode_complex(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def encode_matrix(m) -> list:
    return [[encode_complex(x) for x in row] for row in np.asarray(m)]


def _real(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise ScenarioError(where, "expected a finite real number")
    return float(x)


def _times(data, where: str) -> list:
    if not isinstance(data, list):
        raise ScenarioError(where, "expected a list of times")
    return [_real(t, f"{where}[{i}]") for i, t in enumerate(data)]


@dataclass
class LoadedScenario:
    scenario: Scenario
    operators: dict
    histories: dict
    families: dict
    raw: dict = field(repr=False)

    def tensor(self, name: str) -> TensorHistory:
        h = self.histories[name]
        return sigma_fin(h) if isinstance(h, HomogeneousEffectHistory) else h

    def lattice(self, name: str) -> BooleanLattice:
        return self.families[name]["lattice"]


def _history(name: str, spec, operators: dict, dim: int):
    where = f"histories.{name}"
    if not isinstance(spec, dict):
        raise ScenarioError(where, "expected an object")
    kind = spec.get("kind")
    if kind == "homogeneous":
        events = spec.get("events")
        if not isinstance(events, list):
            raise ScenarioError(f"{where}.events", "expected a list of events")
        parsed = []
        for i, ev in enumerate(events):
            ew = f"{where}.events[{i}]"
            if not isinstance(ev, dict) or "time" not in ev or "operator" not in ev:
                raise ScenarioError(ew, "event needs 'time' and 'operator'")
            op = ev["operator"]
            if op not in operators:
                raise ScenarioError(f"{ew}.operator", f"unknown operator: {op}")
            parsed.append((_real(ev["time"], f"{ew}.time"), operators[op]))
        try:
            return HomogeneousEffectHistory(parsed, dim)
        except ValidationError as exc:
            raise ScenarioError(where, str(exc)) from None
    if kind == "tensor":
        support = _times(spec.get("support"), f"{where}.support")
        m = parse_matrix(spec.get("matrix"), f"{where}.matrix", dim ** len(support))
        try:
            return TensorHistory(support, m, dim)
        except ValidationError as exc:
            raise ScenarioError(where, str(exc)) from None
    raise ScenarioError(f"{where}.kind", "expected 'homogeneous' or 'tensor'")


def _tensor_ref(spec, where: str, histories: dict, dim: int) -> TensorHistory:
    if isinstance(spec, str):
        if spec not in histories:
            raise ScenarioError(where, f"unknown history: {spec}")
        h = histories[spec]
        return sigma_fin(h) if isinstance(h, HomogeneousEffectHistory) else h
    if isinstance(spec, dict):
        support = _times(spec.get("support"), f"{where}.support")
        m = parse_matrix(spec.get("matrix"), f"{where}.matrix", dim ** len(support))
        try:
            return TensorHistory(support, m, dim)
        except ValidationError as exc:
            raise ScenarioError(where, str(exc)) from None
    raise ScenarioError(where, "expected a history name or {support, matrix}")


def _family(name: str, spec, histories: dict, dim: int) -> dict:
    where = f"families.{name}"
    if isinstance(spec, list):
        spec = {"atoms": spec}
    if not isinstance(spec, dict):
        raise ScenarioError(where, "expected an object or a list of atom names")
    atoms = spec.get("atoms")
    if not isinstance(atoms, list) or not atoms:
        raise ScenarioError(f"{where}.atoms", "expected a non-empty list of history names")
    for i, a in enumerate(atoms):
        if a not in histories:
            raise ScenarioError(f"{where}.atoms[{i}]", f"unknown history: {a}")
    tol = spec.get("tol", 1e-9)
    tol = _real(tol, f"{where}.tol")
    zero = spec.get("zero_image")
    zero = None if zero is None else _tensor_ref(zero, f"{where}.zero_image", histories, dim)
    valuation = {}
    for key, value in (spec.get("valuation") or {}).items():
        valuation[key] = _tensor_ref(value, f"{where}.valuation.{key}", histories, dim)
    tensors = [
        sigma_fin(histories[a]) if isinstance(histories[a], HomogeneousEffectHistory) else histories[a]
        for a in atoms
    ]
    try:
        lattice = lattice_from_atoms(tensors, zero, atoms)
        if valuation:
            lattice = lattice.with_valuation(valuation)
    except ValidationError as exc:
        raise ScenarioError(where, str(exc)) from None
    return {"atoms": list(atoms), "tol": tol, "lattice": lattice}


def load_scenario_data(data) -> LoadedScenario:
    """Validate a parsed scenario document; raises :class:`ScenarioError`."""
    if not isinstance(data, dict):
        raise ScenarioError("<root>", "expected an object")
    dim = data.get("dimension")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ScenarioError("dimension", "expected a positive integer")
    hbar = _real(data.get("hbar", 1.0), "hbar")
    if hbar <= 0:
        raise ScenarioError("hbar", "must be positive")
    t0 = _real(data.get("fiducial_time", 0.0), "fiducial_time")
    h = parse_matrix(data.get("hamiltonian"), "hamiltonian", dim)
    if not nm.is_hermitian(h):
        raise ScenarioError("hamiltonian", "not hermitian")

    state = data.get("initial_state")
    if not isinstance(state, dict):
        raise ScenarioError("initial_state", "expected {kind, matrix|vector}")
    kind = state.get("kind")
    if kind == "pure":
        psi = parse_vector(state.get("vector"), "initial_state.vector", dim)
        if abs(np.linalg.norm(psi) - 1.0) > 1e-10:
            raise ScenarioError("initial_state.vector", "state not normalized")
        rho = np.outer(psi, psi.conj())
    elif kind == "density":
        rho = parse_matrix(state.get("matrix"), "initial_state.matrix", dim)
        if not nm.classify(rho).is_density:
            raise ScenarioError("initial_state.matrix", "not a density operator")
    else:
        raise ScenarioError("initial_state.kind", "expected 'pure' or 'density'")
    scenario = Scenario(h, rho, t0, hbar)

    operators = {}
    for name, m in (data.get("operators") or {}).items():
        op = parse_matrix(m, f"operators.{name}", dim)
        if not nm.is_effect(op):
            raise ScenarioError(f"operators.{name}", f"not an effect: {name}")
        operators[name] = op

    histories = {
        name: _history(name, spec, operators, dim)
        for name, spec in (data.get("histories") or {}).items()
    }
    families = {
        name: _family(name, spec, histories, dim)
        for name, spec in (data.get("families") or {}).items()
    }
    return LoadedScenario(scenario, operators, histories, families, data)


def load_scenario(path) -> LoadedScenario:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError("<file>", f"cannot read scenario: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError("<file>", f"invalid JSON: {exc.msg} at line {exc.lineno}") from None
    return load_scenario_data(data)


def dumps(obj, indent: int = 2) -> str:
    """JSON with insertion-ordered keys and floats at 17 significant digits."""
    return _emit(obj, indent, 0)


def _emit(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return json.dumps(str(x))
        return format(x, ".17g")
    if isinstance(obj, (complex, np.complexfloating)):
        return _emit(encode_complex(obj), indent, level)
    if isinstance(obj, np.ndarray):
        return _emit(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_emit(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(x, (dict, list, tuple)) for x in obj):
            return "[" + ", ".join(_emit(x, indent, level + 1) for x in obj) + "]"
        items = [pad + _emit(x, indent, level + 1) for x in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")
