"""Command-line front end.

Exit codes: 0 the command ran (boolean answers live in the payload),
2 usage error, 3 scenario validation error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import numerics as nm
from .decoherence import DecoherenceContext, Kind, decoherence_matrix
from .errors import EffectHistoryError, ValidationError
from .histories import HomogeneousEffectHistory, class_operator_extension, class_operator_first_kind
from .logic import check_admissible, check_consistent, implies, implies_lower_bound, probability
from .scenario_file import ScenarioError, dumps, encode_matrix, load_scenario

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_NUMERICAL = 4


class UsageError(Exception):
    pass


def _classification(m) -> dict:
    c = nm.classify(m)
    return {
        "hermitian": c.is_hermitian,
        "psd": c.is_psd,
        "effect": c.is_effect,
        "projector": c.is_projector,
        "density": c.is_density,
    }


def _family(loaded, name):
    if name not in loaded.families:
        raise UsageError(f"unknown family: {name}")
    return loaded.families[name]


def _history_inputs(loaded, names) -> dict:
    raw = loaded.raw
    histories = {n: raw["histories"][n] for n in names}
    operators = {}
    for spec in histories.values():
        for ev in spec.get("events", []):
            operators[ev["operator"]] = raw["operators"][ev["operator"]]
    return {"operators": operators, "histories": histories}


def _family_inputs(loaded, name) -> dict:
    spec = loaded.raw["families"][name]
    atoms = spec if isinstance(spec, list) else spec["atoms"]
    valuation = {} if isinstance(spec, list) else spec.get("valuation") or {}
    refs = list(atoms) + [v for v in valuation.values() if isinstance(v, str)]
    zero = None if isinstance(spec, list) else spec.get("zero_image")
    if isinstance(zero, str):
        refs.append(zero)
    return {"families": {name: spec}, **_history_inputs(loaded, dict.fromkeys(refs))}


def _element(lattice, text):
    try:
        return lattice.element(text)
    except ValidationError as exc:
        raise UsageError(str(exc)) from None


def cmd_validate(loaded, args):
    s = loaded.scenario
    payload = {
        "dimension": s.dim,
        "hbar": s.hbar,
        "fiducial_time": s.t0,
        "initial_state": _classification(s.initial_state),
        "operators": {k: _classification(v) for k, v in loaded.operators.items()},
        "histories": {
            k: {
                "kind": "homogeneous" if isinstance(h, HomogeneousEffectHistory) else "tensor",
                "support": list(h.support),
            }
            for k, h in loaded.histories.items()
        },
        "families": {
            k: {"atoms": f["atoms"], "elements": 2 ** len(f["atoms"])}
            for k, f in loaded.families.items()
        },
    }
    return payload, [], {}


def cmd_classop(loaded, args):
    name = args.history
    if name not in loaded.histories:
        raise UsageError(f"unknown history: {name}")
    h = loaded.histories[name]
    s = loaded.scenario
    if isinstance(h, HomogeneousEffectHistory):
        c, kind = class_operator_first_kind(s, h), "first"
    else:
        c, kind = class_operator_extension(s, h), "extended"
    payload = {"history": name, "kind": kind, "matrix": encode_matrix(c)}
    diagnostics = [{"name": "operator_norm", "value": nm.operator_norm(c)}]
    return payload, diagnostics, _history_inputs(loaded, [name])


def cmd_decohere(loaded, args):
    fam = _family(loaded, args.family)
    kind = Kind(args.kind)
    if kind is Kind.FIRST_KIND:
        family = [loaded.histories[a] for a in fam["atoms"]]
        if not all(isinstance(h, HomogeneousEffectHistory) for h in family):
            raise ValidationError("first-kind weights need homogeneous histories")
    else:
        family = [loaded.tensor(a) for a in fam["atoms"]]
    m = decoherence_matrix(DecoherenceContext(loaded.scenario, kind), family, fam["atoms"])
    payload = {
        "family": args.family,
        "kind": kind.value,
        "labels": list(m.labels),
        "matrix": encode_matrix(m.values),
    }
    diagnostics = [
        {"name": "hermiticity_residual", "value": m.hermiticity_residual()},
        {"name": "min_diagonal", "value": m.min_diagonal()},
    ]
    return payload, diagnostics, _family_inputs(loaded, args.family)


def _tol(args, fam):
    return args.tol if args.tol is not None else fam["tol"]


def cmd_consistent(loaded, args):
    fam = _family(loaded, args.family)
    lattice = fam["lattice"]
    r = check_consistent(loaded.scenario, lattice, _tol(args, fam), strict=args.strict)
    pair = None
    if r.worst_pair is not None:
        pair = [lattice.labels[i] if i is not None else "0" for i in r.worst_pair]
    payload = {
        "family": args.family,
        "consistent": r.consistent,
        "worst_pair": pair,
        "worst_value": r.worst_value,
        "tol": r.tol,
        "threshold": r.threshold,
        "strict": args.strict,
    }
    return payload, [], _family_inputs(loaded, args.family)


def cmd_check_lattice(loaded, args):
    fam = _family(loaded, args.family)
    r = check_admissible(loaded.scenario, fam["lattice"])
    payload = {
        "family": args.family,
        "admissible": r.passed,
        "valuation_residual": r.valuation_residual,
        "valuation_pair": list(r.valuation_pair),
        "undefined_differences": [list(p) for p in r.undefined_differences],
        "injective": r.injective,
        "min_distance": r.min_distance,
        "weight_residual": r.weight_residual,
        "weight_pair": list(r.weight_pair),
        "violations": r.violations,
    }
    return payload, [], _family_inputs(loaded, args.family)


def cmd_prob(loaded, args):
    fam = _family(loaded, args.family)
    lattice = fam["lattice"]
    e = _element(lattice, args.element)
    p = probability(loaded.scenario, lattice, e, _tol(args, fam))
    payload = {"family": args.family, "element": lattice.name(e), "probability": p}
    return payload, [], _family_inputs(loaded, args.family)


def cmd_implies(loaded, args):
    fam = _family(loaded, args.family)
    lattice = fam["lattice"]
    tol = _tol(args, fam)
    e1, e2 = _element(lattice, args.e1), _element(lattice, args.e2)
    s = loaded.scenario
    if args.via is not None:
        e3 = _element(lattice, args.via)
        result = implies_lower_bound(s, lattice, e1, e2, e3, tol)
        numerator = probability(s, lattice, e3, tol)
    else:
        e3 = None
        result = implies(s, lattice, e1, e2, tol)
        numerator = probability(s, lattice, e1 & e2, tol)
    conditional = numerator / probability(s, lattice, e1, tol)
    payload = {
        "family": args.family,
        "e1": lattice.name(e1),
        "e2": lattice.name(e2),
        "via": None if e3 is None else lattice.name(e3),
        "implies": result,
        "conditional": conditional,
    }
    return payload, [], _family_inputs(loaded, args.family)


COMMANDS = {
    "validate": cmd_validate,
    "classop": cmd_classop,
    "decohere": cmd_decohere,
    "consistent": cmd_consistent,
    "check-lattice": cmd_check_lattice,
    "prob": cmd_prob,
    "implies": cmd_implies,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("scenario", help="scenario file (JSON)")
    common.add_argument("--format", choices=["json", "text"], default="json")
    common.add_argument("--tol", type=float, default=None)

    parser = argparse.ArgumentParser(
        prog="effhist", description="Consistent effect-histories calculator."
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="load and classify a scenario")
    p = sub.add_parser("classop", parents=[common], help="class operator of a history")
    p.add_argument("history")
    p = sub.add_parser("decohere", parents=[common], help="decoherence matrix of a family")
    p.add_argument("--family", required=True)
    p.add_argument("--kind", choices=["first", "extended"], default="extended")
    p = sub.add_parser("consistent", parents=[common], help="consistency of a family lattice")
    p.add_argument("--family", required=True)
    p.add_argument("--strict", action="store_true", help="require the full complex value to vanish")
    p = sub.add_parser("check-lattice", parents=[common], help="admissibility of a family lattice")
    p.add_argument("--family", required=True)
    p = sub.add_parser("prob", parents=[common], help="probability of a lattice element")
    p.add_argument("--family", required=True)
    p.add_argument("--element", required=True)
    p = sub.add_parser("implies", parents=[common], help="implication between lattice elements")
    p.add_argument("--family", required=True)
    p.add_argument("e1")
    p.add_argument("e2")
    p.add_argument("--via", default=None, help="common lower bound to use instead of the meet")
    return parser


def _text(obj, level: int = 0) -> list:
    pad = "  " * level
    lines = []
    for key, value in obj.items():
        if isinstance(value, dict) and value:
            lines.append(f"{pad}{key}:")
            lines.extend(_text(value, level + 1))
        else:
            lines.append(f"{pad}{key}: {_scalar_text(value)}")
    return lines


def _scalar_text(value) -> str:
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, str):
        return value
    if isinstance(value, dict):
        return "{}"
    return dumps(value, indent=0).replace("\n", "")


def render(report: dict, fmt: str) -> str:
    if fmt == "text":
        shown = {k: v for k, v in report.items() if k != "inputs"}
        return "\n".join(_text(shown)) + "\n"
    return dumps(report) + "\n"


def execute(argv) -> tuple[int, dict, str]:
    """Run one command; returns ``(exit_code, report, output_format)``."""
    args = build_parser().parse_args(argv)
    report = {"command": args.command, "status": "ok", "inputs": {}, "payload": {}, "diagnostics": []}
    code = EXIT_OK
    try:
        loaded = load_scenario(args.scenario)
        payload, diagnostics, inputs = COMMANDS[args.command](loaded, args)
        report.update(inputs=inputs, payload=payload, diagnostics=diagnostics)
    except UsageError as exc:
        code = EXIT_USAGE
        report.update(status="usage_error", payload={"message": str(exc)})
    except ScenarioError as exc:
        code = EXIT_VALIDATION
        report.update(status="validation_error", payload={"field": exc.field, "message": exc.message})
    except ValidationError as exc:
        code = EXIT_VALIDATION
        report.update(status="validation_error", payload={"field": None, "message": str(exc)})
    except (EffectHistoryError, np.linalg.LinAlgError) as exc:
        code = EXIT_NUMERICAL
        report.update(status="numerical_error", payload={"message": str(exc)})
    return code, report, args.format


def run_command(argv) -> tuple[int, str]:
    """Run one command; returns ``(exit_code, rendered_report)``."""
    code, report, fmt = execute(argv)
    return code, render(report, fmt)


def main(argv=None) -> int:
    code, report, fmt = execute(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(render(report, fmt))
    sys.stdout.flush()
    if code != EXIT_OK:
        print(f"effhist: {report['status']}: {report['payload'].get('message')}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
