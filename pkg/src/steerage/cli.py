"""Command-line front end.

    steerage analyze STATE.json [--format text|json] [--grid K]
    steerage asymmetry STATE.json [--format text|json] [--grid K]
    steerage mesh STATE.json [--direction a2b|b2a] [--samples N]
    steerage quantity STATE.json [--grid K]

Exit codes: 0 ok, 2 input/parse error, 3 invalid state, 4 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .geometry import ellipsoid_of, fibonacci_sphere, sample_assemblage
from .qubit import (
    CorrelationMatrix,
    Direction,
    InvalidStateError,
    basic_state,
    bell_diagonal,
    pauli_decompose,
    phi_state,
    ref_state_29,
    validate_state,
    werner,
)
from .quantity import grid_for_level, steering_quantity

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_NUMERIC = 0, 2, 3, 4
GRID_ENV = "STEERAGE_GRID"
VARIANTS = ("density_matrix", "g_matrix", "bell_diagonal", "werner", "phi_state", "ref_state_29")
VERDICT_MARGIN = 1e-12
# magnitudes below this are roundoff and print as 0 so output is platform stable
REPORT_FLOOR = 1e-13


class SpecError(ValueError):
    """Malformed state description; the message names the location."""


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


@dataclass(frozen=True)
class StateSpec:
    kind: str
    payload: object

    def echo(self) -> dict:
        return {self.kind: self.payload}


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(f"{where}: expected a number, got {type(v).__name__}")
    if not math.isfinite(v):
        raise SpecError(f"{where}: number must be finite")
    return float(v)


def _vector(v, where: str) -> list[float]:
    if not isinstance(v, list) or len(v) != 3:
        raise SpecError(f"{where}: expected a list of 3 numbers")
    return [_number(x, f"{where}[{i}]") for i, x in enumerate(v)]


def _matrix(v, where: str) -> list[list[float]]:
    if not isinstance(v, list) or len(v) != 3:
        raise SpecError(f"{where}: expected a 3x3 matrix")
    return [_vector(row, f"{where}[{i}]") for i, row in enumerate(v)]


def parse_state_spec(doc) -> StateSpec:
    if not isinstance(doc, dict):
        raise SpecError("$: expected a JSON object with one state variant")
    keys = [k for k in doc if k in VARIANTS]
    unknown = [k for k in doc if k not in VARIANTS]
    if unknown:
        raise SpecError(f"$.{unknown[0]}: unknown state variant (expected one of {', '.join(VARIANTS)})")
    if len(keys) != 1:
        raise SpecError(f"$: exactly one state variant required, found {len(keys)}")
    kind = keys[0]
    body = doc[kind]
    where = f"$.{kind}"
    if kind == "density_matrix":
        if not isinstance(body, list) or len(body) != 4:
            raise SpecError(f"{where}: expected 4 rows")
        rows = []
        for i, row in enumerate(body):
            if not isinstance(row, list) or len(row) != 4:
                raise SpecError(f"{where}[{i}]: expected 4 entries")
            entries = []
            for j, z in enumerate(row):
                if not isinstance(z, list) or len(z) != 2:
                    raise SpecError(f"{where}[{i}][{j}]: expected [re, im]")
                entries.append([_number(z[0], f"{where}[{i}][{j}][0]"), _number(z[1], f"{where}[{i}][{j}][1]")])
            rows.append(entries)
        return StateSpec(kind, rows)
    if kind == "g_matrix":
        if not isinstance(body, dict) or set(body) != {"a", "b", "T"}:
            raise SpecError(f"{where}: expected keys a, b, T")
        return StateSpec(kind, {"a": _vector(body["a"], f"{where}.a"),
                                "b": _vector(body["b"], f"{where}.b"),
                                "T": _matrix(body["T"], f"{where}.T")})
    if kind == "bell_diagonal":
        return StateSpec(kind, _vector(body, where))
    if kind == "werner":
        if not isinstance(body, dict) or set(body) != {"p"}:
            raise SpecError(f"{where}: expected {{\"p\": number}}")
        return StateSpec(kind, {"p": _number(body["p"], f"{where}.p")})
    if kind == "phi_state":
        if not isinstance(body, dict) or "p" not in body or not set(body) <= {"p", "u"}:
            raise SpecError(f"{where}: expected keys p and optional u")
        u = _vector(body.get("u", [0.0, 0.0, 1.0]), f"{where}.u")
        if abs(math.sqrt(sum(c * c for c in u)) - 1) > 1e-9:
            raise SpecError(f"{where}.u: must be a unit vector")
        return StateSpec(kind, {"p": _number(body["p"], f"{where}.p"), "u": u})
    if body != {}:
        raise SpecError(f"{where}: preset takes no parameters")
    return StateSpec(kind, {})


def load_spec(path: str) -> StateSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(EXIT_PARSE, f"cannot read {path}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_PARSE, f"parse error in {path} at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    try:
        return parse_state_spec(doc)
    except SpecError as exc:
        raise CliError(EXIT_PARSE, f"invalid state description in {path}: {exc}") from exc


def correlation_of(state: StateSpec) -> CorrelationMatrix:
    body = state.payload
    if state.kind == "density_matrix":
        rho = np.array([[complex(re, im) for re, im in row] for row in body])
        return pauli_decompose(rho)
    if state.kind == "g_matrix":
        return CorrelationMatrix(a=body["a"], b=body["b"], T=body["T"])
    if state.kind == "bell_diagonal":
        return bell_diagonal(body)
    if state.kind == "werner":
        return werner(body["p"])
    if state.kind == "phi_state":
        return phi_state(body["p"], body["u"])
    return ref_state_29()


# -- formatting -----------------------------------------------------------------

def _clean(v):
    """Round floats to 12 significant digits for byte-stable output."""
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.ndarray):
        return [_clean(x) for x in v.tolist()]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if not math.isfinite(f):
            raise FloatingPointError("non-finite value in report")
        if abs(f) < REPORT_FLOOR:
            return 0.0
        return float(f"{f:.12g}") + 0.0
    return v


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if v is None:
        return "null"
    return str(v)


def _text_lines(d: dict, prefix: str = "") -> list[str]:
    lines = []
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict) and v:
            lines.extend(_text_lines(v, key + "."))
        elif isinstance(v, dict):
            lines.append(f"{key}: {{}}")
        elif k == "state":
            lines.append(f"{key}: {json.dumps(v, separators=(',', ':'))}")
        else:
            lines.append(f"{key}: {_fmt(v)}")
    return lines


def render(report: dict, fmt: str) -> str:
    report = _clean(report)
    if fmt == "json":
        return json.dumps(report, indent=2) + "\n"
    return "\n".join(_text_lines(report)) + "\n"


# -- analyses -------------------------------------------------------------------

def _resolve_grid(level):
    if level is None:
        env = os.environ.get(GRID_ENV)
        if env is not None:
            try:
                level = int(env)
            except ValueError as exc:
                raise CliError(EXIT_PARSE, f"{GRID_ENV} must be an integer, got {env!r}") from exc
        else:
            level = 0
    return grid_for_level(level)


def verdict_for(G: CorrelationMatrix, value: float, est_error: float) -> tuple[str, str]:
    margin = VERDICT_MARGIN + est_error
    if value > 1 + margin:
        return "steerable", "lower bound of the basic state exceeds 1 (congruent-ellipsoid criterion)"
    if G.is_bell_diagonal and value <= 1 + margin:
        return "unsteerable", "T state: the geometric model is optimal and its quantity is <= 1"
    return "unknown", "quantity of the basic state is only a lower bound for this state"


def _valid_state(state: StateSpec):
    try:
        G = correlation_of(state)
    except InvalidStateError as exc:
        raise CliError(EXIT_INVALID, f"invalid state: {exc}") from exc
    rep = validate_state(G)
    if not rep.valid:
        msg = json.dumps(_clean({"validity": rep.as_dict()}), indent=2)
        raise CliError(EXIT_INVALID, f"invalid state:\n{msg}")
    return G, rep


def _ellipsoid_dict(E) -> dict:
    return {
        "center": E.center,
        "semi_axes": E.principal,
        "axes": E.axes.T,
        "dimension": E.dimension,
        "conditioning": E.conditioning,
        "borderline": E.borderline,
    }


def _asymmetry_dict(rep) -> dict:
    def finding(f):
        return {
            "verdict": f.verdict,
            "lower_bound": f.lower_bound,
            "model_quantity": f.model_quantity,
            "required_translation": f.required_translation,
            "model_translation": f.model_translation,
            "marginal_translation": f.marginal_translation,
            "max_marginal_error": f.max_marginal_error,
            "max_figure_error": f.max_figure_error,
        }

    u = rep.uniqueness
    return {
        "p": rep.p,
        "u": rep.u,
        "b2a": finding(rep.b2a),
        "a2b": finding(rep.a2b),
        "translation_mismatch": rep.mismatch,
        "near_werner_limit": rep.near_werner_limit,
        "uniqueness": {
            "precondition_met": u["precondition_met"],
            "passed": u["passed"],
            "translation_delta": u["delta"],
            "marginal_mismatch": u["marginal_mismatch"],
        },
    }


def _phi_params(state: StateSpec):
    if state.kind == "ref_state_29":
        return 0.2, [0.0, 0.0, 1.0]
    if state.kind == "phi_state":
        return state.payload["p"], state.payload["u"]
    return None


def analyze(state: StateSpec, grid) -> dict:
    from .gmodel import asymmetry_report

    G, validity = _valid_state(state)
    Gb, _, _ = basic_state(G)
    q = steering_quantity(G, grid=grid)
    directions = {}
    for d in (Direction.A2B, Direction.B2A):
        verdict, evidence = verdict_for(G, q.value, q.est_error)
        directions[d.value] = {
            "ellipsoid": _ellipsoid_dict(ellipsoid_of(G, d)),
            "quantity": {
                "value": q.value,
                "dimension": q.dimension,
                "method": q.method,
                "est_error": q.est_error,
            },
            "verdict": verdict,
            "evidence": evidence,
        }
    report = {
        "tool": f"steerage {__version__}",
        "state": state.echo(),
        "grid": {"n_theta": grid.n_theta, "n_phi": grid.n_phi},
        "validity": {
            "valid": validity.valid,
            "hermiticity_residual": validity.hermiticity_residual,
            "trace_residual": validity.trace_residual,
            "min_eigenvalue": validity.min_eigenvalue,
        },
        "basic_state": {
            "T_diagonal": np.diag(Gb.T),
            "valid": validate_state(Gb).valid,
        },
        "directions": directions,
    }
    phi = _phi_params(state)
    if phi is not None and 0 < phi[0] <= 0.2:
        report["asymmetry"] = _asymmetry_dict(asymmetry_report(phi[0], phi[1], grid=grid))
    return report


def asymmetry(state: StateSpec, grid) -> dict:
    from .gmodel import asymmetry_report

    phi = _phi_params(state)
    if phi is None:
        raise CliError(EXIT_PARSE, f"asymmetry needs a phi_state or ref_state_29 input, got {state.kind}")
    p, u = phi
    if not 0 < p <= 0.2:
        raise CliError(EXIT_PARSE, f"$.phi_state.p: must lie in (0, 1/5], got {p!r}")
    _valid_state(state)
    rep = asymmetry_report(p, u, grid=grid)
    return {
        "tool": f"steerage {__version__}",
        "state": state.echo(),
        "grid": {"n_theta": grid.n_theta, "n_phi": grid.n_phi},
        "asymmetry": _asymmetry_dict(rep),
    }


MESH_HEADER = "x1,x2,x3,prob,s1,s2,s3"


def mesh(state: StateSpec, direction: str, samples: int) -> str:
    G, _ = _valid_state(state)
    if samples < 1:
        raise CliError(EXIT_PARSE, "--samples must be positive")
    rows = [MESH_HEADER]
    for smp in sample_assemblage(G, fibonacci_sphere(samples), direction):
        vals = list(smp.direction) + [smp.plus.prob] + list(smp.plus.shrinked)
        rows.append(",".join(_fmt(_clean(float(v))) for v in vals))
    return "\n".join(rows) + "\n"


def quantity_line(state: StateSpec, grid, direction: str) -> str:
    G, _ = _valid_state(state)
    q = steering_quantity(G, direction, grid=grid)
    return f"{_fmt(_clean(q.value))} {q.dimension} {_fmt(_clean(q.est_error))}\n"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="steerage", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"steerage {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=True, fmt=True):
        p.add_argument("input", help="JSON state description")
        if grid:
            p.add_argument("--grid", type=int, default=None,
                           help=f"scale the 128x256 sphere grid by 2**K (env {GRID_ENV})")
        if fmt:
            p.add_argument("--format", choices=("text", "json"), default="text")

    common(sub.add_parser("analyze", help="ellipsoids, quantities and verdicts"))
    common(sub.add_parser("asymmetry", help="one-way steering report for phi(p)"))
    pm = sub.add_parser("mesh", help="CSV of assemblage samples")
    common(pm, grid=False, fmt=False)
    pm.add_argument("--direction", choices=("a2b", "b2a"), default="a2b")
    pm.add_argument("--samples", type=int, default=400)
    pq = sub.add_parser("quantity", help="print value, dimension and est_error")
    common(pq, fmt=False)
    pq.add_argument("--direction", choices=("a2b", "b2a"), default="a2b")
    return parser


def run(argv=None) -> tuple[int, str, str]:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), "", ""
    try:
        state = load_spec(args.input)
        if args.command == "analyze":
            out = render(analyze(state, _resolve_grid(args.grid)), args.format)
        elif args.command == "asymmetry":
            out = render(asymmetry(state, _resolve_grid(args.grid)), args.format)
        elif args.command == "mesh":
            out = mesh(state, args.direction, args.samples)
        else:
            out = quantity_line(state, _resolve_grid(args.grid), args.direction)
    except CliError as exc:
        return exc.code, "", f"steerage: {exc}\n"
    except (FloatingPointError, ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        return EXIT_NUMERIC, "", f"steerage: numeric failure: {exc}\n"
    return EXIT_OK, out, ""


def main(argv=None) -> int:
    code, out, err = run(argv)
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":
    sys.exit(main())
