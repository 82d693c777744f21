"""Command-line front end: compute, verify, transport."""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources

import jsonschema
import numpy as np

from . import __version__
from . import geometry as geo
from .interaction import CouplingSpec
from .numerics import EpsSchedule, TestFunction, verify_heaviside_identity
from .phase_space import ETA, FourMomentum, KinematicsError
from .smatrix import (Externals, ExternalLeg, Process, enumerate_diagrams, evaluate_element,
                      first_order_element, pair_orderings, second_order_element,
                      superficial_divergence)
from .suites import run_suite

EXIT_OK, EXIT_USAGE, EXIT_EMPTY, EXIT_DIVERGENT = 0, 1, 2, 3
DEFAULT_OPTIONS = {"eps": list(EpsSchedule().values), "verify": False, "evaluate": True, "exchange": False}
SPECIES_MASS_KEY = {"A": "A", "B": "B", "electron": "electron", "positron": "electron", "photon": "photon"}


class ProcessError(ValueError):
    pass


# --- serialization ---------------------------------------------------------------

def _encode(obj):
    if isinstance(obj, dict):
        return {str(k): _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _dump(obj, indent: int = 0) -> str:
    pad, inner = "  " * indent, "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {_dump(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(_dump(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + _dump(v, indent + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return json.dumps(str(obj))
        return format(obj, ".17g") if obj != int(obj) or abs(obj) >= 1e16 else repr(obj)
    return json.dumps(obj, ensure_ascii=False)


def dumps(obj) -> str:
    """Deterministic JSON: sorted keys, 17 significant digits, complex as {re, im}."""
    return _dump(_encode(obj)) + "\n"


# --- process files -------------------------------------------------------------

@dataclass
class ProcessSpec:
    model: str
    coupling: CouplingSpec
    process: Process
    momenta: dict
    indices: dict
    order: int = 1
    l: float = 1.0
    options: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _schema() -> dict:
    return json.loads(resources.files("artifact").joinpath("schema/process.schema.json").read_text())


def _pointer(err: jsonschema.ValidationError) -> str:
    return "/" + "/".join(str(p) for p in err.absolute_path)


def parse_process(data) -> ProcessSpec:
    if not isinstance(data, dict):
        with open(data) as fh:
            data = json.load(fh)
    validator = jsonschema.Draft202012Validator(_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        raise ProcessError(f"schema violation at {_pointer(e)}: {e.message}")
    model = data["model"]
    masses = dict(data.get("masses", {}))
    if model == "scalar2":
        if "ell" not in data["coupling"]:
            raise ProcessError("schema violation at /coupling: scalar2 needs 'ell'")
        coupling = CouplingSpec.scalar2(data["coupling"]["ell"], masses.get("A", 1.0))
    else:
        if "e" not in data["coupling"]:
            raise ProcessError("schema violation at /coupling: qed needs 'e'")
        coupling = CouplingSpec.qed(data["coupling"]["e"], masses.get("electron", 1.0))
    options = {**DEFAULT_OPTIONS, **data.get("options", {})}
    legs, momenta, indices = {"in": [], "out": []}, {}, {}
    for side in ("in", "out"):
        for i, leg in enumerate(data[side]):
            where = f"/{side}/{i}"
            sym = leg["symbol"]
            if sym in momenta or any(x.symbol == sym for x in legs["in"] + legs["out"]):
                raise ProcessError(f"duplicate symbol {sym!r} at {where}")
            m_sp = coupling.masses.get(SPECIES_MASS_KEY[leg["species"]], 0.0)
            if model == "qed" and leg["species"] in ("A", "B") or model == "scalar2" and leg["species"] not in ("A", "B"):
                raise ProcessError(f"species {leg['species']!r} at {where} not in model {model}")
            if "momentum" in leg:
                mom = leg["momentum"]
                m = mom.get("m", m_sp)
                if abs(m - m_sp) > 1e-9:
                    raise ProcessError(f"off-shell leg at {where}: mass {m} but species mass {m_sp}")
                try:
                    fm = FourMomentum.on_shell(m, mom["p"])
                except KinematicsError as exc:
                    raise ProcessError(f"leg at {where}: {exc}") from exc
                if "E" in mom and abs(mom["E"] - fm.energy) > 1e-9 * max(1.0, fm.energy):
                    raise ProcessError(f"off-shell leg at {where}: E={mom['E']} but shell energy {fm.energy!r}")
                momenta[sym] = fm
            indices[sym] = leg.get("index", 0)
            legs[side].append(ExternalLeg(leg["species"], side, sym, leg.get("index", 0)))
    process = Process(model, tuple(legs["in"]), tuple(legs["out"]))
    return ProcessSpec(model, coupling, process, momenta, indices, data.get("order", 1),
                       float(data.get("l", 1.0)), options, data)


# --- run -------------------------------------------------------------------------

@dataclass
class Report:
    body: dict
    exit_code: int = EXIT_OK
    metadata: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return dumps({**self.body, "metadata": self.metadata})

    def to_text(self) -> str:
        lines = [f"model {self.body.get('model')}  order {self.body.get('order')}  exit {self.exit_code}"]
        for note in self.body.get("notes", []):
            lines.append(f"note: {note}")
        for el in self.body.get("elements", []):
            lines.append(f"[{el['name']}] prefactor {el['prefactor']}")
            if el.get("delta"):
                lines.append(f"    delta {el['delta']}")
            for p in el.get("propagators", []):
                lines.append(f"    propagator {p['species']}: {p['form']}")
            if "value" in el:
                v = el["value"]
                lines.append(f"    value {format(v.real, '.17g')} {'+' if v.imag >= 0 else '-'} {format(abs(v.imag), '.17g')}i")
            if "error" in el:
                lines.append(f"    error {el['error']}")
            lines.append(f"    weight audit {'ok' if el['weight_audit']['ok'] else 'FAILED'}")
        for d in self.body.get("divergences", []):
            lines.append(f"[{d['figure']}] loops {d['loops']} uv {d['uv_degree']} ir {d['ir_degree']} -> {d['verdict']}")
        if "verification" in self.body:
            v = self.body["verification"]
            lines.append(f"heaviside identity relerr {format(v['relerr'], '.17g')} (bar {format(v['error_bar'], '.17g')})")
        return "\n".join(lines) + "\n"


def _delta_text(delta) -> str | None:
    return str(delta) if delta is not None else None


def run(spec: ProcessSpec) -> Report:
    t0 = time.time()
    opts = spec.options
    body = {"model": spec.model, "order": spec.order, "l": spec.l, "options": opts, "notes": [],
            "elements": [], "divergences": []}
    diagrams = enumerate_diagrams(spec.process, spec.order, exchange=opts["exchange"])
    body["diagrams"] = [d.name for d in diagrams]
    exit_code = EXIT_OK
    if not diagrams:
        body["notes"].append("empty support: no diagram connects these legs")
        exit_code = EXIT_EMPTY
    elements = []
    if spec.order == 1:
        elements = [first_order_element(d, spec.l, spec.coupling) for d in diagrams]
    else:
        for pair in pair_orderings([d for d in diagrams if d.loops == 0]):
            elements.append(second_order_element(pair, spec.l, spec.coupling))
        for d in diagrams:
            if d.loops:
                body["divergences"].append(superficial_divergence(d, spec.coupling.masses).to_json())
    have_all = all(leg.symbol in spec.momenta for leg in spec.process.legs)
    for me in elements:
        el = me.to_json()
        el["delta"] = _delta_text(me.delta)
        if opts["evaluate"] and have_all and not me.empty_support:
            try:
                ext = Externals(spec.momenta, spec.indices,
                                np.asarray(opts["observer"]) if "observer" in opts else None)
                el["value"] = evaluate_element(me, ext, spec.coupling, spec.l)
            except (KinematicsError, ValueError) as exc:
                el["error"] = f"smatrix: {exc}"
        body["elements"].append(el)
    if elements and all(me.empty_support for me in elements):
        body["notes"].append("empty support: every element is kinematically forbidden")
        exit_code = EXIT_EMPTY
    if diagrams and not elements and opts["evaluate"]:
        body["notes"].append("only loop diagrams: see divergences; nothing to evaluate")
        exit_code = EXIT_DIVERGENT
    if opts["verify"]:
        res = verify_heaviside_identity(1.0, 1, 1.0, TestFunction(), EpsSchedule(tuple(opts["eps"])))
        body["verification"] = res.to_json()
    audits = [el["weight_audit"]["ok"] for el in body["elements"]]
    body["weight_audit"] = {"elements": len(audits), "all_ok": all(audits)}
    meta = {"version": __version__, "runtime_s": round(time.time() - t0, 6)}
    return Report(body, exit_code, meta)


# --- verify / transport -----------------------------------------------------------

def verify(suite: str) -> Report:
    t0 = time.time()
    checks = run_suite(suite)
    ok = all(c["passed"] for c in checks)
    for c in checks:
        print(f"{'PASS' if c['passed'] else 'FAIL'} {suite}: {c['name']} ({c['value']:.3g} / tol {c['tol']:.3g})",
              file=sys.stderr)
    return Report({"suite": suite, "checks": checks, "passed": ok},
                  EXIT_OK if ok else EXIT_USAGE, {"version": __version__, "runtime_s": round(time.time() - t0, 6)})


def _params(items) -> dict:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise ProcessError(f"--params expects K=V, got {it!r}")
        k, v = it.split("=", 1)
        out[k] = float(v)
    return out


def transport(metric_id: str, params: dict, worldline_path: str, mode: str = "fermi") -> Report:
    metric = geo.metric_from_catalog(metric_id, params)
    wl = geo.Worldline.from_json(metric, worldline_path)
    span = (float(wl.t[0]), float(wl.t[-1]))
    tet = geo.orthonormal_tetrad(metric, wl.x[0], wl.u[0] / math.sqrt(wl.u[0] @ metric(wl.x[0]) @ wl.u[0]))
    fn = geo.fermi_transport if mode == "fermi" else geo.parallel_transport
    path = fn(metric, wl, tet, span)
    final = path.final()
    x1 = wl.position(span[1])
    body = {"metric": metric_id, "params": params, "mode": mode, "t_span": list(span),
            "initial_tetrad": tet, "final_tetrad": final,
            "gram_residual": geo.gram_residual(metric, x1, final, ETA),
            "tangent_norm_residual": wl.norm_residual()}
    return Report(body, EXIT_OK, {"version": __version__})


# --- entry point -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="artifact", description="Scattering-element engine on phase-space bundles.")
    sub = ap.add_subparsers(dest="command", required=True)
    c = sub.add_parser("compute", help="enumerate and evaluate the diagrams of a process file")
    c.add_argument("--process", required=True)
    c.add_argument("--format", choices=("json", "text"), default="json")
    c.add_argument("--out")
    v = sub.add_parser("verify", help="run a verification battery")
    v.add_argument("--suite", required=True, choices=("identities", "transport", "propagators", "divergences"))
    v.add_argument("--out")
    t = sub.add_parser("transport", help="transport an orthonormal tetrad along a worldline")
    t.add_argument("--metric", required=True)
    t.add_argument("--params", nargs="*", default=[])
    t.add_argument("--worldline", required=True)
    t.add_argument("--mode", choices=("fermi", "parallel"), default="fermi")
    t.add_argument("--out")
    return ap


def _emit(text: str, out: str | None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "compute":
            report = run(parse_process(args.process))
            _emit(report.to_text() if args.format == "text" else report.to_json(), args.out)
        elif args.command == "verify":
            report = verify(args.suite)
            _emit(report.to_json(), args.out)
        else:
            report = transport(args.metric, _params(args.params), args.worldline, args.mode)
            _emit(report.to_json(), args.out)
    except (ProcessError, KeyError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (KinematicsError, ValueError, RuntimeError) as exc:
        print(f"error: {type(exc).__module__.split('.')[-1]}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
