"""Command-line front end.

    dipolatt <subcommand> [--config file.json] [--key value]... [--out path]
             [--format csv|json] [--seed N] [--workers N]

Subcommands: fom, gate, fidelity, ensemble, sweep.  Parameters come from
built-in defaults, then the JSON config file, then the command line.  A JSON
output document (``{"config", "version", "rows"}``) is itself a valid
config file, so any run can be replayed.

JSON floats carry 17 significant digits; CSV floats carry 9.  Exit codes:
0 success, 2 validation, 3 numerical failure, 4 I/O.
"""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import __version__
from .errors import InputError, NumericalError, ValidationError

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

_POL = {"pi": 0, "sigma+": 1, "sigma-": -1}


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise InputError(f"not a boolean: {v!r}")


def _choice(*opts):
    def conv(v):
        if v not in opts:
            raise InputError(f"expected one of {', '.join(opts)}, got {v!r}")
        return v
    conv.__name__ = "choice"
    return conv


@dataclass(frozen=True)
class Param:
    name: str
    conv: Callable
    default: Any
    help: str = ""


_GEOMETRY = [
    Param("geometry", _choice("separated", "ellipsoid", "sphere", "sqrt_swap"), "separated",
          "trap geometry"),
    Param("eta", float, 0.05, "Lamb-Dicke parameter (spherical wells)"),
    Param("zbar", float, 2.5, "well separation in units of the rms width"),
    Param("eta_perp", float, 0.05, "transverse Lamb-Dicke parameter (ellipsoid)"),
    Param("eta_par", float, 0.1, "axial Lamb-Dicke parameter (ellipsoid)"),
    Param("polarization", _choice(*_POL), "pi", "catalysis polarisation"),
    Param("method", _choice("analytic", "quadrature"), "analytic", "closed form or quadrature"),
    Param("retardation", _bool, True, "keep retardation (quadrature only)"),
]

SCHEMAS = {
    "fom": _GEOMETRY,
    "sweep": _GEOMETRY,
    "gate": [
        Param("protocol", _choice("cphase", "sqrt_swap", "ramsey"), "cphase", "gate protocol"),
        *[p for p in _GEOMETRY if p.name not in ("geometry",)],
        Param("geometry", _choice("separated", "ellipsoid", "sphere"), "separated", "trap geometry"),
        Param("rabi", float, 10.0, "catalysis Rabi frequency / gamma"),
        Param("detuning", float, 100.0, "catalysis detuning / gamma"),
        Param("V_c", float, 100.0, "exchange coupling / gamma (ramsey)"),
        Param("Gamma_c", float, 0.0, "cooperative decay / gamma (ramsey)"),
        Param("pulse_duration", float, 0.0, "pi pulse length * gamma (ramsey)"),
    ],
    "fidelity": [
        Param("intensity_ratio", float, 1e5, "I_1/I_0"),
        Param("linewidth_over_recoil", float, 2.5e3, "hbar gamma / E_R"),
        Param("hyperfine_F", int, 4, "ground hyperfine F"),
        Param("transport_factor", float, 2.0, "n in T = n 2pi/omega"),
        Param("protocol_constant", float, 0.015, "c in F = c/eta^3"),
        Param("lattice_detuning", float, 6e3, "Delta_L / gamma"),
        Param("catalysis_saturation", float, 0.1, "catalysis saturation s"),
        Param("transport_only", _bool, False, "drop t_ent from the gate time"),
        Param("optimize", _bool, True, "optimise the lattice detuning"),
    ],
    "ensemble": [
        Param("n_sites", int, 2_000_000, "lattice sites (even)"),
        Param("fill_probability", float, 0.1, "per-site filling"),
        Param("gate_fidelity", float, 0.92, "true gate fidelity"),
        Param("split_partner_lost", float, 1.0, "weight of partner-lost errors"),
        Param("split_both_lost", float, 0.0, "weight of both-lost errors"),
        Param("split_wrong_state", float, 0.0, "weight of wrong-state errors"),
        Param("target_survives", float, 1.0, "fraction of partner-lost events keeping the target"),
        Param("unpaired_flip_probability", float, 0.0, "spurious flip of unpaired targets"),
        Param("pre_cycles", int, 0, "extra cycles before the measured pair"),
        Param("replicas", int, 1, "independent replicas"),
    ],
}

COLUMNS = {
    "fom": ["geometry", "eta", "zbar", "eta_perp", "eta_par", "polarization", "method", "value",
            "value_eta3", "includes_retardation"],
    "gate": ["protocol", "duration", "fidelity", "fidelity_superposition", "phase", "max_leakage", "fom"],
    "fidelity": ["lattice_detuning", "fidelity", "catalysis_error", "lattice_error", "eta", "fom",
                 "gate_time", "analytic_detuning", "analytic_fidelity", "at_boundary"],
    "ensemble": ["replica", "seed", "count_1", "count_2", "estimate", "sigma"],
}
COLUMNS["sweep"] = COLUMNS["fom"]

_COMMON = ("seed", "workers", "format", "out")

_HELP = {
    "fom": "figure of merit for one trap geometry",
    "sweep": "figure of merit over start:stop:num ranges of geometry parameters",
    "gate": "simulate a CPHASE, sqrt(SWAP) or Ramsey gate",
    "fidelity": "photon-scattering fidelity budget, optionally at the optimal lattice detuning",
    "ensemble": "Monte Carlo truth-table measurement on a partially filled lattice",
}


# ----------------------------------------------------------------------------
# configuration


def _schema(sub):
    return {p.name: p for p in SCHEMAS[sub]}


def parse_range(text: str):
    """'start:stop:num' -> numpy.linspace; a plain number -> one value."""
    s = str(text)
    if ":" not in s:
        return [float(s)]
    parts = s.split(":")
    if len(parts) != 3:
        raise InputError(f"range {s!r} must be start:stop:num")
    try:
        a, b, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise InputError(f"bad range {s!r}: {exc}") from None
    if n <= 0:
        raise InputError(f"range {s!r} is empty")
    return [float(x) for x in np.linspace(a, b, n)]


def resolve_config(sub: str, file_cfg: dict, cli_cfg: dict) -> dict:
    """Defaults < file < command line; unknown keys are rejected."""
    schema = _schema(sub)
    cfg = {k: p.default for k, p in schema.items()}
    cfg.update({"seed": None, "workers": 1, "format": "json", "out": None})
    for origin, src in (("config file", file_cfg), ("command line", cli_cfg)):
        for key, val in src.items():
            if key == "subcommand":
                if val != sub:
                    raise InputError(f"{origin}: config is for subcommand {val!r}, not {sub!r}")
                continue
            if key not in schema and key not in _COMMON:
                raise InputError(f"{origin}: unknown key {key!r} for subcommand {sub!r}")
            if val is None:
                continue
            cfg[key] = val
    out = {"subcommand": sub}
    for key, val in cfg.items():
        if key in schema:
            if sub == "sweep" and isinstance(val, str) and ":" in val:
                parse_range(val)  # validate eagerly
                out[key] = val
                continue
            try:
                out[key] = schema[key].conv(val)
            except (TypeError, ValueError) as exc:
                raise InputError(f"field {key!r}: {exc}") from None
        else:
            out[key] = val
    if out["workers"] is None or int(out["workers"]) < 1:
        raise InputError("field 'workers': must be >= 1")
    out["workers"] = int(out["workers"])
    if out["seed"] is not None:
        out["seed"] = int(out["seed"])
    if out["format"] not in ("csv", "json"):
        raise InputError("field 'format': must be csv or json")
    return out


def load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    if "config" in doc and isinstance(doc["config"], dict):
        doc = doc["config"]
    return doc


# ----------------------------------------------------------------------------
# subcommand bodies


def _geometry(cfg):
    from .figures_of_merit import CommonEllipsoid, CommonSphere, SeparatedSpheres
    g = cfg["geometry"]
    if g == "separated":
        return SeparatedSpheres(cfg["eta"], cfg["zbar"])
    if g == "ellipsoid":
        return CommonEllipsoid(cfg["eta_perp"], cfg["eta_par"])
    return CommonSphere(cfg["eta"])


def _fom_row(cfg) -> dict:
    from . import figures_of_merit as fm
    q = _POL[cfg["polarization"]]
    g = cfg["geometry"]
    if g == "sqrt_swap":
        v = fm.fom_sqrt_swap(cfg["eta"])
    elif cfg["method"] == "quadrature":
        v = fm.fom_generic(_geometry(cfg), q, retardation=cfg["retardation"])
    elif g == "separated":
        v = fm.fom_separated_spheres(cfg["zbar"], cfg["eta"], q)
    elif g == "ellipsoid":
        v = fm.fom_ellipsoid_nearfield(cfg["eta_perp"], cfg["eta_par"], q)
    else:
        v = fm.FomValue(0.0, "analytic", False)
    scale = cfg["eta_perp"] if g == "ellipsoid" else cfg["eta"]
    return {"geometry": g, "eta": cfg["eta"], "zbar": cfg["zbar"], "eta_perp": cfg["eta_perp"],
            "eta_par": cfg["eta_par"], "polarization": cfg["polarization"], "method": v.method,
            "value": v.value, "value_eta3": v.value * scale**3,
            "includes_retardation": v.includes_retardation}


def run_fom(cfg):
    return [_fom_row(cfg)]


def _sweep_point(cfg):
    return _fom_row(cfg)


def run_sweep(cfg):
    schema = _schema("sweep")
    axes = []
    for key, p in schema.items():
        val = cfg[key]
        if isinstance(val, str) and ":" in val:
            axes.append((key, parse_range(val)))
    if not axes:
        raise InputError("sweep needs at least one start:stop:num range")
    points = []
    for combo in itertools.product(*(vals for _, vals in axes)):
        c = dict(cfg)
        c.update({k: v for (k, _), v in zip(axes, combo)})
        points.append(c)
    if cfg["workers"] > 1 and len(points) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as ex:
            return list(ex.map(_sweep_point, points, chunksize=max(1, len(points) // (4 * cfg["workers"]))))
    return [_sweep_point(c) for c in points]


def run_gate(cfg):
    from . import gate_sim as gs
    from .interaction import DriveParams
    proto = cfg["protocol"]
    if proto == "ramsey":
        rep = gs.ramsey_cphase(gs.TwoLevelParams(V_c=cfg["V_c"], Gamma_c=cfg["Gamma_c"]),
                               gs.RamseyPulse(duration=cfg["pulse_duration"]))
    else:
        drive = DriveParams(cfg["rabi"], cfg["detuning"], cfg["polarization"])
        if proto == "sqrt_swap":
            from .figures_of_merit import CommonSphere
            rep = gs.sqrt_swap(CommonSphere(cfg["eta"]), drive)
        else:
            rep = gs.cphase_levelshift(_geometry(cfg), drive, method=cfg["method"])
    return [{"protocol": proto, "duration": rep.duration, "fidelity": rep.fidelity,
             "fidelity_superposition": rep.extras.get("fidelity_superposition"),
             "phase": rep.phase, "max_leakage": rep.max_leakage, "fom": rep.fom}]


def run_fidelity(cfg):
    from . import fidelity_budget as fb
    p = fb.LatticeParams(**{k: cfg[k] for k in (
        "intensity_ratio", "linewidth_over_recoil", "hyperfine_F", "transport_factor",
        "protocol_constant", "lattice_detuning", "catalysis_saturation", "transport_only")})
    if cfg["optimize"]:
        opt = fb.optimize_detuning(p)
        b = opt.budget
        extra = {"lattice_detuning": opt.detuning, "analytic_detuning": opt.analytic_detuning,
                 "analytic_fidelity": opt.analytic_fidelity, "at_boundary": opt.at_boundary}
    else:
        b = fb.total_fidelity(p)
        extra = {"lattice_detuning": p.lattice_detuning, "analytic_detuning": None,
                 "analytic_fidelity": None, "at_boundary": None}
    row = {"fidelity": b.fidelity, "catalysis_error": b.catalysis_error, "lattice_error": b.lattice_error,
           "eta": b.eta, "fom": b.fom, "gate_time": b.gate_time}
    row.update(extra)
    return [row]


def run_ensemble(cfg):
    from . import ensemble_protocol as en
    model = en.ErrorModel(cfg["gate_fidelity"],
                          (cfg["split_partner_lost"], cfg["split_both_lost"], cfg["split_wrong_state"]),
                          cfg["target_survives"], cfg["unpaired_flip_probability"])
    seed = 0 if cfg["seed"] is None else cfg["seed"]
    if cfg["replicas"] < 1:
        raise InputError("field 'replicas': must be >= 1")
    children = np.random.SeedSequence(seed).spawn(cfg["replicas"])
    seeds = [int(cs.generate_state(1, np.uint64)[0]) for cs in children]
    jobs = [(cfg["n_sites"], cfg["fill_probability"], model, s, cfg["pre_cycles"]) for s in seeds]
    if cfg["workers"] > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg["workers"]) as ex:
            pairs = list(ex.map(en._replica, jobs))
    else:
        pairs = [en._replica(j) for j in jobs]
    rows = []
    for i, (s, (n1, n2)) in enumerate(zip(seeds, pairs)):
        est = en.estimate_fidelity(n1, n2)
        rows.append({"replica": i, "seed": s, "count_1": n1, "count_2": n2,
                     "estimate": est.value, "sigma": est.sigma})
    if len(rows) > 1:
        n1, n2 = sum(p[0] for p in pairs), sum(p[1] for p in pairs)
        est = en.estimate_fidelity(n1, n2)
        rows.append({"replica": "pooled", "seed": seed, "count_1": n1, "count_2": n2,
                     "estimate": est.value, "sigma": est.sigma})
    return rows


RUNNERS = {"fom": run_fom, "sweep": run_sweep, "gate": run_gate, "fidelity": run_fidelity,
           "ensemble": run_ensemble}


# ----------------------------------------------------------------------------
# output


def _json_value(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if not math.isfinite(v):
            return "null"
        s = format(v, ".17g")
        if not any(ch in s for ch in ".en"):
            s += ".0"
        return s
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_json_value(x)}" for k, x in v.items()) + "}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_json_value(x) for x in v) + "]"
    return json.dumps(v)


def render_json(cfg: dict, rows: list) -> str:
    echo = {k: v for k, v in cfg.items() if k != "out"}
    body = ",\n  ".join(_json_value(r) for r in rows)
    return ('{"config": ' + _json_value(echo) + ',\n "version": ' + json.dumps(__version__)
            + ',\n "rows": [\n  ' + body + "\n ]}\n")


def _csv_value(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".9g")
    return str(v)


def render_csv(sub: str, rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    cols = COLUMNS[sub]
    w.writerow(cols)
    for r in rows:
        w.writerow([_csv_value(r.get(c)) for c in cols])
    return buf.getvalue()


# ----------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="dipolatt", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = ap.add_subparsers(dest="subcommand", required=True)
    for name, schema in SCHEMAS.items():
        sp = subs.add_parser(name, help=_HELP[name], description=_HELP[name])
        sp.add_argument("--config", help="JSON config file (or a previous JSON output)")
        sp.add_argument("--out", help="output path (default stdout)")
        sp.add_argument("--format", choices=("csv", "json"))
        sp.add_argument("--seed", type=int)
        sp.add_argument("--workers", type=int)
        seen = set()
        for p in schema:
            if p.name in seen:
                continue
            seen.add(p.name)
            sp.add_argument(f"--{p.name.replace('_', '-')}", dest=p.name, default=None,
                            help=f"{p.help} (default {p.default})")
    return ap


def run(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_VALIDATION if exc.code not in (0, None) else EXIT_OK
    sub = args.subcommand
    cli_cfg = {k: v for k, v in vars(args).items() if k not in ("subcommand", "config") and v is not None}
    try:
        file_cfg = load_config_file(args.config) if args.config else {}
        cfg = resolve_config(sub, file_cfg, cli_cfg)
        rows = RUNNERS[sub](cfg)
        text = render_json(cfg, rows) if cfg["format"] == "json" else render_csv(sub, rows)
        if cfg["out"]:
            with open(cfg["out"], "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    except ValidationError as exc:
        print(f"dipolatt {sub}: invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ArithmeticError) as exc:
        print(f"dipolatt {sub}: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"dipolatt {sub}: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
