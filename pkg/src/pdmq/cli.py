"""Command-line interface: ``pdmq <command> [options]``.

Commands: list-models, derive, solve, classical, compare, sweep.
Set ``PDMQ_LOG`` (DEBUG, INFO, WARNING, ...) to control log verbosity.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict

import numpy as np

from pdmq import __version__
from pdmq.classical import (
    ClassicalError, ClassicalState, NonOscillatoryError, acceleration, conservation_report,
    integrate,
    measure_period,
)
from pdmq.exprcalc import ExprError, eval_expr, format_expr, parse_expr
from pdmq.geometry import (
    GeometryError, ProblemDef, arclength_map, derive_killing, make_domain, noether_momentum,
)
from pdmq.models import MODELS, ModelError, ScalingMap, builtin
from pdmq.quantize import OrderingError, OrderingScheme, build, build_laplace_beltrami, build_noether
from pdmq.spectral import SpectralError, refine_spectrum, solve_problem

log = logging.getLogger("pdmq")

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 3


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    model: str | None = None
    mass: str | None = None
    potential: str | None = None
    domain: str | None = None
    params: dict = field(default_factory=dict)
    N: int = 2000
    N_list: list | None = None
    k: int = 5
    scheme: str = "noether"
    dt: float = 1e-3
    T: float = 20.0
    y_cut: float = 12.0
    format: str = "json"
    output: str | None = None
    units: dict | None = None
    extra: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.model and (self.mass or self.potential or self.domain):
            raise UsageError("--model and inline --m/--V/--domain are mutually exclusive")
        if self.command not in ("list-models",) and not (self.model or self.mass):
            raise UsageError("give --model or an inline --m")
        for name in ("N", "k", "dt", "T", "y_cut"):
            if not getattr(self, name) > 0:
                raise UsageError(f"{name} must be positive")
        if self.N_list and any(n <= 0 for n in self.N_list):
            raise UsageError("N-list entries must be positive")


# ---------------------------------------------------------------------------
# argument parsing helpers

def _parse_value(text: str, bindings: dict | None = None) -> float:
    t = text.strip().lower()
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    if t in ("-inf", "-infinity"):
        return -math.inf
    try:
        return float(t)
    except ValueError:
        e = parse_expr(text)
        if e.depends_on_x():
            raise UsageError(f"value {text!r} must not depend on x") from None
        return eval_expr(e, 0.0, bindings or {})


def _parse_set(items: list[str]) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"--set expects name=value, got {item!r}")
        name, value = item.split("=", 1)
        out[name.strip()] = _parse_value(value)
    return out


def _parse_units(text: str | None) -> dict | None:
    if not text:
        return None
    units = {"hbar": 1.0, "m0": 1.0, "alpha": 1.0}
    for part in text.split(","):
        name, _, value = part.partition("=")
        name = name.strip()
        if name not in units or not value:
            raise UsageError(f"--units expects hbar=…,m0=…,alpha=…; got {part!r}")
        units[name] = _parse_value(value)
    return units


def _parse_int_list(text: str | None) -> list | None:
    if not text:
        return None
    return [int(v) for v in text.split(",") if v.strip()]


def config_from_args(args: argparse.Namespace) -> RunConfig:
    extra = {k: v for k, v in vars(args).items() if k in
             ("x0", "v0", "schemes", "param", "values", "workers", "eigenfunctions",
              "trajectory", "map_csv", "mesh")}
    return RunConfig(
        command=args.command, model=getattr(args, "model", None),
        mass=getattr(args, "m", None), potential=getattr(args, "V", None),
        domain=getattr(args, "domain", None), params=_parse_set(getattr(args, "set", [])),
        N=args.N, N_list=_parse_int_list(args.N_list), k=args.k, scheme=args.scheme,
        dt=args.dt, T=args.T, y_cut=args.y_cut, format=args.format, output=args.output,
        units=_parse_units(args.units), extra=extra,
    )


# ---------------------------------------------------------------------------
# problem construction

def _scaled_params(cfg: RunConfig) -> tuple[dict, ScalingMap | None]:
    if cfg.units is None:
        return dict(cfg.params), None
    smap = ScalingMap(**cfg.units)
    out = {}
    for name, value in cfg.params.items():
        if name == "L":
            out[name] = smap.lam_to_dimensionless(value)
        elif name in ("k", "lam"):
            out[name] = smap.kappa_to_dimensionless(value)
        else:
            out[name] = value
    return out, smap


def build_problem(cfg: RunConfig, params: dict | None = None) -> ProblemDef:
    if params is None:
        params, _ = _scaled_params(cfg)
    if cfg.model:
        return builtin(cfg.model, params)
    mass = parse_expr(cfg.mass)
    potential = parse_expr(cfg.potential or "0")
    lo, hi = -math.inf, math.inf
    if cfg.domain:
        parts = cfg.domain.split(",")
        if len(parts) != 2:
            raise UsageError(f"--domain expects 'a,b', got {cfg.domain!r}")
        lo, hi = (_parse_value(v, params) for v in parts)
    dom = make_domain(mass, params, lo, hi)
    return ProblemDef(mass, potential, dom, params, name="inline")


# ---------------------------------------------------------------------------
# output

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _emit(cfg: RunConfig, doc: dict | None, rows: list[list] | None = None,
          header: list[str] | None = None) -> None:
    if cfg.format == "csv" and rows is not None:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(header)
        for row in rows:
            w.writerow(row)
        text = buf.getvalue()
    else:
        text = json.dumps(_jsonable(doc), indent=2) + "\n"
    if cfg.output:
        with open(cfg.output, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _config_dict(cfg: RunConfig) -> dict:
    d = asdict(cfg)
    d["version"] = __version__
    return d


# ---------------------------------------------------------------------------
# commands

def cmd_list_models(cfg: RunConfig) -> int:
    doc = {"config": _config_dict(cfg),
           "results": {"models": [m.describe() for m in MODELS.values()]},
           "diagnostics": {}}
    rows = [[m.name, ";".join(m.params), str(m.mass), str(m.potential)] for m in MODELS.values()]
    _emit(cfg, doc, rows, ["name", "params", "mass", "potential"])
    return EXIT_OK


def cmd_derive(cfg: RunConfig) -> int:
    p = build_problem(cfg)
    kd = derive_killing(p)
    c_v, c_p = noether_momentum(p)
    pts = p.domain.sample_interior(100, np.random.default_rng(1))
    k_res, mu_res = kd.residual_maxima(pts, p.bindings)
    hbar = 1.0
    noe = build_noether(p, hbar)
    lb = build_laplace_beltrami(p, hbar)
    results = {
        "problem": {"mass": format_expr(p.mass), "potential": str(p.potential),
                    "domain": p.domain.as_dict(), "params": p.bindings},
        "killing_component": format_expr(kd.killing_component),
        "density": format_expr(kd.density),
        "noether_momentum": {"velocity_form": f"({format_expr(c_v)})*v",
                             "phase_form": f"({format_expr(c_p)})*p"},
        "operators": {"noether": noe.as_dict(), "laplace-beltrami": lb.as_dict()},
    }
    scheme = OrderingScheme.parse(cfg.scheme)
    if scheme.kind == "von-roos":
        results["operators"][str(scheme)] = build(p, hbar, scheme).as_dict()
    if cfg.extra.get("map_csv"):
        arclength_map(p, y_max=cfg.y_cut + 4).to_csv(cfg.extra["map_csv"])
        results["map_csv"] = cfg.extra["map_csv"]
    diagnostics = {"killing_residual": k_res, "measure_residual": mu_res,
                   "residual_points": len(pts)}
    doc = {"config": _config_dict(cfg), "results": results, "diagnostics": diagnostics}
    rows = [["f", results["killing_component"]], ["rho", results["density"]],
            ["P_v", results["noether_momentum"]["velocity_form"]],
            ["P_p", results["noether_momentum"]["phase_form"]],
            ["a", noe.as_dict()["a"]], ["b", noe.as_dict()["b"]], ["c", noe.as_dict()["c"]],
            ["killing_residual", k_res], ["measure_residual", mu_res]]
    _emit(cfg, doc, rows, ["quantity", "value"])
    return EXIT_OK


def _spectrum(cfg: RunConfig, p: ProblemDef, scheme: str):
    mesh = cfg.extra.get("mesh") or "arclength"
    if cfg.N_list:
        return refine_spectrum(p, scheme, cfg.k, cfg.N_list, y_cut=cfg.y_cut, mesh=mesh)
    return solve_problem(p, scheme, cfg.k, cfg.N, y_cut=cfg.y_cut, mesh=mesh)


def cmd_solve(cfg: RunConfig) -> int:
    params, smap = _scaled_params(cfg)
    p = build_problem(cfg, params)
    spec = _spectrum(cfg, p, cfg.scheme)
    res = spec.as_dict(model=p.name, scheme=spec.meta["scheme"], params=p.bindings)
    if smap is not None:
        res["E"] = [smap.E_of(e) for e in res["eigenvalues"]]
        res["units"] = smap.as_dict()
    if cfg.extra.get("eigenfunctions"):
        spec.eigenfunctions_csv(cfg.extra["eigenfunctions"])
        res["eigenfunctions_csv"] = cfg.extra["eigenfunctions"]
    diagnostics = {"hermiticity_residual": spec.meta["hermiticity_residual"],
                   "box": spec.meta["box"], "node_counts": spec.node_counts(),
                   "solver_residuals": spec.residuals}
    if "monotone" in spec.meta:
        diagnostics["monotone"] = spec.meta["monotone"]
        diagnostics["raw"] = spec.meta["raw"]
    doc = {"config": _config_dict(cfg), "results": res, "diagnostics": diagnostics}
    err = res["errors"]
    rows = [[n, e, err[n] if err[n] is not None else ""]
            + ([res["E"][n]] if smap is not None else [])
            for n, e in enumerate(res["eigenvalues"])]
    _emit(cfg, doc, rows, ["n", "e", "err"] + (["E"] if smap is not None else []))
    return EXIT_OK


def cmd_classical(cfg: RunConfig) -> int:
    p = build_problem(cfg)
    s0 = ClassicalState(cfg.extra.get("x0", 0.5), cfg.extra.get("v0", 0.0))
    tr = integrate(p, s0, cfg.dt, cfg.T)
    e_drift, p_drift = conservation_report(p, tr)
    try:
        period = measure_period(tr)
    except NonOscillatoryError:
        period = None
    results = {"samples": len(tr), "final": asdict(tr.final), "exited": tr.exited,
               "period": period, "acceleration": format_expr(acceleration(p))}
    if cfg.extra.get("trajectory"):
        tr.to_csv(cfg.extra["trajectory"])
        results["trajectory_csv"] = cfg.extra["trajectory"]
    doc = {"config": _config_dict(cfg), "results": results,
           "diagnostics": {"energy_drift": e_drift, "noether_drift": p_drift}}
    if cfg.format == "csv":
        cols = [tr.t, tr.x, tr.v, tr.E] + ([tr.P] if tr.geodesic else [])
        rows = [[repr(float(c)) for c in row] for row in zip(*cols)]
        _emit(cfg, doc, rows, ["t", "x", "v", "E"] + (["P"] if tr.geodesic else []))
    else:
        _emit(cfg, doc)
    if tr.exited:
        log.error("trajectory left the domain at t=%g; output is partial", tr.t[-1])
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    p = build_problem(cfg)
    schemes = [s for s in (cfg.extra.get("schemes") or "noether,bdd,zk").split(";") if s]
    if len(schemes) == 1 and "vonroos" not in schemes[0] and "(" not in schemes[0]:
        schemes = [s for s in schemes[0].split(",") if s]
    columns = {}
    errors = {}
    for s in schemes:
        spec = _spectrum(cfg, p, s)
        name = spec.meta["scheme"]
        columns[name] = spec.eigenvalues
        errors[name] = spec.errors
    names = list(columns)
    diffs = {f"{a} - {b}": (columns[a] - columns[b]).tolist()
             for i, a in enumerate(names) for b in names[i + 1:]}
    doc = {"config": _config_dict(cfg),
           "results": {"eigenvalues": {n: v.tolist() for n, v in columns.items()},
                       "errors": {n: (v.tolist() if v is not None else None)
                                  for n, v in errors.items()},
                       "differences": diffs},
           "diagnostics": {}}
    rows = [[n] + [float(columns[s][n]) for s in names] for n in range(cfg.k)]
    _emit(cfg, doc, rows, ["n"] + names)
    return EXIT_OK


def _sweep_point(args):
    cfg, name, value = args
    cfg = RunConfig(**{**asdict(cfg), "params": {**cfg.params, name: value}})
    try:
        params, _ = _scaled_params(cfg)
        p = build_problem(cfg, params)
        spec = _spectrum(cfg, p, cfg.scheme)
        errs = spec.errors if spec.errors is not None else [None] * spec.k
        return value, [(n, float(e), (float(er) if er is not None else None))
                       for n, (e, er) in enumerate(zip(spec.eigenvalues, errs))], None
    except Exception as exc:  # per-point failures are reported, the sweep goes on
        return value, [], f"{type(exc).__name__}: {exc}"


def _sweep_values(text: str) -> list[float]:
    if ":" in text:
        start, stop, step = (float(v) for v in text.split(":"))
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 12) for i in range(n)]
    return [_parse_value(v) for v in text.split(",") if v.strip()]


def cmd_sweep(cfg: RunConfig) -> int:
    name = cfg.extra.get("param")
    values_text = cfg.extra.get("values")
    if not name or not values_text:
        raise UsageError("sweep needs --param and --values")
    values = _sweep_values(values_text)
    workers = int(cfg.extra.get("workers") or 1)
    jobs = [(cfg, name, v) for v in values]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            results = list(pool.map(_sweep_point, jobs))
    else:
        results = [_sweep_point(j) for j in jobs]
    rows, failures = [], {}
    for value, levels, error in results:
        if error:
            log.error("sweep point %s=%g failed: %s", name, value, error)
            failures[str(value)] = error
        for n, e, er in levels:
            rows.append([value, n, e, "" if er is None else er])
    doc = {"config": _config_dict(cfg),
           "results": {"param": name, "rows": [dict(zip(["param", "n", "e", "err"], r))
                                               for r in rows]},
           "diagnostics": {"failures": failures}}
    _emit(cfg, doc, rows, ["param", "n", "e", "err"])
    return EXIT_OK if not failures else EXIT_PARTIAL


COMMANDS = {"list-models": cmd_list_models, "derive": cmd_derive, "solve": cmd_solve,
            "classical": cmd_classical, "compare": cmd_compare, "sweep": cmd_sweep}


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    src = common.add_argument_group("problem")
    src.add_argument("--model", help="built-in model name (see list-models)")
    src.add_argument("--m", help="inline mass expression in x")
    src.add_argument("--V", help="inline potential expression in x (default 0)")
    src.add_argument("--domain", help="inline domain 'a,b' (inf, -inf, pi accepted)")
    src.add_argument("--set", action="append", default=[], metavar="NAME=VALUE",
                     help="parameter binding (repeatable)")
    num = common.add_argument_group("numerics")
    num.add_argument("-N", type=int, default=2000, help="interior grid points")
    num.add_argument("--N-list", dest="N_list", help="comma list of N for Richardson refinement")
    num.add_argument("-k", type=int, default=5, help="number of eigenvalues")
    num.add_argument("--scheme", default="noether",
                     help="noether | lb | vonroos:a1,a2,a3 | bdd | zk | symmetric")
    num.add_argument("--mesh", choices=("arclength", "uniform"), default=None,
                     help="mesh for the direct solve (default arclength)")
    num.add_argument("--dt", type=float, default=1e-3)
    num.add_argument("-T", type=float, default=20.0)
    num.add_argument("--y-cut", dest="y_cut", type=float, default=12.0)
    out = common.add_argument_group("output")
    out.add_argument("--format", choices=("json", "csv"), default=None)
    out.add_argument("-o", "--output")
    out.add_argument("--units", help="hbar=…,m0=…,alpha=… (physical parameters in --set)")

    parser = argparse.ArgumentParser(prog="pdmq", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pdmq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list-models", parents=[common], help="list built-in models")
    p = sub.add_parser("derive", parents=[common], help="Killing data, momentum, operators")
    p.add_argument("--map-csv", dest="map_csv", help="write the arclength map (x,y) here")
    p = sub.add_parser("solve", parents=[common], help="lowest eigenvalues")
    p.add_argument("--eigenfunctions", help="write eigenfunctions CSV here")
    p = sub.add_parser("classical", parents=[common], help="RK4 trajectory and period")
    p.add_argument("--x0", type=float, default=0.5)
    p.add_argument("--v0", type=float, default=0.0)
    p.add_argument("--trajectory", help="write trajectory CSV here")
    p = sub.add_parser("compare", parents=[common], help="spectra under several orderings")
    p.add_argument("--schemes", default="noether,bdd,zk",
                   help="orderings separated by ';' (or ',' when none has exponents)")
    p = sub.add_parser("sweep", parents=[common], help="eigenvalues against a parameter")
    p.add_argument("--param", required=True)
    p.add_argument("--values", required=True, help="'a,b,c' or 'start:stop:step'")
    p.add_argument("--workers", type=int, default=1)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("PDMQ_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = make_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # let values such as "-1,1" follow their option without an "="
    for i in range(len(argv) - 1):
        if argv[i] in ("--domain", "--values") and argv[i + 1].startswith("-"):
            argv[i:i + 2] = [f"{argv[i]}={argv[i + 1]}", ""]
    args = parser.parse_args([a for a in argv if a != ""])
    if args.format is None:
        args.format = "csv" if args.command == "sweep" else "json"
    if args.command == "sweep" and args.output is None:
        args.output = f"sweep-{args.model or 'inline'}-{args.param}.csv" if args.format == "csv" \
            else f"sweep-{args.model or 'inline'}-{args.param}.json"
    try:
        cfg = config_from_args(args)
        if cfg.command != "list-models":
            cfg.validate()
        return COMMANDS[cfg.command](cfg)
    except (UsageError, ExprError, GeometryError, ModelError, OrderingError, SpectralError,
            ClassicalError, ValueError) as exc:
        print(f"pdmq {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
