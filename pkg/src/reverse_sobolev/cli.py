"""Command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence,
4 invariant failure, 5 input on the optimizer manifold.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from contextlib import contextmanager
from dataclasses import dataclass, asdict
from pathlib import Path

import numpy as np

from . import __version__, decompose, sphere, stability, verify
from .exceptions import InvalidParameterError, ReverseSobolevError
from .field import load_field
from .specialfn import constants_report
from .validation import check_number_list, check_params, check_positive_int

log = logging.getLogger("reverse_sobolev")

OUTPUT_DIR_ENV = "REVERSE_SOBOLEV_OUTPUT_DIR"

EXIT_OK, EXIT_INVALID, EXIT_NONCONVERGENCE, EXIT_INVARIANT, EXIT_ON_MANIFOLD = 0, 2, 3, 4, 5


@dataclass
class RunConfig:
    command: str
    n: int
    s: float
    grid: int | None
    L: int | None
    budget: int
    seed: int
    tol: float | None
    out: str | None
    format: str

    def to_dict(self) -> dict:
        return asdict(self)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _common(p, field=False):
    p.add_argument("--n", type=int, default=None, help="sphere dimension, 1 or 2 for grid work (default 2)")
    p.add_argument("--s", type=float, default=None, help="order, s - n/2 in (0,1) or (1,2) (default 1.5)")
    p.add_argument("--grid", type=int, default=None, help="quadrature resolution for the sphere suite")
    p.add_argument("--L", type=int, default=None, help="starting truncation degree")
    p.add_argument("--budget", type=int, default=decompose.DEFAULT_BUDGET, help="random restarts")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None, help="Newton residual tolerance (relative to scale)")
    p.add_argument("--out", default=None, help="output file (default: stdout or $" + OUTPUT_DIR_ENV + ")")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--verbose", action="store_true")
    if field:
        p.add_argument("--field", required=True, help="field JSON file")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="reverse-sobolev", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("constants", help="eigenvalues and sharp constants")
    _common(p)

    p = sub.add_parser("verify", help="run invariant suites")
    _common(p)
    p.add_argument("--suite", choices=verify.SUITES + ("all",), default="all")
    p.add_argument("--tamper-alpha", type=float, default=0.0, help=argparse.SUPPRESS)

    for name, helptext in [("quotient", "stability quotient of a field"),
                           ("decompose", "critical points and d(u) of a field")]:
        p = sub.add_parser(name, help=helptext)
        _common(p, field=True)

    p = sub.add_parser("probe", help="local, sharpness and strict-inequality probes")
    p.add_argument("kind", choices=("local", "sharpness", "strict"))
    _common(p)
    p.add_argument("--eps-list", default=None, help="comma-separated eps values")
    p.add_argument("--ell-list", default="2,4,6,10", help="comma-separated degrees")
    p.add_argument("--eps", type=float, default=0.01, help="amplitude for the sharpness probe")

    p = sub.add_parser("bubble", help="two-bubble multiplicity study")
    _common(p)
    p.add_argument("--beta-list", default="0.1,0.5,0.9,0.95")

    p = sub.add_parser("explore", help="descent explorer for minimizing sequences")
    _common(p)
    p.add_argument("--iterations", type=int, default=8)
    p.add_argument("--margin", type=float, default=1e-3)
    return parser


def _floats(text, name, **kw):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise InvalidParameterError(f"--{name} must be comma-separated numbers") from None
    return check_number_list(values, name, **kw)


def _config(args) -> RunConfig:
    # verify without --n/--s runs the whole default matrix
    args.matrix = args.command == "verify" and args.n is None and args.s is None
    if args.n is None:
        args.n = 2
    if args.s is None:
        args.s = 1.5
    check_params(args.n, args.s)
    if args.grid is not None and args.grid < 8:
        raise InvalidParameterError("--grid must be >= 8")
    if args.L is not None and not 8 <= args.L <= 256:
        raise InvalidParameterError("--L must lie in [8, 256]")
    if args.tol is not None and not 0 < args.tol < 1:
        raise InvalidParameterError("--tol must lie in (0, 1)")
    check_positive_int(args.budget, "budget", minimum=0)
    check_positive_int(args.seed, "seed", minimum=0)
    return RunConfig(args.command, args.n, args.s, args.grid, args.L, args.budget, args.seed,
                     args.tol, args.out, args.format)


@contextmanager
def _overrides(cfg: RunConfig):
    """Apply --L and --tol to the module defaults for the duration of one command."""
    degrees, tol = dict(sphere.DEFAULT_DEGREE), decompose.RESIDUAL_TOL
    if cfg.L is not None:
        for n in sphere.DEFAULT_DEGREE:
            sphere.DEFAULT_DEGREE[n] = cfg.L
    if cfg.tol is not None:
        decompose.RESIDUAL_TOL = cfg.tol
    try:
        yield
    finally:
        sphere.DEFAULT_DEGREE.update(degrees)
        decompose.RESIDUAL_TOL = tol


def _csv(rows, keys=stability.PROBE_FIELDS) -> str:
    buf = io.StringIO()
    keys = list(keys)
    for r in rows:
        keys += [k for k in r if k not in keys]
    w = csv.DictWriter(buf, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else r.get(k)) for k in keys})
    return buf.getvalue()


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _emit(cfg: RunConfig, payload: dict, rows=None, keys=stability.PROBE_FIELDS):
    """Write a JSON report, or a CSV table of ``rows`` when --format csv."""
    report = {"tool": "reverse-sobolev", "version": __version__, "config": cfg.to_dict()}
    report.update(payload)
    if cfg.format == "csv" and rows is not None:
        text, ext = _csv(rows, keys), "csv"
    else:
        text = json.dumps(report, indent=2, sort_keys=True, default=_default) + "\n"
        ext = "json"
    target = cfg.out
    if target is None and os.environ.get(OUTPUT_DIR_ENV):
        target = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{cfg.command}-n{cfg.n}-s{cfg.s:g}.{ext}")
    if target is None:
        sys.stdout.write(text)
    else:
        Path(target).parent.mkdir(parents=True, exist_ok=True)
        Path(target).write_text(text)
        log.info("wrote %s", target)


def cmd_constants(cfg, args):
    params = check_params(cfg.n, cfg.s)
    _emit(cfg, constants_report(params, cfg.L or 10))
    return EXIT_OK


def cmd_verify(cfg, args):
    suites = verify.SUITES if args.suite == "all" else (args.suite,)
    matrix = verify.DEFAULT_MATRIX if args.matrix else ((cfg.n, cfg.s),)
    for n, _ in matrix:
        if n not in sphere.SUPPORTED_DIMENSIONS and set(suites) - {"constants"}:
            raise InvalidParameterError(f"grid suites need n in {sphere.SUPPORTED_DIMENSIONS}")
    result = verify.run(suites, matrix, cfg.seed, args.tamper_alpha, cfg.grid, min(cfg.budget, 8))
    rows = [{"suite": c["suite"], "check": c["name"], "passed": c["passed"], "value": c["value"],
             "tolerance": c["tolerance"], "anchor": c["anchor"]} for c in result["checks"]]
    _emit(cfg, result, rows, keys=("suite", "check", "passed", "value", "tolerance", "anchor"))
    if result["failed"]:
        shown = ", ".join(result["failed"][:5])
        more = len(result["failed"]) - 5
        print(f"{len(result['failed'])} check(s) failed: {shown}" + (f" (+{more} more)" if more > 0 else ""),
              file=sys.stderr)
    return EXIT_OK if result["passed"] else EXIT_INVARIANT


def cmd_quotient(cfg, args):
    params = check_params(cfg.n, cfg.s)
    u = load_field(args.field, params)
    rep = stability.quotient(u, params, cfg.budget, cfg.seed)
    _emit(cfg, {"report": rep.to_dict()}, [dict(quotient=rep.quotient, deficit=rep.deficit,
                                                 distance=rep.distance, min_u=rep.min_u,
                                                 tail_ratio=rep.spectral.tail_ratio,
                                                 converged=rep.converged)])
    return EXIT_OK


def cmd_decompose(cfg, args):
    params = check_params(cfg.n, cfg.s)
    u = load_field(args.field, params)
    res = decompose.distance(u, params, cfg.budget, cfg.seed)
    rows = [dict(p.to_dict(), distance=res.value) for p in res.critical_points]
    for r in rows:
        r["zeta"] = " ".join(f"{z:.15g}" for z in r["zeta"])
    _emit(cfg, {"decomposition": res.to_dict()}, rows, keys=("distance", "c", "zeta", "rho_energy"))
    return EXIT_OK


def cmd_probe(cfg, args):
    params = check_params(cfg.n, cfg.s)
    if args.kind == "local":
        eps = _floats(args.eps_list or "0.04,0.02,0.01", "eps-list")
        rho = stability.zonal_harmonic(params.n, 2)
        rows = stability.probe_local(params, rho, eps, min(cfg.budget, 4), cfg.seed)
        payload = {"probe": "local", "rows": rows}
    elif args.kind == "sharpness":
        ells = [int(x) for x in _floats(args.ell_list, "ell-list", lo=2, hi=64)]
        rows = stability.probe_sharpness(params, ells, args.eps, min(cfg.budget, 4), cfg.seed)
        payload = {"probe": "sharpness", "rows": rows}
    else:
        eps = _floats(args.eps_list or "0.05,0.02,0.01,-0.01,-0.02,-0.05", "eps-list", lo=-0.2, hi=0.2)
        res = stability.probe_strict(params, eps, min(cfg.budget, 4), cfg.seed)
        rows = res.rows
        payload = {"probe": "strict", "result": res.to_dict()}
    _emit(cfg, payload, rows)
    return EXIT_OK


def cmd_bubble(cfg, args):
    params = check_params(cfg.n, cfg.s)
    betas = _floats(args.beta_list, "beta-list", lo=0, hi=1, open_interval=True)
    rows = stability.bubble_study(params, betas, cfg.budget, cfg.seed)
    _emit(cfg, {"rows": rows}, rows)
    return EXIT_OK


def cmd_explore(cfg, args):
    params = check_params(cfg.n, cfg.s)
    L = cfg.L if cfg.L is not None and cfg.L <= 12 else 4
    traj = stability.explore_min(params, L, args.iterations, cfg.seed, margin=args.margin,
                                 budget=min(cfg.budget, 4))
    rows = [{"quotient": s["quotient"], "min_u": s["min_u"], "distance": s["distance"],
             "iteration": s["iteration"], "renormalized": s["renormalized"]} for s in traj.steps]
    _emit(cfg, {"trajectory": traj.to_dict()}, rows,
          keys=("iteration", "quotient", "min_u", "distance", "renormalized"))
    return EXIT_OK


COMMANDS = {"constants": cmd_constants, "verify": cmd_verify, "quotient": cmd_quotient,
            "decompose": cmd_decompose, "probe": cmd_probe, "bubble": cmd_bubble,
            "explore": cmd_explore}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config(args)
        with _overrides(cfg):
            return COMMANDS[args.command](cfg, args)
    except ReverseSobolevError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
