"""Command-line front end: ``krylovmor {reduce,sweep,moments,compare,gen}``.

Exit status: 0 on success, 1 on numerical failure, 2 on usage or I/O errors.
"""

import argparse
import datetime
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circuit import assemble_mna, detect_singularity, parse_netlist
from .exceptions import (Deflated, KrylovMORError, ManifestError, ParseError,
                         RegularizationError, SingularMatrix)
from .formats import (MANIFEST, read_bundle, write_report_json, write_sweep_csv,
                      write_system_bundle)
from .generators import power_grid, rc_ladder
from .krylov import build_basis
from .reduction import (FrequencySweep, error_per_port, markov_parameters, max_error,
                        moments, reduce, reduce_per_port, transfer_function)
from .regularize import regularize

log = logging.getLogger("krylovmor")

OUTPUT_ENV = "KRYLOVMOR_OUTPUT_DIR"
METHODS = ("mm", "eks", "aeks")


class UsageError(Exception):
    pass


def load_model(path):
    """Read a netlist file or a bundle (directory or ``bundle.json``)."""
    path = Path(path)
    if not path.exists():
        raise UsageError(f"input not found: {path}")
    if path.is_dir() or path.name == MANIFEST:
        return read_bundle(path)
    return assemble_mna(parse_netlist(path.read_text()))


def working_system(model):
    """The model the Krylov engines run on: regularized when ``E`` is singular."""
    if not getattr(model, "singular_E", False):
        return model
    _, n2 = detect_singularity(model)
    log.info("singular E: regularizing away n2=%d non-capacitive nodes %s",
             len(n2), n2.tolist() if len(n2) <= 20 else f"{n2[:20].tolist()}...")
    return regularize(model)


def _sweep_from(args):
    if args.points < 1 or not 0 < args.omega_min < args.omega_max:
        raise UsageError("sweep needs points >= 1 and 0 < omega-min < omega-max")
    return FrequencySweep.logspace(args.omega_min, args.omega_max, args.points)


def _check_order(args, method, p):
    need = p if method == "mm" else 2 * p
    if args.order < need:
        raise UsageError(f"order {args.order} too small for {method} with {p} ports "
                         f"(need r >= {need})")
    if args.modulo < 1:
        raise UsageError("modulo must be >= 1")


def _run_dir(args):
    if args.run_dir:
        out = Path(args.run_dir)
    else:
        base = Path(args.out or os.environ.get(OUTPUT_ENV, "runs"))
        stamp = datetime.datetime.now().strftime("%Y%m%d-%H%M%S-%f")
        out = base / f"run-{stamp}"
    out.mkdir(parents=True, exist_ok=True)
    return out


def run_reduction(model, method, order, modulo, sweep, workers, mimo=False):
    """Reduce ``model`` and evaluate original and reduced sweeps.

    Returns ``(report, H, H_red, roms, timings)``.
    """
    timings = {}
    t0 = time.perf_counter()
    H = transfer_function(model, sweep)
    timings["original_sweep"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    work = working_system(model)
    timings["regularize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    ports = []
    if mimo:
        deflated = False
        try:
            basis = build_basis(work, method, order, m=modulo)
        except Deflated as exc:
            basis, deflated = exc.basis, True
        rom = reduce(work, basis)
        H_red = transfer_function(rom, sweep)
        roms = [rom]
        ports.append(_port_entry("all", basis, deflated, None))
    else:
        result = reduce_per_port(work, method, order, m=modulo, sweep=sweep, workers=workers)
        H_red = result.sweep
        roms = result.roms
        for pr in result.ports:
            ports.append(_port_entry(work.input_names[pr.index], pr.basis, pr.deflated, pr.error))
    timings["reduction"] = time.perf_counter() - t0
    empty = [p["port"] for p in ports if p["rank"] == 0]
    if empty:
        raise KrylovMORError(f"basis deflated to zero columns for ports {empty}")

    err = max_error(H, H_red)
    if not mimo:
        for entry, e in zip(ports, error_per_port(H, H_red)):
            entry["max_error"] = e
    report = {
        "method": method,
        "order": order,
        "modulo": modulo if method == "aeks" else None,
        "pipeline": "mimo" if mimo else "per-port",
        "system": {"N": model.order, "p": model.n_inputs, "q": model.n_outputs,
                   "singular_E": bool(getattr(model, "singular_E", False)),
                   "reduced_from_order": work.order},
        "sweep": {"omega_min": float(sweep.omega[0]), "omega_max": float(sweep.omega[-1]),
                  "points": len(sweep.omega)},
        "max_error": err,
        "skipped_points": {"original": H.skipped, "reduced": H_red.skipped},
        "ports": ports,
        "solve_counts": {
            "A": sum(p["solve_counts"]["A"] for p in ports),
            "E": sum(p["solve_counts"]["E"] for p in ports),
        },
    }
    return report, H, H_red, roms, timings


def _port_entry(name, basis, deflated, error):
    return {
        "port": name,
        "rank": basis.rank,
        "deflated": deflated,
        "error": error,
        "solve_counts": dict(basis.solve_counts),
        "schedule": [{"direction": b.direction, "width": b.width, "solves": b.solves,
                      "iteration": b.iteration} for b in basis.schedule],
    }


def cmd_reduce(args):
    model = load_model(args.input)
    _check_order(args, args.method, 1 if not args.mimo else model.n_inputs)
    sweep = _sweep_from(args)
    report, H, H_red, roms, timings = run_reduction(
        model, args.method, args.order, args.modulo, sweep, args.workers, args.mimo)
    out = _run_dir(args)
    report["input"] = str(args.input)
    write_report_json(report, out / "report.json")
    write_report_json(timings, out / "timings.json")
    write_sweep_csv(H, out / "sweep_original.csv", model.output_names, model.input_names)
    write_sweep_csv(H_red, out / "sweep_rom.csv", model.output_names, model.input_names)
    for i, rom in enumerate(roms):
        write_system_bundle(out / "rom" / f"port{i}", rom,
                            description=f"{args.method} reduced model, order {rom.order}")
    print(f"{args.method}: order {args.order}, max_error {report['max_error']:.6e}")
    print(f"report: {out / 'report.json'}")
    return 0


def cmd_sweep(args):
    model = load_model(args.input)
    sweep = transfer_function(model, _sweep_from(args))
    target = args.output or "sweep.csv"
    write_sweep_csv(sweep, target, model.output_names, model.input_names)
    if sweep.skipped:
        log.warning("poles hit at sweep indices %s", sweep.skipped)
    print(f"wrote {len(sweep.omega)} points to {target}")
    return 0


def _format_block(X):
    X = np.asarray(X)
    if X.size == 1:
        return f"{X.item():.17g}"
    return "\n".join("  " + " ".join(f"{v:.17g}" for v in row) for row in X)


def cmd_moments(args):
    model = working_system(load_model(args.input)) if args.markov else load_model(args.input)
    blocks = markov_parameters(model, args.count) if args.markov else moments(model, args.count)
    label = "P" if args.markov else "M"
    for i, blk in enumerate(blocks):
        text = _format_block(blk)
        sep = " " if "\n" not in text else "\n"
        print(f"{label}{i}:{sep}{text}")
    return 0


def cmd_compare(args):
    model = load_model(args.input)
    _check_order(args, "eks", 1)
    sweep = _sweep_from(args)
    rows = []
    errors = {}
    for method in METHODS:
        t0 = time.perf_counter()
        report, *_ = run_reduction(model, method, args.order, args.modulo, sweep, args.workers)
        elapsed = time.perf_counter() - t0
        errors[method] = report["max_error"]
        rows.append((method, report, elapsed))
    print(f"{'method':<6} {'order':>5} {'max_error':>14} {'err_red_%':>10} "
          f"{'solves_A':>9} {'solves_E':>9} {'time_s':>8}")
    table = []
    for method, report, elapsed in rows:
        red = error_reduction(errors["mm"], errors[method])
        print(f"{method:<6} {args.order:>5} {report['max_error']:>14.6e} "
              f"{red:>10.2f} {report['solve_counts']['A']:>9} "
              f"{report['solve_counts']['E']:>9} {elapsed:>8.3f}")
        table.append({"method": method, "order": args.order, "max_error": report["max_error"],
                      "error_reduction_percent": red, "solve_counts": report["solve_counts"]})
    if args.out or args.run_dir:
        out = _run_dir(args)
        write_report_json({"input": str(args.input), "rows": table}, out / "report.json")
        print(f"report: {out / 'report.json'}")
    return 0


def error_reduction(reference, value):
    """Percentage by which ``value`` improves on ``reference``."""
    if reference == 0:
        return 0.0
    return (reference - value) / reference * 100.0


def cmd_gen(args):
    if args.ladder:
        text = rc_ladder(args.nodes, ports=args.ports)
    else:
        text = power_grid(args.nodes, args.ports, cap_dropout=args.cap_dropout,
                          seed=args.seed, inductors=args.inductors)
    if args.output:
        Path(args.output).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def _add_sweep_args(p):
    p.add_argument("--omega-min", type=float, default=1.0, help="lowest angular frequency (rad/s)")
    p.add_argument("--omega-max", type=float, default=1e12, help="highest angular frequency (rad/s)")
    p.add_argument("--points", type=int, default=200, help="log-spaced sweep points")


def _add_reduction_args(p):
    p.add_argument("--order", "-r", type=int, required=True, help="ROM order per port")
    p.add_argument("--modulo", "-m", type=int, default=3,
                   help="AEKS: one dense-direction block per this many sparse-direction blocks")
    p.add_argument("--workers", type=int, default=None,
                   help="parallel port workers (default: CPU count, capped at #ports)")
    p.add_argument("--out", help=f"base output directory (default: ${OUTPUT_ENV} or ./runs)")
    p.add_argument("--run-dir", help="exact run directory (overrides the timestamped default)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="krylovmor",
        description="Moment-matching reduction of RLC circuits with standard, extended "
                    "and asymmetric extended Krylov subspaces.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", default=argparse.SUPPRESS,
                        help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("reduce", parents=[common], help="reduce a model and report its accuracy")
    p.add_argument("input", help="netlist file or bundle directory")
    p.add_argument("--method", choices=METHODS, default="eks")
    p.add_argument("--mimo", action="store_true",
                   help="one block basis for all ports instead of per-port reduction")
    _add_reduction_args(p)
    _add_sweep_args(p)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("sweep", parents=[common], help="evaluate the transfer function of a model")
    p.add_argument("input")
    p.add_argument("--output", "-o", help="CSV path (default: sweep.csv)")
    _add_sweep_args(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("moments", parents=[common], help="print the first moment blocks at s = 0")
    p.add_argument("input")
    p.add_argument("--count", "-k", type=int, default=4)
    p.add_argument("--markov", action="store_true", help="print expansion coefficients at infinity")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("compare", parents=[common], help="mm vs eks vs aeks at one ROM order")
    p.add_argument("input")
    _add_reduction_args(p)
    _add_sweep_args(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("gen", parents=[common], help="generate a synthetic RC/RLC grid netlist")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--ports", type=int, default=1)
    p.add_argument("--cap-dropout", type=float, default=0.0,
                   help="fraction of nodes without capacitance")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--inductors", action="store_true", help="add package inductors at the pads")
    p.add_argument("--ladder", action="store_true", help="uniform RC ladder instead of a mesh")
    p.add_argument("--output", "-o", help="netlist path (default: stdout)")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ManifestError, ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SingularMatrix, RegularizationError, Deflated) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except KrylovMORError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
