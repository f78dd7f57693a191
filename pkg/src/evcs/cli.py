"""Command-line interface.

Subcommands: simulate, table1, verify, search, fit.  Exit codes are stable:

    0  success
    2  parse error (scenario/search/grid file)
    3  validation error (parameter out of range, bad flag combination)
    4  physics-degenerate scenario (heralding probability is zero)
    5  verification failure (engine disagreement or propagation leakage)
    6  truncation-mass error (caps capture too little probability)
    7  empty search result

The EVCS_MAX_THREADS environment variable caps the worker threads used for
row/grid-point evaluation (default 1; results are byte-identical at any
setting).
"""

import argparse
import json
import os
import sys

from . import __version__
from .errors import (
    DegenerateScenarioError,
    EmptyResultError,
    EvcsError,
    NoSolutionError,
    PropagationLeakageError,
    ScenarioParseError,
    TruncationMassError,
    ValidationError,
)
from . import io as evcs_io
from .fit import fit_entangled
from .propagation import engine_deviation
from .search import search as run_search
from .search import table1_rows

EXIT_CODES = {
    "ok": 0,
    "parse": 2,
    "validation": 3,
    "degenerate": 4,
    "verify": 5,
    "truncation": 6,
    "empty": 7,
}

_VERIFY_TOL = 1e-8


def _threads() -> int:
    raw = os.environ.get("EVCS_MAX_THREADS", "1")
    try:
        value = int(raw)
    except ValueError:
        raise ValidationError(f"EVCS_MAX_THREADS={raw!r} is not an integer")
    if value < 1:
        raise ValidationError("EVCS_MAX_THREADS must be >= 1")
    return value


def _scenario_overrides(args) -> dict:
    overrides = {}
    for name in ("phi", "theta", "trunc_in", "trunc_out"):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return overrides


def cmd_simulate(args) -> int:
    spec = evcs_io.parse_scenario_file(args.scenario, _scenario_overrides(args))
    convention = "standard"
    bundle = evcs_io.simulate_bundle(spec, convention=convention)
    if not args.standard_norm:
        bundle["fit"].pop("alt", None)

    from .simulator import herald_single, joint_amplitudes  # local: keeps --help fast
    from . import report

    if args.out:
        os.makedirs(args.out, exist_ok=True)
        evcs_io.write_json_atomic(os.path.join(args.out, "bundle.json"), bundle)
        grid = evcs_io.grid_from_dict(bundle["heralded_grid"])
        if args.format == "csv":
            evcs_io.write_text_atomic(os.path.join(args.out, "pnm.csv"), report.pnm_csv(grid))
        if args.figures:
            fit = fit_entangled(grid, n_max=grid.trunc_out, convention=convention, compute_alt=False)
            report.save_pnm_figure(grid, os.path.join(args.out, "pnm_grid.png"))
            report.save_axis_fit_figure(grid, fit, os.path.join(args.out, "axis_fit.png"))
        print(f"wrote {args.out}/bundle.json")
    else:
        if args.format == "csv":
            grid = evcs_io.grid_from_dict(bundle["heralded_grid"])
            sys.stdout.write(report.pnm_csv(grid))
        else:
            print(evcs_io.dumps_bundle(bundle))
    return EXIT_CODES["ok"]


def cmd_table1(args) -> int:
    from . import report

    pairs = table1_rows(
        trunc_in=args.trunc_in if args.trunc_in is not None else 16,
        trunc_out=args.trunc_out if args.trunc_out is not None else 9,
        threads=_threads(),
    )
    alt_fits = None
    if args.standard_norm:
        from .search import reference_spec
        from .simulator import heralded_grid

        alt_fits = {}
        for pub, _row in pairs:
            spec = reference_spec(
                pub,
                trunc_in=args.trunc_in if args.trunc_in is not None else 16,
                trunc_out=args.trunc_out if args.trunc_out is not None else 9,
            )
            fit = fit_entangled(heralded_grid(spec), n_max=spec.trunc_out)
            alt_fits[pub.label] = fit.alt
    text = report.table1_text(pairs, show_alt=args.standard_norm, alt_fits=alt_fits)
    sys.stdout.write(text)
    if args.out:
        evcs_io.write_text_atomic(args.out, report.table1_csv(pairs))
        print(f"wrote {args.out}")
    return EXIT_CODES["ok"]


def cmd_verify(args) -> int:
    if args.cap > 16:
        raise ValidationError("verification cap must be <= 16")
    spec = evcs_io.parse_scenario_file(args.scenario, _scenario_overrides(args))
    deviation = engine_deviation(
        spec, cap=args.cap, compare_up_to=min(8, args.cap),
        flip_convention=args.negative_control,
    )
    ok = deviation < _VERIFY_TOL
    report = {
        "cap": args.cap,
        "compare_up_to": min(8, args.cap),
        "max_abs_deviation": deviation,
        "tolerance": _VERIFY_TOL,
        "pass": ok,
    }
    print(json.dumps(report, sort_keys=True, indent=2))
    return EXIT_CODES["ok"] if ok else EXIT_CODES["verify"]


def cmd_search(args) -> int:
    from . import report

    space = evcs_io.parse_search_file(args.space)
    stream = (lambda row: print(
        f"# {row.beta0:.6g} {row.t1:.6g} pu={row.pu:.6f} pr={row.pr:.6f} alpha={row.alpha:.4f}",
        file=sys.stderr,
    )) if args.progress else None
    rows = run_search(space, threads=_threads(), progress=stream)
    payload = report.search_rows_csv(rows) if args.format == "csv" else json.dumps(
        [evcs_io._row_to_dict(r) for r in rows], sort_keys=True, indent=2
    ) + "\n"
    if args.out:
        evcs_io.write_text_atomic(args.out, payload)
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(payload)
    return EXIT_CODES["ok"]


def cmd_fit(args) -> int:
    try:
        with open(args.grid, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioParseError(f"cannot read grid file {args.grid}: {exc}")
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"grid file is not valid JSON: {exc}")
    grid = evcs_io.grid_from_dict(data)
    fit = fit_entangled(grid, n_max=min(args.n_max, grid.trunc_out))
    out = evcs_io.fit_to_dict(fit)
    if not args.standard_norm:
        out.pop("alt", None)
    print(json.dumps(out, sort_keys=True, indent=2))
    return EXIT_CODES["ok"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="evcs",
        description="Heralded entangled vacuum-evacuated coherent states: "
        "simulation, verification, reference table, search, fitting.",
    )
    parser.add_argument("--version", action="version", version=f"evcs {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, truncation=True):
        if truncation:
            p.add_argument("--trunc-in", dest="trunc_in", type=int, default=None,
                           help="per-input photon cap (default 16)")
            p.add_argument("--trunc-out", dest="trunc_out", type=int, default=None,
                           help="reported output photon cap (default 9)")
        p.add_argument("--standard-norm", action="store_true",
                       help="also report the fit under the alternative coherent-weight "
                            "convention (diagnostic columns)")

    sim = sub.add_parser("simulate", help="run one scenario file")
    sim.add_argument("scenario", help="scenario file (INI-style)")
    sim.add_argument("--phi", type=float, default=None, help="override squeeze phase")
    sim.add_argument("--theta", type=float, default=None, help="override relative beam phase")
    sim.add_argument("--out", default=None, help="output directory for bundle.json (+ csv/figures)")
    sim.add_argument("--format", choices=("json", "csv"), default="json")
    sim.add_argument("--figures", action="store_true", help="render figures next to the output")
    add_common(sim)
    sim.set_defaults(func=cmd_simulate)

    tbl = sub.add_parser("table1", help="recompute the bundled reference operating points")
    tbl.add_argument("--out", default=None, help="write the comparison as CSV")
    add_common(tbl)
    tbl.set_defaults(func=cmd_table1)

    ver = sub.add_parser("verify", help="compare both engines on one scenario")
    ver.add_argument("scenario")
    ver.add_argument("--cap", type=int, default=12, help="per-input photon cap for the check (<= 16)")
    ver.add_argument("--negative-control", action="store_true",
                     help="deliberately flip a phase convention in the reference engine; "
                          "the comparison must then FAIL")
    ver.add_argument("--phi", type=float, default=None)
    ver.add_argument("--theta", type=float, default=None)
    ver.set_defaults(func=cmd_verify, standard_norm=False)

    sea = sub.add_parser("search", help="scan (beta0, t1) for good operating points")
    sea.add_argument("space", help="search-space file (INI-style)")
    sea.add_argument("--out", default=None, help="write ranked rows here (atomic)")
    sea.add_argument("--format", choices=("csv", "json"), default="csv")
    sea.add_argument("--progress", action="store_true", help="stream rows to stderr as computed")
    sea.set_defaults(func=cmd_search)

    fit = sub.add_parser("fit", help="fit a stored heralded grid (JSON)")
    fit.add_argument("grid", help="grid JSON (bare grid object or a full bundle)")
    fit.add_argument("--n-max", type=int, default=9)
    add_common(fit, truncation=False)
    fit.set_defaults(func=cmd_fit)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ScenarioParseError as exc:
        print(f"error (parse): {exc}", file=sys.stderr)
        return EXIT_CODES["parse"]
    except (ValidationError, NoSolutionError) as exc:
        print(f"error (validation): {exc}", file=sys.stderr)
        return EXIT_CODES["validation"]
    except DegenerateScenarioError as exc:
        print(f"error (degenerate scenario): {exc}", file=sys.stderr)
        return EXIT_CODES["degenerate"]
    except PropagationLeakageError as exc:
        print(f"error (verification): {exc}", file=sys.stderr)
        return EXIT_CODES["verify"]
    except TruncationMassError as exc:
        print(f"error (truncation mass): {exc}", file=sys.stderr)
        return EXIT_CODES["truncation"]
    except EmptyResultError as exc:
        print(f"error (empty result): {exc}", file=sys.stderr)
        return EXIT_CODES["empty"]
    except EvcsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CODES["validation"]


if __name__ == "__main__":
    raise SystemExit(main())
