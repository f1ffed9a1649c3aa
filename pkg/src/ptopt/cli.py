"""Command-line benchmark harness.

Subcommands: ``run`` (one problem/method), ``sweep`` (compliance vs
volume fraction for the proportional and optimality-criteria methods),
``alternate`` (feed stress/volume outputs between the two proportional
modes), and ``compare`` (side-by-side at one volume fraction).

Options may come from a plain ``key = value`` config file; command-line
flags override file values, and both override the built-in presets.

Exit codes: 0 converged, 2 ran out of iterations, 3 invalid problem
specification, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .bench import run_alternation, run_benchmark, run_compare, run_sweep
from .grid import MaterialModel, SingularSystemError
from .oc import BisectionFailureError
from .optimizers import StagnantInnerLoopError, UnreachableTargetError
from .problems import KINDS, InvalidSpecError, ProblemSpec, preset

EXIT_OK = 0
EXIT_NO_CONVERGENCE = 2
EXIT_INVALID_SPEC = 3
EXIT_SOLVER_FAILURE = 4

_SPEC_KEYS = {
    "e0": float,
    "emin": float,
    "l": float,
    "lv": float,
    "ld": int,
    "nelx": int,
    "nely": int,
    "nell": int,
    "nels": int,
    "nu": float,
    "penal": float,
    "q": float,
    "alpha": float,
    "rmin": float,
    "vmslim": float,
    "vlim": float,
    "xlim": str,
    "problem": str,
    "method": str,
    "max_iterations": int,
}


def read_config_file(path: str | Path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    values: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpecError(f"malformed config line: {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().lower()
        if key not in _SPEC_KEYS:
            raise InvalidSpecError(f"unknown config key {key!r}")
        values[key] = _SPEC_KEYS[key](value.strip())
    return values


def _parse_xlim(text: str) -> tuple[float, float]:
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    if len(parts) != 2:
        raise InvalidSpecError(f"xlim needs two values, got {text!r}")
    return float(parts[0]), float(parts[1])


def build_spec(problem: str, options: dict) -> ProblemSpec:
    """Preset for ``problem`` with config-file/CLI overrides applied."""
    spec = preset(problem)
    material = spec.material
    mat_fields = {}
    if "e0" in options:
        mat_fields["e0"] = options["e0"]
    if "emin" in options:
        mat_fields["e_min"] = options["emin"]
    if "nu" in options:
        mat_fields["nu"] = options["nu"]
    if "penal" in options:
        mat_fields["penal"] = options["penal"]
    if mat_fields:
        material = replace(material, **mat_fields)
    fields: dict = {"material": material}
    if "nelx" in options:
        fields["nelx"] = options["nelx"]
    if "nely" in options:
        fields["nely"] = options["nely"]
    if "nell" in options:
        fields["nelx"] = options["nell"]
        fields["nely"] = options["nell"]
    if "nels" in options:
        fields["leg_width"] = options["nels"]
    if "lv" in options:
        fields["load_value"] = options["lv"]
    if "ld" in options:
        fields["load_spread"] = options["ld"]
    if "l" in options:
        fields["edge_length"] = options["l"]
    if "rmin" in options:
        fields["rmin"] = options["rmin"]
    if "xlim" in options:
        fields["density_bounds"] = _parse_xlim(options["xlim"])
    if "vmslim" in options:
        fields["stress_limit"] = options["vmslim"]
    if "vlim" in options:
        fields["volume_fraction"] = options["vlim"]
    try:
        return replace(spec, **fields)
    except ValueError as exc:
        raise InvalidSpecError(str(exc)) from exc


def _collect_options(args) -> dict:
    options: dict = {}
    if args.config:
        options.update(read_config_file(args.config))
    for key in _SPEC_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            options[key] = value
    return options


def _add_spec_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--nelx", type=int)
    parser.add_argument("--nely", type=int)
    parser.add_argument("--nell", type=int, help="L-bracket long edge (elements)")
    parser.add_argument("--nels", type=int, help="L-bracket short edge (elements)")
    parser.add_argument("--lv", type=float, help="total load value")
    parser.add_argument("--ld", type=int, help="nodes the load is spread over")
    parser.add_argument("--l", type=float, dest="l", help="element edge length")
    parser.add_argument("--e0", type=float, help="solid Young's modulus")
    parser.add_argument("--emin", type=float, help="void Young's modulus")
    parser.add_argument("--nu", type=float, help="Poisson's ratio")
    parser.add_argument("--penal", type=float, help="SIMP penalization exponent")
    parser.add_argument("--rmin", type=float, help="filter radius (elements)")
    parser.add_argument("--xlim", help="density bounds, e.g. 0,1")
    parser.add_argument("--q", type=float, help="proportion exponent")
    parser.add_argument("--alpha", type=float, help="history coefficient")
    parser.add_argument("--vmslim", type=float, help="stress limit (ptos)")
    parser.add_argument("--vlim", type=float, help="volume fraction (ptoc/oc)")
    parser.add_argument("--max-iterations", type=int, dest="max_iterations")
    parser.add_argument("--quiet", action="store_true", help="suppress iteration lines")


def _run_overrides(options: dict, method: str) -> dict:
    overrides: dict = {}
    if "max_iterations" in options:
        overrides["max_iterations"] = options["max_iterations"]
    if method in ("ptos", "ptoc"):
        if "q" in options:
            overrides["proportion_exponent"] = options["q"]
        if "alpha" in options:
            overrides["history_alpha"] = options["alpha"]
    return overrides


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ptopt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one benchmark")
    p_run.add_argument("--problem", required=True, choices=KINDS)
    p_run.add_argument("--method", choices=("ptos", "ptoc", "oc"))
    p_run.add_argument("--out", help="artifact directory")
    _add_spec_flags(p_run)

    p_sweep = sub.add_parser("sweep", help="compliance vs volume-fraction sweep")
    p_sweep.add_argument("--problem", required=True, choices=KINDS)
    p_sweep.add_argument("--out", help="artifact directory")
    p_sweep.add_argument("--vf", help="comma-separated volume fractions (default 0.25..0.50 step 0.05)")
    p_sweep.add_argument("--methods", default="ptoc,oc")
    _add_spec_flags(p_sweep)

    p_alt = sub.add_parser("alternate", help="alternate ptoc and ptos")
    p_alt.add_argument("--problem", required=True, choices=KINDS)
    p_alt.add_argument("--out", help="artifact directory")
    p_alt.add_argument("--start-vf", type=float, default=0.5, dest="start_vf")
    p_alt.add_argument("--rounds", type=int, default=3)
    _add_spec_flags(p_alt)

    p_cmp = sub.add_parser("compare", help="ptoc vs oc at one volume fraction")
    p_cmp.add_argument("--problem", required=True, choices=KINDS)
    p_cmp.add_argument("--out", help="artifact directory")
    p_cmp.add_argument("--vf", type=float, help="volume fraction (defaults to the preset)")
    _add_spec_flags(p_cmp)
    return parser


def _dispatch(args) -> int:
    options = _collect_options(args)
    problem = options.get("problem", getattr(args, "problem", None))
    spec = build_spec(problem, options)
    progress = None
    if not args.quiet and args.command == "run":
        mode = "stress" if (options.get("method") or args.method) == "ptos" else "compliance"
        progress = lambda rec: print(rec.format_line(mode))

    if args.command == "run":
        method = options.get("method") or args.method
        if method is None:
            raise InvalidSpecError("run needs --method (or method in the config file)")
        summary, _ = run_benchmark(
            spec, method, out_dir=args.out, progress=progress, **_run_overrides(options, method)
        )
        for key, value in summary.as_dict().items():
            print(f"{key} = {value}")
        return EXIT_OK if summary.reason == "converged" else EXIT_NO_CONVERGENCE

    if args.command == "sweep":
        if args.vf:
            vfs = [float(v) for v in args.vf.split(",")]
        else:
            vfs = [0.25, 0.30, 0.35, 0.40, 0.45, 0.50]
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        rows = run_sweep(spec, vfs, methods=methods, out_dir=args.out,
                         **_run_overrides(options, "ptoc"))
        print("volume_fraction method iterations compliance max_von_mises contrast_index")
        for row in rows:
            print(
                f"{row.volume_fraction:.2f} {row.method} {row.iterations} "
                f"{row.compliance:.4f} {row.max_von_mises:.4f} {row.contrast_index:.4f}"
            )
        if any(row.reason != "converged" for row in rows):
            return EXIT_NO_CONVERGENCE
        return EXIT_OK

    if args.command == "alternate":
        result = run_alternation(
            spec, start_volume_fraction=args.start_vf, rounds=args.rounds, out_dir=args.out,
            **_run_overrides(options, "ptoc"),
        )
        for summary in result.summaries:
            print(
                f"{summary.method}: vf={summary.volume_fraction:.4f} "
                f"max_vms={summary.max_von_mises:.4f} compliance={summary.compliance:.2f}"
            )
        print(f"mean stress improvement = {result.mean_stress_improvement:.2f}%")
        print(f"mean volume improvement = {result.mean_volume_improvement:.2f}%")
        if any(s.reason != "converged" for s in result.summaries):
            return EXIT_NO_CONVERGENCE
        return EXIT_OK

    summaries = run_compare(spec, volume_fraction=args.vf, out_dir=args.out,
                            **_run_overrides(options, "ptoc"))
    for summary in summaries:
        print(
            f"{summary.method}: iterations={summary.iterations} compliance={summary.compliance:.4f} "
            f"max_vms={summary.max_von_mises:.4f} contrast={summary.contrast_index:.4f}"
        )
    if any(s.reason != "converged" for s in summaries):
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except InvalidSpecError as exc:
        print(f"invalid specification: {exc}", file=sys.stderr)
        return EXIT_INVALID_SPEC
    except (SingularSystemError, BisectionFailureError, StagnantInnerLoopError, UnreachableTargetError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER_FAILURE


if __name__ == "__main__":
    sys.exit(main())
