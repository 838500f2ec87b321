"""Command line front end: `hbac <experiment> [--config file] [flags]`.

Flags override config-file values which override per-experiment defaults.
Exit codes: 0 success, 2 invalid input, 3 a checked bound was violated.
"""

from __future__ import annotations

import argparse
import sys

from .errors import BoundViolationError, ValidationError
from .harness import EXPERIMENTS, build_config, parse_config_file, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hbac",
        description="Heat-bath algorithmic cooling simulations and reports.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    help_lines = {
        "converge": "run TSAC and PPA to the ordered asymptotic state, check the mixing bound",
        "spectrum": "compare numeric transfer-matrix eigenvalues with the closed form",
        "nbds": "track the PPA sort-network block-diagonal size over iterations",
        "noise": "PPA with a noisy population estimate, swept over sigma and seeds",
        "circuit": "synthesize the two-sort unitary and tabulate gate counts",
    }
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=help_lines[name])
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--n", type=int, help="computation qubits (circuit: total qubits)")
        p.add_argument("--epsilon", type=float, help="reset-qubit polarization")
        p.add_argument("--xi", type=float, help="TV threshold defining the mixing time")
        p.add_argument("--sigma", help="comma-separated noise widths")
        p.add_argument("--seeds", help="comma-separated RNG seeds")
        p.add_argument("--iters", type=int, help="iteration budget")
        p.add_argument("--out", help="output directory")
        p.add_argument("--initial", help="thermal, mixed, or custom:<csv path>")
        p.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        file_values = parse_config_file(args.config) if args.config else {}
        overrides: dict[str, object] = {
            "n": args.n,
            "epsilon": args.epsilon,
            "xi": args.xi,
            "max_iters": args.iters,
            "initial": args.initial,
            "output_path": args.out,
        }
        if args.sigma is not None:
            overrides["sigma_list"] = tuple(float(v) for v in args.sigma.split(",") if v.strip())
        if args.seeds is not None:
            overrides["seeds"] = tuple(int(v) for v in args.seeds.split(",") if v.strip())
        if args.no_plots:
            overrides["plots"] = False
        config = build_config(args.experiment, file_values, overrides)
        record = run_experiment(config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BoundViolationError as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return 3
    for name in record["result_files"]:
        print(f"wrote {config.output_path}/{name}")
    print(f"wrote {config.output_path}/run_record.json")
    return 0


if __name__ == "__main__":
    sys.exit(main())
