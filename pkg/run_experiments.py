#!/usr/bin/env python3
"""
Command-line interface for noisy-ldpc experiments.
"""

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

from noisy_ldpc import __version__
from noisy_ldpc.config import parse_config
from noisy_ldpc.degree import NAMED_CODES, DegreeDistribution, regular
from noisy_ldpc.formats import CodeFormat, FormatDetector, read_distribution, write_alist
from noisy_ldpc.graph import construct, remove_four_cycles
from noisy_ldpc.harness import ExperimentRunner, run_config


def code_table(code: str) -> Dict[str, Any]:
    """
    Translate a --code argument into a [code] table.

    Accepts a reference code name, ``regular:DV,DC``, an alist file or a JSON distribution.
    """
    if code in NAMED_CODES:
        return {"name": code}
    if code.startswith("regular:"):
        try:
            dv, dc = (int(part) for part in code[len("regular:") :].split(","))
        except ValueError:
            raise ValueError(f"Expected regular:DV,DC, got {code!r}")
        return regular(dv, dc).to_dict()

    path = Path(code)
    if not path.exists():
        raise ValueError(
            f"Unknown code {code!r}: not one of {sorted(NAMED_CODES)}, regular:DV,DC, or a file"
        )
    code_format = FormatDetector.detect_format(path)
    if code_format == CodeFormat.ALIST:
        return {"alist": str(path.resolve())}
    if code_format == CodeFormat.DEGREE_JSON:
        return read_distribution(path).to_dict()
    raise ValueError(f"Cannot tell the format of code file {path}")


def experiment_document(args: argparse.Namespace) -> Dict[str, Any]:
    """The config document equivalent to a subcommand invocation."""
    document: Dict[str, Any] = {"seed": args.seed, "threads": args.threads}
    if args.command == "threshold":
        document["kind"] = "threshold"
        document["code"] = code_table(args.code)
        section: Dict[str, Any] = {
            "sigma2_d": args.sigma2_d,
            "tol_db": args.tol_db,
            "mc_samples": args.mc_samples,
            "max_iterations": args.max_iterations,
            "method": args.method,
        }
    elif args.command == "exit-curves":
        document["kind"] = "exit"
        document["code"] = code_table(args.code)
        section = {
            "snr_db": args.snr_db,
            "sigma2_d": args.sigma2_d,
            "n_trials": args.trials,
            "grid_points": args.grid_points,
            "margin": args.margin,
        }
    elif args.command == "design":
        document["kind"] = "design"
        section = {
            "sigma2_d": args.sigma2_d,
            "dc": args.dc,
            "dv_max": args.dv_max,
            "rate": args.rate,
            "delta_db": args.delta_db,
            "alpha_grid_size": args.alpha_grid_size,
            "margin": args.margin,
            "n_trials": args.trials,
        }
        if args.initial_snr_db is not None:
            section["initial_snr_db"] = args.initial_snr_db
    else:
        document["kind"] = "ber"
        document["code"] = code_table(args.code)
        section = {
            "snr_db": args.snr_db,
            "sigma2_d": args.sigma2_d,
            "n": args.n,
            "block_errors": args.block_errors,
            "max_bits": args.max_bits,
            "max_iterations": args.max_iterations,
            "remove_cycles": not args.keep_cycles,
        }
    document[document["kind"]] = section
    return document


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Density evolution, EXIT analysis, code design and BER simulation "
        "for LDPC decoders with noisy message passing"
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="Master random seed (default: 0)")
    parser.add_argument(
        "--threads", type=int, default=None, help="Worker threads for Monte-Carlo work (default: 1)"
    )
    parser.add_argument(
        "--cache-dir",
        default=None,
        help="Directory for cached EXIT curves (default: $NOISY_LDPC_CACHE_DIR, else memory only)",
    )
    parser.add_argument("--out", default=None, help="Directory for output files (default: .)")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable verbose logging")

    commands = parser.add_subparsers(dest="command", required=True)

    construct_cmd = commands.add_parser("construct", help="Build a Tanner graph and write it as alist")
    construct_cmd.add_argument("--code", default="regular:3,6", help="Code name, regular:DV,DC or JSON file")
    construct_cmd.add_argument("-n", type=int, default=1008, help="Block length (default: 1008)")
    construct_cmd.add_argument("--output", default="code.alist", help="alist file to write")
    construct_cmd.add_argument("--keep-cycles", action="store_true", help="Skip 4-cycle removal")
    construct_cmd.add_argument("--max-passes", type=int, default=100, help="Cycle removal passes")

    threshold_cmd = commands.add_parser("threshold", help="Density evolution thresholds")
    threshold_cmd.add_argument("--code", default="regular:3,6")
    threshold_cmd.add_argument("--sigma2-d", type=float, nargs="+", default=[0.0])
    threshold_cmd.add_argument("--tol-db", type=float, default=0.01)
    threshold_cmd.add_argument("--mc-samples", type=int, default=100_000)
    threshold_cmd.add_argument("--max-iterations", type=int, default=2000)
    threshold_cmd.add_argument(
        "--method", choices=["semi_gaussian", "moment_matching"], default="semi_gaussian"
    )

    exit_cmd = commands.add_parser("exit-curves", help="EXIT curves and tunnel test")
    exit_cmd.add_argument("--code", default="regular:3,6")
    exit_cmd.add_argument("--snr-db", type=float, required=True)
    exit_cmd.add_argument("--sigma2-d", type=float, default=0.0)
    exit_cmd.add_argument("--trials", type=int, default=100_000)
    exit_cmd.add_argument("--grid-points", type=int, default=100)
    exit_cmd.add_argument("--margin", type=float, default=1e-3)

    design_cmd = commands.add_parser("design", help="Robust degree-distribution design")
    design_cmd.add_argument("--config", default=None, help="TOML config of kind 'design'")
    design_cmd.add_argument("--sigma2-d", type=float, default=0.0)
    design_cmd.add_argument("--dc", type=int, default=5)
    design_cmd.add_argument("--dv-max", type=int, default=4)
    design_cmd.add_argument("--rate", type=float, default=0.5)
    design_cmd.add_argument("--delta-db", type=float, default=0.05)
    design_cmd.add_argument("--alpha-grid-size", type=int, default=100)
    design_cmd.add_argument("--margin", type=float, default=1e-3)
    design_cmd.add_argument("--initial-snr-db", type=float, default=None)
    design_cmd.add_argument("--trials", type=int, default=100_000)

    ber_cmd = commands.add_parser("ber", help="Monte-Carlo bit error rate")
    ber_cmd.add_argument("--code", default="regular:3,6", help="Code name, regular:DV,DC, alist or JSON")
    ber_cmd.add_argument("-n", type=int, default=1008, help="Block length when building a graph")
    ber_cmd.add_argument("--snr-db", type=float, nargs="+", required=True)
    ber_cmd.add_argument("--sigma2-d", type=float, nargs="+", default=[0.0])
    ber_cmd.add_argument("--block-errors", type=int, default=50)
    ber_cmd.add_argument("--max-bits", type=int, default=10_000_000)
    ber_cmd.add_argument("--max-iterations", type=int, default=80)
    ber_cmd.add_argument("--keep-cycles", action="store_true")

    run_cmd = commands.add_parser("run", help="Run an experiment from a TOML config")
    run_cmd.add_argument("config", help="Path to the config file")

    return parser


def run_construct(args: argparse.Namespace, out_dir: Path) -> None:
    table = code_table(args.code)
    if "alist" in table:
        raise ValueError("construct needs a degree distribution, not an alist file")
    dist = NAMED_CODES[table["name"]] if "name" in table else DegreeDistribution.from_dict(table)
    graph = construct(dist, args.n, seed=args.seed or 0)
    if not args.keep_cycles:
        result = remove_four_cycles(graph, max_passes=args.max_passes, seed=args.seed or 0)
        graph = result.graph
        print(f"4-cycle removal: {result.swaps} swaps in {result.passes} passes, "
              f"{result.residual_cycles} cycles left")
    output = Path(args.output)
    output = output if output.is_absolute() else out_dir / output
    output.parent.mkdir(parents=True, exist_ok=True)
    write_alist(graph, output)
    print(f"N={graph.n_vars}, K={graph.n_checks}, rate={graph.design_rate:.4f}")
    print(f"Wrote {output}")


async def main(argv: Optional[List[str]] = None):
    parser = build_parser()
    args = parser.parse_args(argv)

    # Set up logging level
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )

    out_dir = Path(args.out) if args.out else None

    try:
        if args.command == "construct":
            run_construct(args, out_dir or Path("."))
            return

        if args.command == "run" or (args.command == "design" and args.config):
            outcome = await run_config(
                args.config, out_dir, args.cache_dir, seed=args.seed, threads=args.threads
            )
        else:
            if args.seed is None:
                args.seed = 0
            if args.threads is None:
                args.threads = 1
            config = parse_config(experiment_document(args))
            outcome = await ExperimentRunner(config, out_dir or Path("."), args.cache_dir).run()

        ExperimentRunner.print_summary(outcome)

    except KeyboardInterrupt:
        print("\nExperiment cancelled by user")
        sys.exit(1)
    except Exception as e:
        print(f"Error: {e}")
        if args.verbose:
            import traceback

            traceback.print_exc()
        sys.exit(1)


def cli_main():
    """Synchronous entry point for console scripts."""
    asyncio.run(main())


if __name__ == "__main__":
    cli_main()
