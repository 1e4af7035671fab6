"""Simulate command - Monte Carlo rate estimates and the chi-square block check."""

import sys
from argparse import Namespace
from dataclasses import replace

from ..config import Settings, read_key_value_file
from ..ensembles import RngSeed
from ..errors import SphereLdpError, UsageError
from ..io import write_rows
from ..mc import RESULT_COLUMNS, SAMPLE_COLUMNS, ExperimentConfig, chi_square_block_check, run_experiment
from ..utils import error, open_output, warn


def parse_fractions(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.split(",") if tok.strip())
    except ValueError as e:
        raise UsageError(f"--blocks expects comma-separated fractions, got {text!r}") from e


def load_config(args: Namespace) -> ExperimentConfig:
    """Experiment config from the file, with --seed, --samples and --dump-samples applied on top."""
    config = ExperimentConfig.from_mapping(read_key_value_file(args.config_file), source=args.config_file)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = RngSeed(args.seed, config.seed.stream)
    if args.samples is not None:
        overrides["samples_per_n"] = args.samples
    if args.dump_samples is not None:
        overrides["dump_samples"] = args.dump_samples
    return replace(config, **overrides) if overrides else config


def run_blocks(args: Namespace, settings: Settings) -> int:
    fractions = parse_fractions(args.blocks)
    if args.n is None or args.samples is None:
        raise UsageError("--blocks needs --n and --samples")
    seed = RngSeed(args.seed if args.seed is not None else 0)
    result = chi_square_block_check(len(fractions), fractions, args.n, args.samples, seed, args.bin_width, settings)
    header = [f"x{j + 1}" for j in range(len(fractions))] + ["count", "total", "empirical_rate", "predicted_rate"]
    rows = [{"kind": "bin", **r.as_row()} for r in result.bins]
    rows += [{"kind": "tail", **r.as_row()} for r in result.tails]
    print(f"# block sizes: {' '.join(str(s) for s in result.sizes)}", file=sys.stderr)
    with open_output(args.output) as stream:
        write_rows(rows, ["kind"] + header, stream, args.format)
    return 0


def run(args: Namespace) -> int:
    """
    Execute simulate command.

    Runs the experiment described by a key=value config file and writes one
    RateEstimate row per (n, m, convention). A "mean F" summary line per n
    goes to stderr. With --blocks the chi-square block check runs instead.

    Args:
        args: Parsed command-line arguments

    Returns:
        int: Exit code (0 on success)
    """
    try:
        settings = Settings.resolve(args)
        if args.blocks is not None:
            return run_blocks(args, settings)
        if not args.config_file:
            raise UsageError("an experiment config file is required (or --blocks)")

        config = load_config(args)
        result = run_experiment(config, settings)
        for block in result.samples:
            print(f"# n={block.n} samples={block.f.size} mean F = {block.mean_f!r}", file=sys.stderr)
        censored = sum(1 for e in result.estimates if e.count == 0)
        if censored:
            warn(f"{censored} estimate(s) censored: no sample hit the event, rate reported as inf")

        with open_output(args.output) as stream:
            write_rows((e.as_row() for e in result.estimates), RESULT_COLUMNS, stream, args.format)

        if config.dump_samples:
            with open_output(config.dump_samples) as stream:
                rows = [row for block in result.samples for row in block.rows()]
                write_rows(rows, SAMPLE_COLUMNS, stream)
        return 0
    except SphereLdpError as e:
        error(str(e))
        return e.exit_code
