"""
dackrr - Main Entry Point
Drives fitting, bootstrap bands, coverage simulations and kernel diagnostics from the command line
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from dotenv import load_dotenv

from dackrr.band import bootstrap_band, empirical_grid, uniform_grid
from dackrr.config import RunConfig, apply_overrides, create_sample_config, load_config
from dackrr.dac import (
    AveragedModel,
    admissible_partition_range,
    eval_matrix,
    fit_averaged,
    minimax_rate_exponent,
    undersmoothed_rate_exponent,
)
from dackrr.errors import ConfigError, DackrrError, InternalError, UsageError
from dackrr.ingest import ingest_csv
from dackrr.kernel import effective_dimension, nystrom_eigendecay, smoothness_index
from dackrr.logger import get_logger, setup_logger
from dackrr.persistence import load_model, save_band, save_model, write_csv, write_json
from dackrr.simulate import coverage_rows, run_coverage, write_coverage_csv, write_coverage_json

logger = get_logger(__name__)

# argparse dest -> dotted configuration key
OVERRIDE_FLAGS = {
    "seed": "seed",
    "threads": "runtime.threads",
    "log_level": "runtime.log_level",
    "out": "io.out",
    "input": "io.input",
    "model": "io.model",
    "sidecar": "io.sidecar",
    "kernel": "kernel.family",
    "alpha": "kernel.alpha",
    "lengthscale": "kernel.lengthscale",
    "rho": "fit.rho",
    "partitions": "fit.partitions",
    "s_override": "fit.s_override",
    "s0": "fit.s0",
    "contiguous": "fit.contiguous",
    "B": "bootstrap.B",
    "beta": "bootstrap.beta",
    "scheme": "bootstrap.scheme",
    "grid": "grid.kind",
    "M": "grid.M",
    "n": "simulate.n",
    "P_list": "simulate.P_list",
    "sigma": "simulate.sigma",
    "trials": "simulate.trials",
    "noise": "simulate.noise",
    "m": "diagnose.m",
}


def build_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """
    Map parsed flags onto dotted configuration keys

    Args:
        args: Parsed command line

    Returns:
        Overrides for apply_overrides (unset flags are None)
    """
    overrides = {key: getattr(args, dest, None) for dest, key in OVERRIDE_FLAGS.items()}
    if args.command == "diagnose":
        # --n is the advisory sample size for diagnose
        overrides["diagnose.n"] = overrides.pop("simulate.n")
    return overrides


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults < config file < environment < flags"""
    config = load_config(args.config)
    return RunConfig.from_dict(apply_overrides(config, build_overrides(args)))


def _require_input(run: RunConfig) -> Tuple[np.ndarray, np.ndarray]:
    if not run.input_path:
        raise ConfigError("an input CSV is required (--input or io.input)")
    return ingest_csv(run.input_path)


def _fit(run: RunConfig, X: np.ndarray, y: np.ndarray) -> AveragedModel:
    kernel = run.kernel_spec(X.shape[1])
    cfg = run.fit_config()
    logger.info(f"Fitting {kernel.describe()} on n={X.shape[0]} with P={cfg.P}")
    return fit_averaged(kernel, cfg, X, y, threads=run.threads)


def cmd_fit(run: RunConfig) -> int:
    """Fit the averaged estimator on the input CSV and save the model"""
    X, y = _require_input(run)
    model = _fit(run, X, y)
    path = Path(run.model_path) if run.model_path else run.out_dir / "model.json"
    save_model(model, path, sidecar=run.sidecar)
    print(f"✓ Model saved to: {path}")
    print(f"  P={model.P}, rho={model.rho!r}")
    return 0


def cmd_band(run: RunConfig) -> int:
    """Bootstrap radius for a saved model, or for a fresh fit of the input"""
    X = None
    if run.model_path:
        model = load_model(run.model_path)
    else:
        X, y = _require_input(run)
        model = _fit(run, X, y)

    kind, M, box = run.grid_settings()
    if kind == "empirical":
        if X is None:
            X, _ = _require_input(run)
        grid = empirical_grid(X)
    else:
        grid = uniform_grid(model.kernel.dim, M, box)

    evals = eval_matrix(model, grid, threads=run.threads)
    band = bootstrap_band(evals, grid, run.bootstrap_config(), threads=run.threads)
    paths = save_band(band, run.out_dir)
    print(f"✓ Radius {band.radius!r} (beta={band.config.beta!r}, B={band.config.B})")
    for path in paths:
        print(f"  Wrote {path}")
    return 0


def cmd_simulate(run: RunConfig) -> int:
    """Run the coverage experiment and write coverage.csv / coverage.json"""
    report = run_coverage(run.sim_config(), threads=run.threads)
    out_dir = run.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = write_coverage_csv(report, out_dir / "coverage.csv")
    json_path = write_coverage_json(report, out_dir / "coverage.json")

    for row in coverage_rows(report):
        print(",".join(row))
    print(f"✓ Coverage written to: {csv_path} and {json_path}")
    return 0


def _diagnose_sample(run: RunConfig, m: int) -> Tuple[np.ndarray, Optional[int]]:
    """Design sample for the Nyström check, plus the input size if there is one"""
    rng = np.random.default_rng(run.fit_config().seed)
    if run.input_path:
        X, _ = ingest_csv(run.input_path)
        n = X.shape[0]
        if n > m:
            X = X[np.sort(rng.choice(n, size=m, replace=False))]
        return X, n
    _, _, (lo, hi) = run.grid_settings()
    return rng.uniform(lo, hi, size=(m, 1)), None


def cmd_diagnose(run: RunConfig) -> int:
    """
    Check the eigendecay assumption and tabulate the effective dimension

    Writes eigendecay.json and effective_dimension.csv; with fit.s0 set,
    also writes partition_range.json and prints its warnings.
    """
    settings = run.diagnose_settings()
    sample, input_n = _diagnose_sample(run, settings["m"])
    kernel = run.kernel_spec(sample.shape[1])
    out_dir = run.out_dir

    report = nystrom_eigendecay(kernel, sample, settings["window"])
    s_override = run.fit_config().s_override
    s = s_override if s_override is not None else smoothness_index(kernel)
    payload = report.to_dict()
    payload["kernel"] = kernel.to_dict()
    payload["s"] = s
    payload["theoretical_slope"] = -2.0 * s if s is not None else None
    write_json(payload, out_dir / "eigendecay.json")
    print(f"✓ Fitted eigendecay slope {report.fitted_slope!r} over eigenvalues {report.window}")
    if s is not None:
        print(f"  Theory for {kernel.describe()}: {-2.0 * s!r}")

    if s is None:
        logger.warning("No smoothness index for this kernel; skipping the effective-dimension table")
    else:
        rows: List[List[float]] = []
        for rho in settings["rho_sweep"]:
            value = effective_dimension(s, rho)
            rows.append([rho, value, value * rho ** (1.0 / (2.0 * s))])
        write_csv(
            ["rho", "effective_dimension", "scaled"], rows, out_dir / "effective_dimension.csv"
        )

    s0 = run.fit_config().s0
    n = settings["n"] or input_n
    if s0 is not None and s is not None:
        if n is None:
            logger.warning("Partition range needs a sample size (--n or an input CSV)")
        else:
            bounds = admissible_partition_range(n, s, s0)
            write_json(
                {
                    "n": n,
                    "s": s,
                    "s0": s0,
                    "lower": bounds.lower,
                    "upper": bounds.upper,
                    "warnings": list(bounds.warnings),
                    "minimax_rate_exponent": minimax_rate_exponent(s),
                    "undersmoothed_rate_exponent": undersmoothed_rate_exponent(s0),
                },
                out_dir / "partition_range.json",
            )
            print(f"  Partition range for n={n}: [{bounds.lower:.4g}, {bounds.upper:.4g}]")
            for message in bounds.warnings:
                print(f"⚠️  {message}")
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "band": cmd_band,
    "simulate": cmd_simulate,
    "diagnose": cmd_diagnose,
}


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises UsageError instead of printing usage and exiting"""

    def error(self, message: str):
        raise UsageError(message, command=self.prog)


def build_parser() -> argparse.ArgumentParser:
    """Command line parser with one subcommand per operation"""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="Path to configuration file (YAML)", default=None)
    common.add_argument("--seed", type=int, default=None, help="Set every seed")
    common.add_argument(
        "--threads", type=int, default=None, help="Worker threads (default: all CPUs)"
    )
    common.add_argument("--out", default=None, help="Output directory")
    common.add_argument("--log-level", dest="log_level", default=None, help="DEBUG, INFO, WARNING, ...")

    data = common.add_argument_group("data and model")
    data.add_argument("--input", default=None, help="CSV with feature columns followed by y")
    data.add_argument("--model", default=None, help="Model JSON path")
    data.add_argument(
        "--sidecar", action="store_true", default=None, help="Store model arrays in a .bin sidecar"
    )

    kernel = common.add_argument_group("kernel and fit")
    kernel.add_argument("--kernel", choices=["matern", "se"], default=None)
    kernel.add_argument("--alpha", type=float, default=None, help="Matérn smoothness")
    kernel.add_argument("--lengthscale", type=float, default=None)
    kernel.add_argument("--rho", type=float, default=None, help="Regularization (default: automatic)")
    kernel.add_argument("-P", "--partitions", type=int, default=None, help="Partition count")
    kernel.add_argument("--s-override", dest="s_override", type=float, default=None)
    kernel.add_argument("--s0", type=float, default=None, help="Smoothness of the regression function")
    kernel.add_argument("--contiguous", action="store_true", default=None, help="Partition in row order")

    boot = common.add_argument_group("bootstrap and grid")
    boot.add_argument("--B", dest="B", type=int, default=None, help="Bootstrap iterations")
    boot.add_argument("--beta", type=float, default=None, help="Confidence level")
    boot.add_argument("--scheme", choices=["resample", "multiplier"], default=None)
    boot.add_argument("--grid", choices=["uniform", "empirical"], default=None)
    boot.add_argument("--M", dest="M", type=int, default=None, help="Grid points per axis")

    sim = common.add_argument_group("simulation and diagnostics")
    sim.add_argument("--n", dest="n", type=int, default=None, help="Sample size")
    sim.add_argument("--P-list", dest="P_list", type=int, nargs="+", default=None)
    sim.add_argument("--sigma", type=float, default=None, help="Noise level")
    sim.add_argument("--trials", type=int, default=None)
    sim.add_argument("--noise", choices=["gaussian", "rademacher"], default=None)
    sim.add_argument("--m", dest="m", type=int, default=None, help="Nyström sample size")

    parser = CliParser(
        prog="dackrr",
        description="Divide-and-conquer kernel ridge regression with bootstrap confidence bands",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  dackrr fit --input data.csv -P 32 --out run/         # Fit and save run/model.json
  dackrr band --model run/model.json --B 500           # Bootstrap radius for a saved model
  dackrr band --input data.csv -P 32 --seed 7          # Fit then band in one go
  dackrr simulate --n 8192 --P-list 32 128 --trials 200
  dackrr diagnose --alpha 2.5 --m 512 --s0 4.5 --n 131072
  dackrr init-config                                   # Create a sample config file
        """,
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    subparsers.add_parser("fit", parents=[common], help="Fit and save an averaged model")
    subparsers.add_parser("band", parents=[common], help="Bootstrap L2 confidence radius")
    subparsers.add_parser("simulate", parents=[common], help="Coverage simulation")
    subparsers.add_parser("diagnose", parents=[common], help="Eigendecay and effective dimension")
    init = subparsers.add_parser("init-config", help="Create a sample configuration file")
    init.add_argument("path", nargs="?", default="dackrr.yaml")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point for dackrr"""
    # Load environment variables from .env file
    load_dotenv()
    setup_logger("dackrr")

    try:
        args = build_parser().parse_args(argv)

        if args.command == "init-config":
            path = create_sample_config(args.path)
            print(f"✓ Sample configuration written to: {path}")
            return 0

        run = resolve_config(args)
        setup_logger("dackrr", run.log_level)
        return COMMANDS[args.command](run)
    except DackrrError as e:
        sys.stderr.write(e.to_line() + "\n")
        return e.exit_code
    except Exception as e:
        logger.debug("Unexpected error", exc_info=True)
        error = InternalError.wrap(e)
        sys.stderr.write(error.to_line() + "\n")
        return error.exit_code


if __name__ == "__main__":
    sys.exit(main())
