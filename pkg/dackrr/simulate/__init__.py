"""
Coverage Simulation - Synthetic data and the bootstrap coverage experiment
Repeats fit -> band -> cover for each partition count and aggregates the hits
"""

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from scipy import stats

from dackrr.band import (
    BootstrapConfig,
    Scheme,
    averaged_error,
    bootstrap_band,
    covers,
    uniform_grid,
)
from dackrr.constants import (
    COVERAGE_COLUMNS,
    DEFAULT_BETA,
    DEFAULT_BOOTSTRAP_ITERATIONS,
    DEFAULT_GRID_SIZE,
    DEFAULT_TRIALS,
    TAU,
    WILSON_LEVEL,
)
from dackrr.dac import FitConfig, eval_matrix, fit_averaged, parallel_map
from dackrr.errors import NumericError, ParameterError
from dackrr.kernel import KernelSpec
from dackrr.logger import get_logger

logger = get_logger(__name__)

Target = Callable[[np.ndarray], np.ndarray]


def sin_tau(X: np.ndarray) -> np.ndarray:
    """f*(x) = sin(tau x) on the first coordinate"""
    X = np.asarray(X, dtype=float)
    x = X[:, 0] if X.ndim == 2 else X
    return np.sin(TAU * x)


@dataclass(frozen=True)
class SimConfig:
    """Coverage experiment settings"""

    n: int = 2**13
    P_list: Tuple[int, ...] = (2**5, 2**7)
    sigma: float = 1.0
    beta: float = DEFAULT_BETA
    B: int = DEFAULT_BOOTSTRAP_ITERATIONS
    trials: int = DEFAULT_TRIALS
    kernel: KernelSpec = field(default_factory=KernelSpec)
    seed: int = 0
    target: Optional[Target] = None  # None means sin(tau x)
    noise: str = "gaussian"
    M: int = DEFAULT_GRID_SIZE
    scheme: Scheme = Scheme.RESAMPLE
    rho: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "P_list", tuple(int(p) for p in self.P_list))
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if not self.sigma >= 0:
            raise ParameterError(f"sigma must be nonnegative, got {self.sigma}")
        if self.trials < 1:
            raise ParameterError(f"trials must be >= 1, got {self.trials}")
        if self.n < 1:
            raise ParameterError(f"n must be positive, got {self.n}")
        if self.noise not in ("gaussian", "rademacher"):
            raise ParameterError(f"noise must be 'gaussian' or 'rademacher', got {self.noise!r}")
        if self.target is None and self.kernel.dim != 1:
            raise ParameterError("the sin(tau x) target is defined for d = 1 only")

    def target_fn(self) -> Target:
        return self.target if self.target is not None else sin_tau


@dataclass(frozen=True)
class CoverageRecord:
    """Aggregated outcome for one partition count"""

    P: int
    hits: int
    trials: int
    coverage: float
    wilson_lo: float
    wilson_hi: float
    mean_radius: float
    mean_rmse: float


@dataclass(frozen=True)
class CoverageReport:
    """Coverage records, one per partition count"""

    per_P: Tuple[CoverageRecord, ...]

    def to_dict(self) -> Dict[str, Any]:
        return {"per_P": [asdict(record) for record in self.per_P]}

    def record(self, P: int) -> CoverageRecord:
        for record in self.per_P:
            if record.P == P:
                return record
        raise KeyError(P)


@dataclass(frozen=True)
class TrialOutcome:
    hit: bool
    radius: float
    error: float


def _derive(seed: int, *keys: int) -> int:
    """64-bit seed for an independent substream keyed by (seed, *keys)"""
    state = np.random.SeedSequence(entropy=seed, spawn_key=tuple(keys)).generate_state(1, np.uint64)
    return int(state[0])


def trial_seed(seed: int, P: int, trial: int) -> int:
    """Seed of one simulation trial, keyed by (seed, P, trial)"""
    return _derive(seed, P, trial)


def simulate_data(cfg: SimConfig, trial_seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw X ~ Uniform[0,1]^d and y = f*(X) + sigma * noise

    Args:
        cfg: Simulation settings
        trial_seed: Seed for this draw

    Returns:
        (X, y) with X of shape n×d
    """
    rng = np.random.default_rng(trial_seed)
    X = rng.uniform(0.0, 1.0, size=(cfg.n, cfg.kernel.dim))
    if cfg.noise == "gaussian":
        z = rng.standard_normal(cfg.n)
    else:
        z = rng.choice(np.array([-1.0, 1.0]), size=cfg.n)
    y = cfg.target_fn()(X) + cfg.sigma * z
    return X, y


def wilson_interval(hits: int, trials: int, level: float = WILSON_LEVEL) -> Tuple[float, float]:
    """
    Wilson score interval for a binomial proportion

    Args:
        hits: Successes, 0 <= hits <= trials
        trials: Trials, >= 1
        level: Confidence level of the interval

    Returns:
        (lo, hi) clipped to [0, 1]
    """
    if trials < 1 or not 0 <= hits <= trials:
        raise ParameterError(f"need 0 <= hits <= trials and trials >= 1, got {hits}/{trials}")
    if not 0.0 < level < 1.0:
        raise ParameterError(f"level must lie in (0, 1), got {level}")

    z = float(stats.norm.ppf(0.5 + level / 2.0))
    p = hits / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = (z / denom) * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials))

    lo = 0.0 if hits == 0 else max(0.0, min(p, center - half))
    hi = 1.0 if hits == trials else min(1.0, max(p, center + half))
    return lo, hi


def _run_trial(cfg: SimConfig, P: int, trial: int, grid, truth: np.ndarray) -> TrialOutcome:
    seed = trial_seed(cfg.seed, P, trial)
    X, y = simulate_data(cfg, seed)
    fit_cfg = FitConfig(P=P, rho=cfg.rho, seed=_derive(seed, 1))
    try:
        model = fit_averaged(cfg.kernel, fit_cfg, X, y)
    except NumericError as e:
        raise e.annotate(P=P, trial=trial)

    evals = eval_matrix(model, grid)
    band = bootstrap_band(
        evals, grid, BootstrapConfig(B=cfg.B, beta=cfg.beta, scheme=cfg.scheme, seed=_derive(seed, 2))
    )
    return TrialOutcome(
        hit=covers(model, truth, grid, band, evals=evals),
        radius=band.radius,
        error=averaged_error(model, truth, grid, evals=evals),
    )


def run_coverage(cfg: SimConfig, threads: Optional[int] = 1) -> CoverageReport:
    """
    Estimate the coverage of bootstrap bands for every P in cfg.P_list

    Each trial simulates data, fits the averaged estimator with automatic rho,
    computes the bootstrap radius on uniform_grid(M) and checks whether
    ||f_bar - f*||_2 is within it.

    Args:
        cfg: Simulation settings
        threads: Worker count across trials

    Returns:
        CoverageReport, identical for any thread count
    """
    for P in cfg.P_list:
        if P < 1 or P > cfg.n:
            raise ParameterError(f"partition count P={P} must lie in [1, n={cfg.n}]")

    grid = uniform_grid(cfg.kernel.dim, cfg.M)
    truth = np.asarray(cfg.target_fn()(grid.points), dtype=float)

    records: List[CoverageRecord] = []
    for P in cfg.P_list:
        logger.info(f"Simulating P={P}: n={cfg.n}, trials={cfg.trials}, B={cfg.B}")
        outcomes = parallel_map(
            lambda t: _run_trial(cfg, P, t, grid, truth), range(cfg.trials), threads
        )
        hits = sum(1 for o in outcomes if o.hit)
        lo, hi = wilson_interval(hits, cfg.trials)
        record = CoverageRecord(
            P=P,
            hits=hits,
            trials=cfg.trials,
            coverage=hits / cfg.trials,
            wilson_lo=lo,
            wilson_hi=hi,
            mean_radius=float(np.mean([o.radius for o in outcomes])),
            mean_rmse=float(np.mean([o.error for o in outcomes])),
        )
        logger.info(
            f"P={P}: coverage {record.coverage:.3f} [{lo:.3f}, {hi:.3f}], "
            f"mean radius {record.mean_radius:.4g}, mean rmse {record.mean_rmse:.4g}"
        )
        records.append(record)
    return CoverageReport(per_P=tuple(records))


def format_float(value: float) -> str:
    """Shortest decimal string that round-trips to the same double"""
    return repr(float(value))


def _format_cell(value: Union[int, float]) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format_float(value)


def coverage_rows(report: CoverageReport) -> List[List[str]]:
    """Header plus one formatted row per partition count"""
    rows = [list(COVERAGE_COLUMNS)]
    for record in report.per_P:
        values = asdict(record)
        rows.append([_format_cell(values[column]) for column in COVERAGE_COLUMNS])
    return rows


def write_coverage_csv(report: CoverageReport, path: Union[str, Path]) -> Path:
    """Write the report as CSV with the fixed column order"""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerows(coverage_rows(report))
    return path


def write_coverage_json(report: CoverageReport, path: Union[str, Path]) -> Path:
    """Write the report as JSON (floats in shortest round-trip form)"""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report.to_dict(), f, indent=2)
        f.write("\n")
    return path
