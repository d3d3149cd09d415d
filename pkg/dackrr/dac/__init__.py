"""
Divide and Conquer - Partitioned KRR fits and their average
Partitioning, parallel local fits, averaging, parameter rules and grid evaluation
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from dackrr.constants import UNDERSMOOTHING_RATIO, UNDERSMOOTHING_REL_TOL
from dackrr.errors import InputError, NumericError, ParameterError
from dackrr.kernel import KernelFamily, KernelSpec, smoothness_index
from dackrr.krr import LocalEstimate, fit_local, predict
from dackrr.logger import get_logger

logger = get_logger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: Optional[int]) -> int:
    """Worker count: None means every available CPU"""
    if threads is None:
        return os.cpu_count() or 1
    if threads < 1:
        raise ParameterError(f"threads must be >= 1, got {threads}")
    return int(threads)


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: Optional[int] = 1) -> List[R]:
    """
    Apply fn to every item, in order, on a thread pool

    Args:
        fn: Pure function of one item
        items: Work items
        threads: Worker count (None = all CPUs, 1 = run inline)

    Returns:
        Results in item order, independent of the worker count
    """
    workers = min(resolve_threads(threads), max(1, len(items)))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


@dataclass(frozen=True)
class PartitionPlan:
    """Assignment of n observations to P partitions"""

    n: int
    P: int
    assignment: np.ndarray

    def __post_init__(self):
        assignment = np.array(self.assignment, dtype=np.int64, copy=True).reshape(-1)
        if assignment.shape[0] != self.n:
            raise InputError(f"assignment has {assignment.shape[0]} entries, expected {self.n}")
        if assignment.size and (assignment.min() < 0 or assignment.max() >= self.P):
            raise InputError(f"partition ids must lie in [0, {self.P})")
        sizes = np.bincount(assignment, minlength=self.P)
        if sizes.min() < 1 or sizes.max() - sizes.min() > 1:
            raise InputError(f"partition sizes must be nonempty and balanced, got {sizes.tolist()}")
        assignment.setflags(write=False)
        object.__setattr__(self, "assignment", assignment)

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.P)

    def members(self, p: int) -> np.ndarray:
        """Row indices of partition p, ascending"""
        return np.flatnonzero(self.assignment == p)


@dataclass(frozen=True)
class FitConfig:
    """Divide-and-conquer fit settings"""

    P: int = 1
    rho: Optional[float] = None
    seed: int = 0
    s_override: Optional[float] = None
    s0: Optional[float] = None
    contiguous: bool = False

    def __post_init__(self):
        if int(self.P) != self.P or self.P < 1:
            raise ParameterError(f"P must be a positive integer, got {self.P}")
        if self.rho is not None and not self.rho > 0:
            raise ParameterError(f"rho must be positive, got {self.rho}")
        if self.s_override is not None and not self.s_override > 0.5:
            raise ParameterError(f"s_override must exceed 1/2, got {self.s_override}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class AveragedModel:
    """P local estimates and the metadata of their fit"""

    locals: Tuple[LocalEstimate, ...]
    rho: float
    kernel: KernelSpec
    plan: PartitionPlan

    def __post_init__(self):
        object.__setattr__(self, "locals", tuple(self.locals))
        if len(self.locals) != self.plan.P:
            raise InputError(f"{len(self.locals)} local estimates for P={self.plan.P}")
        for est in self.locals:
            if est.kernel != self.kernel or est.rho != self.rho:
                raise InputError("all local estimates must share kernel and rho")

    @property
    def P(self) -> int:
        return self.plan.P

    def predict(self, query: Any, threads: Optional[int] = 1) -> np.ndarray:
        """Averaged prediction (1/P) sum_p f_p(query)"""
        return eval_matrix(self, query, threads=threads).mean(axis=0)


@dataclass(frozen=True)
class PartitionRange:
    """Exponent-level guideline for the partition count"""

    lower: float
    upper: float
    warnings: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def warning(self) -> Optional[str]:
        return "; ".join(self.warnings) if self.warnings else None

    @property
    def empty(self) -> bool:
        return not self.lower < self.upper


def make_partition(n: int, P: int, seed: int = 0, contiguous: bool = False) -> PartitionPlan:
    """
    Split indices 0..n-1 into P balanced blocks

    Indices are permuted with a seeded generator (unless contiguous) and dealt
    into P contiguous blocks; the first n mod P blocks get one extra element.

    Args:
        n: Sample count
        P: Partition count, 1 <= P <= n
        seed: Permutation seed
        contiguous: Keep the original row order

    Returns:
        PartitionPlan
    """
    if n < 1:
        raise ParameterError(f"n must be positive, got {n}")
    if P < 1 or P > n:
        raise ParameterError(f"partition count must satisfy 1 <= P <= n, got P={P}, n={n}")

    order = np.arange(n) if contiguous else np.random.default_rng(seed).permutation(n)
    base, extra = divmod(n, P)
    sizes = np.full(P, base, dtype=np.int64)
    sizes[:extra] += 1
    block_of_position = np.repeat(np.arange(P, dtype=np.int64), sizes)

    assignment = np.empty(n, dtype=np.int64)
    assignment[order] = block_of_position
    return PartitionPlan(n=n, P=P, assignment=assignment)


def _check_s(s: float) -> None:
    if not s > 0.5:
        raise ParameterError(f"smoothness index must exceed 1/2, got {s}")


def default_rho(n: int, s: float) -> float:
    """
    Regularization rho = n^(-2s/(2s+1))

    Args:
        n: Sample count, n >= 2
        s: Smoothness index, s > 1/2

    Returns:
        rho
    """
    _check_s(s)
    if n < 2:
        raise ParameterError(f"default rho needs n >= 2, got {n}")
    return float(n ** (-2.0 * s / (2.0 * s + 1.0)))


def minimax_rate_exponent(s: float) -> float:
    """Exponent r of the n^(-r) L2 rate under rho = n^(-2s/(2s+1))"""
    _check_s(s)
    return s / (2.0 * s + 1.0)


def undersmoothed_rate_exponent(s0: float) -> float:
    """Exponent of the L2 rate when s = (2/3) s0"""
    return s0 / (2.0 * s0 + 1.5)


def undersmoothing_advisory(s: float, s0: float) -> Optional[str]:
    """
    Advisory text for the chosen kernel smoothness s against truth smoothness s0

    Args:
        s: Kernel smoothness index
        s0: Smoothness of the regression function

    Returns:
        Message, or None when there is nothing to report
    """
    target = UNDERSMOOTHING_RATIO * s0
    if s >= s0:
        return (
            f"s={s:g} is not below s0={s0:g}; bands need an undersmoothed kernel (s < s0)"
        )
    if abs(s - target) <= UNDERSMOOTHING_REL_TOL * target:
        return (
            f"s={s:g} ~ (2/3)s0: largest reasonable sacrifice; rate "
            f"n^-{undersmoothed_rate_exponent(s0):.4f} instead of n^-{s0 / (2 * s0 + 1):.4f}"
        )
    if s < target:
        return f"s={s:g} is below (2/3)s0={target:g}; the estimator is needlessly suboptimal"
    return None


def admissible_partition_range(n: int, s: float, s0: float) -> PartitionRange:
    """
    Exponent-level range of P giving both the optimal rate and valid bands

    lower = n^(2/(2s0+1)),
    upper = min(n^((2s0-1)/(2s0+1)), n^((2s-1)/(2s+1)) / log n).
    Constants are unknown, so the range is advisory only.

    Args:
        n: Sample count
        s: Kernel smoothness index
        s0: Smoothness of the regression function

    Returns:
        PartitionRange with any warnings
    """
    warnings = []
    log_n = math.log(n) if n > 1 else float("nan")
    lower = n ** (2.0 / (2.0 * s0 + 1.0))
    upper = min(
        n ** ((2.0 * s0 - 1.0) / (2.0 * s0 + 1.0)),
        n ** ((2.0 * s - 1.0) / (2.0 * s + 1.0)) / log_n,
    )
    if s0 <= 1.5:
        warnings.append(f"s0={s0:g} <= 3/2: no partition count gives both rate and bands")
    if s0 < s:
        warnings.append(f"s0={s0:g} < s={s:g}: the kernel oversmooths the truth")
    if not lower < upper:
        warnings.append(f"admissible partition range is empty (lower={lower:.4g}, upper={upper:.4g})")
    return PartitionRange(lower=float(lower), upper=float(upper), warnings=tuple(warnings))


def resolve_rho(kernel: KernelSpec, cfg: FitConfig, n: int) -> float:
    """
    Regularization for a fit: explicit cfg.rho, else n^(-2s/(2s+1))

    Args:
        kernel: Kernel specification
        cfg: Fit configuration
        n: Total sample count

    Returns:
        rho
    """
    if cfg.rho is not None:
        return float(cfg.rho)
    if kernel.family is KernelFamily.SQUARED_EXPONENTIAL:
        raise ParameterError("Squared Exponential kernels need an explicit rho")
    s = cfg.s_override if cfg.s_override is not None else smoothness_index(kernel)
    return default_rho(n, s)


def _log_advisories(kernel: KernelSpec, cfg: FitConfig, n: int) -> None:
    if cfg.s0 is None:
        return
    s = cfg.s_override if cfg.s_override is not None else smoothness_index(kernel)
    if s is None:
        return
    advice = undersmoothing_advisory(s, cfg.s0)
    if advice:
        logger.warning(advice)
    bounds = admissible_partition_range(n, s, cfg.s0)
    for message in bounds.warnings:
        logger.warning(message)
    if not bounds.empty and not bounds.lower <= cfg.P <= bounds.upper:
        logger.warning(
            f"P={cfg.P} is outside the advisory range [{bounds.lower:.4g}, {bounds.upper:.4g}]"
        )


def fit_averaged(
    kernel: KernelSpec,
    cfg: FitConfig,
    X: Any,
    y: Any,
    threads: Optional[int] = 1,
) -> AveragedModel:
    """
    Fit KRR on each of P partitions and wrap them as an averaged model

    Args:
        kernel: Kernel specification
        cfg: Fit configuration
        X: n×d covariates
        y: Length-n responses
        threads: Worker count for the local fits

    Returns:
        AveragedModel
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and kernel.dim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[1] != kernel.dim:
        raise InputError(f"X must be n x {kernel.dim}, got shape {X.shape}")
    if X.shape[0] != y.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    n = X.shape[0]
    if n < cfg.P:
        raise ParameterError(f"partition count P={cfg.P} exceeds sample size n={n}")

    rho = resolve_rho(kernel, cfg, n)
    _log_advisories(kernel, cfg, n)
    plan = make_partition(n, cfg.P, cfg.seed, contiguous=cfg.contiguous)
    logger.debug(f"Fitting {cfg.P} partitions of ~{n // cfg.P} points, rho={rho:.4g}")

    def fit_one(p: int) -> LocalEstimate:
        rows = plan.members(p)
        try:
            return fit_local(kernel, rho, X[rows], y[rows])
        except NumericError as e:
            raise e.annotate(partition=p)

    estimates = parallel_map(fit_one, range(cfg.P), threads)
    return AveragedModel(locals=tuple(estimates), rho=rho, kernel=kernel, plan=plan)


def eval_matrix(model: AveragedModel, grid: Any, threads: Optional[int] = 1) -> np.ndarray:
    """
    Evaluate every local estimate on a grid

    Args:
        model: Averaged model
        grid: M×d array, or an object with a `points` attribute
        threads: Worker count for the row evaluations

    Returns:
        P×M array; column means are the averaged prediction
    """
    points = np.asarray(getattr(grid, "points", grid), dtype=float)
    if points.ndim == 1 and model.kernel.dim == 1:
        points = points.reshape(-1, 1)
    if points.ndim != 2 or points.shape[0] < 1:
        raise InputError("evaluation grid must be a nonempty M x d array")
    if points.shape[1] != model.kernel.dim:
        raise InputError(f"grid has {points.shape[1]} columns, kernel expects {model.kernel.dim}")

    rows = parallel_map(lambda est: predict(est, points), model.locals, threads)
    return np.vstack(rows)

