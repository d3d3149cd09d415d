"""
Confidence Bands - L2 norms and bootstrap radii for the averaged estimator
Quadrature grids, direct-resampling and multiplier bootstraps, coverage check
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np

from dackrr.constants import BOOTSTRAP_BATCH, WEIGHT_SUM_TOL
from dackrr.dac import AveragedModel, parallel_map
from dackrr.errors import InputError, ParameterError
from dackrr.logger import get_logger

logger = get_logger(__name__)


class Scheme(str, Enum):
    """Bootstrap schemes"""

    RESAMPLE = "resample"
    MULTIPLIER = "multiplier"


@dataclass(frozen=True)
class QuadratureGrid:
    """Points and probability weights discretizing the design measure"""

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        points = np.array(self.points, dtype=float, copy=True)
        if points.ndim == 1:
            points = points.reshape(-1, 1)
        weights = np.array(self.weights, dtype=float, copy=True).reshape(-1)
        if points.ndim != 2 or points.shape[0] != weights.shape[0]:
            raise InputError(
                f"grid has {points.shape[0]} points but {weights.shape[0]} weights"
            )
        if weights.shape[0] < 1:
            raise InputError("grid must contain at least one point")
        if np.any(weights < 0):
            raise ParameterError("grid weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ParameterError(f"grid weights must sum to 1, got {weights.sum()!r}")
        points.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "weights", weights)

    @property
    def size(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]


@dataclass(frozen=True)
class BootstrapConfig:
    """Bootstrap settings"""

    B: int = 1000
    beta: float = 0.95
    scheme: Scheme = Scheme.RESAMPLE
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        if int(self.B) != self.B or self.B < 1:
            raise ParameterError(f"B must be a positive integer, got {self.B}")
        if not 0.0 < self.beta < 1.0:
            raise ParameterError(f"beta must lie in (0, 1), got {self.beta}")
        if self.seed < 0 or self.seed >= 2**64:
            raise ParameterError(f"seed must be a 64-bit unsigned integer, got {self.seed}")


@dataclass(frozen=True)
class BandResult:
    """Bootstrap radius with the sorted norm sample that produced it"""

    radius: float
    norms: np.ndarray
    config: BootstrapConfig

    def to_dict(self) -> Dict[str, Any]:
        return {
            "radius": float(self.radius),
            "beta": float(self.config.beta),
            "B": int(self.config.B),
            "scheme": self.config.scheme.value,
        }


def uniform_grid(d: int, M: int, box: Tuple[float, float] = (0.0, 1.0)) -> QuadratureGrid:
    """
    Composite midpoint rule on [lo, hi]^d with equal weights

    Args:
        d: Dimension, 1 to 3
        M: Points per axis, M >= 2 (M^d points in total)
        box: (lo, hi)

    Returns:
        QuadratureGrid for the uniform probability measure on the box
    """
    lo, hi = float(box[0]), float(box[1])
    if d not in (1, 2, 3):
        raise ParameterError(f"uniform grids support d in {{1, 2, 3}}, got {d}")
    if M < 2:
        raise ParameterError(f"uniform grid needs M >= 2, got {M}")
    if not lo < hi:
        raise ParameterError(f"grid box needs lo < hi, got [{lo}, {hi}]")

    h = (hi - lo) / M
    axis = lo + (np.arange(M) + 0.5) * h
    mesh = np.meshgrid(*([axis] * d), indexing="ij")
    points = np.stack([m.reshape(-1) for m in mesh], axis=1)
    total = points.shape[0]
    return QuadratureGrid(points=points, weights=np.full(total, 1.0 / total))


def empirical_grid(sample: Any) -> QuadratureGrid:
    """
    Empirical measure of a sample: every row gets weight 1/M

    Args:
        sample: M×d array, M >= 1

    Returns:
        QuadratureGrid
    """
    sample = np.asarray(sample, dtype=float)
    if sample.ndim == 1:
        sample = sample.reshape(-1, 1)
    if sample.shape[0] < 1:
        raise InputError("empirical grid needs at least one point")
    M = sample.shape[0]
    return QuadratureGrid(points=sample, weights=np.full(M, 1.0 / M))


def l2_norm_on_grid(values: Any, grid: QuadratureGrid) -> float:
    """
    L2(pi) norm sqrt(sum_m w_m v_m^2)

    Args:
        values: Length-M function values on the grid
        grid: Quadrature grid

    Returns:
        Nonnegative norm
    """
    values = np.asarray(values, dtype=float).reshape(-1)
    if values.shape[0] != grid.size:
        raise InputError(f"{values.shape[0]} values for a grid of {grid.size} points")
    return float(math.sqrt(float(np.dot(grid.weights, values * values))))


def quantile_radius(sorted_norms: Sequence[float], beta: float) -> float:
    """
    The ceil(beta*B)-th smallest norm (1-indexed)

    Args:
        sorted_norms: Ascending bootstrap norms
        beta: Confidence level in (0, 1)

    Returns:
        Radius
    """
    B = len(sorted_norms)
    if B < 1:
        raise InputError("no bootstrap norms")
    k = math.ceil(round(beta * B, 9))
    k = min(max(k, 1), B)
    return float(sorted_norms[k - 1])


def _substream(seed: int, b: int) -> np.random.Generator:
    """Generator for bootstrap iteration b, independent of every other b"""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(b,)))


def bootstrap_weights(cfg: BootstrapConfig, P: int, start: int, stop: int) -> np.ndarray:
    """
    Centered weights w_p - 1 for iterations start..stop-1

    Resample: counts of each local among P uniform draws with replacement.
    Multiplier: u_p ~ Normal(1, 1).

    Returns:
        (stop-start)×P array
    """
    W = np.empty((stop - start, P))
    for i, b in enumerate(range(start, stop)):
        rng = _substream(cfg.seed, b)
        if cfg.scheme is Scheme.RESAMPLE:
            W[i] = np.bincount(rng.integers(0, P, size=P), minlength=P)
        else:
            W[i] = rng.normal(1.0, 1.0, size=P)
    return W - 1.0


def bootstrap_band(
    evals: Any,
    grid: QuadratureGrid,
    cfg: BootstrapConfig,
    threads: Optional[int] = 1,
) -> BandResult:
    """
    Bootstrap radius r such that ||f^b - f|| <= r with bootstrap probability beta

    Works on the precomputed P×M evaluation matrix, so each iteration costs
    O(P*M) and no local estimate is refitted.

    Args:
        evals: P×M matrix of local-estimate values on the grid
        grid: Quadrature grid matching the columns of evals
        cfg: Bootstrap settings
        threads: Worker count across iteration batches

    Returns:
        BandResult
    """
    E = np.asarray(evals, dtype=float)
    if E.ndim != 2 or E.shape[0] < 1:
        raise InputError(f"evaluation matrix must be P x M with P >= 1, got shape {E.shape}")
    P, M = E.shape
    if M != grid.size:
        raise InputError(f"evaluation matrix has {M} columns for a grid of {grid.size} points")

    if cfg.scheme is Scheme.RESAMPLE:
        # sum_p (c_p - 1) = 0, so differences against row 0 give the same deviation
        base = E - E[0]
    else:
        base = E
    weights = grid.weights

    def run(batch: Tuple[int, int]) -> np.ndarray:
        start, stop = batch
        deviation = (bootstrap_weights(cfg, P, start, stop) @ base) / P
        return np.sqrt((deviation * deviation) @ weights)

    batches = [(s, min(s + BOOTSTRAP_BATCH, cfg.B)) for s in range(0, cfg.B, BOOTSTRAP_BATCH)]
    norms = np.sort(np.concatenate(parallel_map(run, batches, threads)))
    radius = quantile_radius(norms, cfg.beta)
    norms.setflags(write=False)
    logger.debug(
        f"Bootstrap ({cfg.scheme.value}, B={cfg.B}, P={P}, M={M}): radius={radius:.6g}"
    )
    return BandResult(radius=radius, norms=norms, config=cfg)


def averaged_error(
    model: AveragedModel,
    truth_values: Any,
    grid: QuadratureGrid,
    evals: Optional[Any] = None,
) -> float:
    """
    L2 distance between the averaged prediction and truth values on the grid

    Args:
        model: Averaged model
        truth_values: Length-M values of the target on the grid
        grid: Quadrature grid
        evals: Optional P×M evaluation matrix of model on grid, reused when given

    Returns:
        ||f_bar - f*||_2 under the grid measure
    """
    truth_values = np.asarray(truth_values, dtype=float).reshape(-1)
    if truth_values.shape[0] != grid.size:
        raise InputError(f"{truth_values.shape[0]} truth values for a grid of {grid.size} points")
    if evals is None:
        averaged = model.predict(grid.points)
    else:
        E = np.asarray(evals, dtype=float)
        if E.shape != (model.P, grid.size):
            raise InputError(
                f"evaluation matrix has shape {E.shape}, expected {(model.P, grid.size)}"
            )
        averaged = E.mean(axis=0)
    return l2_norm_on_grid(averaged - truth_values, grid)


def covers(
    model: AveragedModel,
    truth_values: Any,
    grid: QuadratureGrid,
    band: BandResult,
    evals: Optional[Any] = None,
) -> bool:
    """
    Whether the band around the averaged estimate contains the truth

    Args:
        model: Averaged model
        truth_values: Length-M values of the target on the grid
        grid: Quadrature grid the band was computed on
        band: Bootstrap band
        evals: Optional P×M evaluation matrix of model on grid

    Returns:
        True iff ||f_bar - f*||_2 <= radius
    """
    return averaged_error(model, truth_values, grid, evals) <= band.radius
