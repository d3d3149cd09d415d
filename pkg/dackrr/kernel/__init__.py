"""
Kernels - Matérn and Squared Exponential kernels
Kernel evaluation, kernel-matrix assembly and spectral diagnostics
"""

import math
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist
from scipy.special import gammaln, kve

from dackrr.constants import (
    CLOSED_FORM_MATERN_ALPHAS,
    DEFAULT_LENGTHSCALE,
    DEFAULT_MATERN_ALPHA,
    EFFECTIVE_DIM_CHUNK,
    EFFECTIVE_DIM_MAX_TERMS,
    EFFECTIVE_DIM_TAIL_TOL,
    EIGEN_CLAMP_TOL,
    MIN_NYSTROM_SAMPLE,
)
from dackrr.errors import InputError, NumericError, ParameterError
from dackrr.logger import get_logger

logger = get_logger(__name__)


class KernelFamily(str, Enum):
    """Supported kernel families"""

    MATERN = "matern"
    SQUARED_EXPONENTIAL = "se"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family, hyperparameters and input dimension"""

    family: KernelFamily = KernelFamily.MATERN
    lengthscale: float = DEFAULT_LENGTHSCALE
    dim: int = 1
    alpha: Optional[float] = DEFAULT_MATERN_ALPHA

    def __post_init__(self):
        family = KernelFamily(self.family)
        object.__setattr__(self, "family", family)
        if not self.lengthscale > 0:
            raise ParameterError(f"lengthscale must be positive, got {self.lengthscale}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ParameterError(f"dim must be a positive integer, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if family is KernelFamily.MATERN:
            if self.alpha is None or not self.alpha > 0:
                raise ParameterError(f"Matern alpha must be positive, got {self.alpha}")
            object.__setattr__(self, "alpha", float(self.alpha))
        else:
            object.__setattr__(self, "alpha", None)
        object.__setattr__(self, "lengthscale", float(self.lengthscale))

    @classmethod
    def matern(cls, alpha: float, lengthscale: float = DEFAULT_LENGTHSCALE, dim: int = 1) -> "KernelSpec":
        """Shorthand for a Matérn kernel"""
        return cls(KernelFamily.MATERN, lengthscale, dim, alpha)

    @classmethod
    def squared_exponential(cls, lengthscale: float = DEFAULT_LENGTHSCALE, dim: int = 1) -> "KernelSpec":
        """Shorthand for a Squared Exponential kernel"""
        return cls(KernelFamily.SQUARED_EXPONENTIAL, lengthscale, dim, None)

    def with_dim(self, dim: int) -> "KernelSpec":
        """Return the same kernel on a different input dimension"""
        return KernelSpec(self.family, self.lengthscale, dim, self.alpha)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "family": self.family.value,
            "alpha": self.alpha,
            "lengthscale": self.lengthscale,
            "dim": self.dim,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "KernelSpec":
        return cls(
            family=KernelFamily(data.get("family", KernelFamily.MATERN.value)),
            lengthscale=float(data.get("lengthscale", DEFAULT_LENGTHSCALE)),
            dim=int(data.get("dim", 1)),
            alpha=None if data.get("alpha") is None else float(data["alpha"]),
        )

    def describe(self) -> str:
        if self.family is KernelFamily.MATERN:
            return f"Matern(alpha={self.alpha:g}, lengthscale={self.lengthscale:g}, d={self.dim})"
        return f"SquaredExponential(lengthscale={self.lengthscale:g}, d={self.dim})"


@dataclass(frozen=True)
class EigendecayReport:
    """Nyström eigenvalue estimates and the fitted log-log decay slope"""

    eigenvalues: np.ndarray
    fitted_slope: float
    window: Tuple[int, int]  # 1-based, inclusive

    def to_dict(self) -> Dict[str, Any]:
        return {
            "eigenvalues": [float(v) for v in self.eigenvalues],
            "fitted_slope": float(self.fitted_slope),
            "window": list(self.window),
        }


def smoothness_index(spec: KernelSpec) -> Optional[float]:
    """
    Smoothness index s = (2*alpha + d) / 2 of a Matérn kernel

    Args:
        spec: Kernel specification

    Returns:
        s for Matérn kernels, None for Squared Exponential (exponential decay)
    """
    if spec.family is KernelFamily.MATERN:
        return (2.0 * spec.alpha + spec.dim) / 2.0
    return None


def _matern_closed_form(z: np.ndarray, alpha: float) -> np.ndarray:
    polynomial = {
        0.5: lambda z: 1.0,
        1.5: lambda z: 1.0 + z,
        2.5: lambda z: 1.0 + z + z * z / 3.0,
    }[alpha]
    return polynomial(z) * np.exp(-z)


def _matern_profile(r: np.ndarray, alpha: float) -> np.ndarray:
    """Unit-variance Matérn correlation as a function of scaled distance r"""
    z = math.sqrt(2.0 * alpha) * np.asarray(r, dtype=float)
    if alpha in CLOSED_FORM_MATERN_ALPHAS:
        return _matern_closed_form(z, alpha)

    # log of 2^(1-alpha) / Gamma(alpha) * z^alpha * K_alpha(z), with K_alpha = kve * e^-z
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        scaled = kve(alpha, z)
        log_k = (
            (1.0 - alpha) * math.log(2.0) - gammaln(alpha) + alpha * np.log(z) + np.log(scaled) - z
        )
        out = np.exp(log_k)

    # kve overflows near z = 0 once alpha is large; k = 1 - z^2 / (4(alpha-1)) + O(z^4) there
    near = ~np.isfinite(scaled)
    if np.any(near):
        curvature = 4.0 * (alpha - 1.0) if alpha > 1.0 else math.inf
        out = np.where(near, np.exp(-z * z / curvature), out)
    out = np.where(z == 0.0, 1.0, out)
    return np.minimum(out, 1.0)


def _profile(spec: KernelSpec, r: np.ndarray) -> np.ndarray:
    if spec.family is KernelFamily.MATERN:
        return _matern_profile(r, spec.alpha)
    return np.exp(-0.5 * r * r)


def _as_points(points: Any, dim: int, name: str = "points") -> np.ndarray:
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1) if dim == 1 else arr.reshape(1, -1)
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise InputError(
            f"{name} must have {dim} column(s), got shape {np.shape(points)}"
        )
    return arr


def kernel_value(spec: KernelSpec, x: Any, y: Any) -> float:
    """
    Evaluate k(x, y) for two single points

    Args:
        spec: Kernel specification
        x: Point in R^d
        y: Point in R^d

    Returns:
        Kernel value in [0, 1]; k(x, x) = 1
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    if x.shape != (spec.dim,) or y.shape != (spec.dim,):
        raise InputError(
            f"points must have dimension {spec.dim}, got {x.shape} and {y.shape}"
        )
    r = np.array([np.linalg.norm(x - y) / spec.lengthscale])
    return float(_profile(spec, r)[0])


def cross_matrix(spec: KernelSpec, a: Any, b: Any) -> np.ndarray:
    """
    Rectangular kernel block [k(a_i, b_j)]

    Args:
        spec: Kernel specification
        a: n×d array
        b: m×d array

    Returns:
        n×m array
    """
    a = _as_points(a, spec.dim, "a")
    b = _as_points(b, spec.dim, "b")
    r = cdist(a / spec.lengthscale, b / spec.lengthscale, metric="euclidean")
    return _profile(spec, r)


def kernel_matrix(spec: KernelSpec, points: Any) -> np.ndarray:
    """
    Symmetric kernel matrix K = [k(x_i, x_j)] with unit diagonal

    Args:
        spec: Kernel specification
        points: n×d array, n >= 1

    Returns:
        n×n symmetric positive semidefinite matrix
    """
    points = _as_points(points, spec.dim)
    if points.shape[0] < 1:
        raise InputError("kernel_matrix needs at least one point")
    K = cross_matrix(spec, points, points)
    K = 0.5 * (K + K.T)
    np.fill_diagonal(K, 1.0)
    return K


def _partial_sum(start: int, stop: int, two_s: float, rho: float) -> float:
    """Sum of mu_j / (mu_j + rho) for j in [start, stop] with mu_j = j^(-2s)"""
    total = 0.0
    for lo in range(start, stop + 1, EFFECTIVE_DIM_CHUNK):
        j = np.arange(lo, min(lo + EFFECTIVE_DIM_CHUNK, stop + 1), dtype=float)
        mu = np.power(j, -two_s)
        total += float(np.sum(mu / (mu + rho)))
    return total


def effective_dimension(s: float, rho: float) -> float:
    """
    Effective dimensionality sum_j mu_j / (mu_j + rho) for mu_j = j^(-2s)

    The series is truncated once the integral bound on its tail,
    J^(1-2s) / ((2s-1) rho), drops below EFFECTIVE_DIM_TAIL_TOL of the
    partial sum.

    Args:
        s: Eigendecay exponent, s > 1/2
        rho: Regularization, 0 < rho < 1

    Returns:
        Effective dimension, of order rho^(-1/(2s))
    """
    if not s > 0.5:
        raise ParameterError(f"effective dimension needs s > 1/2, got {s}")
    if not 0.0 < rho < 1.0:
        raise ParameterError(f"rho must lie in (0, 1), got {rho}")

    two_s = 2.0 * s
    stop = max(16, 2 * math.ceil(rho ** (-1.0 / two_s)))
    stop = min(stop, EFFECTIVE_DIM_MAX_TERMS)
    start = 1
    total = 0.0
    while True:
        total += _partial_sum(start, stop, two_s, rho)
        tail = stop ** (1.0 - two_s) / ((two_s - 1.0) * rho)
        if tail < EFFECTIVE_DIM_TAIL_TOL * total:
            return total
        if stop >= EFFECTIVE_DIM_MAX_TERMS:
            estimate = (stop + 0.5) ** (1.0 - two_s) / ((two_s - 1.0) * rho)
            logger.warning(
                f"Effective dimension truncated at {stop} terms (s={s:g}, rho={rho:g}); "
                f"adding integral tail estimate {estimate:.3g}"
            )
            return total + estimate
        start = stop + 1
        stop = min(2 * stop, EFFECTIVE_DIM_MAX_TERMS)


def nystrom_window(m: int) -> Tuple[int, int]:
    """Default slope-fit window [m^(1/4), m^(1/2)] as 1-based indices"""
    lo = max(1, math.ceil(m ** 0.25))
    hi = max(lo + 1, math.floor(m ** 0.5))
    return lo, min(hi, m)


def nystrom_eigendecay(
    spec: KernelSpec,
    sample: Any,
    window: Optional[Tuple[int, int]] = None,
) -> EigendecayReport:
    """
    Estimate kernel eigenvalues from eig((1/m) K) and fit their log-log slope

    Args:
        spec: Kernel specification
        sample: m×d array of design draws, m >= 32
        window: Optional 1-based inclusive index range for the slope fit

    Returns:
        EigendecayReport with descending eigenvalues
    """
    sample = _as_points(sample, spec.dim, "sample")
    m = sample.shape[0]
    if m < MIN_NYSTROM_SAMPLE:
        raise ParameterError(f"Nystrom estimate needs m >= {MIN_NYSTROM_SAMPLE}, got {m}")

    K = kernel_matrix(spec, sample) / m
    try:
        eigenvalues = linalg.eigh(K, eigvals_only=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"eigen-solver failed: {e}")

    eigenvalues = eigenvalues[::-1].copy()
    if eigenvalues[-1] < -EIGEN_CLAMP_TOL:
        raise NumericError(
            f"kernel matrix has a negative eigenvalue {eigenvalues[-1]:.3g}"
        )
    eigenvalues[eigenvalues < 0.0] = 0.0

    lo, hi = window if window is not None else nystrom_window(m)
    if not 1 <= lo < hi <= m:
        raise ParameterError(f"invalid eigendecay window [{lo}, {hi}] for m={m}")

    j = np.arange(lo, hi + 1, dtype=float)
    mu = eigenvalues[lo - 1:hi]
    usable = mu > EIGEN_CLAMP_TOL
    if np.count_nonzero(usable) >= 2:
        slope = float(np.polyfit(np.log(j[usable]), np.log(mu[usable]), 1)[0])
    else:
        logger.warning(
            f"Eigenvalues in window [{lo}, {hi}] are at the noise floor; slope undefined"
        )
        slope = float("nan")

    logger.debug(f"Nystrom eigendecay for {spec.describe()}: m={m}, slope={slope:.3f}")
    return EigendecayReport(eigenvalues=eigenvalues, fitted_slope=slope, window=(lo, hi))
