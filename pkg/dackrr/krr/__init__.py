"""
Local KRR - Exact kernel ridge regression on one partition
Fits dual coefficients (K + S*rho*I)^(-1) y and evaluates the fitted function
"""

from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy import linalg

from dackrr.constants import JITTER_FACTOR, JITTER_MAX, JITTER_START
from dackrr.errors import InputError, NumericError, ParameterError
from dackrr.kernel import KernelSpec, cross_matrix, kernel_matrix
from dackrr.logger import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class LocalEstimate:
    """One partition's fitted function in dual form"""

    anchors: np.ndarray
    coefficients: np.ndarray
    kernel: KernelSpec
    rho: float

    def __post_init__(self):
        anchors = np.array(self.anchors, dtype=float, copy=True)
        coefficients = np.array(self.coefficients, dtype=float, copy=True).reshape(-1)
        if anchors.ndim != 2 or anchors.shape[1] != self.kernel.dim:
            raise InputError(
                f"anchors must be S x {self.kernel.dim}, got shape {anchors.shape}"
            )
        if coefficients.shape[0] != anchors.shape[0]:
            raise InputError(
                f"{anchors.shape[0]} anchors but {coefficients.shape[0]} coefficients"
            )
        anchors.setflags(write=False)
        coefficients.setflags(write=False)
        object.__setattr__(self, "anchors", anchors)
        object.__setattr__(self, "coefficients", coefficients)
        object.__setattr__(self, "rho", float(self.rho))

    @property
    def size(self) -> int:
        return self.anchors.shape[0]

    def predict(self, query: Any) -> np.ndarray:
        return predict(self, query)


def _check_inputs(rho: float, X: Any, y: Any, dim: int):
    if not rho > 0:
        raise ParameterError(f"rho must be positive, got {rho}")
    X = np.asarray(X, dtype=float)
    if X.ndim == 1 and dim == 1:
        X = X.reshape(-1, 1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if X.ndim != 2 or X.shape[1] != dim:
        raise InputError(f"X must be S x {dim}, got shape {X.shape}")
    if X.shape[0] < 1:
        raise InputError("a partition needs at least one observation")
    if y.shape[0] != X.shape[0]:
        raise InputError(f"X has {X.shape[0]} rows but y has {y.shape[0]} entries")
    return X, y


def _solve(K: np.ndarray, ridge: float, y: np.ndarray) -> np.ndarray:
    """Cholesky solve of (K + ridge*I) c = y, escalating diagonal jitter on failure"""
    S = K.shape[0]
    A = K + ridge * np.eye(S)
    try:
        return linalg.cho_solve(linalg.cho_factor(A, lower=True, check_finite=True), y)
    except (linalg.LinAlgError, ValueError):
        pass

    scale = np.trace(K) / S
    jitter = JITTER_START
    last = None
    while jitter <= JITTER_MAX * (1.0 + 1e-9):
        logger.warning(f"Cholesky failed; retrying with jitter {jitter * scale:.3g}")
        try:
            factor = linalg.cho_factor(A + jitter * scale * np.eye(S), lower=True)
            return linalg.cho_solve(factor, y)
        except (linalg.LinAlgError, ValueError):
            last = jitter * scale
            jitter *= JITTER_FACTOR
    raise NumericError("Cholesky factorization failed after jitter escalation", jitter=last)


def fit_local(kernel: KernelSpec, rho: float, X: Any, y: Any) -> LocalEstimate:
    """
    Fit kernel ridge regression on one partition

    Solves (K + S*rho*I) c = y, the stationarity condition of
    -(1/(2S)) sum (y_i - f(X_i))^2 - (rho/2) ||f||_H^2.

    Args:
        kernel: Kernel specification
        rho: Regularization, rho > 0
        X: S×d covariates
        y: Length-S responses

    Returns:
        LocalEstimate holding the anchors and dual coefficients
    """
    X, y = _check_inputs(rho, X, y, kernel.dim)
    S = X.shape[0]
    K = kernel_matrix(kernel, X)
    coefficients = _solve(K, S * rho, y)
    return LocalEstimate(anchors=X, coefficients=coefficients, kernel=kernel, rho=rho)


def predict(est: LocalEstimate, query: Any) -> np.ndarray:
    """
    Evaluate a local estimate: sum_i c_i k(q, anchor_i) for every query point

    Args:
        est: Fitted local estimate
        query: m×d array

    Returns:
        Length-m vector
    """
    return cross_matrix(est.kernel, query, est.anchors) @ est.coefficients


def fit_residual(est: LocalEstimate, y: Any) -> float:
    """
    Relative residual ||(K + S*rho*I) c - y|| / ||y|| of a fitted estimate

    Args:
        est: Fitted local estimate
        y: The responses it was fitted on

    Returns:
        Relative residual (absolute residual when y is zero)
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != est.size:
        raise InputError(f"expected {est.size} responses, got {y.shape[0]}")
    K = kernel_matrix(est.kernel, est.anchors)
    residual = K @ est.coefficients + est.size * est.rho * est.coefficients - y
    norm_y = np.linalg.norm(y)
    return float(np.linalg.norm(residual) / norm_y) if norm_y > 0 else float(np.linalg.norm(residual))
