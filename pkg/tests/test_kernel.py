"""
Tests for kernels and spectral diagnostics
"""

import math

import numpy as np
import pytest

from dackrr.errors import InputError, ParameterError
from dackrr.kernel import (
    KernelFamily,
    KernelSpec,
    cross_matrix,
    effective_dimension,
    kernel_matrix,
    kernel_value,
    nystrom_eigendecay,
    nystrom_window,
    smoothness_index,
)


def test_kernel_value_identity():
    """Test that k(x, x) = 1"""
    spec = KernelSpec.matern(2.5)
    assert kernel_value(spec, [0.3], [0.3]) == 1.0


def test_matern_half_closed_form():
    """Test Matern 1/2 at unit distance is exp(-1)"""
    spec = KernelSpec.matern(0.5, lengthscale=1.0)
    assert kernel_value(spec, [0.0], [1.0]) == pytest.approx(math.exp(-1.0), rel=1e-12)


def test_matern_five_halves_closed_form():
    """Test Matern 5/2 at unit distance"""
    spec = KernelSpec.matern(2.5, lengthscale=1.0)
    expected = (1.0 + math.sqrt(5.0) + 5.0 / 3.0) * math.exp(-math.sqrt(5.0))
    assert kernel_value(spec, [1.0], [0.0]) == pytest.approx(expected, rel=1e-12)


def test_general_matern_matches_closed_form():
    """Test the Bessel form agrees with the closed forms near alpha = 3/2"""
    closed = KernelSpec.matern(1.5)
    bessel = KernelSpec.matern(1.5 + 1e-9)
    r = np.linspace(0.0, 3.0, 13).reshape(-1, 1)
    a = cross_matrix(closed, r, [[0.0]])
    b = cross_matrix(bessel, r, [[0.0]])
    np.testing.assert_allclose(a, b, rtol=1e-6, atol=1e-9)


def test_general_matern_far_points_are_zero():
    """Test that Bessel underflow at large distance gives 0, not nan"""
    spec = KernelSpec.matern(3.7, lengthscale=0.01)
    K = cross_matrix(spec, [[0.0]], [[50.0]])
    assert K[0, 0] == 0.0


@pytest.mark.parametrize("alpha", [50.0, 120.0])
def test_general_matern_large_alpha_near_zero(alpha):
    """Test large-alpha kernels stay continuous at tiny distances"""
    spec = KernelSpec.matern(alpha)
    values = [kernel_value(spec, [0.0], [r]) for r in (1e-6, 1e-4, 1e-2)]
    assert values[0] == pytest.approx(1.0, abs=1e-9)
    assert 1.0 >= values[0] >= values[1] > values[2] > 0.9
    K = kernel_matrix(spec, [[0.0], [1e-6], [0.5]])
    assert np.linalg.eigvalsh(K).min() > -1e-10


def test_general_matern_large_alpha_matches_log_form():
    """Test the small-distance branch joins the Bessel form smoothly"""
    spec = KernelSpec.matern(50.0, lengthscale=1.0)
    r = np.geomspace(1e-7, 1e-1, 25).reshape(-1, 1)
    k = cross_matrix(spec, r, [[0.0]])[:, 0]
    expected = np.exp(-(np.sqrt(100.0) * r[:, 0]) ** 2 / (4.0 * 49.0))
    np.testing.assert_allclose(k, expected, rtol=1e-3)
    assert np.all(np.diff(k) <= 1e-12)


def test_kernel_value_symmetric_on_random_pairs():
    """Test k(x, y) = k(y, x) for random pairs and several kernels"""
    rng = np.random.default_rng(11)
    specs = [
        KernelSpec.matern(0.5, dim=2),
        KernelSpec.matern(2.5, dim=2),
        KernelSpec.matern(3.7, dim=2),
        KernelSpec.squared_exponential(dim=2),
    ]
    for spec in specs:
        for _ in range(25):
            x, y = rng.uniform(-1.0, 1.0, size=(2, 2))
            assert kernel_value(spec, x, y) == kernel_value(spec, y, x)


def test_squared_exponential():
    """Test the Squared Exponential profile"""
    spec = KernelSpec.squared_exponential(lengthscale=2.0)
    assert spec.alpha is None
    assert kernel_value(spec, [0.0], [2.0]) == pytest.approx(math.exp(-0.5))


def test_kernel_value_dimension_mismatch():
    """Test that points of the wrong dimension are rejected"""
    spec = KernelSpec.matern(2.5, dim=2)
    with pytest.raises(InputError):
        kernel_value(spec, [0.0], [0.0, 1.0])


def test_kernel_spec_validation():
    """Test invalid hyperparameters"""
    with pytest.raises(ParameterError):
        KernelSpec.matern(2.5, lengthscale=0.0)
    with pytest.raises(ParameterError):
        KernelSpec.matern(-1.0)
    with pytest.raises(ParameterError):
        KernelSpec(dim=0)


def test_kernel_spec_dict_round_trip():
    """Test to_dict / from_dict"""
    spec = KernelSpec.matern(1.5, lengthscale=0.3, dim=2)
    assert KernelSpec.from_dict(spec.to_dict()) == spec
    se = KernelSpec.squared_exponential(0.5)
    assert KernelSpec.from_dict(se.to_dict()).family is KernelFamily.SQUARED_EXPONENTIAL


def test_kernel_matrix_single_point():
    """Test a single point gives [[1]]"""
    K = kernel_matrix(KernelSpec.matern(2.5), [[0.4]])
    assert K.shape == (1, 1)
    assert K[0, 0] == 1.0


def test_kernel_matrix_identical_points():
    """Test two identical points give a matrix of ones"""
    K = kernel_matrix(KernelSpec.matern(2.5), [[0.4], [0.4]])
    np.testing.assert_array_equal(K, np.ones((2, 2)))


def test_kernel_matrix_matches_kernel_value():
    """Test kernel_matrix entries against kernel_value"""
    spec = KernelSpec.matern(0.5, lengthscale=0.7)
    points = np.array([[0.0], [0.3], [1.1]])
    K = kernel_matrix(spec, points)
    for i in range(3):
        for j in range(3):
            assert K[i, j] == pytest.approx(kernel_value(spec, points[i], points[j]), rel=1e-12)
    np.testing.assert_array_equal(K, K.T)


def test_kernel_matrix_is_psd():
    """Test the kernel matrix of random points is positive semidefinite"""
    rng = np.random.default_rng(3)
    points = rng.uniform(size=(40, 2))
    K = kernel_matrix(KernelSpec.matern(1.5, dim=2), points)
    assert np.linalg.eigvalsh(K).min() > -1e-10


def test_smoothness_index():
    """Test s = (2 alpha + d) / 2"""
    assert smoothness_index(KernelSpec.matern(2.5)) == 3.0
    assert smoothness_index(KernelSpec.matern(1.5, dim=2)) == 2.5
    assert smoothness_index(KernelSpec.squared_exponential()) is None


def test_effective_dimension_against_direct_sum():
    """Test against direct summation up to J = 10^6"""
    j = np.arange(1, 10**6 + 1, dtype=float)
    mu = j ** -6.0
    direct = float(np.sum(mu / (mu + 1e-6)))
    value = effective_dimension(3.0, 1e-6)
    assert value == pytest.approx(direct, rel=1e-5)
    assert 10.0 / 3.0 <= value <= 30.0


def test_effective_dimension_monotone_in_rho():
    """Test that smaller rho gives a larger effective dimension"""
    values = [effective_dimension(3.0, rho) for rho in (1e-6, 1e-4, 1e-2, 0.5)]
    assert values == sorted(values, reverse=True)


def test_effective_dimension_below_series_bound():
    """Test the rho -> 1 value sits below sum j^-6 = pi^6 / 945"""
    assert effective_dimension(3.0, 1.0 - 1e-12) < math.pi**6 / 945


def test_effective_dimension_scaling():
    """Test effective_dimension * rho^(1/(2s)) stays within a factor of 3"""
    scaled = [effective_dimension(3.0, rho) * rho ** (1.0 / 6.0) for rho in (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)]
    assert max(scaled) / min(scaled) <= 3.0


def test_effective_dimension_rejects_small_s():
    """Test s <= 1/2 is a parameter error"""
    with pytest.raises(ParameterError):
        effective_dimension(0.5, 1e-3)
    with pytest.raises(ParameterError):
        effective_dimension(2.0, 0.0)


def test_nystrom_window():
    """Test the default slope window for m = 512"""
    assert nystrom_window(512) == (5, 22)


def test_nystrom_eigendecay_matern_five_halves():
    """Test the fitted slope for Matern 5/2 on a uniform design is near -6"""
    rng = np.random.default_rng(0)
    sample = rng.uniform(0.0, 1.0, size=(512, 1))
    report = nystrom_eigendecay(KernelSpec.matern(2.5), sample)
    assert KernelSpec.matern(2.5).lengthscale == 0.3
    assert -7.0 <= report.fitted_slope <= -5.0
    assert np.all(np.diff(report.eigenvalues) <= 0)
    assert report.eigenvalues.min() >= 0.0


@pytest.mark.parametrize("spec", [KernelSpec.matern(1.5), KernelSpec.matern(3.7), KernelSpec.squared_exponential()])
def test_nystrom_eigenvalues_sum_to_one(spec):
    """Test the eigenvalues of K/m sum to trace(K)/m = 1"""
    sample = np.random.default_rng(6).uniform(size=(256, 1))
    report = nystrom_eigendecay(spec, sample)
    assert report.eigenvalues.sum() == pytest.approx(1.0, abs=1e-10)


def test_nystrom_eigendecay_identical_points():
    """Test a rank-one kernel matrix has one nonzero eigenvalue"""
    sample = np.full((64, 1), 0.5)
    report = nystrom_eigendecay(KernelSpec.matern(2.5), sample, window=(1, 8))
    assert report.eigenvalues[0] == pytest.approx(1.0)
    assert np.all(np.abs(report.eigenvalues[1:]) < 1e-10)
    assert math.isnan(report.fitted_slope)


def test_nystrom_eigendecay_needs_enough_points():
    """Test that m < 32 is rejected"""
    with pytest.raises(ParameterError):
        nystrom_eigendecay(KernelSpec.matern(2.5), np.zeros((8, 1)))
