"""
Tests for model files and band outputs
"""

import csv
import json

import numpy as np
import pytest

from dackrr.band import BootstrapConfig, bootstrap_band, uniform_grid
from dackrr.constants import MODEL_FORMAT_VERSION
from dackrr.dac import FitConfig, eval_matrix, fit_averaged
from dackrr.errors import ParseError
from dackrr.kernel import KernelSpec
from dackrr.persistence import load_model, save_band, save_model, sidecar_path


def _model(dim=1, P=4):
    rng = np.random.default_rng(21)
    X = rng.uniform(size=(64, dim))
    y = np.sin(2 * np.pi * X[:, 0]) + 0.3 * rng.standard_normal(64)
    return fit_averaged(KernelSpec.matern(1.5, lengthscale=0.4, dim=dim), FitConfig(P=P, seed=2), X, y)


@pytest.mark.parametrize("sidecar", [False, True])
def test_round_trip_predictions_exact(tmp_path, sidecar):
    """Test load(save(model)) predicts identically on a random grid"""
    model = _model(dim=2)
    path = save_model(model, tmp_path / "model.json", sidecar=sidecar)
    loaded = load_model(path)

    query = np.random.default_rng(5).uniform(size=(50, 2))
    np.testing.assert_array_equal(eval_matrix(loaded, query), eval_matrix(model, query))
    assert loaded.rho == model.rho
    assert loaded.kernel == model.kernel
    assert loaded.plan.sizes().tolist() == model.plan.sizes().tolist()


def test_model_json_fields(tmp_path):
    """Test the JSON document layout"""
    model = _model()
    path = save_model(model, tmp_path / "model.json")
    data = json.loads(path.read_text())
    assert data["format_version"] == MODEL_FORMAT_VERSION
    assert data["kernel"]["family"] == "matern"
    assert data["plan"] == {"n": 64, "P": 4, "sizes": [16, 16, 16, 16]}
    assert len(data["locals"]) == 4
    assert len(data["locals"][0]["coefficients"]) == 16


def test_sidecar_layout(tmp_path):
    """Test the sidecar stores anchors then coefficients as little-endian doubles"""
    model = _model(P=2)
    path = save_model(model, tmp_path / "model.json", sidecar=True)
    data = json.loads(path.read_text())
    raw = np.fromfile(sidecar_path(path), dtype="<f8")
    first = model.locals[0]
    np.testing.assert_array_equal(raw[: first.size], first.anchors[:, 0])
    np.testing.assert_array_equal(raw[first.size : 2 * first.size], first.coefficients)
    assert data["locals"][1]["offset"] == 2 * first.size
    assert data["sidecar"] == "model.bin"


def test_load_missing_model(tmp_path):
    """Test a missing model file"""
    with pytest.raises(ParseError):
        load_model(tmp_path / "absent.json")


def test_load_wrong_version(tmp_path):
    """Test an unsupported format version is rejected"""
    path = tmp_path / "model.json"
    path.write_text(json.dumps({"format_version": 99}))
    with pytest.raises(ParseError):
        load_model(path)


def test_load_invalid_json(tmp_path):
    """Test a corrupt model file reports its line"""
    path = tmp_path / "model.json"
    path.write_text("{\n  \"format_version\": 1,\n  oops\n}\n")
    with pytest.raises(ParseError) as info:
        load_model(path)
    assert info.value.line == 3


def test_band_from_loaded_model_is_identical(tmp_path):
    """Test the band of a saved model equals the band of the original fit"""
    model = _model()
    loaded = load_model(save_model(model, tmp_path / "model.json"))
    grid = uniform_grid(1, 64)
    cfg = BootstrapConfig(B=200, seed=9)
    a = bootstrap_band(eval_matrix(model, grid), grid, cfg)
    b = bootstrap_band(eval_matrix(loaded, grid), grid, cfg)
    np.testing.assert_array_equal(a.norms, b.norms)

    save_band(a, tmp_path / "a")
    save_band(b, tmp_path / "b")
    for name in ("band.json", "band_norms.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_save_band_files(tmp_path):
    """Test band.json fields and the sorted norms CSV"""
    model = _model()
    grid = uniform_grid(1, 32)
    band = bootstrap_band(eval_matrix(model, grid), grid, BootstrapConfig(B=50, beta=0.9, seed=1))
    save_band(band, tmp_path)

    data = json.loads((tmp_path / "band.json").read_text())
    assert data == {"radius": band.radius, "beta": 0.9, "B": 50, "scheme": "resample"}
    with open(tmp_path / "band_norms.csv", newline="") as f:
        rows = list(csv.reader(f))
    assert rows[0] == ["norm"]
    assert [float(r[0]) for r in rows[1:]] == band.norms.tolist()


def test_load_truncated_sidecar(tmp_path):
    """Test a sidecar shorter than the offsets it is indexed by"""
    path = save_model(_model(), tmp_path / "model.json", sidecar=True)
    bin_path = sidecar_path(path)
    raw = bin_path.read_bytes()
    bin_path.write_bytes(raw[: len(raw) // 16 * 8])
    with pytest.raises(ParseError, match="truncated"):
        load_model(path)
