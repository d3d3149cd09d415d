"""
Persistence - Model files, band results and other JSON/CSV outputs
Models are versioned JSON, optionally with a binary sidecar for large arrays
"""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Sequence, Union

import numpy as np

from dackrr.band import BandResult
from dackrr.constants import MODEL_FORMAT_VERSION, SIDECAR_DTYPE
from dackrr.dac import AveragedModel, PartitionPlan
from dackrr.errors import ParseError
from dackrr.kernel import KernelSpec
from dackrr.krr import LocalEstimate
from dackrr.logger import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]


def sidecar_path(model_path: PathLike) -> Path:
    """Binary sidecar next to a model file: model.json -> model.bin"""
    return Path(model_path).with_suffix(".bin")


def save_model(model: AveragedModel, path: PathLike, sidecar: bool = False) -> Path:
    """
    Save an averaged model as versioned JSON

    Floats are written in shortest round-trip form, so loading reproduces
    predictions exactly. With sidecar=True the anchors and coefficients of
    every local go to a little-endian float64 file instead, row-major, each
    local's anchors followed by its coefficients, in partition order.

    Args:
        model: Averaged model
        path: Destination JSON path
        sidecar: Store arrays in the binary sidecar

    Returns:
        Path of the JSON file
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)

    locals_out: List[Dict[str, Any]] = []
    chunks: List[np.ndarray] = []
    offset = 0
    for est in model.locals:
        if sidecar:
            chunks.append(est.anchors.reshape(-1))
            chunks.append(est.coefficients)
            locals_out.append({"offset": offset, "rows": est.size})
            offset += est.anchors.size + est.coefficients.size
        else:
            locals_out.append(
                {"anchors": est.anchors.tolist(), "coefficients": est.coefficients.tolist()}
            )

    payload = {
        "format_version": MODEL_FORMAT_VERSION,
        "kernel": model.kernel.to_dict(),
        "rho": model.rho,
        "plan": {"n": model.plan.n, "P": model.plan.P, "sizes": model.plan.sizes().tolist()},
        "locals": locals_out,
    }
    if sidecar:
        bin_path = sidecar_path(path)
        np.concatenate(chunks).astype(SIDECAR_DTYPE).tofile(bin_path)
        payload["sidecar"] = bin_path.name

    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    logger.info(f"Saved model with {model.P} partitions to {path}")
    return path


def load_model(path: PathLike) -> AveragedModel:
    """
    Load a model written by save_model

    The partition plan is rebuilt as contiguous blocks with the saved sizes;
    predictions depend only on the local estimates.

    Args:
        path: Model JSON path

    Returns:
        AveragedModel
    """
    path = Path(path)
    if not path.exists():
        raise ParseError(f"model file not found: {path}", path=str(path))
    try:
        with open(path, "r", encoding="utf-8") as f:
            payload = json.load(f)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid model JSON: {e.msg}", line=e.lineno, path=str(path))
    except UnicodeDecodeError as e:
        raise ParseError(f"model file is not valid UTF-8 text: {e.reason}", path=str(path))
    if not isinstance(payload, dict):
        raise ParseError("model file must hold a JSON object", path=str(path))

    version = payload.get("format_version")
    if version != MODEL_FORMAT_VERSION:
        raise ParseError(f"unsupported model format version {version!r}", path=str(path))

    try:
        kernel = KernelSpec.from_dict(payload["kernel"])
        rho = float(payload["rho"])
        plan_info = payload["plan"]
        entries = payload["locals"]
        if not isinstance(plan_info, dict) or not isinstance(entries, list):
            raise TypeError("'plan' must be an object and 'locals' a list")
    except (KeyError, TypeError, ValueError) as e:
        raise ParseError(f"malformed model file: {e}", path=str(path))

    flat = None
    if "sidecar" in payload:
        bin_path = path.parent / payload["sidecar"]
        if not bin_path.exists():
            raise ParseError(f"model sidecar not found: {bin_path}", path=str(path))
        flat = np.fromfile(bin_path, dtype=SIDECAR_DTYPE).astype(float)

    estimates = []
    for p, entry in enumerate(entries):
        try:
            if flat is not None:
                start, rows = int(entry["offset"]), int(entry["rows"])
                stop = start + rows * kernel.dim
                if start < 0 or rows < 1 or stop + rows > flat.shape[0]:
                    raise ParseError(
                        f"model sidecar is truncated: local {p} needs values "
                        f"[{start}, {stop + rows}), sidecar holds {flat.shape[0]}",
                        path=str(path),
                    )
                anchors = flat[start:stop].reshape(rows, kernel.dim)
                coefficients = flat[stop:stop + rows]
            else:
                anchors = np.asarray(entry["anchors"], dtype=float).reshape(-1, kernel.dim)
                coefficients = np.asarray(entry["coefficients"], dtype=float)
        except ParseError:
            raise
        except (KeyError, TypeError, ValueError) as e:
            raise ParseError(f"malformed local estimate {p}: {e}", path=str(path))
        estimates.append(
            LocalEstimate(anchors=anchors, coefficients=coefficients, kernel=kernel, rho=rho)
        )

    sizes = np.asarray(plan_info.get("sizes", [est.size for est in estimates]), dtype=np.int64)
    plan = PartitionPlan(
        n=int(plan_info["n"]),
        P=int(plan_info["P"]),
        assignment=np.repeat(np.arange(len(sizes)), sizes),
    )
    return AveragedModel(locals=tuple(estimates), rho=rho, kernel=kernel, plan=plan)


def write_json(payload: Dict[str, Any], path: PathLike) -> Path:
    """Write a JSON document with a trailing newline"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2)
        f.write("\n")
    return path


def write_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], path: PathLike) -> Path:
    """Write a CSV file; floats use shortest round-trip formatting"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return path


def save_band(band: BandResult, out_dir: PathLike) -> List[Path]:
    """
    Write band.json ({radius, beta, B, scheme}) and band_norms.csv

    Args:
        band: Bootstrap band
        out_dir: Output directory

    Returns:
        Paths written
    """
    out_dir = Path(out_dir)
    json_path = write_json(band.to_dict(), out_dir / "band.json")
    csv_path = write_csv(["norm"], ([float(v)] for v in band.norms), out_dir / "band_norms.csv")
    return [json_path, csv_path]
