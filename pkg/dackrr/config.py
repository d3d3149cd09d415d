"""
Configuration management for dackrr
YAML configuration files, environment overrides and CLI-flag overrides
"""

import copy
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Tuple

import yaml

from dackrr.band import BootstrapConfig, Scheme
from dackrr.constants import (
    DEFAULT_BETA,
    DEFAULT_BOOTSTRAP_ITERATIONS,
    DEFAULT_GRID_SIZE,
    DEFAULT_LENGTHSCALE,
    DEFAULT_MATERN_ALPHA,
    DEFAULT_TRIALS,
)
from dackrr.dac import FitConfig
from dackrr.errors import ConfigError, DackrrError
from dackrr.kernel import KernelFamily, KernelSpec
from dackrr.logger import get_logger, parse_level
from dackrr.simulate import SimConfig

logger = get_logger(__name__)

DEFAULT_RHO_SWEEP = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6]

DEFAULT_CONFIG = {
    "kernel": {
        "family": "matern",  # matern or se
        "alpha": DEFAULT_MATERN_ALPHA,
        "lengthscale": DEFAULT_LENGTHSCALE,
    },
    "fit": {
        "rho": None,  # None: n^(-2s/(2s+1))
        "partitions": 16,
        "seed": 0,
        "s_override": None,
        "s0": None,  # Truth smoothness, enables partition-range advisories
        "contiguous": False,
    },
    "bootstrap": {
        "B": DEFAULT_BOOTSTRAP_ITERATIONS,
        "beta": DEFAULT_BETA,
        "scheme": "resample",  # resample or multiplier
        "seed": 0,
    },
    "grid": {
        "kind": "uniform",  # uniform or empirical
        "M": DEFAULT_GRID_SIZE,
        "lo": 0.0,
        "hi": 1.0,
    },
    "simulate": {
        "n": 2**13,
        "P_list": [2**5, 2**7],
        "sigma": 1.0,
        "trials": DEFAULT_TRIALS,
        "seed": 0,
        "noise": "gaussian",  # gaussian or rademacher
    },
    "diagnose": {
        "m": 512,
        "window": None,  # [lo, hi] 1-based; None: [m^(1/4), m^(1/2)]
        "rho_sweep": DEFAULT_RHO_SWEEP,
        "n": None,  # Sample size for the partition-range advisory
    },
    "io": {
        "input": None,
        "model": None,
        "out": ".",
        "sidecar": False,
    },
    "runtime": {
        "threads": None,  # None: all CPUs
        "log_level": "INFO",
    },
}

ENV_OVERRIDES = {
    "DACKRR_THREADS": "runtime.threads",
    "DACKRR_LOG_LEVEL": "runtime.log_level",
    "DACKRR_SEED": "seed",
}

SEED_KEYS = ("fit.seed", "bootstrap.seed", "simulate.seed")


def get_config_path() -> Optional[Path]:
    """
    Get the path to the configuration file

    Returns:
        First existing config file among the default locations, or None
    """
    config_locations = [
        Path.cwd() / "dackrr.yaml",
        Path.cwd() / ".dackrr.yaml",
        Path.home() / ".config" / "dackrr" / "config.yaml",
    ]

    for location in config_locations:
        if location.exists():
            return location

    return None


def merge_configs(default: Dict[str, Any], user: Dict[str, Any], prefix: str = "") -> Dict[str, Any]:
    """
    Deep merge user configuration into the defaults

    Args:
        default: Default configuration dictionary
        user: User configuration dictionary
        prefix: Dotted path of the current section (for error messages)

    Returns:
        Merged configuration dictionary

    Raises:
        ConfigError: if the user configuration has keys the defaults lack
    """
    result = copy.deepcopy(default)

    for key, value in user.items():
        path = f"{prefix}{key}"
        if key not in result:
            raise ConfigError(f"unknown configuration key: {path}")
        if isinstance(result[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"configuration section {path} must be a mapping")
            result[key] = merge_configs(result[key], value, prefix=f"{path}.")
        else:
            result[key] = value

    return result


def set_dotted(config: Dict[str, Any], key: str, value: Any) -> None:
    """
    Set a dotted key such as "fit.partitions"; "seed" sets every seed

    Args:
        config: Configuration dictionary, modified in place
        key: Dotted key
        value: New value
    """
    if key == "seed":
        for seed_key in SEED_KEYS:
            set_dotted(config, seed_key, value)
        return
    section, _, name = key.partition(".")
    if section not in config or not isinstance(config[section], dict) or name not in config[section]:
        raise ConfigError(f"unknown configuration key: {key}")
    config[section][name] = value


def apply_overrides(config: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    """
    Apply dotted-key overrides, skipping None values

    Args:
        config: Configuration dictionary
        overrides: Mapping of dotted key to value

    Returns:
        New configuration dictionary
    """
    result = copy.deepcopy(config)
    for key, value in overrides.items():
        if value is not None:
            set_dotted(result, key, value)
    return result


def load_config(config_path: Optional[str] = None, environ: Optional[Mapping[str, str]] = None) -> Dict[str, Any]:
    """
    Load configuration from YAML file and environment

    Args:
        config_path: Optional path to config file. If not provided, searches default locations
        environ: Environment mapping (defaults to os.environ)

    Returns:
        Configuration dictionary
    """
    config = copy.deepcopy(DEFAULT_CONFIG)

    if config_path:
        config_file = Path(config_path)
        if not config_file.exists():
            raise ConfigError(f"config file not found: {config_path}")
    else:
        config_file = get_config_path()

    if config_file:
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                user_config = yaml.safe_load(f)
        except yaml.YAMLError as e:
            raise ConfigError(f"could not parse config file {config_file}: {e}")
        if user_config:
            if not isinstance(user_config, dict):
                raise ConfigError(f"config file {config_file} must contain a mapping")
            config = merge_configs(config, user_config)
        logger.debug(f"Loaded configuration from {config_file}")

    environ = os.environ if environ is None else environ
    env_values = {key: environ.get(var) for var, key in ENV_OVERRIDES.items() if environ.get(var)}
    return apply_overrides(config, env_values)


def _float(value: Any, key: str, optional: bool = False) -> Optional[float]:
    if value is None and optional:
        return None
    try:
        return float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be a number, got {value!r}")


def _int(value: Any, key: str, optional: bool = False) -> Optional[int]:
    if value is None and optional:
        return None
    if isinstance(value, int) and not isinstance(value, bool):
        return value
    if isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            pass
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    if not as_float.is_integer():
        raise ConfigError(f"{key} must be an integer, got {value!r}")
    return int(as_float)


def _bool(value: Any, key: str) -> bool:
    if isinstance(value, bool):
        return value
    if isinstance(value, str) and value.lower() in ("true", "false", "yes", "no", "1", "0"):
        return value.lower() in ("true", "yes", "1")
    raise ConfigError(f"{key} must be a boolean, got {value!r}")


@dataclass(frozen=True)
class RunConfig:
    """Typed, validated view of a merged configuration dictionary"""

    raw: Dict[str, Any]

    @classmethod
    def from_dict(cls, config: Dict[str, Any]) -> "RunConfig":
        run = cls(raw=copy.deepcopy(config))
        # Touch every typed accessor so bad values fail before any work starts
        run.kernel_spec(1)
        run.fit_config()
        run.bootstrap_config()
        run.grid_settings()
        run.diagnose_settings()
        _ = run.threads
        _ = run.log_level
        return run

    def section(self, name: str) -> Dict[str, Any]:
        return self.raw[name]

    def kernel_spec(self, dim: int) -> KernelSpec:
        k = self.raw["kernel"]
        try:
            family = KernelFamily(str(k["family"]).lower())
        except ValueError:
            raise ConfigError(f"kernel.family must be 'matern' or 'se', got {k['family']!r}")
        try:
            return KernelSpec(
                family=family,
                lengthscale=_float(k["lengthscale"], "kernel.lengthscale"),
                dim=dim,
                alpha=_float(k["alpha"], "kernel.alpha", optional=True),
            )
        except DackrrError as e:
            raise ConfigError(str(e))

    def fit_config(self, partitions: Optional[int] = None) -> FitConfig:
        f = self.raw["fit"]
        try:
            return FitConfig(
                P=partitions if partitions is not None else _int(f["partitions"], "fit.partitions"),
                rho=_float(f["rho"], "fit.rho", optional=True),
                seed=_int(f["seed"], "fit.seed"),
                s_override=_float(f["s_override"], "fit.s_override", optional=True),
                s0=_float(f["s0"], "fit.s0", optional=True),
                contiguous=_bool(f["contiguous"], "fit.contiguous"),
            )
        except DackrrError as e:
            raise ConfigError(str(e))

    def bootstrap_config(self) -> BootstrapConfig:
        b = self.raw["bootstrap"]
        try:
            scheme = Scheme(str(b["scheme"]).lower())
        except ValueError:
            raise ConfigError(f"bootstrap.scheme must be 'resample' or 'multiplier', got {b['scheme']!r}")
        try:
            return BootstrapConfig(
                B=_int(b["B"], "bootstrap.B"),
                beta=_float(b["beta"], "bootstrap.beta"),
                scheme=scheme,
                seed=_int(b["seed"], "bootstrap.seed"),
            )
        except DackrrError as e:
            raise ConfigError(str(e))

    def grid_settings(self) -> Tuple[str, int, Tuple[float, float]]:
        g = self.raw["grid"]
        kind = str(g["kind"]).lower()
        if kind not in ("uniform", "empirical"):
            raise ConfigError(f"grid.kind must be 'uniform' or 'empirical', got {g['kind']!r}")
        return kind, _int(g["M"], "grid.M"), (_float(g["lo"], "grid.lo"), _float(g["hi"], "grid.hi"))

    def diagnose_settings(self) -> Dict[str, Any]:
        d = self.raw["diagnose"]
        window = d["window"]
        if window is not None:
            if not isinstance(window, (list, tuple)) or len(window) != 2:
                raise ConfigError(f"diagnose.window must be [lo, hi], got {window!r}")
            window = (_int(window[0], "diagnose.window"), _int(window[1], "diagnose.window"))
        sweep = d["rho_sweep"]
        if not isinstance(sweep, (list, tuple)) or not sweep:
            raise ConfigError("diagnose.rho_sweep must be a nonempty list")
        return {
            "m": _int(d["m"], "diagnose.m"),
            "window": window,
            "rho_sweep": [_float(r, "diagnose.rho_sweep") for r in sweep],
            "n": _int(d["n"], "diagnose.n", optional=True),
        }

    def sim_config(self) -> SimConfig:
        s = self.raw["simulate"]
        P_list = s["P_list"]
        if not isinstance(P_list, (list, tuple)) or not P_list:
            raise ConfigError("simulate.P_list must be a nonempty list")
        bootstrap = self.bootstrap_config()
        _, M, _ = self.grid_settings()
        try:
            return SimConfig(
                n=_int(s["n"], "simulate.n"),
                P_list=tuple(_int(p, "simulate.P_list") for p in P_list),
                sigma=_float(s["sigma"], "simulate.sigma"),
                beta=bootstrap.beta,
                B=bootstrap.B,
                trials=_int(s["trials"], "simulate.trials"),
                kernel=self.kernel_spec(1),
                seed=_int(s["seed"], "simulate.seed"),
                noise=str(s["noise"]).lower(),
                M=M,
                scheme=bootstrap.scheme,
                rho=self.fit_config(partitions=1).rho,
            )
        except ConfigError:
            raise
        except DackrrError as e:
            raise ConfigError(str(e))

    @property
    def threads(self) -> Optional[int]:
        threads = _int(self.raw["runtime"]["threads"], "runtime.threads", optional=True)
        if threads is not None and threads < 1:
            raise ConfigError(f"runtime.threads must be >= 1, got {threads}")
        return threads

    @property
    def log_level(self) -> int:
        value = self.raw["runtime"]["log_level"]
        try:
            return parse_level(value)
        except ValueError:
            raise ConfigError(f"runtime.log_level must be a logging level name, got {value!r}")

    @property
    def out_dir(self) -> Path:
        return Path(self.raw["io"]["out"])

    @property
    def input_path(self) -> Optional[str]:
        return self.raw["io"]["input"]

    @property
    def model_path(self) -> Optional[str]:
        return self.raw["io"]["model"]

    @property
    def sidecar(self) -> bool:
        return _bool(self.raw["io"]["sidecar"], "io.sidecar")


def create_sample_config(path: str = "dackrr.yaml") -> Path:
    """
    Create a sample configuration file

    Args:
        path: Path where to create the sample config file

    Returns:
        Path of the written file
    """
    sample_config = """# dackrr configuration file
# Save this as 'dackrr.yaml' in your current directory or ~/.config/dackrr/config.yaml
# CLI flags override values here; DACKRR_THREADS, DACKRR_LOG_LEVEL and
# DACKRR_SEED override the file.

kernel:
  family: matern      # matern or se (Squared Exponential needs fit.rho)
  alpha: 2.5          # Matern smoothness; s = alpha + d/2
  lengthscale: 0.3     # Input-space units on [0, 1]^d

fit:
  rho: null           # null: n^(-2s/(2s+1))
  partitions: 16
  seed: 0
  s_override: null    # Target a deliberately undersmoothed s
  s0: null            # Smoothness of the truth; enables partition-range advisories
  contiguous: false   # true: keep row order instead of a seeded shuffle

bootstrap:
  B: 1000
  beta: 0.95
  scheme: resample    # resample or multiplier
  seed: 0

grid:
  kind: uniform       # uniform (midpoint rule on [lo, hi]^d) or empirical (input rows)
  M: 1024             # Points per axis
  lo: 0.0
  hi: 1.0

simulate:
  n: 8192
  P_list: [32, 128]
  sigma: 1.0
  trials: 200
  seed: 0
  noise: gaussian     # gaussian or rademacher

diagnose:
  m: 512
  window: null        # [lo, hi], 1-based eigenvalue indices
  rho_sweep: [1.0e-2, 1.0e-3, 1.0e-4, 1.0e-5, 1.0e-6]
  n: null

io:
  input: null         # CSV with feature columns followed by y
  model: null         # Saved model JSON for 'band'
  out: .
  sidecar: false      # Store anchors and coefficients in a binary sidecar

runtime:
  threads: null       # null: all CPUs
  log_level: INFO
"""

    path = Path(path)
    with open(path, "w", encoding="utf-8") as f:
        f.write(sample_config)

    logger.info(f"Sample configuration created at: {path}")
    return path
