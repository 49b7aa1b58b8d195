"""Configuration loader and manager."""
import json
import math
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Dict, Any, Optional

from dotenv import load_dotenv

from torusaction.exceptions import ConfigurationError


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by every computation."""
    geom: float = 1e-9              # clearance between a point and a path
    fixed: float = 1e-9             # residual below which a point is fixed
    integral: float = 1e-9          # distance to the nearest integer
    refine_depth: int = 24
    angle_bound: float = math.pi / 2
    inversion: float = 1e-12
    quad: float = 1e-3
    conv: float = 1e-3
    conv_periodic: float = 1e-6
    window: int = 8
    shell_cap: int = 16
    return_cap: int = 1_000_000
    jitter_scale: float = 1e-7
    jitter_attempts: int = 3
    trajectory_steps: int = 64
    quad_steps: int = 16
    subsamples: int = 2

    def with_overrides(self, overrides: Optional[Dict[str, Any]]) -> 'Tolerances':
        """Return a copy with the given entries replaced.

        Args:
            overrides: Mapping of field name to new value

        Returns:
            New Tolerances instance

        Raises:
            ConfigurationError: If a key is not a tolerance field
        """
        if not overrides:
            return self
        known = {f.name: f.type for f in fields(self)}
        values = {}
        for key, value in overrides.items():
            if key not in known:
                raise ConfigurationError(f"Unknown tolerance: {key}")
            values[key] = int(value) if known[key] in (int, 'int') else float(value)
        return replace(self, **values)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {f.name: getattr(self, f.name) for f in fields(self)}


DEFAULTS: Dict[str, Any] = {
    "data_dir": "data",
    "reports_dir": "reports",
    "modulus": 4.0,
    "threads": 4,
    "seed": 0,
    "grid": 512,
    "tolerances": {},
}


class Config:
    """Configuration loader and manager."""

    def __init__(self, config_path: str = "data/config.json"):
        """Initialize config loader.

        Args:
            config_path: Path to configuration file
        """
        self.config_path = Path(config_path)
        self._config = self._load_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from file, falling back to defaults."""
        load_dotenv()
        config = dict(DEFAULTS)

        if self.config_path.exists():
            with open(self.config_path) as f:
                try:
                    config.update(json.load(f))
                except json.JSONDecodeError as e:
                    raise ConfigurationError(f"Invalid configuration file {self.config_path}: {e}")

        # Allow environment variables to override config file
        if os.getenv("TORUSACTION_DATA_DIR"):
            config["data_dir"] = os.getenv("TORUSACTION_DATA_DIR")
        if os.getenv("TORUSACTION_THREADS"):
            config["threads"] = int(os.getenv("TORUSACTION_THREADS"))
        if os.getenv("TORUSACTION_SEED"):
            config["seed"] = int(os.getenv("TORUSACTION_SEED"))
        if os.getenv("TORUSACTION_GRID"):
            config["grid"] = int(os.getenv("TORUSACTION_GRID"))

        return config

    @property
    def data_dir(self) -> str:
        """Get data directory path."""
        return self._config["data_dir"]

    @property
    def reports_dir(self) -> str:
        """Get report output directory."""
        return self._config["reports_dir"]

    @property
    def scenarios_dir(self) -> str:
        """Get directory holding the shipped scenarios."""
        return self._config.get("scenarios_dir", str(Path(self.data_dir) / "scenarios"))

    @property
    def modulus(self) -> float:
        """Get default torus modulus L."""
        value = float(self._config["modulus"])
        if value <= 0:
            raise ConfigurationError(f"Torus modulus must be positive, got {value}")
        return value

    @property
    def threads(self) -> int:
        """Get worker thread count."""
        return max(1, int(self._config["threads"]))

    @property
    def seed(self) -> int:
        """Get default seed for deterministic jitter."""
        return int(self._config["seed"])

    @property
    def grid(self) -> int:
        """Get default quadrature grid size."""
        return int(self._config["grid"])

    @property
    def tolerances(self) -> Tolerances:
        """Get tolerances with configured overrides applied."""
        return Tolerances().with_overrides(self._config.get("tolerances"))

    def get(self, key: str, default: Any = None) -> Any:
        """Get configuration value by key.

        Args:
            key: Configuration key
            default: Default value if key not found

        Returns:
            Configuration value or default
        """
        return self._config.get(key, default)
