"""
Configuration management for the provenance anomaly toolkit.

Settings are typed dataclass sections. A ``ConfigurationManager`` layers
defaults, an optional JSON settings file and ``PROVAD_*`` environment
variables (a ``.env`` file is honoured through python-dotenv), then
validates the result.
"""

import json
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from dotenv import load_dotenv

from ..utils.exceptions import ConfigurationError

load_dotenv()

ENV_PREFIX = "PROVAD_"
VALID_PRECISIONS = ("rational", "float")
VALID_LOG_LEVELS = ("TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR", "CRITICAL")


@dataclass
class AVFConfiguration:
    """Attribute Value Frequency scoring settings."""
    precision: str = "float"  # rational or float
    initial_probability: float = 0.0
    rescale_threshold: Optional[int] = None


@dataclass
class MiningConfiguration:
    """Itemset and rule mining settings."""
    max_itemsets: int = 5_000_000
    default_minsupp: float = 0.1
    default_minconf: float = 0.9


@dataclass
class KrimpConfiguration:
    """Code table compression settings shared by OC3 and CompreX."""
    epsilon: float = 1.0
    prune: bool = True
    absent_values: bool = False
    min_candidate_support: int = 2


@dataclass
class ComprexConfiguration:
    """Attribute partition search settings."""
    budget_per_attribute: int = 10
    mi_top_k: int = 16
    absent_values: bool = True


@dataclass
class HarnessConfiguration:
    """Experiment harness defaults."""
    shuffles: int = 10
    block_fractions: List[float] = field(default_factory=lambda: [0.01, 0.05, 0.10, 0.25])
    timeout_s: float = 180.0
    jobs: int = 1
    seed: int = 0


@dataclass
class DatasetConfiguration:
    """Context extraction settings."""
    keep_empty_rows: bool = True


@dataclass
class LoggingConfiguration:
    """Logging configuration settings."""
    log_level: str = "INFO"
    log_file: Optional[str] = None
    max_log_size: int = 10  # MB
    log_retention_days: int = 30


@dataclass
class ApplicationConfiguration:
    """Main application configuration."""
    avf: AVFConfiguration = field(default_factory=AVFConfiguration)
    mining: MiningConfiguration = field(default_factory=MiningConfiguration)
    krimp: KrimpConfiguration = field(default_factory=KrimpConfiguration)
    comprex: ComprexConfiguration = field(default_factory=ComprexConfiguration)
    harness: HarnessConfiguration = field(default_factory=HarnessConfiguration)
    dataset: DatasetConfiguration = field(default_factory=DatasetConfiguration)
    logging: LoggingConfiguration = field(default_factory=LoggingConfiguration)

    def section(self, name: str) -> Any:
        if name not in SECTION_NAMES:
            raise ConfigurationError(f"Unknown configuration section '{name}'", setting_name=name)
        return getattr(self, name)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


SECTION_NAMES = tuple(f.name for f in fields(ApplicationConfiguration))


def _coerce(raw: str, current: Any, setting: str) -> Any:
    """Convert an environment string to the type of the current value."""
    try:
        if isinstance(current, bool):
            lowered = raw.strip().lower()
            if lowered in ("1", "true", "yes", "on"):
                return True
            if lowered in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        if isinstance(current, list):
            return [float(part) for part in raw.split(",") if part.strip()]
        if current is None:
            # Optional[int] / Optional[str] knobs
            if raw.strip().lower() in ("", "none", "null"):
                return None
            return int(raw) if raw.strip().lstrip("-").isdigit() else raw
    except ValueError:
        raise ConfigurationError(f"Cannot parse value '{raw}' for {setting}",
                                 setting_name=setting, setting_value=raw)
    return raw


class ConfigurationManager:
    """Layered configuration: defaults, settings file, environment."""

    def __init__(self, config_file: Optional[Union[str, Path]] = None,
                 environ: Optional[Dict[str, str]] = None):
        """Initialize the configuration manager.

        Args:
            config_file: Optional JSON settings file; a missing file is an error
                only when explicitly named.
            environ: Environment mapping (defaults to ``os.environ``).
        """
        self.config_file = Path(config_file) if config_file else None
        self.environ = dict(os.environ if environ is None else environ)
        self.config = ApplicationConfiguration()
        self._load_configuration()
        self._validate_configuration()

    def _load_configuration(self) -> None:
        if self.config_file is not None:
            self._load_from_file()
        self._load_from_environment()

    def _load_from_file(self) -> None:
        """Load configuration from the JSON settings file."""
        try:
            with open(self.config_file, "r", encoding="utf-8") as f:
                data = json.load(f)
        except FileNotFoundError:
            raise ConfigurationError(f"Settings file {self.config_file} not found",
                                     setting_name="config_file", setting_value=str(self.config_file))
        except json.JSONDecodeError as e:
            raise ConfigurationError(f"Settings file {self.config_file} is not valid JSON: {e}",
                                     setting_name="config_file", setting_value=str(self.config_file))
        if not isinstance(data, dict):
            raise ConfigurationError("Settings file must contain a JSON object",
                                     setting_name="config_file")
        self._update_config_from_dict(data)

    def _update_config_from_dict(self, data: Dict[str, Any]) -> None:
        for section_name, values in data.items():
            section = self.config.section(section_name)
            if not isinstance(values, dict):
                raise ConfigurationError(f"Section '{section_name}' must be an object",
                                         setting_name=section_name, setting_value=values)
            for key, value in values.items():
                if not hasattr(section, key):
                    raise ConfigurationError(f"Unknown setting {section_name}.{key}",
                                             setting_name=f"{section_name}.{key}", setting_value=value)
                setattr(section, key, value)

    def _load_from_environment(self) -> None:
        """Apply ``PROVAD_<SECTION>_<KEY>`` overrides, e.g. PROVAD_HARNESS_JOBS=4."""
        for section_name in SECTION_NAMES:
            section = getattr(self.config, section_name)
            for f in fields(section):
                env_name = f"{ENV_PREFIX}{section_name}_{f.name}".upper()
                raw = self.environ.get(env_name)
                if raw is not None:
                    setattr(section, f.name, _coerce(raw, getattr(section, f.name), env_name))
        # Short alias shared with the logging module
        log_level = self.environ.get(f"{ENV_PREFIX}LOG_LEVEL")
        if log_level:
            self.config.logging.log_level = log_level

    def _validate_configuration(self) -> None:
        """Validate configuration values."""
        cfg = self.config
        errors: List[tuple] = []

        if cfg.avf.precision not in VALID_PRECISIONS:
            errors.append(("avf.precision", cfg.avf.precision, "must be 'rational' or 'float'"))
        if cfg.avf.initial_probability < 0 or cfg.avf.initial_probability > 1:
            errors.append(("avf.initial_probability", cfg.avf.initial_probability, "must lie in [0, 1]"))
        if cfg.avf.rescale_threshold is not None and cfg.avf.rescale_threshold < 2:
            errors.append(("avf.rescale_threshold", cfg.avf.rescale_threshold, "must be at least 2"))

        if cfg.mining.max_itemsets < 1:
            errors.append(("mining.max_itemsets", cfg.mining.max_itemsets, "must be positive"))
        for name in ("default_minsupp", "default_minconf"):
            value = getattr(cfg.mining, name)
            if not 0 < value <= 1:
                errors.append((f"mining.{name}", value, "must lie in (0, 1]"))

        if cfg.krimp.epsilon <= 0:
            errors.append(("krimp.epsilon", cfg.krimp.epsilon, "must be positive"))
        if cfg.krimp.min_candidate_support < 1:
            errors.append(("krimp.min_candidate_support", cfg.krimp.min_candidate_support, "must be positive"))
        if cfg.comprex.budget_per_attribute < 1:
            errors.append(("comprex.budget_per_attribute", cfg.comprex.budget_per_attribute, "must be positive"))
        if cfg.comprex.mi_top_k < 1:
            errors.append(("comprex.mi_top_k", cfg.comprex.mi_top_k, "must be positive"))

        if cfg.harness.shuffles < 1:
            errors.append(("harness.shuffles", cfg.harness.shuffles, "must be positive"))
        if cfg.harness.jobs < 1:
            errors.append(("harness.jobs", cfg.harness.jobs, "must be positive"))
        if cfg.harness.timeout_s <= 0:
            errors.append(("harness.timeout_s", cfg.harness.timeout_s, "must be positive"))
        if not cfg.harness.block_fractions or any(not 0 < b <= 1 for b in cfg.harness.block_fractions):
            errors.append(("harness.block_fractions", cfg.harness.block_fractions, "must be fractions in (0, 1]"))

        cfg.logging.log_level = str(cfg.logging.log_level).upper()
        if cfg.logging.log_level not in VALID_LOG_LEVELS:
            errors.append(("logging.log_level", cfg.logging.log_level, "is not a log level"))

        if errors:
            setting, value, problem = errors[0]
            summary = "; ".join(f"{s} {p}" for s, _, p in errors)
            raise ConfigurationError(f"Invalid configuration: {summary}",
                                     setting_name=setting, setting_value=value)

    def update_setting(self, category: str, key: str, value: Any) -> None:
        """Update a single setting and re-validate; an invalid value leaves the old one in place."""
        section = self.config.section(category)
        if not hasattr(section, key):
            raise ConfigurationError(f"Invalid setting: {category}.{key}",
                                     setting_name=f"{category}.{key}", setting_value=value)
        previous = getattr(section, key)
        setattr(section, key, value)
        try:
            self._validate_configuration()
        except ConfigurationError:
            setattr(section, key, previous)
            raise

    def save_configuration(self, path: Optional[Union[str, Path]] = None) -> Path:
        """Write the current configuration as JSON."""
        target = Path(path) if path else self.config_file
        if target is None:
            raise ConfigurationError("No settings file to save to", setting_name="config_file")
        target.write_text(json.dumps(self.config.to_dict(), indent=2) + "\n", encoding="utf-8")
        return target


_config_manager: Optional[ConfigurationManager] = None


def get_config() -> ApplicationConfiguration:
    """Process-wide configuration, built on first use from ``PROVAD_CONFIG`` and the environment."""
    global _config_manager
    if _config_manager is None:
        _config_manager = ConfigurationManager(os.getenv(f"{ENV_PREFIX}CONFIG") or None)
    return _config_manager.config


def set_config_manager(manager: Optional[ConfigurationManager]) -> None:
    """Install (or with None, reset) the process-wide configuration."""
    global _config_manager
    _config_manager = manager
