"""
Experiment configuration: TOML parsing, validation, overrides and echo.

Precedence is CLI flags > config file > environment > defaults. The effective
configuration is echoed as TOML next to the run outputs and parses back to an
identical ExperimentConfig.
"""
import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields, replace
from typing import Any, Dict, Optional, Tuple

from calibration.io import MODEL_KEYS, import_macro_model
from cli.mnist import find_standard_files
from device_model.models.device_data import MacroModel
from shared.errors import ConfigError, DomainError
from trainer.models.network import INIT_MODES, UPDATE_MODES

DATA_DIR_ENV = 'FERROSIM_DATA_DIR'
OUT_DIR_ENV = 'FERROSIM_OUT_DIR'
ECHO_FILENAME = 'effective_config.toml'

DATASET_KEYS = ('train_images', 'train_labels', 'test_images', 'test_labels')
MODEL_SOURCES = ('default', 'noiseless', 'inline')
MAX_SEED = (1 << 64) - 1


@dataclass(frozen=True)
class ExperimentConfig:
    """Full description of one run; every field has a default."""
    train_images: Optional[str] = None
    train_labels: Optional[str] = None
    test_images: Optional[str] = None
    test_labels: Optional[str] = None
    topology: Tuple[int, ...] = (784, 128, 10)
    learning_rate: float = 0.01
    batch_size: int = 8
    epochs: int = 10
    threshold: float = 0.01
    mode: str = 'binary'
    init: str = 'random'
    seed: int = 42
    model: str = 'default'
    macro_model: MacroModel = field(default_factory=MacroModel)
    out_dir: str = field(default_factory=lambda: os.getenv(OUT_DIR_ENV, 'runs/latest'))
    train_subset: int = 0
    test_subset: int = 0
    calibration_rows: int = 64
    calibration_cols: int = 64
    calibration_cycles: int = 100
    debug_dump: bool = False


# Expected TOML value types per scalar key.
_TYPES = {
    'train_images': str, 'train_labels': str, 'test_images': str, 'test_labels': str,
    'learning_rate': float, 'batch_size': int, 'epochs': int, 'threshold': float,
    'mode': str, 'init': str, 'seed': int, 'model': str, 'out_dir': str,
    'train_subset': int, 'test_subset': int, 'calibration_rows': int,
    'calibration_cols': int, 'calibration_cycles': int, 'debug_dump': bool,
}


def _type_name(value: Any) -> str:
    return type(value).__name__


def _coerce(key: str, value: Any, expected: type) -> Any:
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        return float(value)
    if expected is int and isinstance(value, bool):
        raise ConfigError(f"{key}: expected int, got bool")
    if not isinstance(value, expected):
        raise ConfigError(f"{key}: expected {expected.__name__}, got {_type_name(value)} ({value!r})")
    return value


def _macro_model_from_table(table: Any) -> MacroModel:
    if not isinstance(table, dict):
        raise ConfigError(f"macro_model: expected a table, got {_type_name(table)}")
    unknown = [k for k in table if k not in MODEL_KEYS]
    if unknown:
        raise ConfigError(f"unknown key 'macro_model.{unknown[0]}'")
    values = {}
    defaults = MacroModel()
    for key, attr in MODEL_KEYS.items():
        if key not in table:
            values[attr] = getattr(defaults, attr)
        elif key == 'levels':
            values[attr] = _coerce(f"macro_model.{key}", table[key], int)
        else:
            values[attr] = _coerce(f"macro_model.{key}", table[key], float)
    try:
        return MacroModel(**values)
    except DomainError as e:
        raise ConfigError(f"macro_model: {e}") from None


def config_from_mapping(data: Dict[str, Any]) -> ExperimentConfig:
    """Build and range-check a config from parsed TOML data."""
    values: Dict[str, Any] = {}
    for key, value in data.items():
        if key == 'topology':
            if not isinstance(value, list) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
                raise ConfigError(f"topology: expected a list of integers, got {value!r}")
            values['topology'] = tuple(value)
        elif key == 'macro_model':
            values['macro_model'] = _macro_model_from_table(value)
        elif key in _TYPES:
            values[key] = _coerce(key, value, _TYPES[key])
        else:
            raise ConfigError(f"unknown key '{key}'")
    if 'macro_model' in values and 'model' not in values:
        values['model'] = 'inline'
    config = ExperimentConfig(**values)
    check_ranges(config)
    return config


def parse_config(path: Optional[str]) -> ExperimentConfig:
    """
    Parse a TOML experiment config; a missing path yields the defaults.

    Raises:
        ConfigError: invalid TOML, unknown key, type mismatch or out-of-range value
    """
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, 'rb') as f:
            data = tomllib.load(f)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: invalid TOML: {e}") from None
    except OSError as e:
        raise ConfigError(f"{path}: cannot read config: {e.strerror}") from None
    try:
        return config_from_mapping(data)
    except ConfigError as e:
        raise ConfigError(f"{path}: {e}") from None


def _check_range(ok: bool, key: str, allowed: str, value: Any):
    if not ok:
        raise ConfigError(f"{key} must be {allowed}, got {value!r}")


def check_ranges(config: ExperimentConfig) -> None:
    """Reject values outside the documented ranges."""
    _check_range(0 < config.learning_rate <= 10, 'learning_rate', 'in (0, 10]', config.learning_rate)
    _check_range(config.batch_size >= 1, 'batch_size', '>= 1', config.batch_size)
    _check_range(config.epochs >= 1, 'epochs', '>= 1', config.epochs)
    _check_range(0 < config.threshold <= 1e9, 'threshold', 'in (0, 1e9]', config.threshold)
    _check_range(config.mode in UPDATE_MODES, 'mode', f"one of {UPDATE_MODES}", config.mode)
    _check_range(config.init in INIT_MODES, 'init', f"one of {INIT_MODES}", config.init)
    _check_range(0 <= config.seed <= MAX_SEED, 'seed', 'in [0, 2^64-1]', config.seed)
    _check_range(len(config.topology) >= 2 and all(s >= 1 for s in config.topology),
                 'topology', 'at least 2 sizes, all >= 1', list(config.topology))
    _check_range(config.train_subset >= 0, 'train_subset', '>= 0', config.train_subset)
    _check_range(config.test_subset >= 0, 'test_subset', '>= 0', config.test_subset)
    _check_range(config.calibration_rows >= 1, 'calibration_rows', '>= 1', config.calibration_rows)
    _check_range(config.calibration_cols >= 1, 'calibration_cols', '>= 1', config.calibration_cols)
    _check_range(config.calibration_cycles >= 2, 'calibration_cycles', '>= 2', config.calibration_cycles)
    _check_range(config.model in MODEL_SOURCES or config.model.strip() != '', 'model',
                 "'default', 'noiseless', 'inline' or a parameter-file path", config.model)


def apply_overrides(config: ExperimentConfig, **overrides: Any) -> ExperimentConfig:
    """Flag values beat file values; None means 'not given'."""
    given = {k: v for k, v in overrides.items() if v is not None}
    if not given:
        return config
    updated = replace(config, **given)
    check_ranges(updated)
    return updated


def resolve_dataset_paths(config: ExperimentConfig, need_train: bool = True) -> ExperimentConfig:
    """
    Fill dataset paths from FERROSIM_DATA_DIR and check that every needed file exists.

    Raises:
        ConfigError: a needed dataset path is missing or does not exist
    """
    fallback = find_standard_files(os.getenv(DATA_DIR_ENV))
    filled = {key: getattr(config, key) or fallback.get(key) for key in DATASET_KEYS}
    needed = DATASET_KEYS if need_train else ('test_images', 'test_labels')
    for key in needed:
        if not filled[key]:
            raise ConfigError(f"missing dataset path '{key}' (set it in the config, by flag, or via {DATA_DIR_ENV})")
        if not os.path.exists(filled[key]):
            raise ConfigError(f"dataset path '{key}' does not exist: {filled[key]}")
    return replace(config, **filled)


def resolve_macro_model(config: ExperimentConfig) -> Tuple[MacroModel, bool]:
    """
    Macro-model selected by the config.

    Returns:
        (model, True when it is the built-in synthetic default)
    """
    if config.model == 'default':
        return MacroModel(), True
    if config.model == 'noiseless':
        return MacroModel.noiseless(), False
    if config.model == 'inline':
        return config.macro_model, config.macro_model == MacroModel()
    if not os.path.exists(config.model):
        raise ConfigError(f"macro-model file does not exist: {config.model}")
    return import_macro_model(config.model), False


def _toml_value(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return '[' + ', '.join(_toml_value(v) for v in value) + ']'
    return json.dumps(value)


def dump_config_toml(config: ExperimentConfig) -> str:
    """Serialise every non-empty field; the [macro_model] table goes last."""
    lines = []
    for f in fields(config):
        value = getattr(config, f.name)
        if value is None or f.name == 'macro_model':
            continue
        lines.append(f"{f.name} = {_toml_value(value)}")
    lines.append('')
    lines.append('[macro_model]')
    for key, attr in MODEL_KEYS.items():
        lines.append(f"{key} = {_toml_value(getattr(config.macro_model, attr))}")
    return '\n'.join(lines) + '\n'


def echo_config(config: ExperimentConfig, out_dir: str) -> str:
    path = os.path.join(out_dir, ECHO_FILENAME)
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        f.write(dump_config_toml(config))
    return path
