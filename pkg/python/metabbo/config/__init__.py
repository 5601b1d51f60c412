"""
Settings come from YAML files in layers:
* the packaged defaults ("default_settings.yaml", every hyperparameter at its full-scale value),
* an optional preset ("presets/desk.yaml" shrinks problems and budgets to desk scale),
* files or directories of files passed in with --config,
* single values passed in with --set section.key=value.

The merged settings are validated against "settings.schema" which rejects unknown keys.

This module provides global access to settings.  Always treat them nicely and read-only.
"""

import copy
import logging
import logging.config
import logging.handlers
import os
import os.path
import sys
import zlib
from collections import OrderedDict
from functools import lru_cache
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import jsonschema
import numpy as np
import pkg_resources
import simplejson as json
import yaml

import metabbo.monitor
from metabbo.errors import InvalidArgumentError, MetaBBOConfigError, SchemaInvalidError, SchemaValidationError

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

PRESETS = ("full", "desk")
RESOLVED_CONFIG_FILE_NAME = "resolved_config.yaml"

# Global config objects - always use accessors!
_settings = None  # type: Optional[Dict[str, Any]]
_mapped_config = None  # type: Optional[Dict[str, Any]]


def package_version(package_name="surrogate_metabbo"):
    try:
        version = pkg_resources.get_distribution(package_name).version
    except pkg_resources.DistributionNotFound:
        version = "(not installed)"
    return "{} v{}".format(package_name, version)


def get_settings() -> Dict[str, Any]:
    assert _settings is not None, "attempted to get settings before loading them"
    return copy.deepcopy(_settings)


def get_config_value(name: str, default: Optional[Any] = None) -> Optional[Any]:
    """
    Lookup configuration value in known and flattened settings -- pass in a fully-qualified name

    Note the side effect here: once accessed, the settings remember the default if it wasn't set before.
    """
    assert _mapped_config is not None, "attempted to get config value before reading config map"
    if default is None:
        return _mapped_config.setdefault(name)
    else:
        return _mapped_config.setdefault(name, default)


def get_config_int(name: str, default: Optional[int] = None) -> int:
    """
    Lookup a configuration value that is an integer.
    It is an error if the value (even when using the default) is None.

    >>> metabbo.config._mapped_config = {"run.seed": 7}
    >>> get_config_int("run.seed"), get_config_int("run.workers", 1)
    (7, 1)
    """
    value = get_config_value(name, default)
    if value is None:
        raise InvalidArgumentError("missing config for {}".format(name))
    else:
        return int(value)


def set_config_value(name: str, value: Any) -> None:
    assert _mapped_config is not None, "attempted to set config value before reading config map"
    _mapped_config[name] = value


def get_config_map() -> Dict[str, Any]:
    if _mapped_config is None:
        return {}
    else:
        # Since the mapped config is flattened, we don't worry about a deep copy here.
        return dict(_mapped_config)


def _flatten_hierarchy(prefix, props):
    """
    >>> list(_flatten_hierarchy("de", {"population_size": 20, "nested": {"b": 2, "a": 1}}))
    [('de.nested.a', 1), ('de.nested.b', 2), ('de.population_size', 20)]
    """
    assert isinstance(props, dict), "oops, this should only be called with dicts, got {}".format(type(props))
    for key in sorted(props):
        full_key = "{}.{}".format(prefix, key)
        if isinstance(props[key], dict):
            for sub_key, sub_prop in _flatten_hierarchy(full_key, props[key]):
                yield sub_key, sub_prop
        else:
            yield full_key, props[key]


def _build_config_map(settings):
    mapping = OrderedDict()
    for section in sorted(settings):
        for name, value in _flatten_hierarchy(section, settings[section]):
            mapping[name] = value
    return mapping


def configure_logging(full_format: bool = False, log_level: str = None, log_dir: Optional[str] = None) -> None:
    """
    Setup logging to go to console and application log file

    If full_format is True, then use the terribly verbose format of
    the application log file also for the console.  And log at the DEBUG level.
    Otherwise, you can choose the log level by passing one in.
    """
    config = load_json("logging.json")
    config = copy.deepcopy(config)
    if full_format:
        config["formatters"]["console"] = dict(config["formatters"]["file"])
        config["handlers"]["console"]["level"] = logging.DEBUG
    elif log_level:
        config["handlers"]["console"]["level"] = log_level
    if log_dir:
        os.makedirs(log_dir, exist_ok=True)
        config["handlers"]["file"]["filename"] = os.path.join(log_dir, config["handlers"]["file"]["filename"])
    logging.config.dictConfig(config)
    # Ignored due to lack of stub in type checking library
    logging.captureWarnings(True)  # type: ignore
    logger.info("Starting log for %s with trace key %s", package_version(), metabbo.monitor.Monitor.run_id)
    logger.info('Command line: "%s"', " ".join(sys.argv))
    logger.debug("Current working directory: '%s'", os.getcwd())


def move_log_file(log_dir: str) -> None:
    """
    Continue the application log file in log_dir (once the output directory is known).

    The new handler keeps level, format and filters of the "file" handler.  Nothing happens when the log
    already goes there or when logging was configured without a file handler.
    """
    file_config = load_json("logging.json")["handlers"]["file"]
    filename = os.path.abspath(os.path.join(log_dir, file_config["filename"]))
    root = logging.getLogger()
    old_handler = next((handler for handler in root.handlers if handler.get_name() == "file"), None)
    if old_handler is None or getattr(old_handler, "baseFilename", None) == filename:
        return
    os.makedirs(log_dir, exist_ok=True)
    logger.info("Continuing log in '%s'", filename)
    new_handler = logging.handlers.RotatingFileHandler(
        filename,
        mode=file_config["mode"],
        maxBytes=file_config["maxBytes"],
        backupCount=file_config["backupCount"],
        encoding=file_config["encoding"],
    )
    new_handler.set_name("file")
    new_handler.setLevel(old_handler.level)
    new_handler.setFormatter(old_handler.formatter)
    for log_filter in old_handler.filters:
        new_handler.addFilter(log_filter)
    root.removeHandler(old_handler)
    old_handler.close()
    root.addHandler(new_handler)
    logger.info("Starting log for %s with trace key %s", package_version(), metabbo.monitor.Monitor.run_id)


def merge_settings(settings: dict, new_settings: dict) -> None:
    """
    Update settings section by section (recursively), so that files only need to list what they change.

    >>> settings = {"de": {"population_size": 100, "max_fes": 20000}, "run": {"seed": 1}}
    >>> merge_settings(settings, {"de": {"max_fes": 2000}})
    >>> settings["de"]
    {'population_size': 100, 'max_fes': 2000}
    """
    for key, value in new_settings.items():
        if key in settings and isinstance(settings[key], dict) and isinstance(value, dict):
            merge_settings(settings[key], value)
        else:
            settings[key] = copy.deepcopy(value)


def load_settings_file(filename: str, settings: dict) -> None:
    """
    Load new settings from config file and UPDATE settings (old settings merged with new).
    """
    logger.info("Loading settings from '%s'", filename)
    with open(filename) as f:
        new_settings = yaml.safe_load(f)
    if new_settings is None:
        return
    if not isinstance(new_settings, dict):
        raise SchemaValidationError("settings file '{}' does not hold a mapping".format(filename))
    merge_settings(settings, new_settings)


def yield_config_files(config_files: Sequence[str], default_file: str = None) -> Iterable[str]:
    """
    Generate filenames from the list of files or directories in :config_files and :default_file

    If the default_file is not None, then it is always prepended to the list of files.
    (It is an error (sadly, at runtime) if the default file is not a file that's part of the package.)

    Note that files in directories are always sorted by their name.
    """
    if default_file:
        yield pkg_resources.resource_filename(__name__, default_file)

    for name in config_files:
        if os.path.isdir(name):
            files = sorted(os.path.join(name, n) for n in os.listdir(name))
        elif os.path.exists(name):
            files = [name]
        else:
            raise InvalidArgumentError("cannot find config file '{}'".format(name))
        for filename in files:
            yield filename


def parse_override(text: str) -> Tuple[List[str], Any]:
    """
    Split "section.key=value" into the path of keys and the value (parsed as YAML).

    >>> parse_override("de.population_size=20")
    (['de', 'population_size'], 20)
    >>> parse_override("networks.kan.hidden=[10, 10]")
    (['networks', 'kan', 'hidden'], [10, 10])
    >>> parse_override("seed")
    Traceback (most recent call last):
    metabbo.errors.InvalidArgumentError: override must look like 'section.key=value', got 'seed'
    """
    name, sep, value = text.partition("=")
    path = [part.strip() for part in name.split(".")]
    if not sep or len(path) < 2 or not all(path):
        raise InvalidArgumentError("override must look like 'section.key=value', got '{}'".format(text))
    try:
        parsed = yaml.safe_load(value)
    except yaml.YAMLError as exc:
        raise InvalidArgumentError("cannot parse value in override '{}'".format(text)) from exc
    return path, parsed


def apply_overrides(settings: dict, overrides: Sequence[str]) -> None:
    for text in overrides:
        path, value = parse_override(text)
        section = settings
        for key in path[:-1]:
            section = section.setdefault(key, {})
            if not isinstance(section, dict):
                raise InvalidArgumentError("cannot set '{}' inside a value that is not a section".format(text))
        logger.debug("Setting '%s' to %r", ".".join(path), value)
        section[path[-1]] = value


def preset_file(preset: Optional[str]) -> Optional[str]:
    if preset is None or preset == "full":
        return None
    if preset not in PRESETS:
        raise InvalidArgumentError("unknown preset '{}' (choose from {})".format(preset, ", ".join(PRESETS)))
    return "presets/{}.yaml".format(preset)


def load_settings(
    config_files: Sequence[str] = (), preset: Optional[str] = None, overrides: Sequence[str] = ()
) -> Dict[str, Any]:
    """
    Return the merged and validated settings (defaults, preset, config files, overrides).
    """
    settings = dict()  # type: Dict[str, Any]
    load_settings_file(pkg_resources.resource_filename(__name__, "default_settings.yaml"), settings)
    preset_name = preset_file(preset)
    if preset_name is not None:
        load_settings_file(pkg_resources.resource_filename(__name__, preset_name), settings)
    for filename in yield_config_files(config_files):
        if filename.endswith((".yaml", ".yml")):
            load_settings_file(filename, settings)
        else:
            logger.info("Skipping unknown config file '%s'", filename)
    apply_overrides(settings, overrides)
    validate_with_schema(settings, "settings.schema")
    return settings


def load_config(config_files: Sequence[str] = (), preset: Optional[str] = None, overrides: Sequence[str] = ()):
    """
    Load settings from config files (starting with the defaults), set our global settings and return the
    typed run configuration.
    """
    # Imported here since the run configuration pulls in the computational modules.
    from metabbo.config.run import RunConfig

    settings = load_settings(config_files, preset, overrides)
    run_config = RunConfig(settings, preset=preset or "full")

    global _settings, _mapped_config
    _settings = settings
    _mapped_config = _build_config_map(settings)
    set_config_value("version", package_version())
    set_config_value("preset", preset or "full")
    return run_config


def validate_with_schema(obj: dict, schema_name: str) -> None:
    """
    Validate the given object (presumably from reading a YAML file) against its schema.

    This will also validate the schema itself!
    """
    validation_internal_errors = (
        jsonschema.exceptions.ValidationError,
        jsonschema.exceptions.SchemaError,
        json.scanner.JSONDecodeError,
    )
    try:
        schema = load_json(schema_name)
        jsonschema.Draft4Validator.check_schema(schema)
    except validation_internal_errors as exc:
        raise SchemaInvalidError("schema in '%s' is not valid" % schema_name) from exc
    try:
        jsonschema.validate(obj, schema)
    except jsonschema.exceptions.ValidationError as exc:
        location = ".".join(str(part) for part in exc.absolute_path) or "(top)"
        raise SchemaValidationError(
            "failed to validate against '{}' at '{}': {}".format(schema_name, location, exc.message)
        ) from exc


def derive_seed(root_seed: int, *keys: Union[str, int]) -> int:
    """
    Return a 32-bit seed for the stage, problem or run named by the keys.

    The root seed and the keys (strings enter as their CRC32) seed a numpy SeedSequence whose first
    state word is the derived seed.

    >>> derive_seed(1, "sls", "sphere-2d") == derive_seed(1, "sls", "sphere-2d")
    True
    >>> derive_seed(1, "sls", "sphere-2d") == derive_seed(1, "sls", "rastrigin-2d")
    False
    """
    if root_seed < 0:
        raise MetaBBOConfigError("seed must not be negative, got {}".format(root_seed))
    entropy = [int(root_seed)]
    for key in keys:
        entropy.append(zlib.crc32(key.encode("utf-8")) if isinstance(key, str) else int(key))
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def write_resolved_config(output_dir: str) -> str:
    """
    Write the settings in effect (after defaults, preset, files and overrides) into the output directory.
    """
    os.makedirs(output_dir, exist_ok=True)
    filename = os.path.join(output_dir, RESOLVED_CONFIG_FILE_NAME)
    with open(filename, "w") as f:
        yaml.safe_dump(get_settings(), f, default_flow_style=False, sort_keys=True)
    logger.info("Wrote resolved settings to '%s'", filename)
    return filename


@lru_cache()
def load_json(filename: str):
    return json.loads(pkg_resources.resource_string(__name__, filename))  # type: ignore
